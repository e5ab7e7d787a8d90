//! Conservation and quality diagnostics.
//!
//! Every reduction uses pairwise summation in a fixed tree order, so results
//! do not depend on the thread count.
//!
//! `l2` is the squared norm `Σ f² dV`. The 1D total variation carries a
//! `1/dx` prefactor by default.

use std::io::Write;

use crate::error::Result;
use crate::fields::ScalarField3D;
use crate::mesh::Field4D;

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise (cascade) summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= PAIRWISE_BLOCK {
        let mut s = 0.0;
        for x in v {
            s += x;
        }
        return s;
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Pairwise sum of `f(i)` for `i in 0..n`, without materializing the terms.
pub fn pairwise_sum_by(n: usize, f: &impl Fn(usize) -> f64) -> f64 {
    fn rec(lo: usize, hi: usize, f: &impl Fn(usize) -> f64) -> f64 {
        if hi - lo <= PAIRWISE_BLOCK {
            let mut s = 0.0;
            for i in lo..hi {
                s += f(i);
            }
            return s;
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    rec(0, n, f)
}

/// `Σ f dV`.
pub fn mass(values: &[f64], measures: &[f64]) -> f64 {
    pairwise_sum_by(values.len(), &|i| values[i] * measures[i])
}

/// `Σ f² dV` (squared norm).
pub fn l2_norm(values: &[f64], measures: &[f64]) -> f64 {
    pairwise_sum_by(values.len(), &|i| values[i] * values[i] * measures[i])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entropy {
    pub value: f64,
    /// Number of cells raised to the floor.
    pub floored: usize,
}

/// `1e-30 * max|f|`, or the smallest positive double for a zero field.
pub fn default_entropy_floor(values: &[f64]) -> f64 {
    let m = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m > 0.0 {
        1e-30 * m
    } else {
        f64::MIN_POSITIVE
    }
}

/// `-Σ f̃ ln f̃ dV` with `f̃ = max(f, floor)`.
pub fn entropy(values: &[f64], measures: &[f64], floor: f64) -> Entropy {
    let value = -pairwise_sum_by(values.len(), &|i| {
        let f = values[i].max(floor);
        f * f.ln() * measures[i]
    });
    let floored = values.iter().filter(|&&f| f < floor).count();
    Entropy { value, floored }
}

/// 1D total variation, wrapping for periodic data.
pub fn tv_1d(values: &[f64], dx: f64, periodic: bool, prefactor: bool) -> f64 {
    let n = values.len();
    let terms = if periodic { n } else { n - 1 };
    let s = pairwise_sum_by(terms, &|i| (values[(i + 1) % n] - values[i]).abs());
    if prefactor {
        s / dx
    } else {
        s
    }
}

/// Total variation of an `n_r x n_theta` plane (`theta` fastest) with forward
/// differences; `theta` wraps, the last radial row has no `r` difference.
pub fn tv_plane(plane: &[f64], nr: usize, nt: usize, dr: f64, dth: f64) -> f64 {
    pairwise_sum_by(nr * nt, &|s| {
        let (i, j) = (s / nt, s % nt);
        let g = plane[s];
        let d_r = if i + 1 < nr {
            (plane[s + nt] - g) / dr
        } else {
            0.0
        };
        let d_t = (plane[i * nt + (j + 1) % nt] - g) / dth;
        (d_r * d_r + d_t * d_t).sqrt()
    })
}

/// The `(r, theta)` plane of `f` at `z` index `iz` and `v_par` index `iv`.
pub fn rtheta_plane(f: &Field4D, iz: usize, iv: usize) -> Vec<f64> {
    let g = &f.grid;
    let mut out = Vec::with_capacity(g.r.n_cells() * g.theta.n_cells());
    for ir in 0..g.r.n_cells() {
        for it in 0..g.theta.n_cells() {
            out.push(f.get(ir, it, iz, iv));
        }
    }
    out
}

/// TV of the `(r, theta)` plane at the middle `z` and `v_par` indices.
pub fn field_tv(f: &Field4D) -> f64 {
    let g = &f.grid;
    let plane = rtheta_plane(f, g.z.n_cells() / 2, g.v.n_cells() / 2);
    tv_plane(&plane, g.r.n_cells(), g.theta.n_cells(), g.r.dx(), g.theta.dx())
}

/// `Σ ½ m v² (f - f_eq) dV`.
pub fn kinetic_energy(f: &Field4D, f_eq: &Field4D, mass_i: f64) -> f64 {
    let g = &f.grid;
    let nv = g.v.n_cells();
    let per_r = g.theta.n_cells() * g.z.n_cells() * nv;
    let (dr, dth, dz, dv) = (g.r.dx(), g.theta.dx(), g.z.dx(), g.v.dx());
    let vc = g.v.cell_centers();
    let rc = g.r.cell_centers();
    pairwise_sum_by(f.values.len(), &|s| {
        let v = vc[s % nv];
        let r = rc[s / per_r];
        0.5 * mass_i * v * v * (f.values[s] - f_eq.values[s]) * r * dr * dth * dz * dv
    })
}

/// `½ Σ e Φ (n_i - n0) r dr dθ dz`; `n0` is given per radial cell.
pub fn potential_energy(phi: &ScalarField3D, n_i: &ScalarField3D, n0: &[f64], e: f64) -> f64 {
    let (_, nt, nz) = phi.dims();
    let (dr, dth, dz) = (phi.r.dx(), phi.theta.dx(), phi.z.dx());
    let plane = nt * nz;
    let rc = phi.r.cell_centers();
    0.5 * pairwise_sum_by(phi.values.len(), &|s| {
        let ir = s / plane;
        e * phi.values[s] * (n_i.values[s] - n0[ir]) * rc[ir] * dr * dth * dz
    })
}

/// `l2 / tv`, or `+∞` when `tv` is zero.
pub fn quality_factor(l2: f64, tv: f64) -> f64 {
    if tv > 0.0 {
        l2 / tv
    } else {
        f64::INFINITY
    }
}

pub const CSV_HEADER: &str = "step,time,mass,l2,entropy,tv,e_kin,e_pot,e_tot,q_factor";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub l2: f64,
    pub entropy: f64,
    pub tv: f64,
    pub e_kin: f64,
    pub e_pot: f64,
    pub e_tot: f64,
    pub q_factor: f64,
}

impl DiagnosticsRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(step: usize, time: f64, mass: f64, l2: f64, entropy: f64, tv: f64, e_kin: f64, e_pot: f64) -> Self {
        Self {
            step,
            time,
            mass,
            l2,
            entropy,
            tv,
            e_kin,
            e_pot,
            e_tot: e_kin + e_pot,
            q_factor: quality_factor(l2, tv),
        }
    }

    /// One CSV line without the trailing newline. An infinite quality factor
    /// is written as an empty cell.
    pub fn csv_row(&self) -> String {
        let q = if self.q_factor.is_finite() {
            format!("{:e}", self.q_factor)
        } else {
            String::new()
        };
        format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            self.step, self.time, self.mass, self.l2, self.entropy, self.tv, self.e_kin, self.e_pot, self.e_tot, q
        )
    }
}

/// Writes the header on creation and one row per record.
pub struct CsvWriter<W: Write> {
    out: W,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{CSV_HEADER}")?;
        Ok(Self { out })
    }

    pub fn write(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        writeln!(self.out, "{}", rec.csv_row())?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Grid4D;

    #[test]
    fn pairwise_matches_exact_on_integers() {
        let v: Vec<f64> = (0..1001).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500500.0);
        assert_eq!(pairwise_sum_by(1001, &|i| i as f64), 500500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_1d(&[2.0; 8], 0.1, true, true), 0.0);
        let step = [0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(tv_1d(&step, 1.0, true, true), 2.0);
        assert_eq!(tv_1d(&step, 0.5, true, false), 2.0);
        assert_eq!(tv_1d(&step, 0.5, true, true), 4.0);
        // monotone profile telescopes
        let mono = [0.0, 0.5, 0.7, 2.0, 3.5];
        assert!((tv_1d(&mono, 0.25, false, true) - 3.5 / 0.25).abs() < 1e-14);
    }

    #[test]
    fn entropy_examples() {
        let m = vec![0.5; 6];
        let e = entropy(&[1.0; 6], &m, 1e-30);
        assert_eq!(e.value, 0.0);
        let e = entropy(&[std::f64::consts::E; 6], &m, 1e-30);
        assert!((e.value + std::f64::consts::E * 3.0).abs() < 1e-14);
        let e = entropy(&[1.0, -0.2, 0.5, 0.0], &[1.0; 4], 1e-30);
        assert!(e.value.is_finite());
        assert_eq!(e.floored, 2);
    }

    #[test]
    fn l2_examples() {
        let g = Grid4D::new((1.0, 2.0, 16), 16, (1.0, 4), 0.5, 4).unwrap();
        let meas = g.phase().cell_measures();
        assert_eq!(l2_norm(&vec![0.0; g.len()], &meas), 0.0);
        let one = l2_norm(&vec![1.0; g.len()], &meas);
        assert!((one - 3.0 * std::f64::consts::PI).abs() < 1e-12);
        let vals: Vec<f64> = (0..g.len()).map(|i| (i as f64 * 0.1).sin()).collect();
        let scaled: Vec<f64> = vals.iter().map(|v| 3.0 * v).collect();
        assert!((l2_norm(&scaled, &meas) - 9.0 * l2_norm(&vals, &meas)).abs() < 1e-12);
    }

    #[test]
    fn quality_examples() {
        assert_eq!(quality_factor(3.0, 2.0), 1.5);
        assert!(quality_factor(1.0, 0.0).is_infinite());
        let rec = DiagnosticsRecord::new(0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0);
        assert!(rec.csv_row().ends_with(','));
    }

    #[test]
    fn csv_header_and_rows() {
        let mut buf = Vec::new();
        {
            let mut w = CsvWriter::new(&mut buf).unwrap();
            w.write(&DiagnosticsRecord::new(3, 0.5, 2.0, 1.0, -0.1, 4.0, 0.25, 0.5)).unwrap();
        }
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 10);
        assert_eq!(row[0], "3");
        assert_eq!(row[8].parse::<f64>().unwrap(), 0.75);
        assert_eq!(row[9].parse::<f64>().unwrap(), 0.25);
    }
}
