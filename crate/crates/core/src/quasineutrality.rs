//! Quasi-neutrality field solver and equilibrium profiles.
//!
//! Solves
//!
//! ```text
//! -(1/(B ω_i)) ∇⊥·(n0 ∇⊥Φ) + (e/(κ T_e)) (Φ - ⟨Φ⟩_z) = n_i - n0
//! ```
//!
//! by Fourier transforming in `theta` and `z`. Each mode `(m, n)` leaves a
//! radial tridiagonal problem with homogeneous Dirichlet walls, imposed
//! through antisymmetric ghost cells. The adiabatic term vanishes for the
//! `n = 0` modes, which carry the `z` average.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::diagnostics::pairwise_sum;
use crate::error::{Error, Result};
use crate::fields::{drift_kinetic_face_velocities, Potential3D, ScalarField3D};
use crate::mesh::{Field4D, Grid1D, Grid4D};
use crate::reconstruction::TridiagonalFactorization;
use crate::timestepping::VelocityField;

/// Radial profile and normalization parameters.
///
/// Density and temperatures follow
/// `X(r) = exp(-κ_X δr_X tanh((r - r_p) / δr_X))`, equal to 1 at `r_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileParams {
    pub r_peak: f64,
    pub kappa_n: f64,
    pub delta_r_n: f64,
    pub kappa_t: f64,
    pub delta_r_t: f64,
    /// `T_i / T_e`; the ion temperature profile is `tau * T_e(r)`.
    pub tau: f64,
    pub b: f64,
    pub omega_i: f64,
    pub e: f64,
    pub kappa_boltzmann: f64,
    pub q: f64,
    pub m: f64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        Self {
            r_peak: 7.3,
            kappa_n: 0.055,
            delta_r_n: 2.9,
            kappa_t: 0.27586,
            delta_r_t: 1.45,
            tau: 1.0,
            b: 1.0,
            omega_i: 1.0,
            e: 1.0,
            kappa_boltzmann: 1.0,
            q: 1.0,
            m: 1.0,
        }
    }
}

impl ProfileParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("delta_r_n", self.delta_r_n),
            ("delta_r_t", self.delta_r_t),
            ("tau", self.tau),
            ("b", self.b),
            ("omega_i", self.omega_i),
            ("kappa_boltzmann", self.kappa_boltzmann),
            ("m", self.m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Equilibrium profiles evaluated on a radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumProfiles {
    pub params: ProfileParams,
    pub r: Grid1D,
    /// `n0` at the radial cell centres.
    pub n0: Vec<f64>,
    /// `T_e` at the radial cell centres.
    pub t_e: Vec<f64>,
    /// `T_i` at the radial cell centres.
    pub t_i: Vec<f64>,
}

impl EquilibriumProfiles {
    pub fn new(params: ProfileParams, r: Grid1D) -> Result<Self> {
        params.validate()?;
        let n0 = r.cell_centers().iter().map(|&x| params_n0(&params, x)).collect();
        let t_e: Vec<f64> = r.cell_centers().iter().map(|&x| params_te(&params, x)).collect();
        let t_i = t_e.iter().map(|t| params.tau * t).collect();
        Ok(Self {
            params,
            r,
            n0,
            t_e,
            t_i,
        })
    }

    pub fn n0_at(&self, r: f64) -> f64 {
        params_n0(&self.params, r)
    }

    pub fn te_at(&self, r: f64) -> f64 {
        params_te(&self.params, r)
    }
}

fn tanh_profile(kappa: f64, delta: f64, r: f64, r_p: f64) -> f64 {
    (-kappa * delta * ((r - r_p) / delta).tanh()).exp()
}

fn params_n0(p: &ProfileParams, r: f64) -> f64 {
    tanh_profile(p.kappa_n, p.delta_r_n, r, p.r_peak)
}

fn params_te(p: &ProfileParams, r: f64) -> f64 {
    tanh_profile(p.kappa_t, p.delta_r_t, r, p.r_peak)
}

/// `n_i = dv * sum_l f(.., l)`.
pub fn ion_density(f: &Field4D) -> ScalarField3D {
    let g = &f.grid;
    let nv = g.v.n_cells();
    let dv = g.v.dx();
    let values = f.values.chunks_exact(nv).map(|c| dv * pairwise_sum(c)).collect();
    ScalarField3D {
        r: g.r,
        theta: g.theta,
        z: g.z,
        values,
    }
}

/// Maxwellian `f_eq(r, v)` on `n_r x n_v` cells, rescaled per radius so that
/// `dv * sum_l f_eq = n0(r)` exactly on the discrete velocity grid.
pub fn maxwellian_table(profiles: &EquilibriumProfiles, v: &Grid1D) -> Vec<f64> {
    let m = profiles.params.m;
    let dv = v.dx();
    let mut out = Vec::with_capacity(profiles.n0.len() * v.n_cells());
    for (n0, ti) in profiles.n0.iter().zip(&profiles.t_i) {
        let norm = n0 / (2.0 * PI * ti / m).sqrt();
        let row: Vec<f64> = v
            .cell_centers()
            .iter()
            .map(|&vv| norm * (-m * vv * vv / (2.0 * ti)).exp())
            .collect();
        let s = dv * pairwise_sum(&row);
        out.extend(row.iter().map(|x| x * n0 / s));
    }
    out
}

pub fn maxwellian_equilibrium(profiles: &EquilibriumProfiles, grid: &Grid4D) -> Field4D {
    let table = maxwellian_table(profiles, &grid.v);
    let nv = grid.v.n_cells();
    let per_r = grid.theta.n_cells() * grid.z.n_cells();
    let mut values = Vec::with_capacity(grid.len());
    for ir in 0..grid.r.n_cells() {
        let row = &table[ir * nv..(ir + 1) * nv];
        for _ in 0..per_r {
            values.extend_from_slice(row);
        }
    }
    Field4D {
        grid: grid.clone(),
        values,
    }
}

fn signed_mode(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Fourier/radial quasi-neutrality solver for one spatial mesh.
pub struct QnSolver {
    r: Grid1D,
    theta: Grid1D,
    z: Grid1D,
    // Factorizations indexed by [|m|][adiabatic as usize].
    factors: Vec<[TridiagonalFactorization; 2]>,
    fft_t: Arc<dyn Fft<f64>>,
    ifft_t: Arc<dyn Fft<f64>>,
    fft_z: Arc<dyn Fft<f64>>,
    ifft_z: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for QnSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QnSolver")
            .field("n_r", &self.r.n_cells())
            .field("n_theta", &self.theta.n_cells())
            .field("n_z", &self.z.n_cells())
            .finish()
    }
}

/// Tridiagonal bands `(sub, diag, sup)` of the radial operator for mode `m`.
pub fn radial_operator(profiles: &EquilibriumProfiles, m: i64, adiabatic: bool) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let r = &profiles.r;
    let p = &profiles.params;
    let nr = r.n_cells();
    let dr2 = r.dx() * r.dx();
    let c = 1.0 / (p.b * p.omega_i);
    let m2 = (m * m) as f64;
    let mut sub = vec![0.0; nr];
    let mut diag = vec![0.0; nr];
    let mut sup = vec![0.0; nr];
    for i in 0..nr {
        let ri = r.cell_center(i);
        let (rl, rr) = (r.face(i), r.face(i + 1));
        let wl = c * rl * profiles.n0_at(rl) / (ri * dr2);
        let wr = c * rr * profiles.n0_at(rr) / (ri * dr2);
        sub[i] = -wl;
        sup[i] = -wr;
        diag[i] = wl + wr + c * m2 * profiles.n0[i] / (ri * ri);
        if adiabatic {
            diag[i] += p.e / (p.kappa_boltzmann * profiles.t_e[i]);
        }
    }
    // Antisymmetric ghosts put the zero of Φ on the walls.
    diag[0] -= sub[0];
    sub[0] = 0.0;
    diag[nr - 1] -= sup[nr - 1];
    sup[nr - 1] = 0.0;
    (sub, diag, sup)
}

impl QnSolver {
    pub fn new(grid: &Grid4D, profiles: &EquilibriumProfiles) -> Result<Self> {
        if profiles.r != grid.r {
            return Err(Error::InvalidGrid("profiles built on a different radial grid".into()));
        }
        let (nt, nz) = (grid.theta.n_cells(), grid.z.n_cells());
        let mut factors = Vec::with_capacity(nt / 2 + 1);
        for m in 0..=(nt / 2) as i64 {
            let make = |adiabatic: bool| -> Result<TridiagonalFactorization> {
                let (sub, diag, sup) = radial_operator(profiles, m, adiabatic);
                TridiagonalFactorization::natural(&sub, &diag, &sup)
                    .map_err(|_| Error::SingularMode { m, n: adiabatic as i64 })
            };
            factors.push([make(false)?, make(true)?]);
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            r: grid.r,
            theta: grid.theta,
            z: grid.z,
            factors,
            fft_t: planner.plan_fft_forward(nt),
            ifft_t: planner.plan_fft_inverse(nt),
            fft_z: planner.plan_fft_forward(nz),
            ifft_z: planner.plan_fft_inverse(nz),
        })
    }

    /// Φ for the right-hand side `rhs = n_i - n0`.
    pub fn solve_rhs(&self, rhs: &ScalarField3D) -> Result<Potential3D> {
        let (nr, nt, nz) = (self.r.n_cells(), self.theta.n_cells(), self.z.n_cells());
        if rhs.values.len() != nr * nt * nz {
            return Err(Error::LengthMismatch {
                expected: nr * nt * nz,
                got: rhs.values.len(),
            });
        }
        let plane = nt * nz;
        let mut spec: Vec<Complex64> = rhs.values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        for ir in 0..nr {
            self.transform_plane(&mut spec[ir * plane..(ir + 1) * plane], &self.fft_z, &self.fft_t);
        }
        let mut re = vec![0.0; nr];
        let mut im = vec![0.0; nr];
        for jt in 0..nt {
            let m = signed_mode(jt, nt).unsigned_abs() as usize;
            for kz in 0..nz {
                let adiabatic = kz != 0;
                let off = jt * nz + kz;
                for ir in 0..nr {
                    let c = spec[ir * plane + off];
                    re[ir] = c.re;
                    im[ir] = c.im;
                }
                let fac = &self.factors[m][adiabatic as usize];
                fac.solve_in_place(&mut re);
                fac.solve_in_place(&mut im);
                for ir in 0..nr {
                    spec[ir * plane + off] = Complex64::new(re[ir], im[ir]);
                }
            }
        }
        let scale = 1.0 / plane as f64;
        let mut values = vec![0.0; nr * plane];
        for ir in 0..nr {
            let blk = &mut spec[ir * plane..(ir + 1) * plane];
            self.transform_plane(blk, &self.ifft_z, &self.ifft_t);
            for (v, c) in values[ir * plane..(ir + 1) * plane].iter_mut().zip(blk.iter()) {
                *v = c.re * scale;
            }
        }
        Ok(ScalarField3D {
            r: self.r,
            theta: self.theta,
            z: self.z,
            values,
        })
    }

    /// Φ from the ion density.
    pub fn solve(&self, n_i: &ScalarField3D, profiles: &EquilibriumProfiles) -> Result<Potential3D> {
        let (_, nt, nz) = n_i.dims();
        let plane = nt * nz;
        let values = n_i
            .values
            .iter()
            .enumerate()
            .map(|(s, n)| n - profiles.n0[s / plane])
            .collect();
        self.solve_rhs(&ScalarField3D {
            values,
            ..n_i.clone()
        })
    }

    /// 2D transform of one `theta x z` plane (`z` contiguous).
    fn transform_plane(&self, blk: &mut [Complex64], fz: &Arc<dyn Fft<f64>>, ft: &Arc<dyn Fft<f64>>) {
        let (nt, nz) = (self.theta.n_cells(), self.z.n_cells());
        fz.process(blk);
        let mut col = vec![Complex64::new(0.0, 0.0); nt];
        for kz in 0..nz {
            for jt in 0..nt {
                col[jt] = blk[jt * nz + kz];
            }
            ft.process(&mut col);
            for jt in 0..nt {
                blk[jt * nz + kz] = col[jt];
            }
        }
    }
}

/// One-shot solve; builds the solver each call.
pub fn qn_solve(n_i: &ScalarField3D, profiles: &EquilibriumProfiles, grid: &Grid4D) -> Result<Potential3D> {
    QnSolver::new(grid, profiles)?.solve(n_i, profiles)
}

/// Drift-kinetic velocities recomputed from the state through the
/// quasi-neutrality solve.
#[derive(Debug)]
pub struct SelfConsistentField {
    grid: Grid4D,
    profiles: EquilibriumProfiles,
    solver: QnSolver,
    faces: [Vec<f64>; 4],
    pub phi: Potential3D,
    pub n_i: ScalarField3D,
}

impl SelfConsistentField {
    pub fn new(grid: &Grid4D, profiles: EquilibriumProfiles) -> Result<Self> {
        let solver = QnSolver::new(grid, &profiles)?;
        let phi = Potential3D::on(grid);
        let p = profiles.params;
        let faces = drift_kinetic_face_velocities(grid, &phi, p.b, p.q / p.m);
        Ok(Self {
            grid: grid.clone(),
            n_i: phi.clone(),
            profiles,
            solver,
            faces,
            phi,
        })
    }

    pub fn profiles(&self) -> &EquilibriumProfiles {
        &self.profiles
    }
}

impl VelocityField for SelfConsistentField {
    fn update(&mut self, state: &[f64], _t: f64) -> Result<()> {
        let f = Field4D::new(self.grid.clone(), state.to_vec())?;
        self.n_i = ion_density(&f);
        self.phi = self.solver.solve(&self.n_i, &self.profiles)?;
        let p = self.profiles.params;
        self.faces = drift_kinetic_face_velocities(&self.grid, &self.phi, p.b, p.q / p.m);
        Ok(())
    }

    fn face_velocities(&self, axis: usize) -> &[f64] {
        &self.faces[axis]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat_vec;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::TAU;

    fn grid() -> Grid4D {
        Grid4D::new((0.1, 14.5, 24), 16, (1506.759, 8), 7.32, 16).unwrap()
    }

    fn profiles(g: &Grid4D) -> EquilibriumProfiles {
        EquilibriumProfiles::new(ProfileParams::default(), g.r).unwrap()
    }

    #[test]
    fn density_of_constant() {
        let g = grid();
        let f = Field4D::from_fn(g.clone(), |_, _, _, _| 0.25);
        let n = ion_density(&f);
        assert!(n.values.iter().all(|v| (v - 2.0 * 7.32 * 0.25).abs() < 1e-12));
        let n = ion_density(&Field4D::zeros(g));
        assert!(n.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn equilibrium_density_is_n0() {
        let g = grid();
        let p = profiles(&g);
        let feq = maxwellian_equilibrium(&p, &g);
        let n = ion_density(&feq);
        let plane = 16 * 8;
        for (s, v) in n.values.iter().enumerate() {
            assert!((v - p.n0[s / plane]).abs() <= 1e-12 * p.n0[s / plane]);
        }
        // even in v_par
        let nv = 16;
        for ir in 0..24 {
            for l in 0..nv {
                assert_eq!(feq.get(ir, 0, 0, l), feq.get(ir, 0, 0, nv - 1 - l));
            }
        }
    }

    #[test]
    fn hot_maxwellian_is_flat() {
        let g = grid();
        let params = ProfileParams {
            tau: 1e8,
            ..ProfileParams::default()
        };
        let p = EquilibriumProfiles::new(params, g.r).unwrap();
        let t = maxwellian_table(&p, &g.v);
        let row = &t[..16];
        let (lo, hi) = row.iter().fold((f64::MAX, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
        assert!(hi / lo < 1.0 + 1e-6);
    }

    #[test]
    fn equilibrium_gives_zero_potential() {
        let g = grid();
        let p = profiles(&g);
        let feq = maxwellian_equilibrium(&p, &g);
        let phi = qn_solve(&ion_density(&feq), &p, &g).unwrap();
        assert!(phi.values.iter().all(|v| v.abs() < 1e-12));
    }

    fn dense_mode_matrix(p: &EquilibriumProfiles, m: i64, adiabatic: bool) -> Vec<f64> {
        // Independent assembly with explicit ghost cells.
        let r = p.r;
        let nr = r.n_cells();
        let dr = r.dx();
        let mut a = vec![0.0; nr * nr];
        let c = 1.0 / (p.params.b * p.params.omega_i);
        for i in 0..nr {
            let ri = r.cell_center(i);
            let fl = (ri - dr / 2.0) * p.n0_at(ri - dr / 2.0) / (ri * dr * dr);
            let fr = (ri + dr / 2.0) * p.n0_at(ri + dr / 2.0) / (ri * dr * dr);
            a[i * nr + i] += c * (fl + fr) + c * (m * m) as f64 * p.n0[i] / (ri * ri);
            if adiabatic {
                a[i * nr + i] += p.params.e / (p.params.kappa_boltzmann * p.t_e[i]);
            }
            // ghost Φ_{-1} = -Φ_0 and Φ_N = -Φ_{N-1}
            if i == 0 {
                a[i * nr + i] += c * fl;
            } else {
                a[i * nr + i - 1] -= c * fl;
            }
            if i == nr - 1 {
                a[i * nr + i] += c * fr;
            } else {
                a[i * nr + i + 1] -= c * fr;
            }
        }
        a
    }

    #[test]
    fn manufactured_modes_recovered() {
        let g = grid();
        let p = profiles(&g);
        let solver = QnSolver::new(&g, &p).unwrap();
        let lz = g.z.length();
        for (m, n) in [(0i64, 0i64), (3, 1), (5, 0), (8, 3), (2, -2)] {
            let star: Vec<f64> = g
                .r
                .cell_centers()
                .iter()
                .map(|r| ((r - 0.1) * PI / 14.4).sin() * (1.0 + 0.1 * r))
                .collect();
            let a = dense_mode_matrix(&p, m, n != 0);
            let col = mat_vec(&a, &star);
            let shape = |th: f64, z: f64| {
                if m == 0 && n == 0 {
                    1.0
                } else {
                    (m as f64 * th + TAU * n as f64 * z / lz).sin()
                }
            };
            let mut rhs = ScalarField3D::zeros(g.r, g.theta, g.z);
            let mut exact = rhs.clone();
            for i in 0..24 {
                for j in 0..16 {
                    for k in 0..8 {
                        let s = rhs.index(i, j, k);
                        let w = shape(g.theta.cell_center(j), g.z.cell_center(k));
                        rhs.values[s] = col[i] * w;
                        exact.values[s] = star[i] * w;
                    }
                }
            }
            let phi = solver.solve_rhs(&rhs).unwrap();
            let norm = exact.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (u, v) in phi.values.iter().zip(&exact.values) {
                assert!((u - v).abs() <= 1e-10 * norm, "mode ({m},{n})");
            }
        }
    }

    #[test]
    fn solve_is_linear() {
        let g = grid();
        let p = profiles(&g);
        let solver = QnSolver::new(&g, &p).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(17);
        let mk = |rng: &mut rand::rngs::StdRng| {
            let v = (0..g.spatial_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            ScalarField3D::with_values(g.r, g.theta, g.z, v).unwrap()
        };
        let (x, y) = (mk(&mut rng), mk(&mut rng));
        let (a, b) = (1.7, -0.4);
        let comb = ScalarField3D {
            values: x.values.iter().zip(&y.values).map(|(u, v)| a * u + b * v).collect(),
            ..x.clone()
        };
        let px = solver.solve_rhs(&x).unwrap();
        let py = solver.solve_rhs(&y).unwrap();
        let pc = solver.solve_rhs(&comb).unwrap();
        let norm = pc.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..pc.values.len() {
            assert!((pc.values[i] - (a * px.values[i] + b * py.values[i])).abs() < 1e-12 * norm);
        }
    }

    #[test]
    fn z_uniform_potential_has_no_adiabatic_response() {
        // A z-independent right-hand side excites only n = 0 modes, so the
        // solution must not depend on the electron temperature.
        let g = grid();
        let p1 = profiles(&g);
        let p2 = EquilibriumProfiles::new(
            ProfileParams {
                kappa_boltzmann: 7.0,
                ..ProfileParams::default()
            },
            g.r,
        )
        .unwrap();
        let rhs = ScalarField3D::from_fn(g.r, g.theta, g.z, |r, t, _| (r * 0.3).sin() * (2.0 * t).cos());
        let a = QnSolver::new(&g, &p1).unwrap().solve_rhs(&rhs).unwrap();
        let b = QnSolver::new(&g, &p2).unwrap().solve_rhs(&rhs).unwrap();
        for (u, v) in a.values.iter().zip(&b.values) {
            assert!((u - v).abs() < 1e-13);
        }
    }
}
