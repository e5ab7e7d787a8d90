//! Face values of the per-cell parabolas.
//!
//! PSM takes the face values of a cubic spline through the primitive
//! function, which is C¹ across faces and leads to a tridiagonal system.
//! LAG uses an explicit four-point Lagrange interpolant of the primitive.
//!
//! Periodic PSM has one unknown per distinct face (`n_cells` of them); the
//! natural system has `n_cells + 1`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Boundary, CellProfile, FaceField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Psm,
    Lag,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Psm => f.write_str("PSM"),
            Scheme::Lag => f.write_str("LAG"),
        }
    }
}

/// `P(z) = c + b z + a z²` on `z ∈ [0, dx]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParabolaCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ParabolaCoefficients {
    pub fn eval(&self, z: f64) -> f64 {
        self.c + z * (self.b + z * self.a)
    }

    /// `∫_{z0}^{z1} P`.
    pub fn integral(&self, z0: f64, z1: f64) -> f64 {
        let prim = |z: f64| z * (self.c + z * (self.b / 2.0 + z * self.a / 3.0));
        prim(z1) - prim(z0)
    }
}

/// Parabola with left edge value `g_left`, right edge value `g_right` and mean
/// `gbar` over a cell of width `dx`.
pub fn parabola(g_left: f64, g_right: f64, gbar: f64, dx: f64) -> ParabolaCoefficients {
    ParabolaCoefficients {
        a: (3.0 * g_left + 3.0 * g_right - 6.0 * gbar) / (dx * dx),
        b: (-4.0 * g_left - 2.0 * g_right + 6.0 * gbar) / dx,
        c: g_left,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorizationKind {
    NaturalLU,
    PeriodicLDL,
}

/// A factored tridiagonal (natural) or cyclic symmetric tridiagonal
/// (periodic) matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalFactorization {
    kind: FactorizationKind,
    dim: usize,
    // Natural: l[k] multiplies row k-1 into row k, u the eliminated diagonal,
    // sup the original superdiagonal.
    // Periodic: l[k] = L[k+1][k], d the diagonal of D, delta[k] = L[m-1][k].
    l: Vec<f64>,
    u: Vec<f64>,
    sup: Vec<f64>,
    delta: Vec<f64>,
    // Assembled matrix bands kept for residual checks.
    band_sub: Vec<f64>,
    band_diag: Vec<f64>,
    corner: f64,
}

impl TridiagonalFactorization {
    /// LU of the tridiagonal matrix with sub-diagonal `sub[1..]`, diagonal
    /// `diag` and super-diagonal `sup[..n-1]`.
    pub fn natural(sub: &[f64], diag: &[f64], sup: &[f64]) -> Result<Self> {
        let n = diag.len();
        if sub.len() != n || sup.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: sub.len().min(sup.len()),
            });
        }
        let mut l = vec![0.0; n];
        let mut u = vec![0.0; n];
        u[0] = diag[0];
        if u[0].abs() < 1e-300 {
            return Err(Error::SingularFactorization(0));
        }
        for k in 1..n {
            l[k] = sub[k] / u[k - 1];
            u[k] = diag[k] - l[k] * sup[k - 1];
            if u[k].abs() < 1e-300 {
                return Err(Error::SingularFactorization(k));
            }
        }
        Ok(Self {
            kind: FactorizationKind::NaturalLU,
            dim: n,
            l,
            u,
            sup: sup.to_vec(),
            delta: Vec::new(),
            band_sub: sub.to_vec(),
            band_diag: diag.to_vec(),
            corner: 0.0,
        })
    }

    /// LDLᵀ of the `m x m` cyclic matrix with `diag` on the diagonal and
    /// `off` on both off-diagonals and both corners.
    pub fn periodic(m: usize, diag: f64, off: f64) -> Result<Self> {
        if m < 4 {
            return Err(Error::InvalidGrid(format!(
                "cyclic system needs dimension >= 4, got {m}"
            )));
        }
        let mut l = vec![0.0; m - 1];
        let mut d = vec![0.0; m];
        let mut delta = vec![0.0; m - 2];
        d[0] = diag;
        for k in 0..m - 2 {
            if d[k].abs() < 1e-300 {
                return Err(Error::SingularFactorization(k));
            }
            l[k] = off / d[k];
            d[k + 1] = diag - off * l[k];
            delta[k] = if k == 0 {
                off / d[0]
            } else {
                -delta[k - 1] * off / d[k]
            };
        }
        if d[m - 2].abs() < 1e-300 {
            return Err(Error::SingularFactorization(m - 2));
        }
        l[m - 2] = (off - delta[m - 3] * off) / d[m - 2];
        let mut last = diag - l[m - 2] * l[m - 2] * d[m - 2];
        for k in 0..m - 2 {
            last -= delta[k] * delta[k] * d[k];
        }
        d[m - 1] = last;
        if d[m - 1].abs() < 1e-300 {
            return Err(Error::SingularFactorization(m - 1));
        }
        Ok(Self {
            kind: FactorizationKind::PeriodicLDL,
            dim: m,
            l,
            u: d,
            sup: Vec::new(),
            delta,
            band_sub: vec![off; m],
            band_diag: vec![diag; m],
            corner: off,
        })
    }

    pub fn kind(&self) -> FactorizationKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Solves in place: `x` holds the right-hand side on entry.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        let n = self.dim;
        match self.kind {
            FactorizationKind::NaturalLU => {
                for k in 1..n {
                    x[k] -= self.l[k] * x[k - 1];
                }
                x[n - 1] /= self.u[n - 1];
                for k in (0..n - 1).rev() {
                    x[k] = (x[k] - self.sup[k] * x[k + 1]) / self.u[k];
                }
            }
            FactorizationKind::PeriodicLDL => {
                let m = n;
                let d = &self.u;
                // L y = b
                let mut acc = 0.0;
                for k in 1..m - 1 {
                    x[k] -= self.l[k - 1] * x[k - 1];
                }
                for k in 0..m - 2 {
                    acc += self.delta[k] * x[k];
                }
                x[m - 1] -= acc + self.l[m - 2] * x[m - 2];
                // D z = y
                for k in 0..m {
                    x[k] /= d[k];
                }
                // Lᵀ x = z
                let xl = x[m - 1];
                x[m - 2] -= self.l[m - 2] * xl;
                for k in (0..m - 2).rev() {
                    x[k] -= self.l[k] * x[k + 1] + self.delta[k] * xl;
                }
            }
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: rhs.len(),
            });
        }
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    /// The matrix that was factored, dense row-major.
    pub fn assembled(&self) -> Vec<f64> {
        let n = self.dim;
        let mut a = vec![0.0; n * n];
        for k in 0..n {
            a[k * n + k] = self.band_diag[k];
        }
        match self.kind {
            FactorizationKind::NaturalLU => {
                for k in 1..n {
                    a[k * n + k - 1] = self.band_sub[k];
                }
                for k in 0..n - 1 {
                    a[k * n + k + 1] = self.sup[k];
                }
            }
            FactorizationKind::PeriodicLDL => {
                for k in 1..n {
                    a[k * n + k - 1] = self.band_sub[k];
                    a[(k - 1) * n + k] = self.band_sub[k];
                }
                a[n - 1] += self.corner;
                a[(n - 1) * n] += self.corner;
            }
        }
        a
    }
}

/// The PSM face-value system for one boundary kind and cell count.
#[derive(Debug, Clone)]
pub struct PsmSystem {
    boundary: Boundary,
    n_cells: usize,
    factor: Arc<TridiagonalFactorization>,
}

fn build_psm_factor(boundary: Boundary, n: usize) -> Result<TridiagonalFactorization> {
    match boundary {
        Boundary::Periodic => TridiagonalFactorization::periodic(n, 4.0, 1.0),
        Boundary::Natural => {
            let m = n + 1;
            let mut sub = vec![1.0; m];
            let diag = vec![4.0; m];
            let mut sup = vec![1.0; m];
            sub[0] = 0.0;
            sup[0] = 2.0;
            sub[m - 1] = 2.0;
            sup[m - 1] = 0.0;
            TridiagonalFactorization::natural(&sub, &diag, &sup)
        }
    }
}

type FactorCache = Mutex<HashMap<(Boundary, usize), Arc<TridiagonalFactorization>>>;

fn cache() -> &'static FactorCache {
    static CACHE: OnceLock<FactorCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl PsmSystem {
    /// Returns the system for `(boundary, n_cells)`, factoring it on first use.
    pub fn get(boundary: Boundary, n_cells: usize) -> Result<Self> {
        if n_cells < crate::mesh::MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "PSM needs at least {} cells, got {n_cells}",
                crate::mesh::MIN_CELLS
            )));
        }
        let key = (boundary, n_cells);
        let mut map = cache().lock().unwrap_or_else(|e| e.into_inner());
        let factor = match map.get(&key) {
            Some(f) => f.clone(),
            None => {
                let f = Arc::new(build_psm_factor(boundary, n_cells)?);
                map.insert(key, f.clone());
                f
            }
        };
        Ok(Self {
            boundary,
            n_cells,
            factor,
        })
    }

    pub fn factorization(&self) -> &TridiagonalFactorization {
        &self.factor
    }

    /// Writes the `n_cells + 1` continuous face values into `out`.
    pub fn face_values_into(&self, gbar: &[f64], out: &mut [f64]) {
        let n = self.n_cells;
        debug_assert_eq!(gbar.len(), n);
        debug_assert_eq!(out.len(), n + 1);
        match self.boundary {
            Boundary::Periodic => {
                out[0] = 3.0 * (gbar[n - 1] + gbar[0]);
                for f in 1..n {
                    out[f] = 3.0 * (gbar[f - 1] + gbar[f]);
                }
                self.factor.solve_in_place(&mut out[..n]);
                out[n] = out[0];
            }
            Boundary::Natural => {
                out[0] = 6.0 * gbar[0];
                for f in 1..n {
                    out[f] = 3.0 * (gbar[f - 1] + gbar[f]);
                }
                out[n] = 6.0 * gbar[n - 1];
                self.factor.solve_in_place(out);
            }
        }
    }
}

fn check_len(profile: &CellProfile) -> Result<()> {
    if profile.values.len() != profile.grid.n_cells() {
        return Err(Error::LengthMismatch {
            expected: profile.grid.n_cells(),
            got: profile.values.len(),
        });
    }
    Ok(())
}

pub fn psm_face_values(profile: &CellProfile) -> Result<FaceField> {
    check_len(profile)?;
    let sys = PsmSystem::get(profile.grid.boundary(), profile.grid.n_cells())?;
    let mut out = vec![0.0; profile.grid.n_faces()];
    sys.face_values_into(&profile.values, &mut out);
    Ok(FaceField::continuous(out))
}

/// LAG one-sided face values into `minus` and `plus` (each `n + 1` long).
pub fn lag_face_values_into(gbar: &[f64], boundary: Boundary, minus: &mut [f64], plus: &mut [f64]) {
    let n = gbar.len() as isize;
    let at = |k: isize| -> f64 {
        match boundary {
            Boundary::Periodic => gbar[k.rem_euclid(n) as usize],
            Boundary::Natural => gbar[k.clamp(0, n - 1) as usize],
        }
    };
    for f in 0..=n {
        let (gm2, gm1, g0, gp1) = (at(f - 2), at(f - 1), at(f), at(f + 1));
        minus[f as usize] = -gm2 / 6.0 + 5.0 * gm1 / 6.0 + g0 / 3.0;
        plus[f as usize] = gm1 / 3.0 + 5.0 * g0 / 6.0 - gp1 / 6.0;
    }
}

pub fn lag_face_values(profile: &CellProfile) -> Result<FaceField> {
    check_len(profile)?;
    let mut ff = FaceField::zeros(profile.grid.n_faces());
    lag_face_values_into(
        &profile.values,
        profile.grid.boundary(),
        &mut ff.minus,
        &mut ff.plus,
    );
    Ok(ff)
}

pub fn face_values(profile: &CellProfile, scheme: Scheme) -> Result<FaceField> {
    match scheme {
        Scheme::Psm => psm_face_values(profile),
        Scheme::Lag => lag_face_values(profile),
    }
}
