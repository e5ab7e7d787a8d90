//! Hermite fluxes and the conservative 1D sweep.
//!
//! Fluxes are kept normalized by the cell width, so one sweep updates
//! `g_i -= phi[i + 1] - phi[i]`. The displacement at face `f` is
//! `beta[f] = (x_f - x*_f) / dx`; positive `beta` means the foot lies to the
//! left and cell `f - 1` is upwind.

use crate::error::{Error, Result};
use crate::limiters::{
    ent_limit, osl_limit_faces, sls_flux, umeda_flux, LimiterConfig, LimiterKind,
};
use crate::linalg::dense_solve;
use crate::mesh::{Boundary, CellProfile, FaceField, Grid1D};
use crate::reconstruction::{lag_face_values, lag_face_values_into, PsmSystem, Scheme};

/// Normalized displacements at the `n_cells + 1` faces of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Displacements {
    pub beta: Vec<f64>,
}

impl Displacements {
    pub fn uniform(grid: &Grid1D, beta: f64) -> Self {
        Self {
            beta: vec![beta; grid.n_faces()],
        }
    }

    /// Upwind flag: 1 when cell `f - 1` is upwind of face `f`.
    pub fn delta(&self, f: usize) -> f64 {
        if self.beta[f] > 0.0 {
            1.0
        } else {
            0.0
        }
    }
}

/// Normalized fluxes `phi / dx` at every face.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxVector {
    pub phi: Vec<f64>,
}

impl FluxVector {
    /// Fluxes in density-length units.
    pub fn physical(&self, dx: f64) -> Vec<f64> {
        self.phi.iter().map(|p| p * dx).collect()
    }
}

pub(crate) fn check_cfl(beta: &[f64], axis: usize) -> Result<()> {
    for (face, &b) in beta.iter().enumerate() {
        if !(b.abs() <= 1.0) {
            return Err(Error::CflViolation {
                axis,
                face,
                beta: b.abs(),
            });
        }
    }
    Ok(())
}

/// First-order feet from face velocities: `beta = a dt / dx`.
pub fn characteristic_feet(face_velocity: &[f64], dt: f64, grid: &Grid1D) -> Result<Displacements> {
    if face_velocity.len() != grid.n_faces() {
        return Err(Error::LengthMismatch {
            expected: grid.n_faces(),
            got: face_velocity.len(),
        });
    }
    let s = dt / grid.dx();
    let beta: Vec<f64> = face_velocity.iter().map(|a| a * s).collect();
    check_cfl(&beta, 0)?;
    Ok(Displacements { beta })
}

/// Normalized flux through a face from the upwind cell's parabola, given its
/// mean and left/right edge values.
#[inline]
pub fn hermite_flux(gbar_up: f64, g_left: f64, g_right: f64, beta: f64, delta: f64) -> f64 {
    let b2 = beta * beta;
    let b3 = b2 * beta;
    g_left * (beta * (1.0 - delta) + b2 * (2.0 - 3.0 * delta) + b3)
        + g_right * (beta * delta + b2 * (1.0 - 3.0 * delta) + b3)
        + gbar_up * (b2 * (-3.0 + 6.0 * delta) - 2.0 * b3)
}

/// Cell average with the boundary extension: periodic wrap or edge clamp.
#[inline]
fn ext(gbar: &[f64], periodic: bool, k: isize) -> f64 {
    let n = gbar.len() as isize;
    if periodic {
        gbar[k.rem_euclid(n) as usize]
    } else {
        gbar[k.clamp(0, n - 1) as usize]
    }
}

/// Fluxes at every face from given one-sided face values. Limiters that act
/// on the flux (ENT, UMEDA, SLS) are applied here; OSL acts on the face
/// values and must already be folded into `minus`/`plus`.
pub fn fluxes_from_faces(
    gbar: &[f64],
    boundary: Boundary,
    minus: &[f64],
    plus: &[f64],
    beta: &[f64],
    limiter: &LimiterConfig,
    phi: &mut [f64],
) {
    let n = gbar.len();
    let periodic = boundary == Boundary::Periodic;
    let at = |k: isize| ext(gbar, periodic, k);
    let last = if periodic { n } else { n + 1 };
    for f in 0..last {
        let b = beta[f];
        if b == 0.0 {
            phi[f] = 0.0;
            continue;
        }
        let fi = f as isize;
        if !periodic && ((f == 0 && b > 0.0) || (f == n && b < 0.0)) {
            phi[f] = b * if f == 0 { gbar[0] } else { gbar[n - 1] };
            continue;
        }
        let j = if b > 0.0 { fi - 1 } else { fi };
        let ju = j.rem_euclid(n as isize) as usize;
        let (delta, left, right) = if b > 0.0 {
            (1.0, plus[ju], minus[f])
        } else {
            (0.0, plus[f], minus[ju + 1])
        };
        let mut p = hermite_flux(gbar[ju], left, right, b, delta);
        match limiter.kind {
            LimiterKind::None | LimiterKind::Osl { .. } => {}
            LimiterKind::Ent => p = ent_limit(p, b, at(fi - 1), at(fi)),
            LimiterKind::Umeda => {
                let s = [at(j - 2), at(j - 1), at(j), at(j + 1), at(j + 2)];
                p = umeda_flux(&s, b, limiter.literal_paper_mode);
            }
            LimiterKind::Sls { k } => {
                let s = [at(fi - 2), at(fi - 1), at(fi), at(fi + 1)];
                p = sls_flux(p, &s, b, k, limiter.literal_paper_mode);
            }
        }
        phi[f] = p;
    }
    if periodic {
        phi[n] = phi[0];
    }
}

/// Reusable 1D sweep kernel for one grid, scheme and limiter.
#[derive(Debug, Clone)]
pub struct Sweeper {
    grid: Grid1D,
    scheme: Scheme,
    limiter: LimiterConfig,
    axis: usize,
    psm: Option<PsmSystem>,
    minus: Vec<f64>,
    plus: Vec<f64>,
    lag_minus: Vec<f64>,
    lag_plus: Vec<f64>,
}

impl Sweeper {
    pub fn new(grid: Grid1D, scheme: Scheme, limiter: LimiterConfig) -> Result<Self> {
        limiter.validate(scheme)?;
        let psm = match scheme {
            Scheme::Psm => Some(PsmSystem::get(grid.boundary(), grid.n_cells())?),
            Scheme::Lag => None,
        };
        let nf = grid.n_faces();
        Ok(Self {
            grid,
            scheme,
            limiter,
            axis: 0,
            psm,
            minus: vec![0.0; nf],
            plus: vec![0.0; nf],
            lag_minus: vec![0.0; nf],
            lag_plus: vec![0.0; nf],
        })
    }

    /// Axis index reported in CFL errors.
    pub fn with_axis(mut self, axis: usize) -> Self {
        self.axis = axis;
        self
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Face values for `gbar` after any face limiter.
    pub fn face_values(&mut self, gbar: &[f64]) -> FaceField {
        self.reconstruct(gbar);
        FaceField {
            minus: self.minus.clone(),
            plus: self.plus.clone(),
        }
    }

    fn reconstruct(&mut self, gbar: &[f64]) {
        let boundary = self.grid.boundary();
        match self.scheme {
            Scheme::Psm => {
                let sys = self.psm.as_ref().expect("PSM system");
                sys.face_values_into(gbar, &mut self.minus);
                if let LimiterKind::Osl { c } = self.limiter.kind {
                    lag_face_values_into(gbar, boundary, &mut self.lag_minus, &mut self.lag_plus);
                    let psm = std::mem::take(&mut self.minus);
                    self.minus = vec![0.0; psm.len()];
                    let periodic = boundary == Boundary::Periodic;
                    osl_limit_faces(
                        &psm,
                        &self.lag_minus,
                        &self.lag_plus,
                        |k| ext(gbar, periodic, k),
                        c,
                        self.limiter.literal_paper_mode,
                        &mut self.minus,
                        &mut self.plus,
                    );
                } else {
                    self.plus.copy_from_slice(&self.minus);
                }
            }
            Scheme::Lag => lag_face_values_into(gbar, boundary, &mut self.minus, &mut self.plus),
        }
    }

    /// Normalized fluxes at all `n_cells + 1` faces.
    pub fn fluxes(&mut self, gbar: &[f64], beta: &[f64], phi: &mut [f64]) -> Result<()> {
        let n = self.grid.n_cells();
        if gbar.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: gbar.len(),
            });
        }
        if beta.len() != n + 1 || phi.len() != n + 1 {
            return Err(Error::LengthMismatch {
                expected: n + 1,
                got: beta.len().min(phi.len()),
            });
        }
        check_cfl(beta, self.axis)?;
        if beta.iter().all(|&b| b == 0.0) {
            phi.fill(0.0);
            return Ok(());
        }
        self.reconstruct(gbar);
        fluxes_from_faces(
            gbar,
            self.grid.boundary(),
            &self.minus,
            &self.plus,
            beta,
            &self.limiter,
            phi,
        );
        Ok(())
    }

    /// Advances `gbar` in place and returns the fluxes used.
    pub fn advance(&mut self, gbar: &mut [f64], beta: &[f64]) -> Result<Vec<f64>> {
        let mut phi = vec![0.0; self.grid.n_faces()];
        self.fluxes(gbar, beta, &mut phi)?;
        apply_fluxes(gbar, &phi);
        Ok(phi)
    }
}

/// `g_i -= phi[i + 1] - phi[i]`.
pub fn apply_fluxes(gbar: &mut [f64], phi: &[f64]) {
    for (i, g) in gbar.iter_mut().enumerate() {
        *g -= phi[i + 1] - phi[i];
    }
}

/// One finite-volume sweep from precomputed face values.
pub fn sweep(
    profile: &CellProfile,
    faces: &FaceField,
    disp: &Displacements,
    limiter: &LimiterConfig,
) -> Result<(CellProfile, FluxVector)> {
    let grid = profile.grid;
    let n = grid.n_cells();
    if profile.values.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: profile.values.len(),
        });
    }
    if faces.n_faces() != n + 1 || disp.beta.len() != n + 1 {
        return Err(Error::LengthMismatch {
            expected: n + 1,
            got: faces.n_faces().min(disp.beta.len()),
        });
    }
    check_cfl(&disp.beta, 0)?;
    let limited;
    let faces = if let LimiterKind::Osl { c } = limiter.kind {
        let lag = lag_face_values(profile)?;
        limited = crate::limiters::osl_face_values(faces, &lag, profile, c, limiter.literal_paper_mode)?;
        &limited
    } else {
        faces
    };
    let mut phi = vec![0.0; n + 1];
    fluxes_from_faces(
        &profile.values,
        grid.boundary(),
        &faces.minus,
        &faces.plus,
        &disp.beta,
        limiter,
        &mut phi,
    );
    let mut values = profile.values.clone();
    apply_fluxes(&mut values, &phi);
    Ok((CellProfile { grid, values }, FluxVector { phi }))
}

/// Primitive function `G` at the faces, extended outside the domain.
struct Primitive<'a> {
    grid: Grid1D,
    gbar: &'a [f64],
    g_faces: Vec<f64>,
    mass: f64,
    // Spline second derivatives at faces (PSM only).
    moments: Vec<f64>,
}

impl<'a> Primitive<'a> {
    fn new(grid: Grid1D, gbar: &'a [f64], scheme: Scheme) -> Result<Self> {
        let n = grid.n_cells();
        let h = grid.dx();
        let mut g_faces = vec![0.0; n + 1];
        for i in 0..n {
            g_faces[i + 1] = g_faces[i] + h * gbar[i];
        }
        let mass = g_faces[n];
        let moments = match scheme {
            Scheme::Lag => Vec::new(),
            Scheme::Psm => Self::spline_moments(&grid, gbar)?,
        };
        Ok(Self {
            grid,
            gbar,
            g_faces,
            mass,
            moments,
        })
    }

    /// Moment-form cubic spline through `G`, assembled densely.
    fn spline_moments(grid: &Grid1D, gbar: &[f64]) -> Result<Vec<f64>> {
        let n = grid.n_cells();
        let h = grid.dx();
        match grid.boundary() {
            Boundary::Periodic => {
                let mut a = vec![0.0; n * n];
                let mut rhs = vec![0.0; n];
                for f in 0..n {
                    a[f * n + (f + n - 1) % n] += h / 6.0;
                    a[f * n + f] += 2.0 * h / 3.0;
                    a[f * n + (f + 1) % n] += h / 6.0;
                    rhs[f] = gbar[f] - gbar[(f + n - 1) % n];
                }
                let mut m = dense_solve(&a, &rhs)?;
                m.push(m[0]);
                Ok(m)
            }
            Boundary::Natural => {
                let dim = n + 1;
                let mut a = vec![0.0; dim * dim];
                let mut rhs = vec![0.0; dim];
                a[0] = 1.0;
                a[dim * dim - 1] = 1.0;
                for f in 1..n {
                    a[f * dim + f - 1] = h / 6.0;
                    a[f * dim + f] = 2.0 * h / 3.0;
                    a[f * dim + f + 1] = h / 6.0;
                    rhs[f] = gbar[f] - gbar[f - 1];
                }
                dense_solve(&a, &rhs)
            }
        }
    }

    /// `G` at face index `f`, which may lie outside `0..=n`.
    fn at_face(&self, f: isize) -> f64 {
        let n = self.grid.n_cells() as isize;
        let h = self.grid.dx();
        if self.grid.is_periodic() {
            let wraps = f.div_euclid(n);
            self.g_faces[f.rem_euclid(n) as usize] + wraps as f64 * self.mass
        } else if f < 0 {
            f as f64 * h * self.gbar[0]
        } else if f > n {
            self.g_faces[n as usize] + (f - n) as f64 * h * self.gbar[n as usize - 1]
        } else {
            self.g_faces[f as usize]
        }
    }

    fn eval(&self, x: f64, scheme: Scheme) -> f64 {
        let n = self.grid.n_cells() as isize;
        let h = self.grid.dx();
        let s = (x - self.grid.x_min()) / h;
        let periodic = self.grid.is_periodic();
        if !periodic && s < 0.0 {
            return s * h * self.gbar[0];
        }
        if !periodic && s > n as f64 {
            return self.mass + (s - n as f64) * h * self.gbar[n as usize - 1];
        }
        let mut j = s.floor() as isize;
        if !periodic {
            j = j.min(n - 1);
        }
        let t = s - j as f64; // in [0, 1]
        match scheme {
            Scheme::Lag => {
                let (g0, g1, g2, g3) = (
                    self.at_face(j - 1),
                    self.at_face(j),
                    self.at_face(j + 1),
                    self.at_face(j + 2),
                );
                // Nodes at -1, 0, 1, 2.
                let l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
                let l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
                let l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
                let l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
                g0 * l0 + g1 * l1 + g2 * l2 + g3 * l3
            }
            Scheme::Psm => {
                let jw = j.rem_euclid(n) as usize;
                let (m0, m1) = (self.moments[jw], self.moments[jw + 1]);
                let (ga, gb) = (self.at_face(j), self.at_face(j + 1));
                let u = 1.0 - t;
                m0 * u * u * u * h * h / 6.0
                    + m1 * t * t * t * h * h / 6.0
                    + (ga - m0 * h * h / 6.0) * u
                    + (gb - m1 * h * h / 6.0) * t
            }
        }
    }
}

/// Semi-Lagrangian update of the primitive function: interpolate `G` at the
/// feet and difference. Independent of the flux-form machinery.
pub fn primitive_update_oracle(
    profile: &CellProfile,
    disp: &Displacements,
    scheme: Scheme,
) -> Result<CellProfile> {
    let grid = profile.grid;
    let n = grid.n_cells();
    if disp.beta.len() != n + 1 {
        return Err(Error::LengthMismatch {
            expected: n + 1,
            got: disp.beta.len(),
        });
    }
    check_cfl(&disp.beta, 0)?;
    let prim = Primitive::new(grid, &profile.values, scheme)?;
    let h = grid.dx();
    let g_feet: Vec<f64> = (0..=n)
        .map(|f| {
            if disp.beta[f] == 0.0 {
                prim.at_face(f as isize)
            } else {
                prim.eval(grid.face(f) - disp.beta[f] * h, scheme)
            }
        })
        .collect();
    let values = (0..n).map(|i| (g_feet[i + 1] - g_feet[i]) / h).collect();
    Ok(CellProfile { grid, values })
}
