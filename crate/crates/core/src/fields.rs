//! Velocity fields for the guiding-center and drift-kinetic problems.
//!
//! Two representations are kept. [`AdvectionField4D`] holds cell-centred
//! velocities built with centred differences, and is what the divergence check
//! works on. Transport uses face velocities derived from a potential sampled
//! at cell corners: differencing the same corner values in `r` and `theta`
//! makes the discrete flux divergence of the `(r, theta)` drift vanish
//! identically, and setting the corner potential to zero on the radial walls
//! closes them.

use crate::error::{Error, Result};
use crate::mesh::{Grid1D, Grid4D};

/// A scalar on the `(r, theta, z)` cells, `z` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField3D {
    pub r: Grid1D,
    pub theta: Grid1D,
    pub z: Grid1D,
    pub values: Vec<f64>,
}

/// Electric potential on the spatial mesh.
pub type Potential3D = ScalarField3D;

impl ScalarField3D {
    pub fn zeros(r: Grid1D, theta: Grid1D, z: Grid1D) -> Self {
        let n = r.n_cells() * theta.n_cells() * z.n_cells();
        Self {
            r,
            theta,
            z,
            values: vec![0.0; n],
        }
    }

    pub fn on(grid: &Grid4D) -> Self {
        Self::zeros(grid.r, grid.theta, grid.z)
    }

    pub fn from_fn(r: Grid1D, theta: Grid1D, z: Grid1D, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(r.n_cells() * theta.n_cells() * z.n_cells());
        for i in 0..r.n_cells() {
            for j in 0..theta.n_cells() {
                for k in 0..z.n_cells() {
                    values.push(f(r.cell_center(i), theta.cell_center(j), z.cell_center(k)));
                }
            }
        }
        Self { r, theta, z, values }
    }

    pub fn with_values(r: Grid1D, theta: Grid1D, z: Grid1D, values: Vec<f64>) -> Result<Self> {
        let n = r.n_cells() * theta.n_cells() * z.n_cells();
        if values.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: values.len(),
            });
        }
        Ok(Self { r, theta, z, values })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.r.n_cells(), self.theta.n_cells(), self.z.n_cells())
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.theta.n_cells() + j) * self.z.n_cells() + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    fn map(&self, f: impl Fn(usize, usize, usize) -> f64) -> Vec<f64> {
        let (nr, nt, nz) = self.dims();
        let mut out = Vec::with_capacity(self.values.len());
        for i in 0..nr {
            for j in 0..nt {
                for k in 0..nz {
                    out.push(f(i, j, k));
                }
            }
        }
        out
    }

    /// Centred difference along `r`, one-sided second order at both ends.
    pub fn d_r(&self) -> Vec<f64> {
        let nr = self.r.n_cells();
        let h2 = 2.0 * self.r.dx();
        self.map(|i, j, k| {
            let g = |ii: usize| self.get(ii, j, k);
            if i == 0 {
                (-3.0 * g(0) + 4.0 * g(1) - g(2)) / h2
            } else if i == nr - 1 {
                (3.0 * g(nr - 1) - 4.0 * g(nr - 2) + g(nr - 3)) / h2
            } else {
                (g(i + 1) - g(i - 1)) / h2
            }
        })
    }

    /// Centred periodic difference along `theta`.
    pub fn d_theta(&self) -> Vec<f64> {
        let nt = self.theta.n_cells();
        let h2 = 2.0 * self.theta.dx();
        self.map(|i, j, k| (self.get(i, (j + 1) % nt, k) - self.get(i, (j + nt - 1) % nt, k)) / h2)
    }

    /// Centred periodic difference along `z`.
    pub fn d_z(&self) -> Vec<f64> {
        let nz = self.z.n_cells();
        let h2 = 2.0 * self.z.dx();
        self.map(|i, j, k| (self.get(i, j, (k + 1) % nz) - self.get(i, j, (k + nz - 1) % nz)) / h2)
    }
}

/// `(v_GCr, v_GCtheta)` on the cells: `-D_theta Phi / (r B)` and `D_r Phi / B`.
pub fn guiding_center_velocities(phi: &Potential3D, b: f64) -> (Vec<f64>, Vec<f64>) {
    let dt = phi.d_theta();
    let dr = phi.d_r();
    let (_, nt, nz) = phi.dims();
    let vr = dt
        .iter()
        .enumerate()
        .map(|(idx, d)| -d / (phi.r.cell_center(idx / (nt * nz)) * b))
        .collect();
    let vt = dr.iter().map(|d| d / b).collect();
    (vr, vt)
}

/// `-(q/m) D_z Phi` on the cells.
pub fn parallel_acceleration(phi: &Potential3D, q_over_m: f64) -> Vec<f64> {
    phi.d_z().into_iter().map(|d| -q_over_m * d).collect()
}

/// Cell-centred drift-kinetic velocities. `v_r`, `omega` (angular velocity
/// `v_GCtheta / r`) and `a_v` live on the spatial cells, since none of them
/// depends on `v_par`; `v_z` is the `v_par` cell coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvectionField4D {
    pub grid: Grid4D,
    pub v_r: Vec<f64>,
    pub omega: Vec<f64>,
    pub v_z: Vec<f64>,
    pub a_v: Vec<f64>,
}

impl AdvectionField4D {
    pub fn from_potential(grid: &Grid4D, phi: &Potential3D, b: f64, q_over_m: f64) -> Self {
        let (v_r, vt) = guiding_center_velocities(phi, b);
        let (_, nt, nz) = phi.dims();
        let omega = vt
            .iter()
            .enumerate()
            .map(|(idx, v)| v / phi.r.cell_center(idx / (nt * nz)))
            .collect();
        Self {
            grid: grid.clone(),
            v_r,
            omega,
            v_z: grid.v.cell_centers(),
            a_v: parallel_acceleration(phi, q_over_m),
        }
    }

    pub fn zero(grid: &Grid4D) -> Self {
        let n3 = grid.spatial_len();
        Self {
            grid: grid.clone(),
            v_r: vec![0.0; n3],
            omega: vec![0.0; n3],
            v_z: vec![0.0; grid.v.n_cells()],
            a_v: vec![0.0; n3],
        }
    }

    /// `(v_r, omega, v_z, a_v)` at one cell.
    pub fn at(&self, ir: usize, it: usize, iz: usize, iv: usize) -> [f64; 4] {
        let s = (ir * self.grid.theta.n_cells() + it) * self.grid.z.n_cells() + iz;
        [self.v_r[s], self.omega[s], self.v_z[iv], self.a_v[s]]
    }
}

/// `(1/r) D_r(r v_r) + D_theta(omega) + D_z(v_z) + D_v(a_v)` on every 4D
/// cell, with the construction stencils.
pub fn discrete_divergence(field: &AdvectionField4D) -> Vec<f64> {
    let g = &field.grid;
    let (r, th, z) = (g.r, g.theta, g.z);
    let rv: Vec<f64> = field
        .v_r
        .iter()
        .enumerate()
        .map(|(s, v)| v * r.cell_center(s / (th.n_cells() * z.n_cells())))
        .collect();
    let rv = ScalarField3D { r, theta: th, z, values: rv };
    let om = ScalarField3D {
        r,
        theta: th,
        z,
        values: field.omega.clone(),
    };
    let d_rv = rv.d_r();
    let d_om = om.d_theta();
    let (nz, nv) = (z.n_cells(), g.v.n_cells());
    // v_z does not vary along z and a_v does not vary along v_par, but the
    // terms are still evaluated with the same stencils.
    let d_vz: Vec<Vec<f64>> = field
        .v_z
        .iter()
        .map(|&v| centred_difference(&vec![v; nz], z.dx(), true))
        .collect();
    let mut out = Vec::with_capacity(g.len());
    for s in 0..g.spatial_len() {
        let ri = r.cell_center(s / (th.n_cells() * nz));
        let iz = s % nz;
        let spatial = d_rv[s] / ri + d_om[s];
        let d_av = centred_difference(&vec![field.a_v[s]; nv], g.v.dx(), false);
        for iv in 0..nv {
            out.push(spatial + d_vz[iv][iz] + d_av[iv]);
        }
    }
    out
}

/// Centred difference of a line; one-sided second order at the ends of a
/// non-periodic line.
pub fn centred_difference(line: &[f64], h: f64, periodic: bool) -> Vec<f64> {
    let n = line.len();
    let h2 = 2.0 * h;
    (0..n)
        .map(|i| {
            if periodic {
                (line[(i + 1) % n] - line[(i + n - 1) % n]) / h2
            } else if i == 0 {
                (-3.0 * line[0] + 4.0 * line[1] - line[2]) / h2
            } else if i == n - 1 {
                (3.0 * line[n - 1] - 4.0 * line[n - 2] + line[n - 3]) / h2
            } else {
                (line[i + 1] - line[i - 1]) / h2
            }
        })
        .collect()
}

/// Largest component of the centred gradient `(D_r, D_theta / r, D_z)`.
pub fn gradient_norm(phi: &Potential3D) -> f64 {
    let (_, nt, nz) = phi.dims();
    let dr = phi.d_r();
    let dt = phi.d_theta();
    let dz = phi.d_z();
    let mut m: f64 = 0.0;
    for s in 0..phi.values.len() {
        let r = phi.r.cell_center(s / (nt * nz));
        m = m.max(dr[s].abs()).max((dt[s] / r).abs()).max(dz[s].abs());
    }
    m
}

/// Potential at the `(r-face, theta-face)` corners for every `z` cell,
/// shape `(n_r + 1) x n_theta x n_z`. Interior corners average the four
/// neighbouring cells; the radial walls are held at zero.
pub fn corner_potential(phi: &Potential3D) -> Vec<f64> {
    let (nr, nt, nz) = phi.dims();
    let mut psi = vec![0.0; (nr + 1) * nt * nz];
    for i in 1..nr {
        for j in 0..nt {
            let jm = (j + nt - 1) % nt;
            for k in 0..nz {
                psi[(i * nt + j) * nz + k] = 0.25
                    * (phi.get(i - 1, jm, k) + phi.get(i - 1, j, k) + phi.get(i, jm, k) + phi.get(i, j, k));
            }
        }
    }
    psi
}

/// Corner potential sampled from a closure `phi(r, theta, z)`.
pub fn corner_potential_fn(r: &Grid1D, theta: &Grid1D, z: &Grid1D, phi: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
    let (nr, nt, nz) = (r.n_cells(), theta.n_cells(), z.n_cells());
    let mut psi = Vec::with_capacity((nr + 1) * nt * nz);
    for i in 0..=nr {
        for j in 0..nt {
            for k in 0..nz {
                psi.push(phi(r.face(i), theta.face(j), z.cell_center(k)));
            }
        }
    }
    psi
}

/// Face velocities of the `(r, theta)` drift from a corner potential.
///
/// `v_r` has shape `(n_r + 1) x n_theta x n_z` (radial faces) and `omega`
/// shape `n_r x (n_theta + 1) x n_z` (angular faces).
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneFaceVelocities {
    pub v_r: Vec<f64>,
    pub omega: Vec<f64>,
}

pub fn plane_face_velocities(psi: &[f64], r: &Grid1D, theta: &Grid1D, nz: usize, b: f64) -> PlaneFaceVelocities {
    let (nr, nt) = (r.n_cells(), theta.n_cells());
    let (dr, dth) = (r.dx(), theta.dx());
    let p = |i: usize, j: usize, k: usize| psi[(i * nt + j % nt) * nz + k];
    let mut v_r = Vec::with_capacity((nr + 1) * nt * nz);
    for i in 0..=nr {
        let rf = r.face(i);
        for j in 0..nt {
            for k in 0..nz {
                v_r.push(-(p(i, j + 1, k) - p(i, j, k)) / (rf * b * dth));
            }
        }
    }
    let mut omega = Vec::with_capacity(nr * (nt + 1) * nz);
    for i in 0..nr {
        let rc = r.cell_center(i);
        for j in 0..=nt {
            for k in 0..nz {
                omega.push((p(i + 1, j, k) - p(i, j, k)) / (rc * b * dr));
            }
        }
    }
    PlaneFaceVelocities { v_r, omega }
}

/// Face-velocity arrays for the four drift-kinetic sweeps, in the
/// [`crate::mesh::PhaseGrid`] face layout of each axis.
pub fn drift_kinetic_face_velocities(grid: &Grid4D, phi: &Potential3D, b: f64, q_over_m: f64) -> [Vec<f64>; 4] {
    let (nr, nt, nz, nv) = (grid.r.n_cells(), grid.theta.n_cells(), grid.z.n_cells(), grid.v.n_cells());
    let psi = corner_potential(phi);
    let plane = plane_face_velocities(&psi, &grid.r, &grid.theta, nz, b);
    let a_v = parallel_acceleration(phi, q_over_m);
    let vc = grid.v.cell_centers();

    let spread = |src: &[f64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(src.len() * nv);
        for &s in src {
            out.extend(std::iter::repeat_n(s, nv));
        }
        out
    };
    let vr = spread(&plane.v_r);
    let om = spread(&plane.omega);
    let mut vz = Vec::with_capacity(nr * nt * (nz + 1) * nv);
    for _ in 0..nr * nt * (nz + 1) {
        vz.extend_from_slice(&vc);
    }
    let mut av = Vec::with_capacity(nr * nt * nz * (nv + 1));
    for &a in &a_v {
        av.push(0.0);
        av.extend(std::iter::repeat_n(a, nv - 1));
        av.push(0.0);
    }
    [vr, om, vz, av]
}
