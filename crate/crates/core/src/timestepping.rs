//! CFL time-step selection and the predictor-corrector update.
//!
//! All directions are swept from the same time level and their increments
//! summed (unsplit). The predictor advances half a step with velocities at
//! `t^n`; velocities are then refreshed from the half-step state and the
//! corrector advances the original state a full step.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::Sweeper;
use crate::limiters::LimiterConfig;
use crate::mesh::PhaseGrid;
use crate::reconstruction::Scheme;

/// `cfl * min_d dx_d / max|a_d|` over directions with nonzero velocity, or
/// `dt_max` when every velocity vanishes.
pub fn compute_dt(max_speed: &[f64], dx: &[f64], cfl: f64, dt_max: f64) -> f64 {
    let mut dt = f64::INFINITY;
    for (a, h) in max_speed.iter().zip(dx) {
        if *a > 0.0 {
            dt = dt.min(h / a);
        }
    }
    if dt.is_finite() {
        (cfl * dt).min(dt_max)
    } else {
        dt_max
    }
}

/// Supplies face velocities for every swept axis of a [`PhaseGrid`].
///
/// The face array for axis `d` has the grid's face layout
/// (`PhaseGrid::face_len`, `PhaseGrid::face_pencil_base`).
pub trait VelocityField {
    /// Recomputes velocities from the state at time `t`.
    fn update(&mut self, state: &[f64], t: f64) -> Result<()>;

    fn face_velocities(&self, axis: usize) -> &[f64];

    /// Largest `|a|` on `axis`; used for the CFL rule.
    fn max_speed(&self, axis: usize) -> f64 {
        self.face_velocities(axis)
            .iter()
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

/// Face velocities fixed at construction.
#[derive(Debug, Clone)]
pub struct StaticVelocity {
    faces: Vec<Vec<f64>>,
}

impl StaticVelocity {
    pub fn new(faces: Vec<Vec<f64>>) -> Self {
        Self { faces }
    }

    /// Builds each axis from `a(axis, face_position, cell_centres_of_the_pencil)`.
    pub fn from_fn(grid: &PhaseGrid, a: impl Fn(usize, &[usize], f64) -> f64) -> Self {
        Self {
            faces: (0..grid.ndim()).map(|d| fill_faces(grid, d, &a)).collect(),
        }
    }
}

impl VelocityField for StaticVelocity {
    fn update(&mut self, _state: &[f64], _t: f64) -> Result<()> {
        Ok(())
    }

    fn face_velocities(&self, axis: usize) -> &[f64] {
        &self.faces[axis]
    }
}

/// Velocities given by a closure of `(axis, cell multi-index, face coordinate,
/// time)` and re-evaluated at each update. The multi-index carries the face
/// number in place of the cell number along `axis`.
pub struct TimeDependentVelocity<F> {
    grid: PhaseGrid,
    a: F,
    faces: Vec<Vec<f64>>,
}

impl<F: Fn(usize, &[usize], f64, f64) -> f64> TimeDependentVelocity<F> {
    pub fn new(grid: PhaseGrid, a: F) -> Self {
        let faces = (0..grid.ndim()).map(|d| vec![0.0; grid.face_len(d)]).collect();
        let mut v = Self { grid, a, faces };
        v.refresh(0.0);
        v
    }

    fn refresh(&mut self, t: f64) {
        for d in 0..self.grid.ndim() {
            let a = &self.a;
            self.faces[d] = fill_faces(&self.grid, d, &|ax, idx: &[usize], x| a(ax, idx, x, t));
        }
    }
}

impl<F: Fn(usize, &[usize], f64, f64) -> f64> VelocityField for TimeDependentVelocity<F> {
    fn update(&mut self, _state: &[f64], t: f64) -> Result<()> {
        self.refresh(t);
        Ok(())
    }

    fn face_velocities(&self, axis: usize) -> &[f64] {
        &self.faces[axis]
    }
}

fn fill_faces(grid: &PhaseGrid, d: usize, a: &dyn Fn(usize, &[usize], f64) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; grid.face_len(d)];
    let nf = grid.axis(d).n_faces();
    let s = grid.stride(d);
    for p in 0..grid.n_pencils(d) {
        let mut idx = grid.multi_index(grid.pencil_base(d, p));
        let base = grid.face_pencil_base(d, p);
        for f in 0..nf {
            idx[d] = f;
            out[base + f * s] = a(d, &idx, grid.axis(d).face(f));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    #[default]
    PredictorCorrector,
    /// Lie splitting: one full-step sweep per direction in axis order.
    Sequential,
}

/// Multi-dimensional flux-form advection on a [`PhaseGrid`].
#[derive(Debug, Clone)]
pub struct Advector {
    grid: PhaseGrid,
    sweepers: Vec<Sweeper>,
    active: Vec<bool>,
    jacobian: Vec<Option<Vec<f64>>>,
}

impl Advector {
    pub fn new(grid: PhaseGrid, scheme: Scheme, limiter: LimiterConfig) -> Result<Self> {
        let sweepers = (0..grid.ndim())
            .map(|d| Sweeper::new(*grid.axis(d), scheme, limiter).map(|s| s.with_axis(d)))
            .collect::<Result<Vec<_>>>()?;
        let jacobian = (0..grid.ndim()).map(|d| grid.axis_jacobian(d)).collect();
        let active = vec![true; grid.ndim()];
        Ok(Self {
            grid,
            sweepers,
            active,
            jacobian,
        })
    }

    /// Excludes an axis from sweeping (its velocity is known to vanish).
    pub fn set_active(&mut self, axis: usize, on: bool) {
        self.active[axis] = on;
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    /// Increment `-(phi_{i+1} - phi_i)` of one axis over `dt`, in storage
    /// order. On the radial axis the swept quantity is `r f` and the
    /// increment is divided back by `r_i`.
    pub fn axis_increment(&self, state: &[f64], face_vel: &[f64], axis: usize, dt: f64) -> Result<Vec<f64>> {
        let grid = &self.grid;
        let g1 = grid.axis(axis);
        let n = g1.n_cells();
        let s = grid.stride(axis);
        let scale = dt / g1.dx();
        let jac = self.jacobian[axis].as_deref();
        let lines: Vec<Vec<f64>> = (0..grid.n_pencils(axis))
            .into_par_iter()
            .map_init(
                || {
                    (
                        self.sweepers[axis].clone(),
                        vec![0.0; n],
                        vec![0.0; n + 1],
                        vec![0.0; n + 1],
                    )
                },
                |(sw, line, beta, phi), p| -> Result<Vec<f64>> {
                    let base = grid.pencil_base(axis, p);
                    let fbase = grid.face_pencil_base(axis, p);
                    for k in 0..n {
                        line[k] = state[base + k * s];
                    }
                    if let Some(r) = jac {
                        for k in 0..n {
                            line[k] *= r[k];
                        }
                    }
                    for f in 0..=n {
                        beta[f] = face_vel[fbase + f * s] * scale;
                    }
                    sw.fluxes(line, beta, phi)?;
                    let mut inc: Vec<f64> = (0..n).map(|k| -(phi[k + 1] - phi[k])).collect();
                    if let Some(r) = jac {
                        for k in 0..n {
                            inc[k] /= r[k];
                        }
                    }
                    Ok(inc)
                },
            )
            .collect::<Result<Vec<_>>>()?;
        let mut out = vec![0.0; state.len()];
        for (p, inc) in lines.into_iter().enumerate() {
            grid.scatter_pencil(&mut out, axis, p, &inc);
        }
        Ok(out)
    }

    /// `state + sum_d increment_d(state, dt)` with all directions from the
    /// same state.
    pub fn unsplit(&self, state: &[f64], vel: &dyn VelocityField, dt: f64) -> Result<Vec<f64>> {
        let mut out = state.to_vec();
        if dt == 0.0 {
            return Ok(out);
        }
        for d in 0..self.grid.ndim() {
            if !self.active[d] {
                continue;
            }
            let inc = self.axis_increment(state, vel.face_velocities(d), d, dt)?;
            for (o, i) in out.iter_mut().zip(&inc) {
                *o += i;
            }
        }
        Ok(out)
    }

    /// One predictor-corrector step from `t`. `vel` must hold the velocities
    /// at `t` on entry; on return it holds the half-step velocities.
    pub fn predictor_corrector_step(
        &self,
        state: &mut Vec<f64>,
        vel: &mut dyn VelocityField,
        t: f64,
        dt: f64,
    ) -> Result<()> {
        if dt == 0.0 {
            return Ok(());
        }
        let half = self.unsplit(state, vel, 0.5 * dt)?;
        vel.update(&half, t + 0.5 * dt)?;
        *state = self.unsplit(state, vel, dt)?;
        Ok(())
    }

    /// Sequential directional sweeps over a full step with the current
    /// velocities.
    pub fn sequential_step(&self, state: &mut Vec<f64>, vel: &dyn VelocityField, dt: f64) -> Result<()> {
        if dt == 0.0 {
            return Ok(());
        }
        for d in 0..self.grid.ndim() {
            if !self.active[d] {
                continue;
            }
            let inc = self.axis_increment(state, vel.face_velocities(d), d, dt)?;
            for (o, i) in state.iter_mut().zip(&inc) {
                *o += i;
            }
        }
        Ok(())
    }

    pub fn step(
        &self,
        mode: StepMode,
        state: &mut Vec<f64>,
        vel: &mut dyn VelocityField,
        t: f64,
        dt: f64,
    ) -> Result<()> {
        match mode {
            StepMode::PredictorCorrector => self.predictor_corrector_step(state, vel, t, dt),
            StepMode::Sequential => self.sequential_step(state, vel, dt),
        }
    }

    /// Time step from the current velocities.
    pub fn stable_dt(&self, vel: &dyn VelocityField, cfl: f64, dt_max: f64) -> Result<f64> {
        if !(cfl > 0.0 && cfl < 1.0) {
            return Err(Error::Config(format!("cfl must lie in (0, 1), got {cfl}")));
        }
        let speeds: Vec<f64> = (0..self.grid.ndim())
            .map(|d| if self.active[d] { vel.max_speed(d) } else { 0.0 })
            .collect();
        let dx: Vec<f64> = self.grid.axes().iter().map(|g| g.dx()).collect();
        Ok(compute_dt(&speeds, &dx, cfl, dt_max))
    }
}
