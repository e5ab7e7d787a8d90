//! Uniform structured meshes and pencil indexing.
//!
//! Cells along an axis are numbered `0..n_cells`; faces are numbered
//! `0..=n_cells`, face `f` sitting at `x_min + f * dx` (the left face of cell
//! `f`). On a periodic axis face `n_cells` is the same physical face as face 0.
//!
//! Multi-dimensional fields are stored row-major with the last axis
//! fastest-varying. For the drift-kinetic mesh the axis order is
//! `(r, theta, z, v_par)`, so `v_par` is contiguous.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Minimum number of cells on any axis; the cubic stencils need four.
pub const MIN_CELLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Natural,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Periodic => f.write_str("periodic"),
            Boundary::Natural => f.write_str("natural"),
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "periodic" => Ok(Boundary::Periodic),
            "natural" => Ok(Boundary::Natural),
            other => Err(Error::InvalidGrid(format!("unknown boundary kind '{other}'"))),
        }
    }
}

/// A uniform 1D cell mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_cells: usize,
    boundary: Boundary,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize, boundary: Boundary) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "non-finite bounds [{x_min}, {x_max}]"
            )));
        }
        if x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "x_max ({x_max}) must exceed x_min ({x_min})"
            )));
        }
        if n_cells < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "{n_cells} cells, at least {MIN_CELLS} required"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_cells,
            boundary,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Number of face slots, `n_cells + 1` for both boundary kinds.
    pub fn n_faces(&self) -> usize {
        self.n_cells + 1
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn face(&self, f: usize) -> f64 {
        self.x_min + f as f64 * self.dx()
    }

    pub fn cell_centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.cell_center(i)).collect()
    }
}

/// Cell averages along one line of the mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct CellProfile {
    pub grid: Grid1D,
    pub values: Vec<f64>,
}

impl CellProfile {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::LengthMismatch {
                expected: grid.n_cells(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n_cells()).map(|i| f(grid.cell_center(i))).collect();
        Self { grid, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `dx * sum(values)`.
    pub fn mass(&self) -> f64 {
        self.grid.dx() * crate::diagnostics::pairwise_sum(&self.values)
    }
}

/// One-sided limits of the reconstruction at every face.
///
/// `minus[f]` is the limit approaching face `f` from the left, i.e. the right
/// edge value of cell `f - 1`; `plus[f]` is the limit from the right, the left
/// edge value of cell `f`. Cell `k` is therefore bounded by `plus[k]` and
/// `minus[k + 1]`. A continuous reconstruction has `minus == plus`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    pub minus: Vec<f64>,
    pub plus: Vec<f64>,
}

impl FaceField {
    pub fn zeros(n_faces: usize) -> Self {
        Self {
            minus: vec![0.0; n_faces],
            plus: vec![0.0; n_faces],
        }
    }

    pub fn continuous(values: Vec<f64>) -> Self {
        Self {
            minus: values.clone(),
            plus: values,
        }
    }

    pub fn n_faces(&self) -> usize {
        self.minus.len()
    }

    /// Left edge value of cell `k`.
    pub fn left_edge(&self, k: usize) -> f64 {
        self.plus[k]
    }

    /// Right edge value of cell `k`.
    pub fn right_edge(&self, k: usize) -> f64 {
        self.minus[k + 1]
    }

    pub fn is_continuous(&self) -> bool {
        self.minus == self.plus
    }
}

/// A tensor-product mesh of any dimension, row-major with the last axis
/// fastest. `radial_axis` marks an axis whose cell measure carries the
/// cylindrical Jacobian `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    axes: Vec<Grid1D>,
    radial_axis: Option<usize>,
    strides: Vec<usize>,
}

impl PhaseGrid {
    pub fn new(axes: Vec<Grid1D>, radial_axis: Option<usize>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("no axes".into()));
        }
        if let Some(a) = radial_axis {
            if a >= axes.len() {
                return Err(Error::InvalidGrid(format!("radial axis {a} out of range")));
            }
            if axes[a].x_min() <= 0.0 {
                return Err(Error::InvalidGrid(format!(
                    "radial axis must have r_min > 0, got {}",
                    axes[a].x_min()
                )));
            }
        }
        let mut strides = vec![1; axes.len()];
        for d in (0..axes.len() - 1).rev() {
            strides[d] = strides[d + 1] * axes[d + 1].n_cells();
        }
        Ok(Self {
            axes,
            radial_axis,
            strides,
        })
    }

    pub fn axes(&self) -> &[Grid1D] {
        &self.axes
    }

    pub fn axis(&self, d: usize) -> &Grid1D {
        &self.axes[d]
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    pub fn radial_axis(&self) -> Option<usize> {
        self.radial_axis
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|g| g.n_cells()).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|g| g.n_cells()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.ndim()];
        for d in 0..self.ndim() {
            idx[d] = flat / self.strides[d];
            flat %= self.strides[d];
        }
        idx
    }

    /// Per-cell measure factor along one axis: `dx`, or `r_i dr` on the
    /// radial axis.
    pub fn axis_measure(&self, axis: usize) -> Vec<f64> {
        let g = &self.axes[axis];
        let dx = g.dx();
        if self.radial_axis == Some(axis) {
            (0..g.n_cells()).map(|i| g.cell_center(i) * dx).collect()
        } else {
            vec![dx; g.n_cells()]
        }
    }

    /// Jacobian weight of every cell along `axis` (`r_i` on the radial axis,
    /// 1 elsewhere).
    pub fn axis_jacobian(&self, axis: usize) -> Option<Vec<f64>> {
        (self.radial_axis == Some(axis)).then(|| self.axes[axis].cell_centers())
    }

    /// Full cell-measure array in storage order.
    pub fn cell_measures(&self) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = (0..self.ndim()).map(|d| self.axis_measure(d)).collect();
        (0..self.len())
            .map(|flat| {
                let mut m = 1.0;
                let mut rem = flat;
                for d in 0..self.ndim() {
                    m *= per_axis[d][rem / self.strides[d]];
                    rem %= self.strides[d];
                }
                m
            })
            .collect()
    }

    pub fn n_pencils(&self, axis: usize) -> usize {
        self.len() / self.axes[axis].n_cells()
    }

    /// Flat index of the first cell of pencil `p` along `axis`; successive
    /// cells are `stride(axis)` apart.
    pub fn pencil_base(&self, axis: usize, p: usize) -> usize {
        let s = self.strides[axis];
        let n = self.axes[axis].n_cells();
        (p / s) * n * s + p % s
    }

    /// Length of a face-centred array for `axis`: the cell shape with
    /// `n_cells + 1` entries along `axis`.
    pub fn face_len(&self, axis: usize) -> usize {
        self.n_pencils(axis) * self.axes[axis].n_faces()
    }

    /// Flat index of face 0 of pencil `p` in a face array for `axis`.
    /// Successive faces are `stride(axis)` apart.
    pub fn face_pencil_base(&self, axis: usize, p: usize) -> usize {
        let s = self.strides[axis];
        let nf = self.axes[axis].n_faces();
        (p / s) * nf * s + p % s
    }

    pub fn gather_pencil(&self, values: &[f64], axis: usize, p: usize, out: &mut [f64]) {
        let base = self.pencil_base(axis, p);
        let s = self.strides[axis];
        for (k, o) in out.iter_mut().enumerate() {
            *o = values[base + k * s];
        }
    }

    pub fn scatter_pencil(&self, values: &mut [f64], axis: usize, p: usize, data: &[f64]) {
        let base = self.pencil_base(axis, p);
        let s = self.strides[axis];
        for (k, d) in data.iter().enumerate() {
            values[base + k * s] = *d;
        }
    }
}

/// The four drift-kinetic directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis4 {
    R,
    Theta,
    Z,
    VPar,
}

impl Axis4 {
    pub const ALL: [Axis4; 4] = [Axis4::R, Axis4::Theta, Axis4::Z, Axis4::VPar];

    pub fn index(self) -> usize {
        match self {
            Axis4::R => 0,
            Axis4::Theta => 1,
            Axis4::Z => 2,
            Axis4::VPar => 3,
        }
    }
}

/// Cylindrical phase-space mesh `(r, theta, z, v_par)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid4D {
    pub r: Grid1D,
    pub theta: Grid1D,
    pub z: Grid1D,
    pub v: Grid1D,
    phase: PhaseGrid,
}

impl Grid4D {
    /// Builds the mesh with the fixed boundary kinds r: natural, theta and z:
    /// periodic, v_par: natural.
    pub fn new(
        r: (f64, f64, usize),
        theta_cells: usize,
        z: (f64, usize),
        v_max: f64,
        v_cells: usize,
    ) -> Result<Self> {
        let r = Grid1D::new(r.0, r.1, r.2, Boundary::Natural)?;
        let theta = Grid1D::new(0.0, std::f64::consts::TAU, theta_cells, Boundary::Periodic)?;
        let z = Grid1D::new(0.0, z.0, z.1, Boundary::Periodic)?;
        let v = Grid1D::new(-v_max, v_max, v_cells, Boundary::Natural)?;
        Self::from_axes(r, theta, z, v)
    }

    pub fn from_axes(r: Grid1D, theta: Grid1D, z: Grid1D, v: Grid1D) -> Result<Self> {
        if r.x_min() <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "r_min must be positive, got {}",
                r.x_min()
            )));
        }
        let kinds = [
            (r.boundary(), Boundary::Natural, "r"),
            (theta.boundary(), Boundary::Periodic, "theta"),
            (z.boundary(), Boundary::Periodic, "z"),
            (v.boundary(), Boundary::Natural, "v_par"),
        ];
        for (got, want, name) in kinds {
            if got != want {
                return Err(Error::InvalidGrid(format!(
                    "axis {name} must be {want}, got {got}"
                )));
            }
        }
        let phase = PhaseGrid::new(vec![r, theta, z, v], Some(0))?;
        Ok(Self {
            r,
            theta,
            z,
            v,
            phase,
        })
    }

    pub fn phase(&self) -> &PhaseGrid {
        &self.phase
    }

    pub fn axis(&self, a: Axis4) -> &Grid1D {
        match a {
            Axis4::R => &self.r,
            Axis4::Theta => &self.theta,
            Axis4::Z => &self.z,
            Axis4::VPar => &self.v,
        }
    }

    pub fn len(&self) -> usize {
        self.phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase.is_empty()
    }

    /// Number of spatial `(r, theta, z)` points.
    pub fn spatial_len(&self) -> usize {
        self.r.n_cells() * self.theta.n_cells() * self.z.n_cells()
    }

    pub fn index(&self, ir: usize, it: usize, iz: usize, iv: usize) -> usize {
        ((ir * self.theta.n_cells() + it) * self.z.n_cells() + iz) * self.v.n_cells() + iv
    }
}

/// Cell averages of the distribution function on a [`Grid4D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field4D {
    pub grid: Grid4D,
    pub values: Vec<f64>,
}

impl Field4D {
    pub fn new(grid: Grid4D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid4D) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: Grid4D, f: impl Fn(f64, f64, f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for ir in 0..grid.r.n_cells() {
            let r = grid.r.cell_center(ir);
            for it in 0..grid.theta.n_cells() {
                let th = grid.theta.cell_center(it);
                for iz in 0..grid.z.n_cells() {
                    let z = grid.z.cell_center(iz);
                    for iv in 0..grid.v.n_cells() {
                        values.push(f(r, th, z, grid.v.cell_center(iv)));
                    }
                }
            }
        }
        Self { grid, values }
    }

    pub fn get(&self, ir: usize, it: usize, iz: usize, iv: usize) -> f64 {
        self.values[self.grid.index(ir, it, iz, iv)]
    }
}

/// Every 1D line of `field` along `axis`, paired with its pencil index.
pub fn extract_pencils(field: &Field4D, axis: Axis4) -> Vec<(CellProfile, usize)> {
    let phase = field.grid.phase();
    let a = axis.index();
    let grid = *phase.axis(a);
    (0..phase.n_pencils(a))
        .map(|p| {
            let mut values = vec![0.0; grid.n_cells()];
            phase.gather_pencil(&field.values, a, p, &mut values);
            (CellProfile { grid, values }, p)
        })
        .collect()
}

/// Writes a profile back into pencil `p` of `field` along `axis`.
pub fn write_pencil(field: &mut Field4D, axis: Axis4, p: usize, profile: &CellProfile) -> Result<()> {
    let a = axis.index();
    let n = field.grid.phase().axis(a).n_cells();
    if profile.values.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: profile.values.len(),
        });
    }
    let phase = field.grid.phase().clone();
    phase.scatter_pencil(&mut field.values, a, p, &profile.values);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid(n: usize) -> Grid4D {
        Grid4D::new((1.0, 2.0, n), n, (1.0, n), 1.0, n).unwrap()
    }

    #[test]
    fn build_grid1d_examples() {
        let g = Grid1D::new(0.0, 1.0, 80, Boundary::Periodic).unwrap();
        assert!((g.dx() - 0.0125).abs() < 1e-15);
        let g = Grid1D::new(0.0, 1.0, 4, Boundary::Natural).unwrap();
        assert_eq!(g.dx(), 0.25);
        assert_eq!(g.n_faces(), 5);
        assert!(Grid1D::new(0.0, 1.0, 3, Boundary::Periodic).is_err());
        assert!(Grid1D::new(0.0, f64::NAN, 8, Boundary::Periodic).is_err());
        assert!(Grid1D::new(1.0, 1.0, 8, Boundary::Periodic).is_err());
    }

    #[test]
    fn cell_and_face_positions() {
        let g = Grid1D::new(-1.0, 1.0, 8, Boundary::Natural).unwrap();
        assert_eq!(g.face(0), -1.0);
        assert_eq!(g.face(8), 1.0);
        assert!((g.cell_center(0) + 0.875).abs() < 1e-15);
    }

    #[test]
    fn pencil_counts() {
        // 4x4x4x4 is the smallest legal mesh; 2x2x2x2 in the plain counting
        // example is below the stencil minimum.
        let field = Field4D::zeros(small_grid(4));
        for axis in Axis4::ALL {
            let pencils = extract_pencils(&field, axis);
            assert_eq!(pencils.len(), 64);
            assert!(pencils.iter().all(|(p, _)| p.len() == 4));
        }
    }

    #[test]
    fn constant_field_gives_constant_pencils() {
        let field = Field4D::from_fn(small_grid(5), |_, _, _, _| 2.5);
        for axis in Axis4::ALL {
            for (p, _) in extract_pencils(&field, axis) {
                assert!(p.values.iter().all(|&v| v == 2.5));
            }
        }
    }

    #[test]
    fn pencil_round_trip_is_identity() {
        let grid = Grid4D::new((0.5, 2.0, 4), 5, (3.0, 6), 2.0, 7).unwrap();
        let field = Field4D::from_fn(grid, |r, t, z, v| r * 1000.0 + t * 100.0 + z * 10.0 + v);
        for axis in Axis4::ALL {
            let mut rebuilt = Field4D::zeros(field.grid.clone());
            let mut seen = vec![0u8; field.values.len()];
            for (profile, p) in extract_pencils(&field, axis) {
                write_pencil(&mut rebuilt, axis, p, &profile).unwrap();
                let phase = field.grid.phase();
                let base = phase.pencil_base(axis.index(), p);
                for k in 0..profile.len() {
                    seen[base + k * phase.stride(axis.index())] += 1;
                }
            }
            assert_eq!(rebuilt.values, field.values);
            assert!(seen.iter().all(|&c| c == 1), "each cell visited once");
        }
    }

    #[test]
    fn storage_order_has_v_fastest() {
        let grid = small_grid(4);
        assert_eq!(grid.index(0, 0, 0, 1), 1);
        assert_eq!(grid.index(0, 0, 1, 0), 4);
        assert_eq!(grid.index(0, 1, 0, 0), 16);
        assert_eq!(grid.index(1, 0, 0, 0), 64);
    }

    #[test]
    fn grid4d_rejects_nonpositive_r() {
        assert!(Grid4D::new((0.0, 1.0, 8), 8, (1.0, 4), 1.0, 4).is_err());
    }

    #[test]
    fn face_pencil_layout() {
        let pg = PhaseGrid::new(
            vec![
                Grid1D::new(0.0, 1.0, 4, Boundary::Natural).unwrap(),
                Grid1D::new(0.0, 1.0, 5, Boundary::Periodic).unwrap(),
            ],
            None,
        )
        .unwrap();
        assert_eq!(pg.face_len(0), 5 * 5);
        assert_eq!(pg.face_len(1), 4 * 6);
        // axis 1 is contiguous: pencil p starts at p * n_faces
        assert_eq!(pg.face_pencil_base(1, 3), 18);
        // axis 0 pencils are interleaved with stride 5
        assert_eq!(pg.face_pencil_base(0, 3), 3);
    }
}
