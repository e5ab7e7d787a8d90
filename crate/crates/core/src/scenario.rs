//! Scenario configuration and run loops.
//!
//! Three benchmarks share one driver: a 1D step profile under constant
//! advection, a Gaussian blob in the `(r, theta)` plane under a prescribed
//! guiding-centre drift, and the 4D drift-kinetic model with a
//! self-consistent potential.
//!
//! Configs are TOML. Top-level keys hold the run controls; the `[limiter]`,
//! `[step1d]`, `[guiding_center]` and `[drift_kinetic]` sections hold the
//! per-scenario parameters, all with defaults.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, CsvWriter, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::fields::plane_face_velocities;
use crate::limiters::{LimiterConfig, LimiterKind};
use crate::mesh::{Boundary, Field4D, Grid1D, Grid4D, PhaseGrid};
use crate::quasineutrality::{maxwellian_equilibrium, EquilibriumProfiles, ProfileParams, SelfConsistentField};
use crate::reconstruction::Scheme;
use crate::snapshot::Snapshot;
use crate::timestepping::{Advector, StaticVelocity, StepMode, VelocityField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Step1d,
    GuidingCenter2d,
    DriftKinetic4d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimiterName {
    #[default]
    None,
    Ent,
    Umeda,
    Osl,
    Sls,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimiterSection {
    pub kind: LimiterName,
    /// OSL parameter `C`.
    pub c: f64,
    /// SLS parameter `K`.
    pub k: f64,
    pub literal_paper_mode: bool,
}

impl Default for LimiterSection {
    fn default() -> Self {
        Self {
            kind: LimiterName::None,
            c: 2.0,
            k: 5.0,
            literal_paper_mode: false,
        }
    }
}

impl LimiterSection {
    pub fn config(&self) -> LimiterConfig {
        let kind = match self.kind {
            LimiterName::None => LimiterKind::None,
            LimiterName::Ent => LimiterKind::Ent,
            LimiterName::Umeda => LimiterKind::Umeda,
            LimiterName::Osl => LimiterKind::Osl { c: self.c },
            LimiterName::Sls => LimiterKind::Sls { k: self.k },
        };
        LimiterConfig::new(kind).literal(self.literal_paper_mode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Step1dParams {
    pub n_cells: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub boundary: Boundary,
    pub velocity: f64,
    /// Cells crossed per step, `a dt / dx`; fixes the time step.
    pub beta: f64,
    /// Step support as fractions of the domain, `[lo, hi)` on cell centres.
    pub step_lo: f64,
    pub step_hi: f64,
    pub low: f64,
    pub high: f64,
}

impl Default for Step1dParams {
    fn default() -> Self {
        Self {
            n_cells: 80,
            x_min: 0.0,
            x_max: 1.0,
            boundary: Boundary::Periodic,
            velocity: 1.0,
            beta: 0.2,
            step_lo: 0.375,
            step_hi: 0.625,
            low: 0.0,
            high: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GcPotential {
    /// `c r² / 2`: rigid rotation at angular speed `c / B`.
    Rigid,
    Zero,
    /// `c sin(π (r - r_min) / (r_max - r_min)) cos(theta)`.
    Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GuidingCenterParams {
    pub nr: usize,
    pub ntheta: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub b: f64,
    pub potential: GcPotential,
    pub c: f64,
    pub blob_r: f64,
    pub blob_theta: f64,
    pub blob_width: f64,
    pub dt_max: f64,
}

impl Default for GuidingCenterParams {
    fn default() -> Self {
        Self {
            nr: 64,
            ntheta: 64,
            r_min: 1.0,
            r_max: 10.0,
            b: 1.0,
            potential: GcPotential::Rigid,
            c: 1.0,
            blob_r: 5.5,
            blob_theta: PI,
            blob_width: 1.0,
            dt_max: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftKineticParams {
    pub nr: usize,
    pub ntheta: usize,
    pub nz: usize,
    pub nv: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub lz: f64,
    pub vmax: f64,
    pub dt_max: f64,
    pub epsilon: f64,
    pub mode_m: i64,
    pub mode_n: i64,
    /// Radial envelope `exp(-(r - r_peak)² / envelope_width)`.
    pub envelope_width: f64,
    pub profiles: ProfileParams,
}

impl Default for DriftKineticParams {
    fn default() -> Self {
        Self {
            nr: 32,
            ntheta: 64,
            nz: 8,
            nv: 8,
            r_min: 0.1,
            r_max: 14.5,
            lz: 1506.759,
            vmax: 7.32,
            dt_max: 8.0,
            epsilon: 1e-6,
            mode_m: 15,
            mode_n: 1,
            envelope_width: 8.0,
            profiles: ProfileParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default)]
    pub step_mode: StepMode,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default = "default_every")]
    pub diag_every: usize,
    /// 0 writes only the initial and final snapshots.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub limiter: LimiterSection,
    #[serde(default)]
    pub step1d: Step1dParams,
    #[serde(default)]
    pub guiding_center: GuidingCenterParams,
    #[serde(default)]
    pub drift_kinetic: DriftKineticParams,
}

fn default_scheme() -> Scheme {
    Scheme::Psm
}

fn default_cfl() -> f64 {
    0.5
}

fn default_every() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("output")
}

impl ScenarioConfig {
    /// Defaults for `scenario`, running `n_steps` steps.
    pub fn new(scenario: ScenarioKind, n_steps: usize) -> Self {
        Self {
            scenario,
            scheme: default_scheme(),
            step_mode: StepMode::default(),
            cfl: default_cfl(),
            n_steps: Some(n_steps),
            t_end: None,
            diag_every: default_every(),
            snapshot_every: 0,
            output: default_output(),
            limiter: LimiterSection::default(),
            step1d: Step1dParams::default(),
            guiding_center: GuidingCenterParams::default(),
            drift_kinetic: DriftKineticParams::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match (self.n_steps, self.t_end) {
            (None, None) => return bad("one of n_steps or t_end is required".into()),
            (Some(_), Some(_)) => return bad("n_steps and t_end are exclusive".into()),
            (None, Some(t)) if !(t > 0.0 && t.is_finite()) => return bad(format!("t_end must be positive, got {t}")),
            _ => {}
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return bad(format!("cfl must lie in (0, 1), got {}", self.cfl));
        }
        if self.diag_every == 0 {
            return bad("diag_every must be at least 1".into());
        }
        self.limiter.config().validate(self.scheme)?;
        let sizes: Vec<(&str, usize)> = match self.scenario {
            ScenarioKind::Step1d => {
                let p = &self.step1d;
                if !(p.beta.abs() < 1.0) {
                    return bad(format!("step1d.beta must satisfy |beta| < 1, got {}", p.beta));
                }
                if !(p.step_lo < p.step_hi) {
                    return bad("step1d.step_lo must be below step_hi".into());
                }
                vec![("step1d.n_cells", p.n_cells)]
            }
            ScenarioKind::GuidingCenter2d => {
                let p = &self.guiding_center;
                if !(p.r_min > 0.0 && p.b > 0.0 && p.dt_max > 0.0 && p.blob_width > 0.0) {
                    return bad("guiding_center needs r_min, b, dt_max, blob_width > 0".into());
                }
                vec![("guiding_center.nr", p.nr), ("guiding_center.ntheta", p.ntheta)]
            }
            ScenarioKind::DriftKinetic4d => {
                let p = &self.drift_kinetic;
                if !(p.r_min > 0.0 && p.dt_max > 0.0 && p.envelope_width > 0.0) {
                    return bad("drift_kinetic needs r_min, dt_max, envelope_width > 0".into());
                }
                p.profiles.validate()?;
                vec![
                    ("drift_kinetic.nr", p.nr),
                    ("drift_kinetic.ntheta", p.ntheta),
                    ("drift_kinetic.nz", p.nz),
                    ("drift_kinetic.nv", p.nv),
                ]
            }
        };
        for (name, n) in sizes {
            if n < crate::mesh::MIN_CELLS {
                return bad(format!("{name} must be at least {}, got {n}", crate::mesh::MIN_CELLS));
            }
        }
        Ok(())
    }
}

/// What a run leaves behind besides its files.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub records: Vec<DiagnosticsRecord>,
    pub steps: usize,
    pub time: f64,
    pub state: Vec<f64>,
    /// `(min, max)` of the state at every step, initial state included.
    pub extrema: Vec<(f64, f64)>,
    /// Largest `|Φ|` seen at any step (drift-kinetic only).
    pub max_abs_phi: f64,
    pub snapshots: Vec<PathBuf>,
}

trait Problem {
    fn state(&self) -> &[f64];
    fn refresh(&mut self, t: f64) -> Result<()>;
    fn dt(&self) -> Result<f64>;
    fn advance(&mut self, t: f64, dt: f64) -> Result<()>;
    fn record(&self, step: usize, t: f64) -> DiagnosticsRecord;
    fn snapshot(&self, step: usize, t: f64) -> Snapshot;
    fn max_abs_phi(&self) -> f64 {
        0.0
    }
}

struct Step1d {
    grid: Grid1D,
    advector: Advector,
    vel: StaticVelocity,
    mode: StepMode,
    dt: f64,
    state: Vec<f64>,
}

impl Step1d {
    fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let p = &cfg.step1d;
        let grid = Grid1D::new(p.x_min, p.x_max, p.n_cells, p.boundary)?;
        let phase = PhaseGrid::new(vec![grid], None)?;
        let a = p.velocity;
        let vel = StaticVelocity::from_fn(&phase, |_, _, _| a);
        let advector = Advector::new(phase, cfg.scheme, cfg.limiter.config())?;
        let speed = if a == 0.0 { 1.0 } else { a.abs() };
        let dt = p.beta.abs() * grid.dx() / speed;
        let (lo, hi) = (p.x_min + p.step_lo * grid.length(), p.x_min + p.step_hi * grid.length());
        let state = grid
            .cell_centers()
            .iter()
            .map(|&x| if x >= lo && x < hi { p.high } else { p.low })
            .collect();
        Ok(Self {
            grid,
            advector,
            vel,
            mode: cfg.step_mode,
            dt,
            state,
        })
    }
}

impl Problem for Step1d {
    fn state(&self) -> &[f64] {
        &self.state
    }

    fn refresh(&mut self, _t: f64) -> Result<()> {
        Ok(())
    }

    fn dt(&self) -> Result<f64> {
        Ok(self.dt)
    }

    fn advance(&mut self, t: f64, dt: f64) -> Result<()> {
        self.advector.step(self.mode, &mut self.state, &mut self.vel, t, dt)
    }

    fn record(&self, step: usize, t: f64) -> DiagnosticsRecord {
        let dx = self.grid.dx();
        let m = vec![dx; self.state.len()];
        let s = &self.state;
        DiagnosticsRecord::new(
            step,
            t,
            diagnostics::mass(s, &m),
            diagnostics::l2_norm(s, &m),
            diagnostics::entropy(s, &m, diagnostics::default_entropy_floor(s)).value,
            diagnostics::tv_1d(s, dx, self.grid.is_periodic(), true),
            0.0,
            0.0,
        )
    }

    fn snapshot(&self, step: usize, t: f64) -> Snapshot {
        Snapshot::new(vec![("x".into(), self.grid)], t, step, self.state.clone()).expect("sizes agree")
    }
}

struct GuidingCenter2d {
    phase: PhaseGrid,
    advector: Advector,
    vel: StaticVelocity,
    mode: StepMode,
    cfl: f64,
    dt_max: f64,
    measures: Vec<f64>,
    state: Vec<f64>,
}

impl GuidingCenter2d {
    fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let p = &cfg.guiding_center;
        let r = Grid1D::new(p.r_min, p.r_max, p.nr, Boundary::Natural)?;
        let theta = Grid1D::new(0.0, TAU, p.ntheta, Boundary::Periodic)?;
        let phase = PhaseGrid::new(vec![r, theta], Some(0))?;
        let c = p.c;
        let (r0, r1) = (p.r_min, p.r_max);
        let phi = move |rr: f64, th: f64| match p.potential {
            GcPotential::Rigid => 0.5 * c * rr * rr,
            GcPotential::Zero => 0.0,
            GcPotential::Mode => c * (PI * (rr - r0) / (r1 - r0)).sin() * th.cos(),
        };
        let mut psi = Vec::with_capacity((p.nr + 1) * p.ntheta);
        for i in 0..=p.nr {
            for j in 0..p.ntheta {
                psi.push(phi(r.face(i), theta.face(j)));
            }
        }
        let faces = plane_face_velocities(&psi, &r, &theta, 1, p.b);
        let vel = StaticVelocity::new(vec![faces.v_r, faces.omega]);
        let (bx, by) = (p.blob_r * p.blob_theta.cos(), p.blob_r * p.blob_theta.sin());
        let w2 = p.blob_width * p.blob_width;
        let mut state = Vec::with_capacity(phase.len());
        for rr in r.cell_centers() {
            for th in theta.cell_centers() {
                let (x, y) = (rr * th.cos(), rr * th.sin());
                state.push((-((x - bx).powi(2) + (y - by).powi(2)) / w2).exp());
            }
        }
        Ok(Self {
            measures: phase.cell_measures(),
            advector: Advector::new(phase.clone(), cfg.scheme, cfg.limiter.config())?,
            phase,
            vel,
            mode: cfg.step_mode,
            cfl: cfg.cfl,
            dt_max: p.dt_max,
            state,
        })
    }
}

impl Problem for GuidingCenter2d {
    fn state(&self) -> &[f64] {
        &self.state
    }

    fn refresh(&mut self, _t: f64) -> Result<()> {
        Ok(())
    }

    fn dt(&self) -> Result<f64> {
        self.advector.stable_dt(&self.vel, self.cfl, self.dt_max)
    }

    fn advance(&mut self, t: f64, dt: f64) -> Result<()> {
        self.advector.step(self.mode, &mut self.state, &mut self.vel, t, dt)
    }

    fn record(&self, step: usize, t: f64) -> DiagnosticsRecord {
        let (r, th) = (self.phase.axis(0), self.phase.axis(1));
        let s = &self.state;
        let m = &self.measures;
        DiagnosticsRecord::new(
            step,
            t,
            diagnostics::mass(s, m),
            diagnostics::l2_norm(s, m),
            diagnostics::entropy(s, m, diagnostics::default_entropy_floor(s)).value,
            diagnostics::tv_plane(s, r.n_cells(), th.n_cells(), r.dx(), th.dx()),
            0.0,
            0.0,
        )
    }

    fn snapshot(&self, step: usize, t: f64) -> Snapshot {
        let axes = vec![("r".into(), *self.phase.axis(0)), ("theta".into(), *self.phase.axis(1))];
        Snapshot::new(axes, t, step, self.state.clone()).expect("sizes agree")
    }
}

struct DriftKinetic4d {
    grid: Grid4D,
    advector: Advector,
    field: SelfConsistentField,
    f_eq: Field4D,
    mode: StepMode,
    cfl: f64,
    dt_max: f64,
    measures: Vec<f64>,
    state: Vec<f64>,
    max_abs_phi: f64,
}

impl DriftKinetic4d {
    fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let p = &cfg.drift_kinetic;
        let grid = Grid4D::new((p.r_min, p.r_max, p.nr), p.ntheta, (p.lz, p.nz), p.vmax, p.nv)?;
        let profiles = EquilibriumProfiles::new(p.profiles, grid.r)?;
        let f_eq = maxwellian_equilibrium(&profiles, &grid);
        let state = initial_distribution(&grid, &f_eq, p);
        Ok(Self {
            advector: Advector::new(grid.phase().clone(), cfg.scheme, cfg.limiter.config())?,
            field: SelfConsistentField::new(&grid, profiles)?,
            measures: grid.phase().cell_measures(),
            grid,
            f_eq,
            mode: cfg.step_mode,
            cfl: cfg.cfl,
            dt_max: p.dt_max,
            state,
            max_abs_phi: 0.0,
        })
    }
}

/// `f_eq (1 + ε cos(mθ + 2πnz/L_z) exp(-(r - r_peak)² / envelope_width))`.
pub fn initial_distribution(grid: &Grid4D, f_eq: &Field4D, p: &DriftKineticParams) -> Vec<f64> {
    let (m, n) = (p.mode_m as f64, p.mode_n as f64);
    let rp = p.profiles.r_peak;
    let kz = TAU * n / grid.z.length();
    let mut out = Vec::with_capacity(grid.len());
    let mut s = 0;
    for r in grid.r.cell_centers() {
        let env = (-(r - rp).powi(2) / p.envelope_width).exp();
        for th in grid.theta.cell_centers() {
            for z in grid.z.cell_centers() {
                let pert = 1.0 + p.epsilon * (m * th + kz * z).cos() * env;
                for _ in 0..grid.v.n_cells() {
                    out.push(f_eq.values[s] * pert);
                    s += 1;
                }
            }
        }
    }
    out
}

impl Problem for DriftKinetic4d {
    fn state(&self) -> &[f64] {
        &self.state
    }

    fn refresh(&mut self, t: f64) -> Result<()> {
        self.field.update(&self.state, t)?;
        let m = self.field.phi.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        self.max_abs_phi = self.max_abs_phi.max(m);
        Ok(())
    }

    fn dt(&self) -> Result<f64> {
        self.advector.stable_dt(&self.field, self.cfl, self.dt_max)
    }

    fn advance(&mut self, t: f64, dt: f64) -> Result<()> {
        self.advector.step(self.mode, &mut self.state, &mut self.field, t, dt)?;
        let m = self.field.phi.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        self.max_abs_phi = self.max_abs_phi.max(m);
        Ok(())
    }

    fn record(&self, step: usize, t: f64) -> DiagnosticsRecord {
        let s = &self.state;
        let m = &self.measures;
        let f = Field4D {
            grid: self.grid.clone(),
            values: s.clone(),
        };
        let params = self.field.profiles().params;
        DiagnosticsRecord::new(
            step,
            t,
            diagnostics::mass(s, m),
            diagnostics::l2_norm(s, m),
            diagnostics::entropy(s, m, diagnostics::default_entropy_floor(s)).value,
            diagnostics::field_tv(&f),
            diagnostics::kinetic_energy(&f, &self.f_eq, params.m),
            diagnostics::potential_energy(&self.field.phi, &self.field.n_i, &self.field.profiles().n0, params.e),
        )
    }

    fn snapshot(&self, step: usize, t: f64) -> Snapshot {
        let g = &self.grid;
        let f = Field4D {
            grid: g.clone(),
            values: self.state.clone(),
        };
        let plane = diagnostics::rtheta_plane(&f, g.z.n_cells() / 2, g.v.n_cells() / 2);
        Snapshot::new(vec![("r".into(), g.r), ("theta".into(), g.theta)], t, step, plane).expect("sizes agree")
    }

    fn max_abs_phi(&self) -> f64 {
        self.max_abs_phi
    }
}

struct Outputs {
    dir: PathBuf,
    csv: CsvWriter<BufWriter<fs::File>>,
}

impl Outputs {
    fn open(dir: &Path, cfg: &ScenarioConfig) -> Result<Self> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("metadata.txt"), metadata_text(cfg))?;
        let csv = CsvWriter::new(BufWriter::new(fs::File::create(dir.join("diagnostics.csv"))?))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            csv,
        })
    }

    fn append_metadata(&self, line: &str) -> Result<()> {
        let mut f = fs::OpenOptions::new().append(true).open(self.dir.join("metadata.txt"))?;
        writeln!(f, "{line}")?;
        Ok(())
    }
}

fn metadata_text(cfg: &ScenarioConfig) -> String {
    let mut s = String::new();
    s.push_str("# resolved configuration\n");
    s.push_str(&cfg.to_toml());
    s.push_str("\n# storage order: row-major, last axis fastest; 4D axes are (r, theta, z, v_par)\n");
    s.push_str(&format!("# crate version: {}\n", env!("CARGO_PKG_VERSION")));
    s
}

/// Runs the configured scenario. With `output`, writes `metadata.txt`,
/// `diagnostics.csv` and snapshots there.
pub fn run(cfg: &ScenarioConfig, output: Option<&Path>) -> Result<RunSummary> {
    cfg.validate()?;
    match cfg.scenario {
        ScenarioKind::Step1d => run_step1d(cfg, output),
        ScenarioKind::GuidingCenter2d => run_guiding_center_2d(cfg, output),
        ScenarioKind::DriftKinetic4d => run_drift_kinetic_4d(cfg, output),
    }
}

pub fn run_step1d(cfg: &ScenarioConfig, output: Option<&Path>) -> Result<RunSummary> {
    drive(cfg, &mut Step1d::new(cfg)?, output)
}

pub fn run_guiding_center_2d(cfg: &ScenarioConfig, output: Option<&Path>) -> Result<RunSummary> {
    drive(cfg, &mut GuidingCenter2d::new(cfg)?, output)
}

pub fn run_drift_kinetic_4d(cfg: &ScenarioConfig, output: Option<&Path>) -> Result<RunSummary> {
    drive(cfg, &mut DriftKinetic4d::new(cfg)?, output)
}

fn extrema(s: &[f64]) -> (f64, f64) {
    s.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn drive(cfg: &ScenarioConfig, p: &mut dyn Problem, output: Option<&Path>) -> Result<RunSummary> {
    let mut out = output.map(|d| Outputs::open(d, cfg)).transpose()?;
    let mut summary = RunSummary {
        records: Vec::new(),
        steps: 0,
        time: 0.0,
        state: Vec::new(),
        extrema: Vec::new(),
        max_abs_phi: 0.0,
        snapshots: Vec::new(),
    };
    let mut t = 0.0;
    let mut step = 0;
    loop {
        p.refresh(t).map_err(|e| at_step(e, step))?;
        let done = match (cfg.n_steps, cfg.t_end) {
            (Some(n), _) => step >= n,
            (None, Some(te)) => t >= te,
            _ => unreachable!(),
        };
        summary.extrema.push(extrema(p.state()));
        if step % cfg.diag_every == 0 || done {
            let rec = p.record(step, t);
            if let Some(o) = out.as_mut() {
                o.csv.write(&rec)?;
            }
            summary.records.push(rec);
        }
        let snap_due = step == 0 || done || (cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0);
        if let (Some(o), true) = (out.as_ref(), snap_due) {
            let path = p.snapshot(step, t).write(&o.dir, &format!("snapshot_{step:06}"))?;
            summary.snapshots.push(path);
        }
        if done {
            break;
        }
        let mut dt = p.dt().map_err(|e| at_step(e, step + 1))?;
        let mut next = t + dt;
        if let Some(te) = cfg.t_end {
            if next >= te - 1e-12 * te {
                dt = te - t;
                next = te;
            }
        }
        if let Err(e) = p.advance(t, dt) {
            let e = at_step(e, step + 1);
            if let Some(o) = out.as_mut() {
                o.csv.flush()?;
                o.append_metadata(&format!("# aborted: {e}"))?;
            }
            return Err(e);
        }
        step += 1;
        t = next;
    }
    if let Some(o) = out.as_mut() {
        o.csv.flush()?;
        o.append_metadata(&format!("# completed: steps = {step}, time = {t:e}"))?;
    }
    summary.steps = step;
    summary.time = t;
    summary.state = p.state().to_vec();
    summary.max_abs_phi = p.max_abs_phi();
    Ok(summary)
}

fn at_step(e: Error, step: usize) -> Error {
    Error::AtStep {
        step,
        source: Box::new(e),
    }
}
