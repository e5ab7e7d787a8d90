use std::f64::consts::TAU;
use std::path::Path;

use semilag::diagnostics::CSV_HEADER;
use semilag::scenario::{self, GcPotential, LimiterName, ScenarioConfig, ScenarioKind};
use semilag::snapshot::Snapshot;

fn step(limiter: LimiterName, param: f64, steps: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(ScenarioKind::Step1d, steps);
    cfg.limiter.kind = limiter;
    cfg.limiter.c = param;
    cfg.limiter.k = param;
    cfg
}

#[test]
fn psm_step_oscillates_but_keeps_mass() {
    let s = scenario::run(&step(LimiterName::None, 0.0, 400), None).unwrap();
    let first = s.records.first().unwrap();
    let last = s.records.last().unwrap();
    assert!(((last.mass - first.mass) / first.mass).abs() <= 1e-12);
    assert!(last.tv > first.tv);
    let (lo, hi) = s.extrema.last().unwrap();
    assert!(*lo < 0.0 && *hi > 1.0);
}

#[test]
fn sls_k1_no_rougher_than_k5() {
    let a = scenario::run(&step(LimiterName::Sls, 1.0, 400), None).unwrap();
    let b = scenario::run(&step(LimiterName::Sls, 5.0, 400), None).unwrap();
    for (x, y) in a.records.iter().zip(&b.records) {
        assert!(x.tv <= y.tv, "step {}: {} > {}", x.step, x.tv, y.tv);
    }
}

#[test]
fn full_period_returns_near_start() {
    let s0 = scenario::run(&step(LimiterName::Ent, 0.0, 0), None).unwrap();
    let s = scenario::run(&step(LimiterName::Ent, 0.0, 400), None).unwrap();
    let err: f64 = s.state.iter().zip(&s0.state).map(|(a, b)| (a - b).abs()).sum::<f64>() / 80.0;
    assert!(err < 0.1, "{err}");
}

fn rotation_error(ntheta: usize) -> f64 {
    let mut cfg = ScenarioConfig::new(ScenarioKind::GuidingCenter2d, 0);
    cfg.n_steps = None;
    cfg.t_end = Some(TAU);
    cfg.cfl = 0.4;
    cfg.diag_every = 1000;
    cfg.guiding_center.nr = 16;
    cfg.guiding_center.ntheta = ntheta;
    cfg.guiding_center.potential = GcPotential::Rigid;
    cfg.guiding_center.blob_width = 2.0;
    let s0 = scenario::run(&ScenarioConfig { t_end: None, n_steps: Some(0), ..cfg.clone() }, None).unwrap();
    let s = scenario::run(&cfg, None).unwrap();
    assert_eq!(s.time, TAU);
    s.state
        .iter()
        .zip(&s0.state)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt()
        / (ntheta as f64).sqrt()
}

#[test]
fn rigid_rotation_converges() {
    let e: Vec<f64> = [32, 64, 128].iter().map(|&n| rotation_error(n)).collect();
    for k in 1..e.len() {
        let order = (e[k - 1] / e[k]).log2();
        assert!(order >= 2.5, "errors {e:?}");
    }
}

#[test]
fn guiding_center_mode_conserves_mass() {
    let mut cfg = ScenarioConfig::new(ScenarioKind::GuidingCenter2d, 40);
    cfg.guiding_center.potential = GcPotential::Mode;
    cfg.guiding_center.c = 3.0;
    cfg.guiding_center.nr = 24;
    cfg.guiding_center.ntheta = 32;
    let s = scenario::run(&cfg, None).unwrap();
    let m0 = s.records[0].mass;
    for r in &s.records {
        assert!(((r.mass - m0) / m0).abs() <= 1e-12);
    }
    assert!(s.state != scenario::run(&ScenarioConfig { n_steps: Some(0), ..cfg }, None).unwrap().state);
}

#[test]
fn runs_are_bit_reproducible() {
    let mut cfg = ScenarioConfig::new(ScenarioKind::DriftKinetic4d, 3);
    cfg.drift_kinetic.nr = 8;
    cfg.drift_kinetic.ntheta = 16;
    cfg.drift_kinetic.nz = 4;
    cfg.drift_kinetic.nv = 8;
    cfg.drift_kinetic.epsilon = 1e-2;
    cfg.drift_kinetic.mode_m = 2;
    let a = scenario::run(&cfg, None).unwrap();
    let b = scenario::run(&cfg, None).unwrap();
    assert_eq!(a.state, b.state);
    assert_eq!(a.records, b.records);
    assert!(a.max_abs_phi > 0.0);
}

fn read_csv(dir: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(dir.join("diagnostics.csv"))
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = step(LimiterName::None, 0.0, 10);
    cfg.diag_every = 3;
    cfg.snapshot_every = 5;
    let s = scenario::run(&cfg, Some(dir.path())).unwrap();
    let rows = read_csv(dir.path());
    assert_eq!(rows[0].join(","), CSV_HEADER);
    let steps: Vec<&str> = rows[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(steps, ["0", "3", "6", "9", "10"]);
    assert_eq!(s.snapshots.len(), 3);
    let snap = Snapshot::read(dir.path(), "snapshot_000010").unwrap();
    assert_eq!(snap.values, s.state);
    assert_eq!(snap.step, 10);
    let meta = std::fs::read_to_string(dir.path().join("metadata.txt")).unwrap();
    assert!(meta.contains("scenario = \"step1d\""));
    assert!(meta.contains("completed: steps = 10"));
    let echoed = meta.split("\n#").next().unwrap().trim_start_matches("# resolved configuration\n");
    assert_eq!(ScenarioConfig::from_toml_str(echoed).unwrap(), cfg);
}

#[test]
fn drift_kinetic_snapshots_are_planes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ScenarioConfig::new(ScenarioKind::DriftKinetic4d, 1);
    cfg.drift_kinetic.nr = 8;
    cfg.drift_kinetic.ntheta = 16;
    cfg.drift_kinetic.nz = 4;
    cfg.drift_kinetic.nv = 8;
    scenario::run(&cfg, Some(dir.path())).unwrap();
    let snap = Snapshot::read(dir.path(), "snapshot_000001").unwrap();
    assert_eq!(snap.values.len(), 8 * 16);
    assert_eq!(snap.axes[0].0, "r");
    let rows = read_csv(dir.path());
    assert_eq!(rows.len(), 3);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 4);
}
