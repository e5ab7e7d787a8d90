use proptest::prelude::*;

use semilag::diagnostics::{pairwise_sum, tv_1d};
use semilag::flux::Sweeper;
use semilag::limiters::{LimiterConfig, LimiterKind};
use semilag::mesh::{extract_pencils, write_pencil, Axis4, Boundary, Field4D, Grid1D, Grid4D};
use semilag::reconstruction::Scheme;

fn limiter_for(scheme: Scheme, pick: u8, p: f64) -> LimiterConfig {
    let kind = match (scheme, pick % 4) {
        (_, 0) => LimiterKind::None,
        (_, 1) => LimiterKind::Ent,
        (Scheme::Lag, 2) => LimiterKind::Umeda,
        (Scheme::Psm, 2) => LimiterKind::Osl { c: 1.0 + p },
        _ => LimiterKind::Sls { k: 0.5 + 10.0 * p },
    };
    LimiterConfig::new(kind)
}

fn scheme_of(b: bool) -> Scheme {
    if b {
        Scheme::Psm
    } else {
        Scheme::Lag
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn faces_exceed_cells_by_one(n in 4usize..300, periodic in any::<bool>()) {
        let b = if periodic { Boundary::Periodic } else { Boundary::Natural };
        let g = Grid1D::new(-1.0, 2.0, n, b).unwrap();
        prop_assert_eq!(g.n_faces(), n + 1);
        prop_assert!((g.face(n) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_sweep_conserves_mass(
        g in prop::collection::vec(-1.0f64..2.0, 16..96),
        betas in prop::collection::vec(-1.0f64..1.0, 97),
        psm in any::<bool>(),
        pick in any::<u8>(),
        p in 0.0f64..1.0,
    ) {
        let n = g.len();
        let scheme = scheme_of(psm);
        let grid = Grid1D::new(0.0, 1.0, n, Boundary::Periodic).unwrap();
        let mut beta = betas[..=n].to_vec();
        beta[n] = beta[0];
        let mut s = Sweeper::new(grid, scheme, limiter_for(scheme, pick, p)).unwrap();
        let mut out = g.clone();
        s.advance(&mut out, &beta).unwrap();
        let scale: f64 = g.iter().map(|v| v.abs()).sum();
        prop_assert!((pairwise_sum(&out) - pairwise_sum(&g)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn natural_sweep_with_closed_walls_conserves_mass(
        g in prop::collection::vec(0.0f64..1.0, 8..64),
        betas in prop::collection::vec(-0.9f64..0.9, 65),
        psm in any::<bool>(),
        pick in any::<u8>(),
        p in 0.0f64..1.0,
    ) {
        let n = g.len();
        let scheme = scheme_of(psm);
        let grid = Grid1D::new(0.0, 1.0, n, Boundary::Natural).unwrap();
        let mut beta = betas[..=n].to_vec();
        beta[0] = 0.0;
        beta[n] = 0.0;
        let mut s = Sweeper::new(grid, scheme, limiter_for(scheme, pick, p)).unwrap();
        let mut out = g.clone();
        s.advance(&mut out, &beta).unwrap();
        let scale: f64 = g.iter().map(|v| v.abs()).sum();
        prop_assert!((pairwise_sum(&out) - pairwise_sum(&g)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn uniform_shift_keeps_constants(c in -5.0f64..5.0, beta in -1.0f64..1.0, n in 8usize..64, psm in any::<bool>(), pick in any::<u8>()) {
        let scheme = scheme_of(psm);
        let grid = Grid1D::new(0.0, 1.0, n, Boundary::Periodic).unwrap();
        let mut s = Sweeper::new(grid, scheme, limiter_for(scheme, pick, 0.5)).unwrap();
        let mut g = vec![c; n];
        s.advance(&mut g, &vec![beta; n + 1]).unwrap();
        for v in g {
            prop_assert!((v - c).abs() <= 1e-12 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn unlimited_sweep_is_linear(
        g in prop::collection::vec(-1.0f64..1.0, 32),
        h in prop::collection::vec(-1.0f64..1.0, 32),
        a in -3.0f64..3.0,
        beta in -1.0f64..1.0,
        psm in any::<bool>(),
    ) {
        let grid = Grid1D::new(0.0, 1.0, 32, Boundary::Periodic).unwrap();
        let mut s = Sweeper::new(grid, scheme_of(psm), LimiterConfig::none()).unwrap();
        let b = vec![beta; 33];
        let mut mix: Vec<f64> = g.iter().zip(&h).map(|(x, y)| a * x + y).collect();
        let (mut g1, mut h1) = (g.clone(), h.clone());
        s.advance(&mut mix, &b).unwrap();
        s.advance(&mut g1, &b).unwrap();
        s.advance(&mut h1, &b).unwrap();
        for k in 0..32 {
            prop_assert!((mix[k] - (a * g1[k] + h1[k])).abs() <= 1e-12);
        }
    }

    #[test]
    fn whole_cell_shift_is_exact(g in prop::collection::vec(-1.0f64..1.0, 8..64), right in any::<bool>(), psm in any::<bool>()) {
        let n = g.len();
        let grid = Grid1D::new(0.0, 1.0, n, Boundary::Periodic).unwrap();
        let mut s = Sweeper::new(grid, scheme_of(psm), LimiterConfig::none()).unwrap();
        let beta = if right { 1.0 } else { -1.0 };
        let mut out = g.clone();
        s.advance(&mut out, &vec![beta; n + 1]).unwrap();
        for i in 0..n {
            let src = if right { (i + n - 1) % n } else { (i + 1) % n };
            prop_assert!((out[i] - g[src]).abs() <= 1e-12);
        }
    }

    #[test]
    fn tv_is_shift_invariant(g in prop::collection::vec(-1.0f64..1.0, 4..128), k in 0usize..128) {
        let n = g.len();
        let shifted: Vec<f64> = (0..n).map(|i| g[(i + k) % n]).collect();
        let a = tv_1d(&g, 0.1, true, true);
        let b = tv_1d(&shifted, 0.1, true, true);
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pencil_round_trip(seed in any::<u64>(), nr in 4usize..7, nt in 4usize..7, nz in 4usize..6, nv in 4usize..6) {
        let grid = Grid4D::new((1.0, 2.0, nr), nt, (3.0, nz), 2.0, nv).unwrap();
        let f = Field4D::from_fn(grid, |r, t, z, v| ((seed % 97) as f64 + r * 3.1 + t * t - z * 0.7 + v).sin());
        for axis in Axis4::ALL {
            let mut g = Field4D::zeros(f.grid.clone());
            for (profile, p) in extract_pencils(&f, axis) {
                write_pencil(&mut g, axis, p, &profile).unwrap();
            }
            prop_assert_eq!(&g.values, &f.values);
        }
    }
}
