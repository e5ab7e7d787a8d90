//! Flux limiters.
//!
//! All fluxes here are normalized by the cell width (`phi / dx`) and the
//! displacement is the dimensionless `beta = a dt / dx`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reconstruction::Scheme;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LimiterKind {
    #[default]
    None,
    Ent,
    Umeda,
    Osl {
        c: f64,
    },
    Sls {
        k: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LimiterConfig {
    pub kind: LimiterKind,
    /// Use the formulas exactly as originally printed (UMEDA bounds, OSL
    /// switch direction, SLS upwind flux) instead of the corrected forms.
    pub literal_paper_mode: bool,
}

impl LimiterConfig {
    pub fn new(kind: LimiterKind) -> Self {
        Self {
            kind,
            literal_paper_mode: false,
        }
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn literal(mut self, on: bool) -> Self {
        self.literal_paper_mode = on;
        self
    }

    /// Checks parameter ranges and the scheme the limiter is built on.
    pub fn validate(&self, scheme: Scheme) -> Result<()> {
        match self.kind {
            LimiterKind::Osl { c } => {
                if !(c > 1.0 && c.is_finite()) {
                    return Err(Error::Config(format!("OSL needs C > 1, got {c}")));
                }
                if scheme != Scheme::Psm {
                    return Err(Error::Config("OSL limits the PSM scheme".into()));
                }
            }
            LimiterKind::Sls { k } => {
                if !(k > 0.0) {
                    return Err(Error::Config(format!("SLS needs K > 0, got {k}")));
                }
            }
            LimiterKind::Umeda => {
                if scheme != Scheme::Lag {
                    return Err(Error::Config("UMEDA limits the LAG scheme".into()));
                }
            }
            LimiterKind::None | LimiterKind::Ent => {}
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self.kind {
            LimiterKind::None => "none".into(),
            LimiterKind::Ent => "ENT".into(),
            LimiterKind::Umeda => "UMEDA".into(),
            LimiterKind::Osl { c } => format!("OSL C={c}"),
            LimiterKind::Sls { k } => format!("SLS K={k}"),
        }
    }
}

/// Switches to the centred flux where the high-order flux is anti-diffusive.
pub fn ent_limit(phi: f64, beta: f64, g_i: f64, g_ip1: f64) -> f64 {
    let phi_cen = beta * 0.5 * (g_i + g_ip1);
    if (phi_cen - phi) * (g_ip1 - g_i) < 0.0 {
        phi_cen
    } else {
        phi
    }
}

/// Lower and upper bounds around cell `j` from `s = [g_{j-2}, .., g_{j+2}]`.
pub fn umeda_bounds(s: &[f64; 5], literal: bool) -> (f64, f64) {
    let [gm2, gm1, g, gp1, gp2] = *s;
    let e1a = 2.0 * gm1 - gm2;
    let e1b = 2.0 * g - gp1;
    let e2a = 2.0 * gp1 - gp2;
    let e2b = 2.0 * g - gm1;
    let (gmin1, gmin2, gmax1, gmax2) = if literal {
        (
            gm1.max(g).max(e1a.min(e1b)),
            gp1.max(g).max(e2a.min(e2b)),
            gm1.min(g).min(e1a.max(e1b)),
            gp1.min(g).min(e2a.max(e2b)),
        )
    } else {
        (
            gm1.min(g).min(e1a.max(e1b)),
            gp1.min(g).min(e2a.max(e2b)),
            gm1.max(g).max(e1a.min(e1b)),
            gp1.max(g).max(e2a.min(e2b)),
        )
    };
    (0.0f64.max(gmin1.min(gmin2)), gmax1.max(gmax2))
}

/// Limited slopes `(L+, L-)` of cell `j`.
pub fn umeda_slopes(s: &[f64; 5], literal: bool) -> (f64, f64) {
    let (gmin, gmax) = umeda_bounds(s, literal);
    let g = s[2];
    let dp = s[3] - g;
    let dm = g - s[1];
    let lp = if dp >= 0.0 {
        (2.0 * (g - gmin)).min(dp)
    } else {
        (2.0 * (g - gmax)).max(dp)
    };
    let lm = if dm >= 0.0 {
        (2.0 * (gmax - g)).min(dm)
    } else {
        (2.0 * (gmin - g)).max(dm)
    };
    (lp, lm)
}

/// Normalized flux out of upwind cell `j` with average `g` and slopes `L±`.
pub fn umeda_flux_with_slopes(g: f64, lp: f64, lm: f64, beta: f64) -> f64 {
    if beta >= 0.0 {
        beta * g
            + beta * (1.0 - beta) * (2.0 - beta) * lp / 6.0
            + beta * (1.0 - beta) * (1.0 + beta) * lm / 6.0
    } else {
        beta * g
            - beta * (1.0 + beta) * (2.0 + beta) * lm / 6.0
            - beta * (1.0 + beta) * (1.0 - beta) * lp / 6.0
    }
}

/// Normalized UMEDA flux; `s` is centred on the upwind cell.
pub fn umeda_flux(s: &[f64; 5], beta: f64, literal: bool) -> f64 {
    let (lp, lm) = umeda_slopes(s, literal);
    umeda_flux_with_slopes(s[2], lp, lm, beta)
}

/// One OSL-limited face value.
pub fn osl_value(g_lag: f64, g_psm: f64, g_ave: f64, c: f64, literal: bool) -> f64 {
    let prod = (g_lag - g_ave) * (g_psm - g_ave);
    let take_average = if literal { prod > 0.0 } else { prod <= 0.0 };
    if take_average {
        g_ave
    } else {
        let d = g_psm - g_ave;
        g_ave + d.signum() * (c * (g_lag - g_ave).abs()).min(d.abs())
    }
}

/// Limits both one-sided values at every face. `gbar_at(k)` returns the cell
/// average with the boundary extension applied.
pub fn osl_limit_faces(
    psm: &[f64],
    lag_minus: &[f64],
    lag_plus: &[f64],
    gbar_at: impl Fn(isize) -> f64,
    c: f64,
    literal: bool,
    out_minus: &mut [f64],
    out_plus: &mut [f64],
) {
    for f in 0..psm.len() {
        let g_ave = 0.5 * (gbar_at(f as isize - 1) + gbar_at(f as isize));
        out_minus[f] = osl_value(lag_minus[f], psm[f], g_ave, c, literal);
        out_plus[f] = osl_value(lag_plus[f], psm[f], g_ave, c, literal);
    }
}

pub fn osl_face_values(
    psm: &crate::mesh::FaceField,
    lag: &crate::mesh::FaceField,
    profile: &crate::mesh::CellProfile,
    c: f64,
    literal: bool,
) -> Result<crate::mesh::FaceField> {
    if c <= 1.0 {
        return Err(Error::Config(format!("OSL needs C > 1, got {c}")));
    }
    let n = profile.values.len() as isize;
    let periodic = profile.grid.is_periodic();
    let at = |k: isize| {
        if periodic {
            profile.values[k.rem_euclid(n) as usize]
        } else {
            profile.values[k.clamp(0, n - 1) as usize]
        }
    };
    let mut out = crate::mesh::FaceField::zeros(psm.n_faces());
    osl_limit_faces(
        &psm.minus, &lag.minus, &lag.plus, at, c, literal, &mut out.minus, &mut out.plus,
    );
    Ok(out)
}

/// SLS blend factor for slope ratio `theta`.
pub fn sls_gamma(theta: f64, k: f64) -> f64 {
    (k * theta.abs()).clamp(0.0, 1.0)
}

/// SLS-limited normalized flux. `s = [g_{i-1}, g_i, g_{i+1}, g_{i+2}]` around
/// the face between cells `i` and `i + 1`.
pub fn sls_flux(phi: f64, s: &[f64; 4], beta: f64, k: f64, literal: bool) -> f64 {
    if beta == 0.0 {
        return phi;
    }
    let [gm1, g, gp1, gp2] = *s;
    let den = gp1 - g;
    let gamma = if den == 0.0 {
        1.0
    } else {
        let num = if beta > 0.0 { g - gm1 } else { gp2 - gp1 };
        sls_gamma(num / den, k)
    };
    let up = if literal {
        beta * 0.5 * (g + gp1) - beta.signum() * 0.5 * den
    } else if beta > 0.0 {
        beta * g
    } else {
        beta * gp1
    };
    gamma * phi + (1.0 - gamma) * up
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::hermite_flux;
    use rand::{Rng, SeedableRng};

    #[test]
    fn ent_examples() {
        assert_eq!(ent_limit(0.7, 0.2, 1.0, 1.0), 0.7);
        assert_eq!(ent_limit(0.1, 0.2, 0.0, 1.0), 0.1);
        assert!((ent_limit(0.3, 0.2, 0.0, 1.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn ent_returns_one_of_two() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        for _ in 0..1000 {
            let (phi, b, a, c) = (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let out = ent_limit(phi, b, a, c);
            assert!(out == phi || out == b * 0.5 * (a + c));
        }
    }

    #[test]
    fn umeda_constant_data() {
        let s = [0.4; 5];
        for beta in [-1.0, -0.3, 0.0, 0.2, 1.0] {
            assert!((umeda_flux(&s, beta, false) - beta * 0.4).abs() < 1e-15);
        }
    }

    #[test]
    fn umeda_unlimited_is_lag() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(2);
        for _ in 0..500 {
            let s: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let beta: f64 = rng.gen_range(-1.0..1.0);
            let j = 2;
            let lp = s[j + 1] - s[j];
            let lm = s[j] - s[j - 1];
            let u = umeda_flux_with_slopes(s[j], lp, lm, beta);
            // LAG edges of cell j
            let left = s[j - 1] / 3.0 + 5.0 * s[j] / 6.0 - s[j + 1] / 6.0;
            let right = -s[j - 1] / 6.0 + 5.0 * s[j] / 6.0 + s[j + 1] / 3.0;
            let delta = if beta > 0.0 { 1.0 } else { 0.0 };
            let h = hermite_flux(s[j], left, right, beta, delta);
            assert!((u - h).abs() < 1e-13, "beta={beta}: {u} vs {h}");
        }
    }

    #[test]
    fn umeda_bounds_are_ordered() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(4);
        for _ in 0..2000 {
            let s: [f64; 5] = std::array::from_fn(|_| rng.gen_range(0.0..1.0));
            let (lo, hi) = umeda_bounds(&s, false);
            assert!(lo <= hi);
        }
    }

    #[test]
    fn osl_examples() {
        assert_eq!(osl_value(0.3, 0.3, 0.3, 2.0, false), 0.3);
        assert!((osl_value(0.1, 0.5, 0.0, 2.0, false) - 0.2).abs() < 1e-15);
        assert_eq!(osl_value(-0.1, 0.5, 0.0, 2.0, false), 0.0);
        // equal LAG and PSM on the same side returns the common value
        assert!((osl_value(0.7, 0.7, 0.2, 1.5, false) - 0.7).abs() < 1e-15);
        // literal mode inverts the switch
        assert_eq!(osl_value(0.1, 0.5, 0.0, 2.0, true), 0.0);
        assert!((osl_value(-0.1, 0.5, 0.0, 2.0, true) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn sls_examples() {
        // theta = 1
        let phi = 0.37;
        let out = sls_flux(phi, &[0.0, 1.0, 2.0, 3.0], 0.2, 5.0, false);
        assert_eq!(out, phi);
        // theta = 0: plateau upstream of a jump
        let out = sls_flux(phi, &[0.0, 0.0, 1.0, 1.0], 0.2, 5.0, false);
        assert!((out - 0.0).abs() < 1e-15);
        // theta = 0.1, K = 5 gives an equal blend
        assert!((sls_gamma(0.1, 5.0) - 0.5).abs() < 1e-15);
        let out = sls_flux(phi, &[0.9, 1.0, 2.0, 3.0], 0.2, 5.0, false);
        assert!((out - (0.5 * phi + 0.5 * 0.2)).abs() < 1e-15);
        // flat downstream slope
        assert_eq!(sls_flux(phi, &[0.0, 1.0, 1.0, 5.0], 0.2, 5.0, false), phi);
    }

    #[test]
    fn sls_constants_consistent() {
        for literal in [false, true] {
            for beta in [-0.7, -0.1, 0.3, 1.0] {
                let c = 1.3;
                let out = sls_flux(beta * c, &[c; 4], beta, 1.0, literal);
                assert!((out - beta * c).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn validation() {
        let osl = LimiterConfig::new(LimiterKind::Osl { c: 1.0 });
        assert!(osl.validate(Scheme::Psm).is_err());
        let osl = LimiterConfig::new(LimiterKind::Osl { c: 2.0 });
        assert!(osl.validate(Scheme::Psm).is_ok());
        assert!(osl.validate(Scheme::Lag).is_err());
        assert!(LimiterConfig::new(LimiterKind::Sls { k: 0.0 }).validate(Scheme::Psm).is_err());
        assert!(LimiterConfig::new(LimiterKind::Umeda).validate(Scheme::Psm).is_err());
        assert!(LimiterConfig::new(LimiterKind::Umeda).validate(Scheme::Lag).is_ok());
    }
}
