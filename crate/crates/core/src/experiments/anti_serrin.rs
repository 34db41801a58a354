//! Solutions started at `u(δ) = α₁` with `δ|u'(δ)| = K` fixed: for small `δ`
//! they behave like the regular solution from `α₁ - K/(N-2)` and stay positive.

use serde::{Deserialize, Serialize};

use super::{strictly_increasing_positive, Check, ExperimentError};
use crate::classify::{classify_trajectory, Verdict};
use crate::nonlinearity::{Nonlinearity, NonlinearityModel};
use crate::shooting::{integrate, InitialCondition, ProblemParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntiSerrinConfig {
    pub f1: NonlinearityModel,
    pub alpha1: f64,
    pub k: f64,
    /// Converged ground-state initial value of `f1`.
    pub alpha_star: f64,
    pub delta_grid: Vec<f64>,
    #[serde(default = "anti_serrin_params")]
    pub params: ProblemParams,
}

fn anti_serrin_params() -> ProblemParams {
    ProblemParams::classification(3.0)
}

impl AntiSerrinConfig {
    pub fn with_alpha_star(alpha_star: f64) -> Self {
        AntiSerrinConfig {
            f1: NonlinearityModel::PowerDifference { p: 3.0 },
            alpha1: 5.0,
            k: 2.0,
            alpha_star,
            delta_grid: vec![1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 0.5],
            params: anti_serrin_params(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AntiSerrinRow {
    pub delta: f64,
    pub verdict: Verdict,
    pub sign_changes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AntiSerrinReport {
    /// `(N-2)(α₁ - α_*¹)` and `N f/f'(α₁)`.
    pub k_window: (f64, f64),
    pub rows: Vec<AntiSerrinRow>,
    /// Largest `δ` such that every grid value `≤ δ` gives `P(1)`.
    pub threshold: Option<f64>,
    pub checks: Vec<Check>,
}

pub fn anti_serrin_check(cfg: &AntiSerrinConfig) -> Result<AntiSerrinReport, ExperimentError> {
    strictly_increasing_positive("delta_grid", &cfg.delta_grid)?;
    cfg.params.validate()?;
    let nl = Nonlinearity::new(cfg.f1.clone())?;
    let n = cfg.params.dimension;
    let lo = (n - 2.0) * (cfg.alpha1 - cfg.alpha_star);
    let hi = n * nl.f(cfg.alpha1) / nl.df(cfg.alpha1);
    if !(cfg.alpha1 > cfg.alpha_star) {
        return Err(ExperimentError::PreconditionFailed(format!(
            "alpha1 = {} must exceed alpha_star = {}",
            cfg.alpha1, cfg.alpha_star
        )));
    }
    if !(cfg.k > lo) {
        return Err(ExperimentError::PreconditionFailed(format!(
            "K = {} is not above (N-2)(alpha1 - alpha_star) = {lo}",
            cfg.k
        )));
    }
    if !(cfg.k < hi) {
        return Err(ExperimentError::PreconditionFailed(format!(
            "K = {} is not below N f/f'(alpha1) = {hi}",
            cfg.k
        )));
    }
    let p = ProblemParams {
        stop_on_trap: true,
        ..cfg.params
    };
    let rows = cfg
        .delta_grid
        .iter()
        .map(|&delta| {
            let ic = InitialCondition::interior(delta, cfg.alpha1, -cfg.k / delta);
            let c = classify_trajectory(&nl, &integrate(&nl, &p, &ic)?);
            Ok(AntiSerrinRow {
                delta,
                verdict: c.verdict,
                sign_changes: c.sign_changes,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let positive = rows
        .iter()
        .take_while(|r| r.verdict == Verdict::P(1))
        .count();
    let threshold = positive.checked_sub(1).map(|i| rows[i].delta);
    let checks = vec![Check::new(
        "smallest starting radii stay positive",
        positive > 0,
        format!(
            "P(1) for the {positive} smallest of {} radii, threshold {threshold:?}",
            rows.len()
        ),
    )];
    Ok(AntiSerrinReport {
        k_window: (lo, hi),
        rows,
        threshold,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_k_outside_window() {
        let mut cfg = AntiSerrinConfig::with_alpha_star(4.337387680109);
        cfg.k = 0.5;
        assert!(matches!(
            anti_serrin_check(&cfg),
            Err(ExperimentError::PreconditionFailed(_))
        ));
        cfg.k = 6.0;
        assert!(anti_serrin_check(&cfg).is_err());
    }

    #[test]
    fn small_radii_are_positive() {
        let rep = anti_serrin_check(&AntiSerrinConfig::with_alpha_star(4.337387680109)).unwrap();
        assert!(rep.k_window.0 < 2.0 && 2.0 < rep.k_window.1);
        assert_eq!(rep.rows[0].verdict, Verdict::P(1), "{:?}", rep.rows);
        assert!(rep.threshold.unwrap() >= 1e-3, "{:?}", rep.rows);
    }
}
