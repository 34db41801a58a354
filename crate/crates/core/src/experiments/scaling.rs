//! Scaling identities of the pure power `f(s) = s^p`:
//! `v(α, r) = α v(1, α^{(p-1)/2} r)` and the singular profile `C(N,p) r^{-2/(p-1)}`.

use serde::{Deserialize, Serialize};

use super::{jr2_first_arc, log_grid, strictly_increasing_positive, Check, ExperimentError};
use crate::nonlinearity::Nonlinearity;
use crate::shooting::{integrate_alpha, ProblemParams, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub p: f64,
    pub alpha_grid: Vec<f64>,
    /// Number of comparison radii per `α`.
    pub radii: usize,
    /// Scaled radii `α^{(p-1)/2} r` span `[rho_lo, rho_hi]` geometrically.
    pub rho_lo: f64,
    pub rho_hi: f64,
    /// Supercritical exponent used for the large-`α` approach to the singular profile.
    pub singular_p: f64,
    pub singular_alphas: Vec<f64>,
    pub r_fixed: f64,
    #[serde(default = "scaling_params")]
    pub params: ProblemParams,
}

fn scaling_params() -> ProblemParams {
    ProblemParams::with_dimension(3.0)
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            p: 5.0,
            alpha_grid: vec![2.0, 10.0, 100.0],
            radii: 100,
            rho_lo: 1e-2,
            rho_hi: 100.0,
            singular_p: 7.0,
            singular_alphas: log_grid(1.0, 6.0, 11),
            r_fixed: 1.0,
            params: scaling_params(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub alpha: f64,
    pub max_rel_error: f64,
    pub worst_r: f64,
    pub jr2_max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularRow {
    pub alpha: f64,
    pub v: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// `C(N, p)` for the configured `p` (may be NaN when `p` is not supercritical).
    pub c_np: f64,
    pub c_singular: f64,
    pub singular: Vec<SingularRow>,
    pub checks: Vec<Check>,
}

/// `C(N,p) = ((2/(p-1)) (N - 2 - 2/(p-1)))^{1/(p-1)}`.
pub fn singular_constant(n: f64, p: f64) -> f64 {
    let m = 2.0 / (p - 1.0);
    (m * (n - 2.0 - m)).powf(1.0 / (p - 1.0))
}

impl ScalingConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        strictly_increasing_positive("alpha_grid", &self.alpha_grid)?;
        strictly_increasing_positive("singular_alphas", &self.singular_alphas)?;
        self.params.validate()?;
        let n = self.params.dimension;
        if !(self.p > 1.0) || !(self.singular_p > (n + 2.0) / (n - 2.0)) {
            return Err(ExperimentError::InvalidConfig(format!(
                "need p > 1 and singular_p > (N+2)/(N-2), got p = {}, singular_p = {}",
                self.p, self.singular_p
            )));
        }
        if self.radii < 2
            || !(self.rho_lo > 0.0 && self.rho_lo < self.rho_hi && self.rho_hi.is_finite())
        {
            return Err(ExperimentError::InvalidConfig(
                "need radii >= 2 and 0 < rho_lo < rho_hi".into(),
            ));
        }
        if !(self.r_fixed > 0.0 && self.r_fixed.is_finite()) {
            return Err(ExperimentError::InvalidConfig(
                "r_fixed must be positive".into(),
            ));
        }
        Ok(())
    }

    fn solve(
        &self,
        nl: &Nonlinearity,
        alpha: f64,
        r_max: f64,
    ) -> Result<Trajectory, ExperimentError> {
        let p = ProblemParams {
            r_max,
            stop_on_trap: false,
            ..self.params
        };
        Ok(integrate_alpha(nl, &p, alpha)?)
    }
}

const PULLBACK_LEVELS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

pub fn scaling_checks(cfg: &ScalingConfig) -> Result<ScalingReport, ExperimentError> {
    cfg.validate()?;
    let n = cfg.params.dimension;
    let tol = 10.0 * cfg.params.rel_tol;
    let nl = Nonlinearity::pure_power(cfg.p)?;
    let half = (cfg.p - 1.0) / 2.0;
    let unit = cfg.solve(&nl, 1.0, cfg.rho_hi * 1.01)?;
    let rhos: Vec<f64> = (0..cfg.radii)
        .map(|i| cfg.rho_lo * (cfg.rho_hi / cfg.rho_lo).powf(i as f64 / (cfg.radii - 1) as f64))
        .collect();

    let mut rows = Vec::new();
    for &alpha in &cfg.alpha_grid {
        let scale = alpha.powf(half);
        let traj = cfg.solve(&nl, alpha, cfg.rho_hi * 1.01 / scale)?;
        let mut worst = (0.0f64, 0.0);
        for &rho in &rhos {
            let r = rho / scale;
            let (v, _) = traj.dense_eval(r)?;
            let (w, _) = unit.dense_eval(rho)?;
            let err = (v - alpha * w).abs() / (alpha * w).abs();
            if err > worst.0 {
                worst = (err, r);
            }
        }
        let mut jr2_err = 0.0f64;
        for &sigma in &PULLBACK_LEVELS {
            let (Some(a), Some(b)) = (
                jr2_first_arc(&traj, alpha * sigma),
                jr2_first_arc(&unit, sigma),
            ) else {
                continue;
            };
            jr2_err = jr2_err.max((a - alpha * b).abs() / (alpha * b).abs());
        }
        rows.push(ScalingRow {
            alpha,
            max_rel_error: worst.0,
            worst_r: worst.1,
            jr2_max_rel_error: jr2_err,
        });
    }

    let c_np = singular_constant(n, cfg.p);
    let c_singular = singular_constant(n, cfg.singular_p);
    let sing_nl = Nonlinearity::pure_power(cfg.singular_p)?;
    let target = c_singular * cfg.r_fixed.powf(-2.0 / (cfg.singular_p - 1.0));
    let singular = cfg
        .singular_alphas
        .iter()
        .map(|&alpha| {
            let traj = cfg.solve(&sing_nl, alpha, cfg.r_fixed * 1.01)?;
            let (v, _) = traj.dense_eval(cfg.r_fixed)?;
            Ok(SingularRow {
                alpha,
                v,
                deviation: (v - target).abs(),
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;

    let mut checks: Vec<Check> = rows
        .iter()
        .map(|r| {
            Check::new(
                &format!("scaling identity alpha = {}", r.alpha),
                r.max_rel_error <= tol,
                format!(
                    "max relative error {:e} at r = {} (tolerance {tol:e})",
                    r.max_rel_error, r.worst_r
                ),
            )
        })
        .collect();
    checks.extend(rows.iter().map(|r| {
        Check::new(
            &format!("Jr2 pullback alpha = {}", r.alpha),
            r.jr2_max_rel_error <= tol,
            format!("max relative error {:e}", r.jr2_max_rel_error),
        )
    }));
    if n == 3.0 && cfg.p == 5.0 {
        let gap = (c_np - 0.25f64.powf(0.25)).abs();
        checks.push(Check::new(
            "C(3,5) = (1/4)^(1/4)",
            gap <= 1e-12,
            format!("|C - 0.25^0.25| = {gap:e}"),
        ));
    }
    let first = singular.first().map_or(f64::NAN, |r| r.deviation);
    let last = singular.last().map_or(f64::NAN, |r| r.deviation);
    checks.push(Check::new(
        "large-alpha approach to the singular profile",
        last < first,
        format!(
            "|v - C r^(-2/(p-1))| from {first:e} to {last:e} at r = {}",
            cfg.r_fixed
        ),
    ));
    Ok(ScalingReport {
        rows,
        c_np,
        c_singular,
        singular,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_constants() {
        assert!((singular_constant(3.0, 5.0) - 0.25f64.powf(0.25)).abs() < 1e-15);
        assert!((singular_constant(3.0, 7.0) - (2.0f64 / 9.0).powf(1.0 / 6.0)).abs() < 1e-15);
    }

    #[test]
    fn unit_alpha_is_the_identity_map() {
        let cfg = ScalingConfig {
            alpha_grid: vec![1.0],
            singular_alphas: vec![10.0],
            ..ScalingConfig::default()
        };
        let rep = scaling_checks(&cfg).unwrap();
        assert_eq!(rep.rows[0].max_rel_error, 0.0);
        assert_eq!(rep.rows[0].jr2_max_rel_error, 0.0);
    }
}
