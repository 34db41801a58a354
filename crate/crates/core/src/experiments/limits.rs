//! Large-`λ` limits for the piecewise model with outer branch `λ² f₂(s/μ)`.
//!
//! Above `α₁ + ε` the solution is `w_λ(r) = v(λr)` with `v` the `λ = 1`
//! solution, so `J r²` there does not depend on `λ`. Below `α₁` the solution
//! enters with `r → 0` and `J r² ≥ ζ - (N-2)ε`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    first_arc_state, jr2_first_arc, log_grid, strictly_increasing_positive, trend, Check,
    ExperimentError, Trend,
};
use crate::nonlinearity::{build_fmu, Nonlinearity, NonlinearityModel};
use crate::roots::bisect;
use crate::shooting::{integrate_alpha, ProblemParams, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitConfig {
    pub f1: NonlinearityModel,
    pub f2: NonlinearityModel,
    pub alpha1: f64,
    pub eps: f64,
    pub mu: f64,
    pub lambda_grid: Vec<f64>,
    /// Initial value, above `alpha1 + eps`.
    pub alpha_x: f64,
    #[serde(default = "limit_params")]
    pub params: ProblemParams,
    /// Allowed relative distance of `(J/f)(s_λ)` from `1/N` at the largest `λ`.
    #[serde(default = "default_jf_tolerance")]
    pub jf_tolerance: f64,
}

fn limit_params() -> ProblemParams {
    ProblemParams::probe(3.0)
}

fn default_jf_tolerance() -> f64 {
    0.05
}

impl Default for LimitConfig {
    fn default() -> Self {
        LimitConfig {
            f1: NonlinearityModel::PowerDifference { p: 3.0 },
            f2: NonlinearityModel::PurePower { p: 3.0 },
            alpha1: 4.5,
            eps: 0.1,
            mu: 1.0,
            lambda_grid: log_grid(1.0, 4.0, 13),
            alpha_x: 6.0,
            params: limit_params(),
            jf_tolerance: default_jf_tolerance(),
        }
    }
}

impl LimitConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        strictly_increasing_positive("lambda_grid", &self.lambda_grid)?;
        self.params.validate()?;
        if !(self.alpha_x > self.alpha1 + self.eps) || !self.alpha_x.is_finite() {
            return Err(ExperimentError::InvalidConfig(format!(
                "alpha_x = {} must exceed alpha1 + eps = {}",
                self.alpha_x,
                self.alpha1 + self.eps
            )));
        }
        if !(self.jf_tolerance > 0.0) {
            return Err(ExperimentError::InvalidConfig(
                "jf_tolerance must be positive".into(),
            ));
        }
        self.model(1.0)?;
        Ok(())
    }

    fn model(&self, lambda: f64) -> Result<Nonlinearity, ExperimentError> {
        Ok(build_fmu(
            self.f1.clone(),
            self.f2.clone(),
            self.alpha1,
            self.eps,
            lambda,
            self.mu,
        )?)
    }

    fn dimension(&self) -> f64 {
        self.params.dimension
    }

    fn trajectory(&self, nl: &Nonlinearity) -> Result<Trajectory, ExperimentError> {
        let p = ProblemParams {
            stop_on_trap: false,
            ..self.params
        };
        Ok(integrate_alpha(nl, &p, self.alpha_x)?)
    }

    fn level_jr2(&self, traj: &Trajectory, s: f64) -> Result<f64, ExperimentError> {
        jr2_first_arc(traj, s).ok_or_else(|| {
            ExperimentError::PreconditionFailed(format!(
                "first arc from alpha = {} does not reach s = {s}",
                self.alpha_x
            ))
        })
    }

    /// `ζ = J r²(α₁+ε)` for `λ = 1`, and `N f/f'(α₁+ε)`.
    fn zeta(&self) -> Result<(f64, f64), ExperimentError> {
        let nl = self.model(1.0)?;
        let top = self.alpha1 + self.eps;
        let zeta = self.level_jr2(&self.trajectory(&nl)?, top)?;
        let bound = self.dimension() * nl.f(top) / nl.df(top);
        if !(zeta < bound) {
            return Err(ExperimentError::PreconditionFailed(format!(
                "zeta = {zeta} is not below N f/f'(alpha1 + eps) = {bound}"
            )));
        }
        Ok((zeta, bound))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PasoERow {
    pub lambda: f64,
    /// `J r²` at `α₁ + ε`.
    pub jr2_top: f64,
    /// `J r²` at `α₁`.
    pub jr2_alpha1: f64,
    pub r_alpha1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PasoEReport {
    pub zeta: f64,
    pub nf_over_fprime: f64,
    /// `ζ - (N-2)ε`.
    pub eta_minus: f64,
    /// `J r²(α₁)` at the largest `λ` minus `ζ - (N-2)ε`.
    pub limit_gap: f64,
    pub rows: Vec<PasoERow>,
    /// `J r²(α₁+ε)` of the pure `f₂` solution and of the `λ = μ = 1`, `f₁ = f₂` model.
    pub identity: (f64, f64),
    pub trend: Trend,
    pub checks: Vec<Check>,
}

fn paso_e_row(cfg: &LimitConfig, lambda: f64) -> Result<PasoERow, ExperimentError> {
    let nl = cfg.model(lambda)?;
    let traj = cfg.trajectory(&nl)?;
    let jr2_top = cfg.level_jr2(&traj, cfg.alpha1 + cfg.eps)?;
    let (r_alpha1, du) = first_arc_state(&traj, cfg.alpha1).ok_or_else(|| {
        ExperimentError::PreconditionFailed(format!(
            "lambda = {lambda}: first arc stops above alpha1"
        ))
    })?;
    Ok(PasoERow {
        lambda,
        jr2_top,
        jr2_alpha1: -du * r_alpha1,
        r_alpha1,
    })
}

pub fn paso_e_check(cfg: &LimitConfig) -> Result<PasoEReport, ExperimentError> {
    cfg.validate()?;
    let (zeta, bound) = cfg.zeta()?;
    let eta_minus = zeta - (cfg.dimension() - 2.0) * cfg.eps;
    let rows = cfg
        .lambda_grid
        .par_iter()
        .map(|&l| paso_e_row(cfg, l))
        .collect::<Result<Vec<_>, _>>()?;

    // Identity configuration: f₁ replaced by f₂, λ = μ = 1.
    let direct_nl = Nonlinearity::new(cfg.f2.clone())?;
    let direct = cfg.level_jr2(&cfg.trajectory(&direct_nl)?, cfg.alpha1 + cfg.eps)?;
    let ident_nl = build_fmu(
        cfg.f2.clone(),
        cfg.f2.clone(),
        cfg.alpha1,
        cfg.eps,
        1.0,
        1.0,
    )?;
    let ident = cfg.level_jr2(&cfg.trajectory(&ident_nl)?, cfg.alpha1 + cfg.eps)?;

    let lambdas: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    let low: Vec<f64> = rows.iter().map(|r| r.jr2_alpha1).collect();
    let tr = trend("Jr2(alpha1)", &lambdas, &low, eta_minus);
    let max_dev = rows
        .iter()
        .map(|r| (r.jr2_top - zeta).abs())
        .fold(0.0, f64::max);
    let below = rows.iter().filter(|r| r.jr2_alpha1 < eta_minus).count();
    let checks = vec![
        Check::new(
            "Jr2(alpha1+eps) independent of lambda",
            max_dev < 1e-6,
            format!("max |Jr2 - zeta| = {max_dev:e}, zeta = {zeta}"),
        ),
        Check::new(
            "Jr2(alpha1) >= zeta - (N-2) eps",
            below == 0,
            format!("{below} of {} rows below {eta_minus}", rows.len()),
        ),
        Check::new(
            "Jr2(alpha1) trend",
            tr.pass(),
            format!("final deviation {:e}", tr.final_deviation),
        ),
        Check::new(
            "identity configuration",
            (direct - ident).abs() < 1e-9 * direct.abs().max(1.0),
            format!("direct {direct}, piecewise {ident}"),
        ),
    ];
    let limit_gap = low.last().map_or(f64::NAN, |v| v - eta_minus);
    Ok(PasoEReport {
        zeta,
        nf_over_fprime: bound,
        eta_minus,
        limit_gap,
        rows,
        identity: (direct, ident),
        trend: tr,
        checks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SLambdaRow {
    pub lambda: f64,
    pub s_lambda: f64,
    pub j_over_f: f64,
    pub r: f64,
    pub jr2_alpha1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SLambdaReport {
    pub zeta: f64,
    /// `ζ - (N-2)ε`, with `ζ` measured.
    pub eta_minus: f64,
    /// `J r²(α₁)` at the largest `λ`; defines the `s_λ` target.
    pub eta_minus_measured: f64,
    pub s_limit: f64,
    pub rows: Vec<SLambdaRow>,
    /// `λ` values where `J/f` had no interior minimum.
    pub missing: Vec<f64>,
    pub trends: Vec<Trend>,
    pub checks: Vec<Check>,
}

/// Sign of `d(J/f)/ds` on a decreasing arc: `N x - 1 - f' r² x²` with `x = J/f`.
fn jf_slope_sign(nl: &Nonlinearity, n: f64, s: f64, r: f64, j: f64) -> f64 {
    let x = j / nl.f(s);
    n * x - 1.0 - nl.df(s) * r * r * x * x
}

const S_GRID: usize = 4000;

/// Highest `s < α₁` where `J/f`, followed downward from `α₁`, stops decreasing.
fn locate_s_lambda(cfg: &LimitConfig, lambda: f64) -> Result<SLambdaRow, ExperimentError> {
    let nl = cfg.model(lambda)?;
    let traj = cfg.trajectory(&nl)?;
    let n = cfg.dimension();
    let (r1, du1) =
        first_arc_state(&traj, cfg.alpha1).ok_or(ExperimentError::MinimumNotFound { lambda })?;
    let slope = |s: f64| -> Option<f64> {
        let (r, du) = first_arc_state(&traj, s)?;
        Some(jf_slope_sign(&nl, n, s, r, -du / r))
    };
    // Stay where f > 0 so J/f is defined.
    let floor = nl.b;
    let mut prev: Option<(f64, f64)> = None;
    for i in 1..S_GRID {
        let s = cfg.alpha1 - (cfg.alpha1 - floor) * i as f64 / S_GRID as f64;
        let Some(g) = slope(s) else { break };
        if let Some((sp, gp)) = prev {
            if gp > 0.0 && g <= 0.0 {
                let s_lambda = bisect(|x| slope(x).unwrap_or(0.0), s, sp, 0.0);
                let (r, du) = first_arc_state(&traj, s_lambda)
                    .ok_or(ExperimentError::MinimumNotFound { lambda })?;
                return Ok(SLambdaRow {
                    lambda,
                    s_lambda,
                    j_over_f: -du / r / nl.f(s_lambda),
                    r,
                    jr2_alpha1: -du1 * r1,
                });
            }
        }
        prev = Some((s, g));
    }
    Err(ExperimentError::MinimumNotFound { lambda })
}

pub fn s_lambda_sweep(cfg: &LimitConfig) -> Result<SLambdaReport, ExperimentError> {
    cfg.validate()?;
    let (zeta, _) = cfg.zeta()?;
    let n = cfg.dimension();
    let eta_minus = zeta - (n - 2.0) * cfg.eps;
    let results: Vec<_> = cfg
        .lambda_grid
        .par_iter()
        .map(|&l| (l, locate_s_lambda(cfg, l)))
        .collect();
    let mut rows = Vec::new();
    let mut missing = Vec::new();
    for (l, res) in results {
        match res {
            Ok(r) => rows.push(r),
            Err(ExperimentError::MinimumNotFound { .. }) => missing.push(l),
            Err(e) => return Err(e),
        }
    }
    // The limit of J r²(α₁) is taken from the largest λ: the bridge carries
    // f of order λ², so ∫ f/J over it does not vanish.
    let eta_minus_measured = rows.last().map_or(f64::NAN, |r| r.jr2_alpha1);
    let s_limit = cfg.alpha1 - eta_minus_measured / (n - 2.0);
    let lambdas: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    let col = |f: fn(&SLambdaRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let trends = vec![
        trend("s_lambda", &lambdas, &col(|r| r.s_lambda), s_limit),
        trend("J/f(s_lambda)", &lambdas, &col(|r| r.j_over_f), 1.0 / n),
        trend("r(s_lambda)", &lambdas, &col(|r| r.r), 0.0),
    ];
    let mut checks: Vec<Check> = trends
        .iter()
        .map(|t| {
            Check::new(
                &format!("{} trend", t.column),
                t.pass(),
                format!("limit {}, final deviation {:e}", t.limit, t.final_deviation),
            )
        })
        .collect();
    let jf_last = rows.last().map_or(f64::NAN, |r| r.j_over_f);
    let jf_dev = (jf_last * n - 1.0).abs();
    checks.push(Check::new(
        "J/f(s_lambda) near 1/N at the largest lambda",
        jf_dev <= cfg.jf_tolerance,
        format!("relative deviation {jf_dev:e}"),
    ));
    let r_col = col(|r| r.r);
    checks.push(Check::new(
        "r(s_lambda) decreasing in lambda",
        r_col.windows(2).all(|w| w[1] < w[0]),
        format!("{} rows", r_col.len()),
    ));
    checks.push(Check::new(
        "minimum located for every lambda",
        missing.is_empty(),
        format!("missing at {missing:?}"),
    ));
    Ok(SLambdaReport {
        zeta,
        eta_minus,
        eta_minus_measured,
        s_limit,
        rows,
        missing,
        trends,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut cfg = LimitConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.alpha_x = cfg.alpha1;
        assert!(cfg.validate().is_err());
        let mut cfg = LimitConfig::default();
        cfg.lambda_grid = vec![10.0, 5.0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn two_lambdas_share_the_top_value() {
        let cfg = LimitConfig {
            lambda_grid: vec![3.0, 300.0],
            ..LimitConfig::default()
        };
        let a = paso_e_row(&cfg, 3.0).unwrap();
        let b = paso_e_row(&cfg, 300.0).unwrap();
        assert!((a.jr2_top - b.jr2_top).abs() < 1e-6, "{a:?} {b:?}");
        assert!(b.r_alpha1 < a.r_alpha1);
    }
}
