//! Bound-state counts for `f₁` glued to the supercritical outer branch
//! `λ² (s + a)^p`, with the shift `a` derived from the pure-power constant `K₁`.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::theorem_a::{default_tol, f1_bound_state, theorem_params};
use super::{
    bound_state_inventory, jr2_first_arc, log_grid, strictly_increasing_positive, AlphaScan, Cell,
    Check, ExperimentError, ExperimentReport, Table, ROUND_TRIP_TOL,
};
use crate::classify::K_CAP;
use crate::nonlinearity::{build_fa, Nonlinearity, NonlinearityModel};
use crate::shooting::{integrate_alpha, EventKind, ProblemParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremBConfig {
    pub f1: NonlinearityModel,
    /// Number of sign changes of the multiplied bound states.
    pub k: usize,
    pub eps: f64,
    /// Supercritical exponent of the outer branch.
    pub p: f64,
    /// Shift of the outer branch; derived when absent.
    #[serde(default)]
    pub a: Option<f64>,
    pub lambda_grid: Vec<f64>,
    /// Scan range for the glued model; `lo` defaults to `β + 0.01`.
    pub alpha_scan: AlphaScan,
    /// Range used to locate `α_*ᵏ` and `α_*^{k+1}` for `f1`.
    pub f1_scan: AlphaScan,
    /// Step of the probe for the negative-energy neighborhood above `α_*ᵏ`.
    #[serde(default = "default_tilde_step")]
    pub tilde_step: f64,
    /// Initial values for the estimate of `K₁ = sup J r²(α, 1)`.
    #[serde(default = "default_k1_alphas")]
    pub k1_alphas: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol_alpha: f64,
    #[serde(default = "theorem_params")]
    pub params: ProblemParams,
}

fn default_tilde_step() -> f64 {
    1e-3
}

fn default_k1_alphas() -> Vec<f64> {
    log_grid(0.005, 8.0, 60)
}

impl Default for TheoremBConfig {
    fn default() -> Self {
        TheoremBConfig {
            f1: NonlinearityModel::PowerDifference { p: 3.0 },
            k: 1,
            eps: 0.1,
            p: 7.0,
            a: None,
            lambda_grid: log_grid(1.0, 4.0, 13),
            alpha_scan: AlphaScan {
                lo: None,
                hi: 60.0,
                n: 300,
            },
            f1_scan: AlphaScan {
                lo: None,
                hi: 20.0,
                n: 100,
            },
            tilde_step: default_tilde_step(),
            k1_alphas: default_k1_alphas(),
            tol_alpha: default_tol(),
            params: theorem_params(),
        }
    }
}

impl TheoremBConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        strictly_increasing_positive("lambda_grid", &self.lambda_grid)?;
        strictly_increasing_positive("k1_alphas", &self.k1_alphas)?;
        self.alpha_scan.validate()?;
        self.f1_scan.validate()?;
        self.params.validate()?;
        let n = self.params.dimension;
        if !(self.p > (n + 2.0) / (n - 2.0)) || !self.p.is_finite() {
            return Err(ExperimentError::InvalidConfig(format!(
                "p = {} is not supercritical for N = {n}",
                self.p
            )));
        }
        if self.k == 0 || self.k + 1 >= K_CAP {
            return Err(ExperimentError::InvalidConfig(format!(
                "k = {} outside 1..{}",
                self.k,
                K_CAP - 1
            )));
        }
        if !(self.tilde_step > 0.0 && self.tol_alpha > 0.0) {
            return Err(ExperimentError::InvalidConfig(
                "tilde_step and tol_alpha must be positive".into(),
            ));
        }
        let beta = Nonlinearity::new(self.f1.clone())?.beta;
        if !(self.eps > 0.0 && self.eps < beta / 4.0) {
            return Err(ExperimentError::InvalidConfig(format!(
                "eps = {} must lie in (0, beta/4) = (0, {})",
                self.eps,
                beta / 4.0
            )));
        }
        if let Some(a) = self.a {
            if !(a.is_finite() && a >= 0.0) {
                return Err(ExperimentError::InvalidConfig(format!(
                    "shift a = {a} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }
}

/// Energy at the first extremum after the `k`-th zero, if both exist.
fn post_minimum_energy(
    nl: &Nonlinearity,
    params: &ProblemParams,
    alpha: f64,
    k: usize,
) -> Result<Option<f64>, ExperimentError> {
    let traj = integrate_alpha(nl, params, alpha)?;
    let Some(zk) = traj.zeros_of_u().get(k - 1).map(|e| e.r) else {
        return Ok(None);
    };
    let energy = traj
        .events_of(|e| matches!(e, EventKind::ZeroOfDu))
        .find(|e| e.r > zk)
        .map(|e| 0.5 * e.du * e.du + nl.big_f(e.u));
    Ok(energy)
}

/// Largest `α_*ᵏ + j·step` such that every grid value up to it has negative
/// energy at the extremum after the `k`-th zero.
fn alpha_tilde(
    nl: &Nonlinearity,
    params: &ProblemParams,
    alpha_star: f64,
    k: usize,
    step: f64,
    limit: f64,
) -> Result<f64, ExperimentError> {
    const CHUNK: usize = 64;
    let mut last = alpha_star;
    let mut j = 1;
    loop {
        let alphas: Vec<f64> = (j..j + CHUNK)
            .map(|i| alpha_star + step * i as f64)
            .filter(|&a| a < limit)
            .collect();
        if alphas.is_empty() {
            return Ok(last);
        }
        let energies = alphas
            .par_iter()
            .map(|&a| post_minimum_energy(nl, params, a, k))
            .collect::<Result<Vec<_>, _>>()?;
        for (a, e) in alphas.iter().zip(energies) {
            match e {
                Some(e) if e < 0.0 => last = *a,
                _ => return Ok(last),
            }
        }
        j += CHUNK;
    }
}

pub fn run_theorem_b(cfg: &TheoremBConfig) -> Result<ExperimentReport, ExperimentError> {
    let t0 = Instant::now();
    cfg.validate()?;
    let n = cfg.params.dimension;
    let k = cfg.k;
    let f1 = Nonlinearity::new(cfg.f1.clone())?;
    let star_k = f1_bound_state(&f1, &cfg.params, &cfg.f1_scan, k, cfg.tol_alpha)?;
    let star_k1 = f1_bound_state(&f1, &cfg.params, &cfg.f1_scan, k + 1, cfg.tol_alpha)?;
    let probe = ProblemParams {
        stop_on_trap: false,
        r_max: cfg.params.r_max.min(50.0),
        ..cfg.params
    };
    let tilde = alpha_tilde(&f1, &probe, star_k, k, cfg.tilde_step, star_k1)?;

    // K₁ = sup over α of J r²(α, 1) for the pure power, and the K_s scaling at s = 2.
    let pure = Nonlinearity::pure_power(cfg.p)?;
    let jr2_level = |alpha: f64, s: f64| -> Result<f64, ExperimentError> {
        let t = integrate_alpha(&pure, &probe, alpha)?;
        jr2_first_arc(&t, s).ok_or_else(|| {
            ExperimentError::PreconditionFailed(format!(
                "pure power from {alpha} never reaches {s}"
            ))
        })
    };
    let k1_rows = cfg
        .k1_alphas
        .par_iter()
        .map(|&a| Ok((a, jr2_level(a, 1.0)?, jr2_level(2.0 * a, 2.0)?)))
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let mut k1_table = Table::new("K1 estimate", &["alpha", "Jr2(alpha,1)", "Jr2(2 alpha,2)"]);
    k1_table.rows = k1_rows.iter().map(|r| vec![r.0, r.1, r.2]).collect();
    let (argmax, k1) =
        k1_rows
            .iter()
            .map(|r| (r.0, r.1))
            .fold(
                (f64::NAN, f64::NEG_INFINITY),
                |m, x| if x.1 > m.1 { x } else { m },
            );
    let k2 = k1_rows
        .iter()
        .map(|r| r.2)
        .fold(f64::NEG_INFINITY, f64::max);
    let singular_value = 2.0 / (cfg.p - 1.0);
    let tail = k1_rows.last().map_or(f64::NAN, |r| r.1);

    let d = star_k1 + 2.0 * cfg.eps - (tilde + star_k) / 2.0;
    let s_bar = (n - 2.0) * d / k1;
    let a = match cfg.a {
        Some(a) => a,
        None => s_bar - (star_k1 + 2.0 * cfg.eps),
    };
    if !(a >= 0.0) {
        return Err(ExperimentError::PreconditionFailed(format!(
            "derived shift a = {a} is negative (s_bar = {s_bar}, K1 = {k1})"
        )));
    }
    let alpha1 = star_k1 + cfg.eps;
    let lo = cfg.alpha_scan.lo.unwrap_or(f1.beta + 0.01);

    let cells = cfg
        .lambda_grid
        .par_iter()
        .map(|&lambda| {
            let nl = build_fa(cfg.f1.clone(), alpha1, cfg.eps, lambda, a, cfg.p)?;
            let (inventory, rows) = bound_state_inventory(
                &nl,
                &cfg.params,
                lo,
                cfg.alpha_scan.hi,
                cfg.alpha_scan.n,
                k + 1,
                cfg.tol_alpha,
            )?;
            let exclusion_rows = rows.iter().filter(|r| r.alpha > alpha1 && r.k < k).count();
            Ok((
                Cell {
                    mu: None,
                    lambda,
                    inventory,
                },
                exclusion_rows,
            ))
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;

    let mut counts = Table::new(
        "per-lambda counts",
        &[
            "lambda",
            "class k+1 total",
            "class k+1 above alpha1",
            "lower classes above alpha1",
            "rows with fewer than k zeros above alpha1",
        ],
    );
    let mut exclusion_ok = true;
    let mut corollary_ok = true;
    let mut multiplicity = false;
    for (cell, excl_rows) in &cells {
        let inv = &cell.inventory;
        let total = inv.count(k + 1);
        let above = inv
            .states
            .get(&(k + 1))
            .map_or(0, |v| v.iter().filter(|&&x| x > alpha1).count());
        let lower = (1..=k)
            .map(|c| {
                inv.states
                    .get(&c)
                    .map_or(0, |v| v.iter().filter(|&&x| x > alpha1).count())
            })
            .sum::<usize>();
        exclusion_ok &= lower == 0 && *excl_rows == 0;
        if k == 1 {
            let g1 = inv
                .states
                .get(&1)
                .map_or(0, |v| v.iter().filter(|&&x| x < star_k1).count());
            corollary_ok &= g1 <= 1;
        }
        multiplicity |= total >= 2 && lower == 0;
        counts.rows.push(vec![
            cell.lambda,
            total as f64,
            above as f64,
            lower as f64,
            *excl_rows as f64,
        ]);
    }
    let cells: Vec<Cell> = cells.into_iter().map(|c| c.0).collect();
    let round_trip = cells.iter().all(|c| c.inventory.round_trip);
    let worst_ratio = cells
        .iter()
        .map(|c| c.inventory.worst_final_ratio)
        .fold(0.0, f64::max);

    let mut checks = vec![
        Check::new(
            "K1 estimate approaches 2/(p-1) at large alpha",
            (tail - singular_value).abs() < 0.05 * singular_value,
            format!("K1 = {k1} at alpha = {argmax}; Jr2 at the largest alpha {tail}, limit {singular_value}"),
        ),
        Check::new(
            "K_s scaling: sup Jr2(alpha, 2) = 2 K1",
            (k2 - 2.0 * k1).abs() <= 1e-6 * k1,
            format!("sup at s = 2 is {k2}, 2 K1 = {}", 2.0 * k1),
        ),
        Check::new(
            "exclusion: no lower-class bound states above alpha1",
            exclusion_ok,
            "counted per lambda in the table",
        ),
        Check::new(
            "two bound states with k sign changes at some lambda",
            multiplicity,
            "informational",
        ),
        Check::new(
            "round trip of converged states",
            round_trip,
            format!("worst final size / trajectory scale = {worst_ratio:.3e}, limit {ROUND_TRIP_TOL:e}"),
        ),
    ];
    if k == 1 {
        checks.push(Check::new(
            "at most one ground state below alpha_star^2",
            corollary_ok,
            "per lambda",
        ));
    }
    let mut derived = BTreeMap::new();
    derived.insert("alpha_star_k".into(), star_k);
    derived.insert("alpha_star_k1".into(), star_k1);
    derived.insert("alpha_tilde".into(), tilde);
    derived.insert("K1".into(), k1);
    derived.insert("K1_argmax".into(), argmax);
    derived.insert("d".into(), d);
    derived.insert("s_bar".into(), s_bar);
    derived.insert("a".into(), a);
    derived.insert("alpha1".into(), alpha1);
    let success = multiplicity && exclusion_ok;
    Ok(ExperimentReport {
        experiment: "theorem-b".into(),
        config: serde_json::to_value(cfg).unwrap_or_default(),
        derived,
        cells,
        tables: vec![k1_table, counts],
        checks,
        success,
        wall_clock_ms: t0.elapsed().as_secs_f64() * 1e3,
    })
}

/// The configuration with the derived shift pinned and the `λ` grid reduced
/// to the first value carrying two `(k+1)`-th bound states, when there is one.
pub fn freeze_theorem_b(cfg: &TheoremBConfig, rep: &ExperimentReport) -> TheoremBConfig {
    let lambda = rep
        .cells
        .iter()
        .find(|c| c.inventory.count(cfg.k + 1) >= 2)
        .map(|c| c.lambda);
    TheoremBConfig {
        a: rep.derived.get("a").copied().or(cfg.a),
        lambda_grid: lambda.map_or_else(|| cfg.lambda_grid.clone(), |l| vec![l]),
        ..cfg.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn supercriticality_is_checked() {
        let mut cfg = TheoremBConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.p = 5.0;
        assert!(cfg.validate().is_err());
        cfg.p = 7.0;
        cfg.params.dimension = 4.0;
        assert!(cfg.validate().is_ok());
        cfg.params.dimension = 5.0;
        cfg.p = 2.2;
        assert!(cfg.validate().is_err());
    }
}
