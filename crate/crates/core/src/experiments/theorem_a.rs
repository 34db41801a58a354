//! Bound-state counts for `f₁` glued to the steep outer branch `λ² f₂(s/μ)`.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    bound_state_inventory, jr2_first_arc, log_grid, lowest_bound_state,
    strictly_increasing_positive, AlphaScan, Cell, Check, ExperimentError, ExperimentReport,
    Inventory, Table, ROUND_TRIP_TOL,
};
use crate::classify::K_CAP;
use crate::nonlinearity::{build_fmu, Nonlinearity, NonlinearityModel};
use crate::shooting::{integrate_alpha, EventKind, ProblemParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremAConfig {
    pub f1: NonlinearityModel,
    pub f2: NonlinearityModel,
    /// Target class: `α_*ᵏ` is the `k`-th bound state of `f1`.
    pub k: usize,
    pub eps: f64,
    /// Initial value for which the `f2` solution crosses zero.
    pub alpha_hat: f64,
    pub mu_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    /// Range for the `f_μ` scans; `lo` defaults to `α_*ᵏ + 2ε`.
    pub alpha_scan: AlphaScan,
    /// Range used to locate `α_*ᵏ` for `f1`; `lo` defaults to `β + 0.01`.
    pub f1_scan: AlphaScan,
    #[serde(default = "default_tol")]
    pub tol_alpha: f64,
    #[serde(default = "theorem_params")]
    pub params: ProblemParams,
}

pub(crate) fn default_tol() -> f64 {
    1e-10
}

pub(crate) fn theorem_params() -> ProblemParams {
    ProblemParams::classification(3.0)
}

impl Default for TheoremAConfig {
    fn default() -> Self {
        TheoremAConfig {
            f1: NonlinearityModel::PowerDifference { p: 3.0 },
            f2: NonlinearityModel::PurePower { p: 3.0 },
            k: 1,
            eps: 0.1,
            alpha_hat: 5.0,
            mu_grid: (0..10).map(|i| 10f64.powf(i as f64 / 3.0)).collect(),
            lambda_grid: log_grid(1.0, 4.0, 13),
            alpha_scan: AlphaScan {
                lo: None,
                hi: 60.0,
                n: 300,
            },
            f1_scan: AlphaScan {
                lo: None,
                hi: 12.0,
                n: 50,
            },
            tol_alpha: default_tol(),
            params: theorem_params(),
        }
    }
}

impl TheoremAConfig {
    /// Structural checks, including `ε < β/4` for `f1`.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        strictly_increasing_positive("mu_grid", &self.mu_grid)?;
        strictly_increasing_positive("lambda_grid", &self.lambda_grid)?;
        self.alpha_scan.validate()?;
        self.f1_scan.validate()?;
        self.params.validate()?;
        if self.k == 0 || self.k >= K_CAP {
            return Err(ExperimentError::InvalidConfig(format!(
                "k = {} outside 1..{K_CAP}",
                self.k
            )));
        }
        if !(self.tol_alpha > 0.0) || !self.alpha_hat.is_finite() {
            return Err(ExperimentError::InvalidConfig(
                "tol_alpha and alpha_hat must be finite, tol positive".into(),
            ));
        }
        Nonlinearity::new(self.f2.clone())?;
        let beta = Nonlinearity::new(self.f1.clone())?.beta;
        if !(self.eps > 0.0 && self.eps < beta / 4.0) {
            return Err(ExperimentError::InvalidConfig(format!(
                "eps = {} must lie in (0, beta/4) = (0, {})",
                self.eps,
                beta / 4.0
            )));
        }
        Ok(())
    }

    /// The configuration with a single `(μ, λ)` cell.
    pub fn frozen(&self, mu: f64, lambda: f64) -> Self {
        TheoremAConfig {
            mu_grid: vec![mu],
            lambda_grid: vec![lambda],
            ..self.clone()
        }
    }
}

fn counts(inv: &Inventory, classes: std::ops::RangeInclusive<usize>) -> bool {
    classes.clone().all(|c| inv.count(c) >= 2)
}

pub(crate) fn f1_bound_state(
    f1: &Nonlinearity,
    params: &ProblemParams,
    scan: &AlphaScan,
    k: usize,
    tol: f64,
) -> Result<f64, ExperimentError> {
    let lo = scan.lo.unwrap_or(f1.beta + 0.01);
    Ok(lowest_bound_state(f1, params, lo, scan.hi, scan.n, k, tol)?.alpha_star)
}

pub fn run_theorem_a(cfg: &TheoremAConfig) -> Result<ExperimentReport, ExperimentError> {
    let t0 = Instant::now();
    cfg.validate()?;
    let f1 = Nonlinearity::new(cfg.f1.clone())?;
    let f2 = Nonlinearity::new(cfg.f2.clone())?;
    let k = cfg.k;
    let alpha_star = f1_bound_state(&f1, &cfg.params, &cfg.f1_scan, k, cfg.tol_alpha)?;
    let alpha1 = alpha_star + cfg.eps;
    let top = alpha1 + cfg.eps;
    if !(cfg.eps < (cfg.alpha_hat - alpha_star) / 2.0) {
        return Err(ExperimentError::PreconditionFailed(format!(
            "eps = {} must be below (alpha_hat - alpha_star)/2 = {}",
            cfg.eps,
            (cfg.alpha_hat - alpha_star) / 2.0
        )));
    }

    let probe = ProblemParams {
        stop_on_trap: false,
        ..cfg.params
    };
    let v = integrate_alpha(&f2, &probe, cfg.alpha_hat)?;
    let first_zero = v
        .events_of(|e| matches!(e, EventKind::ZeroOfU))
        .next()
        .copied();
    let h5 = first_zero.map_or(false, |e| e.du < 0.0);

    // J_v r_v² on the first arc of v over [0, α₁+ε]: its minimum, and the
    // μ-scaled values μ J_v r_v²((α₁+ε)/μ).
    const KM_SAMPLES: usize = 400;
    let k_m = (0..=KM_SAMPLES)
        .filter_map(|i| jr2_first_arc(&v, top * i as f64 / KM_SAMPLES as f64))
        .fold(f64::INFINITY, f64::min);
    let mut growth = Table::new(
        "mu growth",
        &["mu", "Jr2(alpha1+eps)", "mu Jv rv2(top/mu)", "ratio to mu"],
    );
    let mut growth_ok = h5 && k_m.is_finite() && k_m > 0.0;
    for &mu in &cfg.mu_grid {
        let nl = build_fmu(
            cfg.f1.clone(),
            cfg.f2.clone(),
            alpha1,
            cfg.eps,
            mu.sqrt(),
            mu,
        )?;
        let w = integrate_alpha(&nl, &probe, mu * cfg.alpha_hat)?;
        let got = jr2_first_arc(&w, top).unwrap_or(f64::NAN);
        let pulled = jr2_first_arc(&v, top / mu).map_or(f64::NAN, |j| mu * j);
        growth_ok &= got / mu >= k_m * (1.0 - 1e-6);
        growth.rows.push(vec![mu, got, pulled, got / mu]);
    }

    let lo = cfg.alpha_scan.lo.unwrap_or(alpha_star + 2.0 * cfg.eps);
    let grid: Vec<(f64, f64)> = cfg
        .mu_grid
        .iter()
        .flat_map(|&mu| cfg.lambda_grid.iter().map(move |&l| (mu, l)))
        .collect();
    let cells = grid
        .par_iter()
        .map(|&(mu, lambda)| {
            let nl = build_fmu(cfg.f1.clone(), cfg.f2.clone(), alpha1, cfg.eps, lambda, mu)?;
            let (inventory, _) = bound_state_inventory(
                &nl,
                &cfg.params,
                lo,
                cfg.alpha_scan.hi,
                cfg.alpha_scan.n,
                k + 1,
                cfg.tol_alpha,
            )?;
            Ok(Cell {
                mu: Some(mu),
                lambda,
                inventory,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;

    // Identity configuration: f₂ = f₁ and μ = λ = 1 against the pure f₁ scan.
    let ident = build_fmu(cfg.f1.clone(), cfg.f1.clone(), alpha1, cfg.eps, 1.0, 1.0)?;
    let (inv_ident, _) = bound_state_inventory(
        &ident,
        &cfg.params,
        lo,
        cfg.alpha_scan.hi,
        cfg.alpha_scan.n,
        k + 1,
        cfg.tol_alpha,
    )?;
    let (inv_f1, _) = bound_state_inventory(
        &f1,
        &cfg.params,
        lo,
        cfg.alpha_scan.hi,
        cfg.alpha_scan.n,
        k + 1,
        cfg.tol_alpha,
    )?;
    let same_counts = (1..=k + 1).all(|c| inv_ident.count(c) == inv_f1.count(c));
    let max_shift = inv_ident
        .states
        .iter()
        .flat_map(|(c, v)| {
            let other = inv_f1.states.get(c).cloned().unwrap_or_default();
            v.iter()
                .zip(other)
                .map(|(a, b)| (a - b).abs())
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max);

    let statement_classes = 2..=k;
    let statement_vacuous = k < 2;
    let witness = cells.iter().find(|c| counts(&c.inventory, 1..=k));
    let statement_ok = statement_vacuous
        || cells
            .iter()
            .any(|c| counts(&c.inventory, statement_classes.clone()));
    let round_trip = cells.iter().all(|c| c.inventory.round_trip);
    let worst_ratio = cells
        .iter()
        .map(|c| c.inventory.worst_final_ratio)
        .fold(0.0, f64::max);
    let budget = cells
        .iter()
        .filter(|c| c.inventory.budget_exhausted)
        .count();

    let checks = vec![
        Check::new(
            "f2 solution from alpha_hat crosses zero with negative slope",
            h5,
            format!("first zero {first_zero:?}"),
        ),
        Check::new(
            "statement range: two bound states for each j = 1..k-1 sign changes",
            statement_ok,
            if statement_vacuous {
                "vacuous for k = 1".to_string()
            } else {
                format!("classes {statement_classes:?}")
            },
        ),
        Check::new(
            "proof range: two bound states for each class 1..=k",
            witness.is_some(),
            witness.map_or("no cell".to_string(), |c| {
                format!(
                    "first witness mu = {:?}, lambda = {}: {:?}",
                    c.mu, c.lambda, c.inventory.states
                )
            }),
        ),
        Check::new(
            "Jr2(alpha1+eps) >= mu K_m over the mu grid",
            growth_ok,
            format!("K_m = {k_m}"),
        ),
        Check::new(
            "identity configuration reproduces the f1 inventory",
            same_counts,
            format!(
                "f1 {:?}, identity {:?}, max shift {max_shift:e}",
                inv_f1.states, inv_ident.states
            ),
        ),
        Check::new(
            "round trip of converged states",
            round_trip,
            format!(
                "worst final size / trajectory scale = {worst_ratio:.3e}, limit {ROUND_TRIP_TOL:e}"
            ),
        ),
        Check::new(
            "cell budget respected",
            budget == 0,
            format!("{budget} cells hit the budget"),
        ),
    ];
    let mut derived = BTreeMap::new();
    derived.insert("alpha_star_k".into(), alpha_star);
    derived.insert("alpha1".into(), alpha1);
    derived.insert("scan_lo".into(), lo);
    derived.insert("K_m".into(), k_m);
    derived.insert("beta_f1".into(), f1.beta);
    let success = statement_ok;
    Ok(ExperimentReport {
        experiment: "theorem-a".into(),
        config: serde_json::to_value(cfg).unwrap_or_default(),
        derived,
        cells,
        tables: vec![growth],
        checks,
        success,
        wall_clock_ms: t0.elapsed().as_secs_f64() * 1e3,
    })
}

/// The single-cell configuration of the first `(μ, λ)` in grid order with two
/// bound states of every class `1..=k`.
pub fn freeze_theorem_a(cfg: &TheoremAConfig, rep: &ExperimentReport) -> Option<TheoremAConfig> {
    rep.cells
        .iter()
        .find(|c| counts(&c.inventory, 1..=cfg.k))
        .map(|c| cfg.frozen(c.mu.unwrap_or(1.0), c.lambda))
}

/// Runs the full grid and freezes its first witness cell.
pub fn search_theorem_a(cfg: &TheoremAConfig) -> Result<Option<TheoremAConfig>, ExperimentError> {
    let rep = run_theorem_a(cfg)?;
    Ok(freeze_theorem_a(cfg, &rep))
}
