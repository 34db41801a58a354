//! Desk-scale numerical experiments on the piecewise nonlinearities: limit
//! trends in `λ`, crossing bounds, scaling identities and bound-state counts.

mod anti_serrin;
mod lemma_eps;
mod limits;
mod scaling;
mod theorem_a;
mod theorem_b;

pub use anti_serrin::{anti_serrin_check, AntiSerrinConfig, AntiSerrinReport, AntiSerrinRow};
pub use lemma_eps::{
    b_closed_form, b_from_relation, default_fixtures, lemma_epsilon_check, EpsilonFixture,
    EpsilonReport, EpsilonRow,
};
pub use limits::{
    paso_e_check, s_lambda_sweep, LimitConfig, PasoEReport, PasoERow, SLambdaReport, SLambdaRow,
};
pub use scaling::{scaling_checks, singular_constant, ScalingConfig, ScalingReport};
pub use theorem_a::{freeze_theorem_a, run_theorem_a, search_theorem_a, TheoremAConfig};
pub use theorem_b::{freeze_theorem_b, run_theorem_b, TheoremBConfig};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{
    brackets_for_k, classify_alpha, find_boundary, scan_range, BoundStateRecord, ClassifyError,
    ScanRow, Verdict,
};
use crate::functionals::FunctionalError;
use crate::nonlinearity::{Nonlinearity, NonlinearityError};
use crate::roots::bisect;
use crate::shooting::{integrate_alpha, EventKind, ProblemParams, ShootingError, Trajectory};

/// Classifications allowed per `(μ, λ)` cell.
pub const CELL_BUDGET: usize = 10_000;

/// Largest [`final_size_ratio`] accepted at a converged state.
pub const ROUND_TRIP_TOL: f64 = 1e-6;

fn round_trip_ratio(
    nl: &Nonlinearity,
    params: &ProblemParams,
    alpha: f64,
) -> Result<f64, ShootingError> {
    let p = ProblemParams {
        stop_on_trap: true,
        ..*params
    };
    Ok(final_size_ratio(&integrate_alpha(nl, &p, alpha)?))
}

/// Final `max(|u|, |u'|)` relative to the trajectory scale `max(1, α, max|u'|)`.
pub fn final_size_ratio(traj: &Trajectory) -> f64 {
    let (u, du) = traj.final_state();
    let scale = traj
        .step_points()
        .iter()
        .fold(traj.alpha().max(1.0), |m, &(_, _, d)| m.max(d.abs()));
    u.abs().max(du.abs()) / scale
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid fixture: {0}")]
    FixtureInvalid(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("J/f has no minimum below alpha1 on the first arc for lambda = {lambda}")]
    MinimumNotFound { lambda: f64 },
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
    #[error(transparent)]
    Shooting(#[from] ShootingError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
}

/// A named pass/fail clause with a human-readable explanation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            pass,
            detail: detail.into(),
        }
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

/// Uniform scan resolution on the `α`-line. A missing `lo` means "start right
/// above the region the experiment protects".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaScan {
    #[serde(default)]
    pub lo: Option<f64>,
    pub hi: f64,
    pub n: usize,
}

impl AlphaScan {
    fn validate(&self) -> Result<(), ExperimentError> {
        let lo_ok = self
            .lo
            .map_or(true, |lo| lo.is_finite() && lo > 0.0 && lo < self.hi);
        if !lo_ok || !self.hi.is_finite() || self.n < 2 || self.n > CELL_BUDGET {
            return Err(ExperimentError::InvalidConfig(format!(
                "alpha_scan needs 0 < lo < hi and 2 <= n <= {CELL_BUDGET}, got {self:?}"
            )));
        }
        Ok(())
    }
}

pub(crate) fn strictly_increasing_positive(
    name: &str,
    grid: &[f64],
) -> Result<(), ExperimentError> {
    if grid.is_empty()
        || grid.iter().any(|v| !(v.is_finite() && *v > 0.0))
        || grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(ExperimentError::InvalidConfig(format!(
            "{name} must be a nonempty, strictly increasing list of positive numbers"
        )));
    }
    Ok(())
}

/// `n` log-spaced points from `10^lo` to `10^hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![10f64.powf(lo)];
    }
    (0..n)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64))
        .collect()
}

/// State `(r, u')` where the first decreasing arc of `traj` passes level `s`.
pub fn first_arc_state(traj: &Trajectory, s: f64) -> Option<(f64, f64)> {
    let r_top = traj
        .events_of(|k| matches!(k, EventKind::ZeroOfDu))
        .map(|e| e.r)
        .find(|&r| r > traj.r_start)
        .unwrap_or(traj.r_end);
    let pts = traj.step_points();
    let (u0, r0) = (pts.first()?.1, pts.first()?.0);
    if u0 < s {
        return None;
    }
    if u0 == s {
        return Some((r0, pts[0].2));
    }
    let mut prev = r0;
    for &(r, u, _) in pts.iter().skip(1) {
        let r = r.min(r_top);
        if u <= s || r >= r_top {
            let (ue, _) = traj.dense_eval(r).ok()?;
            if ue > s {
                return None;
            }
            let rs = bisect(
                |x| traj.dense_eval(x).map(|v| v.0 - s).unwrap_or(0.0),
                prev,
                r,
                0.0,
            );
            let (_, du) = traj.dense_eval(rs).ok()?;
            return Some((rs, du));
        }
        prev = r;
    }
    None
}

/// `J r² = -u' r` on the first decreasing arc at level `s`.
pub fn jr2_first_arc(traj: &Trajectory, s: f64) -> Option<f64> {
    first_arc_state(traj, s).map(|(r, du)| -du * r)
}

/// Converged bound states of one nonlinearity on an `α`-range, grouped by class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inventory {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    /// Class `j` (the `j`-th bound state, `j - 1` sign changes) to converged values.
    pub states: BTreeMap<usize, Vec<f64>>,
    pub records: Vec<BoundStateRecord>,
    /// Brackets that failed to converge, with the reason.
    pub failures: Vec<String>,
    pub undetermined_rows: usize,
    pub classifications: usize,
    pub budget_exhausted: bool,
    /// Every converged state re-integrates to a near double zero.
    pub round_trip: bool,
    /// Largest [`final_size_ratio`] over converged states.
    pub worst_final_ratio: f64,
}

impl Inventory {
    pub fn count(&self, class: usize) -> usize {
        self.states.get(&class).map_or(0, Vec::len)
    }
}

/// Scans `[lo, hi]` with `n` points, brackets every change of "at least `k` sign
/// changes" for `k = 1..=max_class` and converges each bracket.
pub fn bound_state_inventory(
    nl: &Nonlinearity,
    params: &ProblemParams,
    lo: f64,
    hi: f64,
    n: usize,
    max_class: usize,
    tol_alpha: f64,
) -> Result<(Inventory, Vec<ScanRow>), ExperimentError> {
    let rows = scan_range(nl, params, lo, hi, n)?;
    let mut inv = Inventory {
        alpha_lo: lo,
        alpha_hi: hi,
        states: BTreeMap::new(),
        records: Vec::new(),
        failures: Vec::new(),
        undetermined_rows: rows
            .iter()
            .filter(|r| r.verdict == Verdict::Undetermined)
            .count(),
        classifications: n,
        budget_exhausted: false,
        round_trip: true,
        worst_final_ratio: 0.0,
    };
    let jobs: Vec<(usize, f64, f64)> = (1..=max_class)
        .flat_map(|k| {
            brackets_for_k(&rows, k)
                .into_iter()
                .map(move |(a, b)| (k, a, b))
        })
        .collect();
    // Each bisection costs about log2(width / tol) classifications.
    let mut selected = Vec::new();
    for &(k, a, b) in &jobs {
        let cost = 3 + ((a - b).abs() / tol_alpha).log2().ceil().max(0.0) as usize;
        if inv.classifications + cost > CELL_BUDGET {
            inv.budget_exhausted = true;
            break;
        }
        inv.classifications += cost;
        selected.push((k, a, b));
    }
    let results: Vec<_> = selected
        .par_iter()
        .map(|&(k, a, b)| (k, find_boundary(nl, params, a, b, k, tol_alpha)))
        .collect();
    for (k, res) in results {
        match res {
            Ok(mut rec) => {
                let mut ratio = round_trip_ratio(nl, params, rec.alpha_star)?;
                // Steep stretches of f amplify the bracket width; refine to the
                // resolution of f64 before judging.
                if ratio >= ROUND_TRIP_TOL {
                    let [a, b] = rec.bracket;
                    let (a_in, a_out) = if classify_alpha(nl, params, a)?.in_n(k) == Some(true) {
                        (a, b)
                    } else {
                        (b, a)
                    };
                    let fine = 8.0 * f64::EPSILON * rec.alpha_star;
                    if let Ok(r2) = find_boundary(nl, params, a_in, a_out, k, fine) {
                        inv.classifications += r2.iterations + 2;
                        rec = r2;
                        ratio = round_trip_ratio(nl, params, rec.alpha_star)?;
                    }
                }
                inv.worst_final_ratio = inv.worst_final_ratio.max(ratio);
                if ratio >= ROUND_TRIP_TOL {
                    inv.round_trip = false;
                }
                inv.states.entry(k).or_default().push(rec.alpha_star);
                inv.records.push(rec);
            }
            Err(e) => inv.failures.push(format!("class {k}: {e}")),
        }
    }
    for v in inv.states.values_mut() {
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() <= 1e-8);
    }
    Ok((inv, rows))
}

/// The lowest converged `k`-th bound state of `nl` on a scan.
pub fn lowest_bound_state(
    nl: &Nonlinearity,
    params: &ProblemParams,
    lo: f64,
    hi: f64,
    n: usize,
    k: usize,
    tol_alpha: f64,
) -> Result<BoundStateRecord, ExperimentError> {
    let rows = scan_range(nl, params, lo, hi, n)?;
    let (a, b) = brackets_for_k(&rows, k)
        .into_iter()
        .min_by(|x, y| x.0.min(x.1).total_cmp(&y.0.min(y.1)))
        .ok_or_else(|| {
            ExperimentError::PreconditionFailed(format!(
                "no class-{k} bound state bracketed on [{lo}, {hi}] with {n} points"
            ))
        })?;
    Ok(find_boundary(nl, params, a, b, k, tol_alpha)?)
}

/// One column of a limit-trend table together with its target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trend {
    pub column: String,
    pub limit: f64,
    /// Values over the top decade of `λ`, in grid order.
    pub top_decade: Vec<f64>,
    pub monotone: bool,
    pub approaching: bool,
    pub final_deviation: f64,
}

impl Trend {
    pub fn pass(&self) -> bool {
        self.monotone && self.approaching
    }
}

/// Checks that `values[i]` (for `lambdas[i]` in the top decade) move monotonically
/// and never away from `limit`.
pub fn trend(column: &str, lambdas: &[f64], values: &[f64], limit: f64) -> Trend {
    let top = lambdas.last().copied().unwrap_or(0.0);
    let top_decade: Vec<f64> = lambdas
        .iter()
        .zip(values)
        .filter(|(l, _)| **l >= top / 10.0 * (1.0 - 1e-12))
        .map(|(_, v)| *v)
        .collect();
    let inc = top_decade.windows(2).all(|w| w[1] >= w[0]);
    let dec = top_decade.windows(2).all(|w| w[1] <= w[0]);
    let dev: Vec<f64> = top_decade.iter().map(|v| (v - limit).abs()).collect();
    let approaching = dev.windows(2).all(|w| w[1] <= w[0]);
    Trend {
        column: column.to_string(),
        limit,
        final_deviation: dev.last().copied().unwrap_or(f64::NAN),
        monotone: top_decade.len() >= 2 && (inc || dec),
        approaching,
        top_decade,
    }
}

/// Plain numeric table for the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

/// Per-cell result of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub mu: Option<f64>,
    pub lambda: f64,
    pub inventory: Inventory,
}

/// Output of `run_theorem_a` / `run_theorem_b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: serde_json::Value,
    pub derived: BTreeMap<String, f64>,
    pub cells: Vec<Cell>,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub success: bool,
    pub wall_clock_ms: f64,
}

impl ExperimentReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Deterministic JSON: everything except the wall clock.
    pub fn to_json_without_timing(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).unwrap_or_default();
        if let Some(o) = v.as_object_mut() {
            o.remove("wall_clock_ms");
        }
        v
    }

    /// One row per converged state: `mu,lambda,class,alpha_star,width,final_u,final_du`.
    pub fn inventory_csv(&self) -> String {
        use crate::io::fmt17;
        let mut out = String::from("mu,lambda,class,alpha_star,width,final_u,final_du\n");
        for c in &self.cells {
            for r in &c.inventory.records {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    c.mu.map(fmt17).unwrap_or_default(),
                    fmt17(c.lambda),
                    r.k,
                    fmt17(r.alpha_star),
                    fmt17(r.width()),
                    fmt17(r.final_u),
                    fmt17(r.final_du)
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shooting::integrate_alpha;

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1.0, 4.0, 13);
        assert_eq!(g.len(), 13);
        assert!((g[0] - 10.0).abs() < 1e-12 && (g[12] - 1e4).abs() < 1e-8);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn first_arc_level_matches_dense_output() {
        let nl = Nonlinearity::power_difference(3.0).unwrap();
        let t = integrate_alpha(&nl, &ProblemParams::probe(3.0), 5.0).unwrap();
        let (r, du) = first_arc_state(&t, 2.0).unwrap();
        let (u, du2) = t.dense_eval(r).unwrap();
        assert!((u - 2.0).abs() < 1e-12);
        assert_eq!(du, du2);
        assert!(first_arc_state(&t, 6.0).is_none());
        // Below the first minimum the first arc never reaches the level.
        assert!(first_arc_state(&t, -10.0).is_none());
    }

    #[test]
    fn trend_flags_wrong_direction() {
        let l = [100.0, 1000.0, 5000.0, 10000.0];
        assert!(trend("x", &l, &[0.0, 0.5, 0.8, 0.9], 1.0).pass());
        assert!(!trend("x", &l, &[0.0, 0.5, 0.9, 0.8], 1.0).pass());
        assert!(!trend("x", &l, &[0.0, 0.5, 1.3, 1.5], 1.0).pass());
    }

    #[test]
    fn grids_are_validated() {
        assert!(strictly_increasing_positive("g", &[1.0, 2.0]).is_ok());
        assert!(strictly_increasing_positive("g", &[1.0, 1.0]).is_err());
        assert!(strictly_increasing_positive("g", &[]).is_err());
        assert!(strictly_increasing_positive("g", &[-1.0, 1.0]).is_err());
    }
}
