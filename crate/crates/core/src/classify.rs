//! Nodal classification of initial values and bisection for bound states.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::io::fmt17;
use crate::nonlinearity::Nonlinearity;
use crate::shooting::{
    integrate_alpha, EventKind, ProblemParams, ShootingError, Termination, Trajectory,
};

/// Largest number of sign changes the classifier reports.
pub const K_CAP: usize = 8;

/// Tolerances of the monotone-asymptote rule.
pub const ASYMPTOTE_TOL_U: f64 = 1e-6;
pub const ASYMPTOTE_TOL_DU: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
pub enum Verdict {
    /// Crossed zero `k` times, then never again.
    N(usize),
    /// Reached a double zero after `k - 1` crossings.
    G(usize),
    /// Turned back before the first crossing (`k = 1` in practice).
    P(usize),
    Undetermined,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::N(k) => write!(f, "N {k}"),
            Verdict::G(k) => write!(f, "G {k}"),
            Verdict::P(k) => write!(f, "P {k}"),
            Verdict::Undetermined => write!(f, "Undetermined"),
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl Verdict {
    pub fn k(&self) -> Option<usize> {
        match self {
            Verdict::N(k) | Verdict::G(k) | Verdict::P(k) => Some(*k),
            Verdict::Undetermined => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    /// Zero of `u'` (the radius `rho_i`).
    pub r: f64,
    /// `m_i = u(rho_i)`.
    pub m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    /// Zero of `u` (the radius `Z_j`).
    pub r: f64,
    pub du: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Markers {
    pub extrema: Vec<Extremum>,
    pub crossings: Vec<Crossing>,
}

pub fn markers(traj: &Trajectory) -> Markers {
    let mut out = Markers::default();
    for e in &traj.events {
        match e.kind {
            EventKind::ZeroOfDu => out.extrema.push(Extremum { r: e.r, m: e.u }),
            EventKind::ZeroOfU => out.crossings.push(Crossing { r: e.r, du: e.du }),
            _ => {}
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Trap {
    pub r: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub alpha: f64,
    pub verdict: Verdict,
    /// Number of transversal zeros of `u`.
    pub sign_changes: usize,
    pub markers: Markers,
    pub trap: Option<Trap>,
    pub termination: Termination,
    pub r_end: f64,
    pub final_u: f64,
    pub final_du: f64,
    pub note: Option<String>,
}

impl Classification {
    /// Membership in the set of initial values whose solution has at least `k`
    /// sign changes; `None` when the verdict cannot decide it.
    pub fn in_n(&self, k: usize) -> Option<bool> {
        if self.sign_changes >= k {
            Some(true)
        } else if self.verdict == Verdict::Undetermined {
            None
        } else {
            Some(false)
        }
    }

    pub fn final_size(&self) -> f64 {
        self.final_u.abs().max(self.final_du.abs())
    }
}

/// Folds the events and termination of a trajectory into a verdict.
pub fn classify_trajectory(nl: &Nonlinearity, traj: &Trajectory) -> Classification {
    let params = &traj.provenance.params;
    let mk = markers(traj);
    let z = mk
        .crossings
        .iter()
        .filter(|c| c.du.abs() > params.tol_du)
        .count();
    let (final_u, final_du) = traj.final_state();
    let energy = 0.5 * final_du * final_du + nl.big_f(final_u);
    let trap = traj
        .events_of(|k| matches!(k, EventKind::NegativeEnergyTrap))
        .next()
        .map(|e| Trap {
            r: e.r,
            energy: 0.5 * e.du * e.du + nl.big_f(e.u),
        });
    let after_crossings = |z: usize| if z == 0 { Verdict::P(1) } else { Verdict::N(z) };
    let mut note = None;
    let mut verdict = match traj.termination {
        Termination::DoubleZero => Verdict::G(z + 1),
        Termination::Trapped => after_crossings(z),
        Termination::StepFailure => {
            note = Some("step failure".to_string());
            Verdict::Undetermined
        }
        Termination::ReachedRmax => {
            let target = if z % 2 == 0 { nl.b } else { -nl.b };
            let asymptote = (final_u - target).abs() < ASYMPTOTE_TOL_U
                && final_du.abs() < ASYMPTOTE_TOL_DU
                && traj.r_end >= 0.9 * params.r_max;
            if asymptote || energy < 0.0 {
                after_crossings(z)
            } else {
                note = Some(format!(
                    "r_max reached undecided: u = {final_u}, u' = {final_du}, I = {energy}"
                ));
                Verdict::Undetermined
            }
        }
    };
    if z > K_CAP {
        note = Some(format!("{z} sign changes exceed the cap {K_CAP}"));
        verdict = Verdict::Undetermined;
    }
    Classification {
        alpha: traj.alpha(),
        verdict,
        sign_changes: z,
        markers: mk,
        trap,
        termination: traj.termination,
        r_end: traj.r_end,
        final_u,
        final_du,
        note,
    }
}

/// Integrates from `u(0) = alpha` with the trap stop enabled and classifies.
pub fn classify_alpha(
    nl: &Nonlinearity,
    params: &ProblemParams,
    alpha: f64,
) -> Result<Classification, ShootingError> {
    if !(alpha > 0.0) {
        return Err(ShootingError::InvalidInitialCondition(format!(
            "alpha = {alpha} must be positive"
        )));
    }
    let p = ProblemParams {
        stop_on_trap: true,
        ..*params
    };
    let traj = integrate_alpha(nl, &p, alpha)?;
    Ok(classify_trajectory(nl, &traj))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub alpha: f64,
    pub verdict: Verdict,
    pub k: usize,
    pub m1: Option<f64>,
    /// `J = -u'/r` at each crossing.
    pub j_at_zero: Vec<f64>,
    pub runtime_ms: f64,
}

pub fn scan_row(
    nl: &Nonlinearity,
    params: &ProblemParams,
    alpha: f64,
) -> Result<ScanRow, ShootingError> {
    let t0 = Instant::now();
    let c = classify_alpha(nl, params, alpha)?;
    Ok(ScanRow {
        alpha,
        verdict: c.verdict,
        k: c.sign_changes,
        m1: c.markers.extrema.first().map(|e| e.m),
        j_at_zero: c.markers.crossings.iter().map(|z| -z.du / z.r).collect(),
        runtime_ms: t0.elapsed().as_secs_f64() * 1e3,
    })
}

/// Uniform grid of `n` initial values on `[alpha_lo, alpha_hi]`, classified in
/// parallel and returned in grid order.
pub fn scan_range(
    nl: &Nonlinearity,
    params: &ProblemParams,
    alpha_lo: f64,
    alpha_hi: f64,
    n: usize,
) -> Result<Vec<ScanRow>, ShootingError> {
    if !(alpha_lo < alpha_hi) || n < 2 {
        return Err(ShootingError::InvalidParams(format!(
            "scan needs alpha_lo < alpha_hi and n >= 2, got [{alpha_lo}, {alpha_hi}] x {n}"
        )));
    }
    let grid: Vec<f64> = (0..n)
        .map(|i| {
            if i == n - 1 {
                alpha_hi
            } else {
                alpha_lo + (alpha_hi - alpha_lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    scan_values(nl, params, &grid)
}

pub fn scan_values(
    nl: &Nonlinearity,
    params: &ProblemParams,
    alphas: &[f64],
) -> Result<Vec<ScanRow>, ShootingError> {
    alphas
        .par_iter()
        .map(|&a| scan_row(nl, params, a))
        .collect()
}

/// Index pairs of adjacent rows whose verdicts differ.
pub fn adjacencies(rows: &[ScanRow]) -> Vec<(usize, usize)> {
    (1..rows.len())
        .filter(|&i| rows[i - 1].verdict != rows[i].verdict)
        .map(|i| (i - 1, i))
        .collect()
}

/// Adjacent pairs `(alpha_in, alpha_out)` where membership in "at least `k` sign
/// changes" flips, skipping undecidable rows.
pub fn brackets_for_k(rows: &[ScanRow], k: usize) -> Vec<(f64, f64)> {
    let member = |r: &ScanRow| {
        if r.k >= k {
            Some(true)
        } else if r.verdict == Verdict::Undetermined {
            None
        } else {
            Some(false)
        }
    };
    rows.windows(2)
        .filter_map(|w| match (member(&w[0]), member(&w[1])) {
            (Some(true), Some(false)) => Some((w[0].alpha, w[1].alpha)),
            (Some(false), Some(true)) => Some((w[1].alpha, w[0].alpha)),
            _ => None,
        })
        .collect()
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("alpha,verdict,k,m1,runtime_ms\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.3}\n",
            fmt17(r.alpha),
            r.verdict,
            r.k,
            r.m1.map(fmt17).unwrap_or_default(),
            r.runtime_ms
        ));
    }
    out
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error(transparent)]
    Shooting(#[from] ShootingError),
    #[error("invalid bracket: {0}")]
    BracketInvalid(String),
    #[error("bisection lost consistency at alpha = {alpha}: {reason}")]
    NonConvergence { alpha: f64, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundStateRecord {
    pub alpha_star: f64,
    pub bracket: [f64; 2],
    pub k: usize,
    pub final_u: f64,
    pub final_du: f64,
    pub iterations: usize,
    /// Verdicts at the side with at least `k` sign changes and at the other side.
    pub verdict_in: Verdict,
    pub verdict_out: Verdict,
}

impl BoundStateRecord {
    pub fn width(&self) -> f64 {
        self.bracket[1] - self.bracket[0]
    }
}

/// Bisects between an initial value with at least `k` sign changes and one with
/// fewer, until the bracket is narrower than `tol_alpha`.
pub fn find_boundary(
    nl: &Nonlinearity,
    params: &ProblemParams,
    alpha_in_n: f64,
    alpha_out_n: f64,
    k: usize,
    tol_alpha: f64,
) -> Result<BoundStateRecord, ClassifyError> {
    if k == 0 || k > K_CAP {
        return Err(ClassifyError::BracketInvalid(format!(
            "k = {k} outside 1..={K_CAP}"
        )));
    }
    if !(tol_alpha > 0.0) || alpha_in_n == alpha_out_n {
        return Err(ClassifyError::BracketInvalid(
            "need distinct endpoints and a positive tolerance".into(),
        ));
    }
    let mut c_in = classify_alpha(nl, params, alpha_in_n)?;
    let mut c_out = classify_alpha(nl, params, alpha_out_n)?;
    if c_in.in_n(k) != Some(true) {
        return Err(ClassifyError::BracketInvalid(format!(
            "alpha = {alpha_in_n} classifies {} with {} sign changes, expected at least {k}",
            c_in.verdict, c_in.sign_changes
        )));
    }
    if c_out.in_n(k) != Some(false) {
        return Err(ClassifyError::BracketInvalid(format!(
            "alpha = {alpha_out_n} classifies {} with {} sign changes, expected fewer than {k}",
            c_out.verdict, c_out.sign_changes
        )));
    }
    let mut iterations = 0;
    while (c_in.alpha - c_out.alpha).abs() >= tol_alpha {
        let mid = 0.5 * (c_in.alpha + c_out.alpha);
        if mid == c_in.alpha || mid == c_out.alpha {
            break;
        }
        iterations += 1;
        let c = classify_alpha(nl, params, mid)?;
        match c.in_n(k) {
            Some(true) => c_in = c,
            Some(false) => c_out = c,
            None => {
                return Err(ClassifyError::NonConvergence {
                    alpha: mid,
                    reason: c.note.unwrap_or_else(|| "undetermined verdict".into()),
                })
            }
        }
    }
    let witness = if c_in.final_size() <= c_out.final_size() {
        &c_in
    } else {
        &c_out
    };
    let (lo, hi) = if c_in.alpha < c_out.alpha {
        (c_in.alpha, c_out.alpha)
    } else {
        (c_out.alpha, c_in.alpha)
    };
    Ok(BoundStateRecord {
        alpha_star: witness.alpha,
        bracket: [lo, hi],
        k,
        final_u: witness.final_u,
        final_du: witness.final_du,
        iterations,
        verdict_in: c_in.verdict,
        verdict_out: c_out.verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pd3() -> Nonlinearity {
        Nonlinearity::power_difference(3.0).unwrap()
    }

    #[test]
    fn verdict_examples() {
        let nl = pd3();
        let p = ProblemParams::classification(3.0);
        assert_eq!(classify_alpha(&nl, &p, 1.0).unwrap().verdict, Verdict::P(1));
        assert_eq!(
            classify_alpha(&nl, &p, 1.45).unwrap().verdict,
            Verdict::P(1)
        );
        let c = classify_alpha(&nl, &p, 10.0).unwrap();
        assert_eq!(c.verdict, Verdict::N(1));
        assert!(c.markers.crossings[0].du < 0.0);
        assert_eq!(c.verdict.to_string(), "N 1");
    }

    #[test]
    fn below_beta_never_crosses() {
        let nl = pd3();
        let p = ProblemParams::classification(3.0);
        let rows = scan_range(&nl, &p, 0.2, 1.4, 7).unwrap();
        assert_eq!(rows.len(), 7);
        assert!(rows.iter().all(|r| r.verdict == Verdict::P(1)));
    }

    #[test]
    fn two_point_scan() {
        let nl = pd3();
        let p = ProblemParams::classification(3.0);
        let rows = scan_range(&nl, &p, 2.0, 10.0, 2).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(brackets_for_k(&rows, 1), vec![(10.0, 2.0)]);
        assert!(scan_range(&nl, &p, 2.0, 10.0, 1).is_err());
    }

    #[test]
    fn wide_tolerance_returns_input_bracket() {
        let nl = pd3();
        let p = ProblemParams::classification(3.0);
        let rec = find_boundary(&nl, &p, 8.0, 3.0, 1, 10.0).unwrap();
        assert_eq!(rec.bracket, [3.0, 8.0]);
        assert_eq!(rec.iterations, 0);
    }

    #[test]
    fn invalid_brackets() {
        let nl = pd3();
        let p = ProblemParams::classification(3.0);
        assert!(matches!(
            find_boundary(&nl, &p, 3.0, 8.0, 1, 1e-6),
            Err(ClassifyError::BracketInvalid(_))
        ));
        assert!(matches!(
            find_boundary(&nl, &p, 8.0, 9.0, 1, 1e-6),
            Err(ClassifyError::BracketInvalid(_))
        ));
    }

    #[test]
    fn markers_of_oscillator() {
        let nl = pd3();
        let tr = integrate_alpha(&nl, &ProblemParams::probe(3.0), 1.45).unwrap();
        let mk = markers(&tr);
        assert!(mk.crossings.is_empty());
        let m1 = mk.extrema[0].m;
        let m2 = mk.extrema[1].m;
        assert!(m1 > 0.0 && m1 < nl.b);
        assert!(m2 > nl.b && m2 < 1.45);
    }
}
