//! Pointwise comparison of `J` along the first decreasing arcs of two solutions.

use serde::Serialize;

use super::{energy_from, extract_arcs, pohozaev_from, Direction, FunctionalError};
use crate::nonlinearity::Nonlinearity;
use crate::shooting::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum ComparisonStatus {
    /// The two curves coincide on the common range.
    Degenerate,
    /// `J_u > J_v` at every probe.
    Ordered,
    Violation {
        first_s: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnchorTriple {
    pub s_bar: f64,
    pub r_u: f64,
    pub r_v: f64,
    pub j_u: f64,
    pub j_v: f64,
    pub p_u: Option<f64>,
    pub p_v: Option<f64>,
    /// `r_u > r_v`, `J_u > J_v` and `P_u < 0 <= P_v` all hold.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub status: ComparisonStatus,
    pub s_lo: f64,
    pub s_hi: f64,
    pub probes: usize,
    pub min_gap: f64,
    pub anchor: Option<AnchorTriple>,
}

impl ComparisonReport {
    pub fn ordered(&self) -> bool {
        self.status == ComparisonStatus::Ordered
    }
}

/// Compares `J_u` and `J_v` on the common `s`-range of the first decreasing arcs,
/// from the top down to the first `s` where `I_v < 0` or to `s = 0`. The anchor
/// defaults to the initial value of `v`.
pub fn compare_solutions(
    nl: &Nonlinearity,
    traj_u: &Trajectory,
    traj_v: &Trajectory,
    anchor: Option<f64>,
    n_probes: usize,
) -> Result<ComparisonReport, FunctionalError> {
    let set_u = extract_arcs(traj_u, nl);
    let set_v = extract_arcs(traj_v, nl);
    let arc_u = set_u
        .arcs
        .first()
        .filter(|a| a.direction == Direction::Down)
        .ok_or(FunctionalError::NoArc)?;
    let arc_v = set_v
        .arcs
        .first()
        .filter(|a| a.direction == Direction::Down)
        .ok_or(FunctionalError::NoArc)?;
    let hi = arc_u.s_hi.min(arc_v.s_hi);
    let lo = arc_u.s_lo.max(arc_v.s_lo).max(0.0);
    if !(hi > lo) {
        return Err(FunctionalError::NoOverlap);
    }

    let n = n_probes.max(2);
    let mut probes = 0;
    let mut min_gap = f64::INFINITY;
    let mut max_abs = 0.0f64;
    let mut first_violation = None;
    let mut s_stop = lo;
    for k in 0..n {
        let s = hi - (hi - lo) * k as f64 / (n - 1) as f64;
        let (Ok(pu), Ok(pv)) = (arc_u.state_at(s), arc_v.state_at(s)) else {
            continue;
        };
        if energy_from(nl, s, pv.r, pv.j) < 0.0 {
            s_stop = s;
            break;
        }
        probes += 1;
        let gap = pu.j - pv.j;
        min_gap = min_gap.min(gap);
        max_abs = max_abs.max(gap.abs());
        if gap <= 0.0 && first_violation.is_none() {
            first_violation = Some(s);
        }
    }
    let scale = arc_v.samples.iter().map(|p| p.j.abs()).fold(0.0, f64::max);
    let status = if max_abs <= 1e-12 * scale.max(1.0) {
        ComparisonStatus::Degenerate
    } else if let Some(first_s) = first_violation {
        ComparisonStatus::Violation { first_s }
    } else {
        ComparisonStatus::Ordered
    };

    let s_bar = anchor.unwrap_or(arc_v.s_hi);
    let anchor = match (arc_u.state_at(s_bar), arc_v.state_at(s_bar)) {
        (Ok(pu), Ok(pv)) => {
            let dim = traj_u.dimension();
            let p_u = pohozaev_from(nl, dim, s_bar, pu.r, pu.j).ok();
            let p_v = pohozaev_from(nl, dim, s_bar, pv.r, pv.j).ok();
            let holds = pu.r > pv.r
                && pu.j > pv.j
                && matches!((p_u, p_v), (Some(a), Some(b)) if a < 0.0 && b >= 0.0);
            Some(AnchorTriple {
                s_bar,
                r_u: pu.r,
                r_v: pv.r,
                j_u: pu.j,
                j_v: pv.j,
                p_u,
                p_v,
                holds,
            })
        }
        _ => None,
    };

    Ok(ComparisonReport {
        status,
        s_lo: s_stop,
        s_hi: hi,
        probes,
        min_gap,
        anchor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shooting::{integrate_alpha, ProblemParams};

    #[test]
    fn identical_is_degenerate() {
        let nl = Nonlinearity::power_difference(3.0).unwrap();
        let t = integrate_alpha(&nl, &ProblemParams::probe(3.0), 5.0).unwrap();
        let rep = compare_solutions(&nl, &t, &t, None, 100).unwrap();
        assert_eq!(rep.status, ComparisonStatus::Degenerate);
    }

    #[test]
    fn larger_start_has_larger_j() {
        let nl = Nonlinearity::power_difference(3.0).unwrap();
        let p = ProblemParams::probe(3.0);
        let tu = integrate_alpha(&nl, &p, 6.0).unwrap();
        let tv = integrate_alpha(&nl, &p, 5.0).unwrap();
        let rep = compare_solutions(&nl, &tu, &tv, None, 400).unwrap();
        assert!(rep.ordered(), "{rep:?}");
        assert_eq!(rep.s_lo, 0.0);
        let a = rep.anchor.unwrap();
        assert_eq!(a.s_bar, 5.0);
        assert!(a.holds, "{a:?}");
    }
}
