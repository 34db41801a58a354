//! The `(u, J)` phase curve, its self-intersections and rotation.

use serde::Serialize;

use crate::io::fmt17;
use crate::nonlinearity::Nonlinearity;
use crate::shooting::{EventKind, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub u: f64,
    pub j: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCurve {
    pub points: Vec<PhasePoint>,
}

impl PhaseCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,J,r\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", fmt17(p.u), fmt17(p.j), fmt17(p.r)));
        }
        out
    }

    pub fn xy(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.u, p.j)).collect()
    }
}

/// Samples `(u(r), -u'(r)/r)` at every step endpoint refined `per_step` times.
pub fn phase_curve(traj: &Trajectory, nl: &Nonlinearity, per_step: usize) -> PhaseCurve {
    let points = traj
        .refined_grid(per_step)
        .into_iter()
        .map(|r| {
            let y = traj.eval_unchecked(r);
            let j = if r == 0.0 {
                nl.f(traj.alpha()) / traj.dimension()
            } else {
                -y[1] / r
            };
            PhasePoint { u: y[0], j, r }
        })
        .collect();
    PhaseCurve { points }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionReport {
    pub segments: usize,
    pub crossings: usize,
    /// Indices of the first crossing segment pair found.
    pub first: Option<(usize, usize)>,
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn crosses(p1: (f64, f64), p2: (f64, f64), p3: (f64, f64), p4: (f64, f64)) -> bool {
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Counts transversal crossings between non-adjacent segments of a polyline.
pub fn self_intersection_count(pts: &[(f64, f64)]) -> IntersectionReport {
    let segs: Vec<((f64, f64), (f64, f64))> = pts
        .windows(2)
        .filter(|w| w[0] != w[1])
        .map(|w| (w[0], w[1]))
        .collect();
    let bbox = |s: &((f64, f64), (f64, f64))| {
        (
            s.0 .0.min(s.1 .0),
            s.0 .0.max(s.1 .0),
            s.0 .1.min(s.1 .1),
            s.0 .1.max(s.1 .1),
        )
    };
    let boxes: Vec<_> = segs.iter().map(bbox).collect();
    let mut crossings = 0;
    let mut first = None;
    for i in 0..segs.len() {
        for j in i + 2..segs.len() {
            let (a, b) = (boxes[i], boxes[j]);
            if a.1 < b.0 || b.1 < a.0 || a.3 < b.2 || b.3 < a.2 {
                continue;
            }
            if crosses(segs[i].0, segs[i].1, segs[j].0, segs[j].1) {
                crossings += 1;
                first.get_or_insert((i, j));
            }
        }
    }
    IntersectionReport {
        segments: segs.len(),
        crossings,
        first,
    }
}

pub fn self_intersection_check(curve: &PhaseCurve) -> IntersectionReport {
    self_intersection_count(&curve.xy())
}

/// Net angle swept on each monotone arc, measured around the point on the
/// `u`-axis midway between the arc's end values. Counterclockwise is positive.
pub fn winding_increments(traj: &Trajectory, curve: &PhaseCurve) -> Vec<f64> {
    let mut bounds = vec![traj.r_start];
    bounds.extend(
        traj.events_of(|k| matches!(k, EventKind::ZeroOfDu))
            .map(|e| e.r)
            .filter(|&r| r > traj.r_start && r < traj.r_end),
    );
    bounds.push(traj.r_end);
    let mut out = Vec::new();
    for w in bounds.windows(2) {
        let (ra, rb) = (w[0], w[1]);
        let ua = traj.eval_unchecked(ra)[0];
        let ub = traj.eval_unchecked(rb)[0];
        if (ua - ub).abs() <= 1e-12 * (1.0 + ua.abs()) {
            continue;
        }
        let c = 0.5 * (ua + ub);
        let pts: Vec<&PhasePoint> = curve
            .points
            .iter()
            .filter(|p| p.r >= ra && p.r <= rb)
            .collect();
        if pts.len() < 2 {
            continue;
        }
        let mut total = 0.0;
        let mut prev = pts[0].j.atan2(pts[0].u - c);
        for p in &pts[1..] {
            let a = p.j.atan2(p.u - c);
            let mut d = a - prev;
            if d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            } else if d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            total += d;
            prev = a;
        }
        out.push(total);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shooting::{integrate_alpha, ProblemParams};

    #[test]
    fn figure_eight_crosses() {
        let pts: Vec<(f64, f64)> = (0..=199)
            .map(|k| {
                let t = 0.3 + 2.0 * std::f64::consts::PI * k as f64 / 199.0;
                (t.sin(), (2.0 * t).sin() / 2.0)
            })
            .collect();
        let rep = self_intersection_count(&pts);
        assert!(rep.crossings >= 1);
    }

    #[test]
    fn square_does_not_cross() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0)];
        assert_eq!(self_intersection_count(&pts).crossings, 0);
    }

    #[test]
    fn oscillation_spirals_counterclockwise() {
        let nl = Nonlinearity::power_difference(3.0).unwrap();
        let tr = integrate_alpha(&nl, &ProblemParams::probe(3.0), 1.45).unwrap();
        let curve = phase_curve(&tr, &nl, 1);
        assert_eq!(self_intersection_check(&curve).crossings, 0);
        let inc = winding_increments(&tr, &curve);
        assert!(inc.len() >= 3);
        assert!(inc.iter().all(|&d| d > 0.0), "{inc:?}");
        assert!(curve.to_csv().starts_with("u,J,r\n"));
    }
}
