use serde::{Deserialize, Serialize};

use super::dopri::{State, StepSegment};
use super::{InitialCondition, ProblemParams, ShootingError};
use crate::nonlinearity::Nonlinearity;
use crate::roots::{bisect, event_tol};

/// Second-order origin expansion `u = alpha + c2 r² + c4 r⁴` on `[0, r_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorSegment {
    pub r_end: f64,
    pub alpha: f64,
    pub c2: f64,
    pub c4: f64,
}

impl TaylorSegment {
    fn eval(&self, r: f64) -> State {
        let r2 = r * r;
        [
            self.alpha + self.c2 * r2 + self.c4 * r2 * r2,
            2.0 * self.c2 * r + 4.0 * self.c4 * r2 * r,
        ]
    }

    fn eval_derivative(&self, r: f64) -> State {
        let r2 = r * r;
        [
            2.0 * self.c2 * r + 4.0 * self.c4 * r2 * r,
            2.0 * self.c2 + 12.0 * self.c4 * r2,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    Taylor(TaylorSegment),
    Step(StepSegment),
}

impl Segment {
    pub fn start(&self) -> f64 {
        match self {
            Segment::Taylor(_) => 0.0,
            Segment::Step(s) => s.r0,
        }
    }

    pub fn end(&self) -> f64 {
        match self {
            Segment::Taylor(t) => t.r_end,
            Segment::Step(s) => s.r1,
        }
    }

    pub fn eval(&self, r: f64) -> State {
        match self {
            Segment::Taylor(t) => t.eval(r),
            Segment::Step(s) => s.eval(r),
        }
    }

    pub fn eval_derivative(&self, r: f64) -> State {
        match self {
            Segment::Taylor(t) => t.eval_derivative(r),
            Segment::Step(s) => s.eval_derivative(r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EventKind {
    ZeroOfU,
    ZeroOfDu,
    /// `u` crosses `level = ±b`.
    CrossB {
        level: f64,
    },
    /// `u` crosses `level = ±beta`.
    CrossBeta {
        level: f64,
    },
    /// `u` crosses a (signed) kink of `f`.
    CrossKink {
        level: f64,
    },
    /// The energy `u'²/2 + F(u)` became negative.
    NegativeEnergyTrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    #[serde(flatten)]
    pub kind: EventKind,
    pub r: f64,
    pub u: f64,
    pub du: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ReachedRmax,
    DoubleZero,
    Trapped,
    StepFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub params: ProblemParams,
    pub ic: InitialCondition,
    pub model_hash: String,
}

/// Dense numerical solution of the radial initial value problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub segments: Vec<Segment>,
    pub events: Vec<Event>,
    pub termination: Termination,
    pub r_start: f64,
    pub r_end: f64,
    pub provenance: Provenance,
}

impl Trajectory {
    pub fn dimension(&self) -> f64 {
        self.provenance.params.dimension
    }

    pub fn alpha(&self) -> f64 {
        self.provenance.ic.alpha
    }

    /// Whether the trajectory started at the regular-singular origin.
    pub fn from_origin(&self) -> bool {
        self.provenance.ic.r0 == 0.0
    }

    fn segment_index(&self, r: f64) -> Result<usize, ShootingError> {
        if !(r >= self.r_start && r <= self.r_end) {
            return Err(ShootingError::OutOfRange {
                r,
                lo: self.r_start,
                hi: self.r_end,
            });
        }
        let idx = self.segments.partition_point(|s| s.end() < r);
        Ok(idx.min(self.segments.len() - 1))
    }

    /// Interpolated `(u, u')` at `r`; exact at step endpoints.
    pub fn dense_eval(&self, r: f64) -> Result<(f64, f64), ShootingError> {
        let i = self.segment_index(r)?;
        let s = self.segments[i].eval(r);
        Ok((s[0], s[1]))
    }

    /// `r`-derivative of the dense interpolant, `(u', u'')`.
    pub fn dense_derivative(&self, r: f64) -> Result<(f64, f64), ShootingError> {
        let i = self.segment_index(r)?;
        let s = self.segments[i].eval_derivative(r);
        Ok((s[0], s[1]))
    }

    pub(crate) fn eval_unchecked(&self, r: f64) -> State {
        let r = r.clamp(self.r_start, self.r_end);
        let idx = self
            .segments
            .partition_point(|s| s.end() < r)
            .min(self.segments.len() - 1);
        self.segments[idx].eval(r)
    }

    pub fn final_state(&self) -> (f64, f64) {
        let s = self.eval_unchecked(self.r_end);
        (s[0], s[1])
    }

    /// Stored states at step endpoints (starting point included), clipped to `r_end`.
    pub fn step_points(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        if let Some(first) = self.segments.first() {
            let r = first.start().max(self.r_start);
            let s = first.eval(r);
            out.push((r, s[0], s[1]));
        }
        for seg in &self.segments {
            let r = seg.end();
            if r > self.r_end {
                break;
            }
            let s = seg.eval(r);
            out.push((r, s[0], s[1]));
        }
        if out.last().map(|p| p.0) != Some(self.r_end) {
            let s = self.eval_unchecked(self.r_end);
            out.push((self.r_end, s[0], s[1]));
        }
        out
    }

    /// `r`-grid refining every step into `per_step` equal pieces.
    pub fn refined_grid(&self, per_step: usize) -> Vec<f64> {
        let per_step = per_step.max(1);
        let mut out = vec![self.r_start];
        for seg in &self.segments {
            let (a, b) = (seg.start().max(self.r_start), seg.end().min(self.r_end));
            if b <= a {
                continue;
            }
            for j in 1..=per_step {
                out.push(a + (b - a) * j as f64 / per_step as f64);
            }
        }
        out
    }

    pub fn energy_at(&self, nl: &Nonlinearity, r: f64) -> Result<f64, ShootingError> {
        let (u, du) = self.dense_eval(r)?;
        Ok(0.5 * du * du + nl.big_f(u))
    }

    /// First `r` in `[from, r_end]` where `g(r, u, u')` changes sign, located by
    /// bisection on the dense output.
    pub fn first_crossing(&self, from: f64, g: impl Fn(f64, f64, f64) -> f64) -> Option<f64> {
        let grid = self.refined_grid(4);
        let eval = |r: f64| {
            let s = self.eval_unchecked(r);
            g(r, s[0], s[1])
        };
        let mut prev: Option<(f64, f64)> = None;
        for &r in grid.iter().filter(|&&r| r >= from) {
            let v = eval(r);
            if v == 0.0 {
                return Some(r);
            }
            if let Some((pr, pv)) = prev {
                if (pv < 0.0) != (v < 0.0) {
                    return Some(bisect(eval, pr, r, event_tol(r)));
                }
            }
            prev = Some((r, v));
        }
        None
    }

    pub fn events_of(&self, pred: impl Fn(&EventKind) -> bool) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| pred(&e.kind))
    }

    pub fn zeros_of_u(&self) -> Vec<Event> {
        self.events_of(|k| matches!(k, EventKind::ZeroOfU))
            .copied()
            .collect()
    }

    pub fn zeros_of_du(&self) -> Vec<Event> {
        self.events_of(|k| matches!(k, EventKind::ZeroOfDu))
            .copied()
            .collect()
    }

    /// CSV `r,u,du,I` at every `stride`-th step point.
    pub fn to_csv(&self, nl: &Nonlinearity, stride: usize) -> String {
        let stride = stride.max(1);
        let mut out = String::from("r,u,du,I\n");
        let pts = self.step_points();
        let last = pts.len().saturating_sub(1);
        for (i, (r, u, du)) in pts.iter().enumerate() {
            if i % stride == 0 || i == last {
                let energy = 0.5 * du * du + nl.big_f(*u);
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    crate::io::fmt17(*r),
                    crate::io::fmt17(*u),
                    crate::io::fmt17(*du),
                    crate::io::fmt17(energy)
                ));
            }
        }
        out
    }

    pub fn events_json(&self) -> String {
        serde_json::to_string_pretty(&self.events).unwrap_or_else(|_| "[]".into())
    }
}
