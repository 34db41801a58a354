//! Adaptive integration of `u'' + (N-1)/r u' + f(u) = 0` with event location.

mod dopri;
mod trajectory;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nonlinearity::Nonlinearity;
use crate::roots::{bisect, event_tol};
use dopri::{attempt, State};

pub use dopri::StepSegment;
pub use trajectory::{
    Event, EventKind, Provenance, Segment, TaylorSegment, Termination, Trajectory,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShootingError {
    #[error("invalid problem parameters: {0}")]
    InvalidParams(String),
    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),
    #[error("r = {r} outside the covered range [{lo}, {hi}]")]
    OutOfRange { r: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemParams {
    #[serde(rename = "N")]
    pub dimension: f64,
    pub r_max: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub tol_u: f64,
    pub tol_du: f64,
    /// Base bootstrap radius; the radius actually used is
    /// `r0_boot * min(1, 1/sqrt(1 + |f'(alpha)|))`.
    pub r0_boot: f64,
    /// Stop as soon as the energy becomes negative.
    pub stop_on_trap: bool,
    pub max_steps: usize,
}

impl Default for ProblemParams {
    fn default() -> Self {
        ProblemParams {
            dimension: 3.0,
            r_max: 1000.0,
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            tol_u: 1e-8,
            tol_du: 1e-8,
            r0_boot: 1e-3,
            stop_on_trap: false,
            max_steps: 1_000_000,
        }
    }
}

impl ProblemParams {
    pub fn with_dimension(dimension: f64) -> Self {
        ProblemParams {
            dimension,
            ..Default::default()
        }
    }

    /// Settings used by the classifier: long horizon, trap stop enabled.
    pub fn classification(dimension: f64) -> Self {
        ProblemParams {
            dimension,
            stop_on_trap: true,
            ..Default::default()
        }
    }

    /// Short horizon without trap stop, for diagnostics on the early arcs.
    pub fn probe(dimension: f64) -> Self {
        ProblemParams {
            dimension,
            r_max: 50.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), ShootingError> {
        let bad = |m: &str| Err(ShootingError::InvalidParams(m.to_string()));
        if !(self.dimension > 2.0 && self.dimension.is_finite()) {
            return bad("N must be a finite real > 2");
        }
        if !(self.r0_boot > 0.0 && self.r0_boot.is_finite()) {
            return bad("r0_boot must be positive");
        }
        if !(self.r_max > self.r0_boot && self.r_max.is_finite()) {
            return bad("r_max must be finite and exceed r0_boot");
        }
        for (name, v) in [
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("tol_u", self.tol_u),
            ("tol_du", self.tol_du),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ShootingError::InvalidParams(format!(
                    "{name} must be positive"
                )));
            }
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCondition {
    pub r0: f64,
    pub alpha: f64,
    #[serde(default)]
    pub dalpha: f64,
}

impl InitialCondition {
    pub fn at_origin(alpha: f64) -> Self {
        InitialCondition {
            r0: 0.0,
            alpha,
            dalpha: 0.0,
        }
    }

    pub fn interior(r0: f64, alpha: f64, dalpha: f64) -> Self {
        InitialCondition { r0, alpha, dalpha }
    }

    pub fn validate(&self, params: &ProblemParams) -> Result<(), ShootingError> {
        let bad = |m: String| Err(ShootingError::InvalidInitialCondition(m));
        if !(self.r0 >= 0.0 && self.r0.is_finite()) {
            return bad(format!("r0 = {} must be finite and >= 0", self.r0));
        }
        if !self.alpha.is_finite() || !self.dalpha.is_finite() {
            return bad("alpha and dalpha must be finite".into());
        }
        if self.r0 == 0.0 && self.dalpha != 0.0 {
            return bad("r0 = 0 requires dalpha = 0".into());
        }
        if self.r0 >= params.r_max {
            return bad(format!(
                "r0 = {} is not below r_max = {}",
                self.r0, params.r_max
            ));
        }
        Ok(())
    }
}

/// Radius at which the origin expansion hands over to the stepper.
pub fn bootstrap_radius(nl: &Nonlinearity, params: &ProblemParams, alpha: f64) -> f64 {
    params.r0_boot * (1.0 / (1.0 + nl.df(alpha).abs()).sqrt()).min(1.0)
}

fn taylor_segment(nl: &Nonlinearity, params: &ProblemParams, alpha: f64) -> TaylorSegment {
    let n = params.dimension;
    let f = nl.f(alpha);
    let df = nl.df(alpha);
    TaylorSegment {
        r_end: bootstrap_radius(nl, params, alpha),
        alpha,
        c2: -f / (2.0 * n),
        c4: f * df / (8.0 * n * (n + 2.0)),
    }
}

/// Origin expansion evaluated at the bootstrap radius: `(r, u, u')`.
pub fn taylor_bootstrap(nl: &Nonlinearity, params: &ProblemParams, alpha: f64) -> (f64, f64, f64) {
    let t = taylor_segment(nl, params, alpha);
    let r = t.r_end;
    let s = Segment::Taylor(t).eval(r);
    (r, s[0], s[1])
}

const SAMPLE_THETAS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
const H_MAX: f64 = 0.5;

fn eval_segments(segments: &[Segment], r: f64) -> State {
    let idx = segments
        .partition_point(|s| s.end() < r)
        .min(segments.len() - 1);
    segments[idx].eval(r)
}

/// Sign tracker for one event function.
struct Watch {
    kind: EventKind,
    g: fn(&EventKind, &State) -> f64,
    last: Option<(f64, f64)>,
}

fn g_u(_: &EventKind, y: &State) -> f64 {
    y[0]
}

fn g_du(_: &EventKind, y: &State) -> f64 {
    y[1]
}

fn g_level(k: &EventKind, y: &State) -> f64 {
    match k {
        EventKind::CrossB { level }
        | EventKind::CrossBeta { level }
        | EventKind::CrossKink { level } => y[0] - level,
        _ => y[0],
    }
}

fn watches(nl: &Nonlinearity) -> Vec<Watch> {
    let mut out = vec![
        Watch {
            kind: EventKind::ZeroOfU,
            g: g_u,
            last: None,
        },
        Watch {
            kind: EventKind::ZeroOfDu,
            g: g_du,
            last: None,
        },
    ];
    let mut push_level = |kind: EventKind| {
        out.push(Watch {
            kind,
            g: g_level,
            last: None,
        })
    };
    if nl.b > 0.0 {
        push_level(EventKind::CrossB { level: nl.b });
        push_level(EventKind::CrossB { level: -nl.b });
    }
    if nl.beta > 0.0 {
        push_level(EventKind::CrossBeta { level: nl.beta });
        push_level(EventKind::CrossBeta { level: -nl.beta });
    }
    for k in nl.signed_kinks() {
        push_level(EventKind::CrossKink { level: k });
    }
    out
}

fn rms(v: &State, scale: &State) -> f64 {
    (((v[0] / scale[0]).powi(2) + (v[1] / scale[1]).powi(2)) / 2.0).sqrt()
}

fn initial_step(
    rhs: &impl Fn(f64, &State) -> State,
    r: f64,
    y: &State,
    k1: &State,
    params: &ProblemParams,
) -> f64 {
    let sk = [
        params.abs_tol + params.rel_tol * y[0].abs(),
        params.abs_tol + params.rel_tol * y[1].abs(),
    ];
    let d0 = rms(y, &sk);
    let d1 = rms(k1, &sk);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1 = [y[0] + h0 * k1[0], y[1] + h0 * k1[1]];
    let k2 = rhs(r + h0, &y1);
    let d2 = rms(&[k2[0] - k1[0], k2[1] - k1[1]], &sk) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(H_MAX)
}

/// Integrates the radial problem from `ic` until `r_max`, a double zero, the
/// energy trap (when enabled) or step failure.
pub fn integrate(
    nl: &Nonlinearity,
    params: &ProblemParams,
    ic: &InitialCondition,
) -> Result<Trajectory, ShootingError> {
    params.validate()?;
    ic.validate(params)?;
    let n = params.dimension;
    let rhs = |r: f64, y: &State| -> State { [y[1], -(n - 1.0) / r * y[1] - nl.f(y[0])] };

    let mut segments: Vec<Segment> = Vec::new();
    let (mut r, mut y) = if ic.r0 == 0.0 {
        let t = taylor_segment(nl, params, ic.alpha);
        let r = t.r_end;
        let seg = Segment::Taylor(t);
        let y = seg.eval(r);
        segments.push(seg);
        (r, y)
    } else {
        (ic.r0, [ic.alpha, ic.dalpha])
    };
    let r_start = ic.r0;

    let kinks = nl.signed_kinks();
    let kink_band = |k: f64| 1e-9 * (1.0 + k.abs());
    let mut watches = watches(nl);
    for w in &mut watches {
        let v = (w.g)(&w.kind, &y);
        if v != 0.0 {
            w.last = Some((r, v));
        }
    }

    let mut events: Vec<Event> = Vec::new();
    let mut termination = Termination::ReachedRmax;
    let mut r_end = params.r_max;
    let energy = |y: &State| 0.5 * y[1] * y[1] + nl.big_f(y[0]);

    if y[0].abs() < params.tol_u && y[1].abs() < params.tol_du {
        termination = Termination::DoubleZero;
        r_end = r;
    }
    if params.stop_on_trap && termination == Termination::ReachedRmax && energy(&y) < 0.0 {
        termination = Termination::Trapped;
        r_end = r;
        events.push(Event {
            kind: EventKind::NegativeEnergyTrap,
            r,
            u: y[0],
            du: y[1],
        });
    }

    let mut k1 = rhs(r, &y);
    let mut h = initial_step(&rhs, r, &y, &k1, params);
    let mut steps = 0usize;
    let mut cap: Option<f64> = None;

    while termination == Termination::ReachedRmax && r < params.r_max {
        steps += 1;
        if steps > params.max_steps {
            termination = Termination::StepFailure;
            r_end = r;
            break;
        }
        let h_min = 1e-14 * r.abs();
        let mut h_try = h.min(H_MAX).min(params.r_max - r);
        let capped = match cap {
            Some(rc) if rc - r < h_try => {
                h_try = rc - r;
                true
            }
            _ => false,
        };
        if h_try < h_min {
            if params.r_max - r <= h_min {
                break;
            }
            if !capped {
                termination = Termination::StepFailure;
                r_end = r;
                break;
            }
            cap = None;
            continue;
        }
        let att = attempt(&rhs, r, &y, &k1, h_try, params.abs_tol, params.rel_tol);
        let finite = att.y1.iter().chain(att.k7.iter()).all(|v| v.is_finite());
        let err = if finite { att.err } else { f64::INFINITY };
        if err > 1.0 {
            let factor = if err.is_finite() {
                (0.9 * err.powf(-0.2)).max(0.2)
            } else {
                0.2
            };
            h = h_try * factor;
            if h < h_min {
                termination = Termination::StepFailure;
                r_end = r;
                break;
            }
            continue;
        }

        let seg = att.segment;
        let r1 = if params.r_max - seg.r1 <= 1e-14 * params.r_max {
            params.r_max
        } else {
            seg.r1
        };

        // Kink-aware truncation: end the step exactly where u meets a kink.
        if !capped && !kinks.is_empty() {
            let mut first: Option<f64> = None;
            for &k in &kinks {
                let g0 = y[0] - k;
                if g0.abs() < kink_band(k) {
                    continue;
                }
                let mut prev = (r, g0);
                for th in SAMPLE_THETAS {
                    let rr = r + th * h_try;
                    let g = seg.eval(rr)[0] - k;
                    if (g < 0.0) != (prev.1 < 0.0) {
                        let rc = bisect(|s| seg.eval(s)[0] - k, prev.0, rr, event_tol(rr));
                        if first.map_or(true, |f| rc < f) {
                            first = Some(rc);
                        }
                        break;
                    }
                    prev = (rr, g);
                }
            }
            if let Some(rc) = first {
                if rc - r > 1e-12 * r.max(1.0) && rc < r + h_try {
                    cap = Some(rc);
                    continue;
                }
            }
        }
        cap = None;

        let seg = Segment::Step(StepSegment { r1, ..seg });
        let y1 = att.y1;
        segments.push(seg);

        // Event detection on the dense output.
        let mut step_events: Vec<Event> = Vec::new();
        let mut stop: Option<(f64, Termination)> = None;
        let mut prev_y = y;
        let mut prev_r = r;
        for th in SAMPLE_THETAS {
            let rr = if th == 1.0 { r1 } else { r + th * (r1 - r) };
            let ys = if th == 1.0 {
                y1
            } else {
                eval_segments(&segments, rr)
            };
            for w in &mut watches {
                let v = (w.g)(&w.kind, &ys);
                if v == 0.0 {
                    continue;
                }
                if let Some((lr, lv)) = w.last {
                    if (lv < 0.0) != (v < 0.0) {
                        let kind = w.kind;
                        let g = w.g;
                        let re = bisect(
                            |s| g(&kind, &eval_segments(&segments, s)),
                            lr,
                            rr,
                            event_tol(rr),
                        );
                        let ye = eval_segments(&segments, re);
                        step_events.push(Event {
                            kind,
                            r: re,
                            u: ye[0],
                            du: ye[1],
                        });
                    }
                }
                w.last = Some((rr, v));
            }
            if stop.is_none() && params.stop_on_trap && energy(&ys) < 0.0 {
                let rt = if energy(&prev_y) < 0.0 {
                    prev_r
                } else {
                    bisect(
                        |s| energy(&eval_segments(&segments, s)),
                        prev_r,
                        rr,
                        event_tol(rr),
                    )
                };
                let yt = eval_segments(&segments, rt);
                step_events.push(Event {
                    kind: EventKind::NegativeEnergyTrap,
                    r: rt,
                    u: yt[0],
                    du: yt[1],
                });
                stop = Some((rt, Termination::Trapped));
            }
            if stop.is_none() && ys[0].abs() < params.tol_u && ys[1].abs() < params.tol_du {
                stop = Some((rr, Termination::DoubleZero));
            }
            if stop.is_some() {
                break;
            }
            prev_y = ys;
            prev_r = rr;
        }
        if let Some((rs, t)) = stop {
            step_events.retain(|e| e.r <= rs);
            r_end = rs;
            termination = t;
        }
        step_events.sort_by(|a, b| a.r.total_cmp(&b.r));
        events.extend(step_events);

        r = r1;
        y = y1;
        k1 = att.k7;
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = h_try * factor;
    }
    if termination == Termination::ReachedRmax {
        r_end = r.min(params.r_max);
    }
    events.retain(|e| e.r <= r_end);
    events.sort_by(|a, b| a.r.total_cmp(&b.r));

    Ok(Trajectory {
        segments,
        events,
        termination,
        r_start,
        r_end,
        provenance: Provenance {
            params: *params,
            ic: *ic,
            model_hash: nl.model_hash(),
        },
    })
}

/// Shorthand for integrating from the origin with `u(0) = alpha`.
pub fn integrate_alpha(
    nl: &Nonlinearity,
    params: &ProblemParams,
    alpha: f64,
) -> Result<Trajectory, ShootingError> {
    integrate(nl, params, &InitialCondition::at_origin(alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pd3() -> Nonlinearity {
        Nonlinearity::power_difference(3.0).unwrap()
    }

    #[test]
    fn bootstrap_leading_term() {
        let nl = pd3();
        let mut p = ProblemParams::default();
        // Pin the radius so the example is exactly at r = 1e-3.
        p.r0_boot = 1e-3;
        let t = taylor_segment(&nl, &p, 2.0);
        let s = Segment::Taylor(t).eval(1e-3);
        assert!((s[0] - (2.0 - 1e-6)).abs() < 1e-11);
        // At the radius actually used, -u'/r reproduces f(alpha)/N.
        let (r, _, du) = taylor_bootstrap(&nl, &p, 2.0);
        assert!(r < 1e-3);
        assert!((-du / r / 2.0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn equilibrium_is_constant() {
        let nl = pd3();
        let p = ProblemParams::probe(3.0);
        let tr = integrate_alpha(&nl, &p, 1.0).unwrap();
        assert_eq!(tr.termination, Termination::ReachedRmax);
        assert!(tr.events.is_empty(), "{:?}", tr.events);
        assert_eq!(tr.dense_eval(17.3).unwrap(), (1.0, 0.0));
        assert_eq!(tr.r_end, p.r_max);
    }

    #[test]
    fn interior_start_requires_zero_slope_at_origin() {
        let nl = pd3();
        let p = ProblemParams::default();
        let ic = InitialCondition::interior(0.0, 2.0, 1.0);
        assert!(matches!(
            integrate(&nl, &p, &ic),
            Err(ShootingError::InvalidInitialCondition(_))
        ));
    }

    #[test]
    fn params_validation() {
        let mut p = ProblemParams::default();
        p.dimension = 2.0;
        assert!(p.validate().is_err());
        let mut p = ProblemParams::default();
        p.rel_tol = 0.0;
        assert!(p.validate().is_err());
        let mut p = ProblemParams::default();
        p.r_max = 1e-4;
        assert!(p.validate().is_err());
    }

    #[test]
    fn out_of_range_eval() {
        let nl = pd3();
        let tr = integrate_alpha(&nl, &ProblemParams::probe(3.0), 2.0).unwrap();
        assert!(matches!(
            tr.dense_eval(60.0),
            Err(ShootingError::OutOfRange { .. })
        ));
        assert!(tr.dense_eval(-1.0).is_err());
    }

    #[test]
    fn events_match_dense_output() {
        let nl = pd3();
        let tr = integrate_alpha(&nl, &ProblemParams::probe(3.0), 10.0).unwrap();
        assert!(!tr.events.is_empty());
        for e in &tr.events {
            let (u, du) = tr.dense_eval(e.r).unwrap();
            assert_eq!((u, du), (e.u, e.du));
        }
        for w in tr.events.windows(2) {
            assert!(w[0].r <= w[1].r);
        }
    }
}
