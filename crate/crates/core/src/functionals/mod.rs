//! The J operator and the functionals built on it, evaluated on monotone arcs.
//!
//! Throughout, `J = -u'/r` is the signed quantity: positive on arcs where `u`
//! decreases, negative where it increases. With that convention the identities
//! `J' = (N - f/J)/r²`, `(J r²)' = (N-2) - f/J` and `I' = (N-1) J` hold on every
//! arc, derivatives being taken with respect to `s = u`.

mod compare;
mod identities;
mod phase;

use serde::Serialize;
use thiserror::Error;

use crate::interp::Pchip;
use crate::nonlinearity::Nonlinearity;
use crate::roots::bisect;
use crate::shooting::{EventKind, Trajectory};

pub use compare::{compare_solutions, ComparisonReport, ComparisonStatus};
pub use identities::{
    check_h_monotone, check_i_ode, check_j_basics, check_j_ode, check_jr2_ode, check_p_prime_sign,
    check_w_identity, j_prime_at_alpha, ProbeOptions, ResidualReport, SignReport,
};
pub use phase::{
    phase_curve, self_intersection_check, self_intersection_count, winding_increments,
    IntersectionReport, PhaseCurve, PhasePoint,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error("arc {index} spans only {samples} step samples")]
    DegenerateArc { index: usize, samples: usize },
    #[error("s = {s} outside arc range [{lo}, {hi}]")]
    OutOfRange { s: f64, lo: f64, hi: f64 },
    #[error("|f(s)| < 1e-8 at s = {0}")]
    NearSingularF(f64),
    #[error("energy I = {i} <= 0 at s = {s}")]
    NonpositiveEnergy { s: f64, i: f64 },
    #[error("no real roots: f' r² = {0} exceeds N²/4")]
    NoRealRoots(f64),
    #[error("solutions have no common s-range on their first arcs")]
    NoOverlap,
    #[error("no decreasing first arc available")]
    NoArc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Down,
    Up,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArcSample {
    pub s: f64,
    pub r: f64,
    pub du: f64,
    pub j: f64,
}

/// Default number of Chebyshev–Lobatto nodes per arc.
pub const ARC_NODES: usize = 256;

/// One monotone piece of `u`, re-parameterized by `s = u`.
#[derive(Debug, Clone)]
pub struct MonotoneArc<'a> {
    /// 1-based arc number.
    pub index: usize,
    pub direction: Direction,
    pub s_lo: f64,
    pub s_hi: f64,
    pub r_a: f64,
    pub r_b: f64,
    /// Samples in increasing `r`.
    pub samples: Vec<ArcSample>,
    pub parent: &'a Trajectory,
    pub nl: &'a Nonlinearity,
    interp: Option<Pchip>,
}

#[derive(Debug, Clone)]
pub struct ArcSet<'a> {
    pub arcs: Vec<MonotoneArc<'a>>,
    pub dropped: Vec<FunctionalError>,
}

fn chebyshev_lobatto(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    (0..n)
        .map(|k| {
            if k == 0 {
                hi
            } else if k == n - 1 {
                lo
            } else {
                c + h * (std::f64::consts::PI * k as f64 / (n - 1) as f64).cos()
            }
        })
        .collect()
}

/// Splits the trajectory at the zeros of `u'` and resamples each arc at
/// Chebyshev nodes in `s`.
pub fn extract_arcs<'a>(traj: &'a Trajectory, nl: &'a Nonlinearity) -> ArcSet<'a> {
    extract_arcs_with(traj, nl, ARC_NODES)
}

pub fn extract_arcs_with<'a>(
    traj: &'a Trajectory,
    nl: &'a Nonlinearity,
    nodes: usize,
) -> ArcSet<'a> {
    let mut bounds = vec![traj.r_start];
    bounds.extend(
        traj.events_of(|k| matches!(k, EventKind::ZeroOfDu))
            .map(|e| e.r)
            .filter(|&r| r > traj.r_start && r < traj.r_end),
    );
    bounds.push(traj.r_end);
    let steps: Vec<f64> = traj.step_points().iter().map(|p| p.0).collect();

    let mut arcs = Vec::new();
    let mut dropped = Vec::new();
    for (i, w) in bounds.windows(2).enumerate() {
        let (r_a, r_b) = (w[0], w[1]);
        let index = i + 1;
        let ua = traj.eval_unchecked(r_a)[0];
        let ub = traj.eval_unchecked(r_b)[0];
        if (ua - ub).abs() <= 1e-14 * (1.0 + ua.abs()) {
            continue;
        }
        let inside = steps.iter().filter(|&&r| r > r_a && r < r_b).count() + 2;
        if inside < 4 {
            dropped.push(FunctionalError::DegenerateArc {
                index,
                samples: inside,
            });
            continue;
        }
        let direction = if ua > ub {
            Direction::Down
        } else {
            Direction::Up
        };
        let mut arc = MonotoneArc {
            index,
            direction,
            s_lo: ua.min(ub),
            s_hi: ua.max(ub),
            r_a,
            r_b,
            samples: Vec::new(),
            parent: traj,
            nl,
            interp: None,
        };
        let mut s_nodes = chebyshev_lobatto(arc.s_lo, arc.s_hi, nodes);
        if direction == Direction::Up {
            s_nodes.reverse();
        }
        let n_nodes = s_nodes.len();
        arc.samples = s_nodes
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                let r = if k == 0 {
                    r_a
                } else if k == n_nodes - 1 {
                    r_b
                } else {
                    arc.r_of_s_unchecked(s)
                };
                arc.sample_at_r(r, s)
            })
            .collect();
        let mut pairs: Vec<(f64, f64)> = arc.samples.iter().map(|p| (p.s, p.j)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.dedup_by(|a, b| a.0 == b.0);
        arc.interp = Pchip::new(
            pairs.iter().map(|p| p.0).collect(),
            pairs.iter().map(|p| p.1).collect(),
        );
        arcs.push(arc);
    }
    ArcSet { arcs, dropped }
}

impl<'a> MonotoneArc<'a> {
    pub fn dimension(&self) -> f64 {
        self.parent.dimension()
    }

    pub fn width(&self) -> f64 {
        self.s_hi - self.s_lo
    }

    /// Whether the arc starts at the origin (`r = 0`, `s = alpha`).
    pub fn starts_at_origin(&self) -> bool {
        self.r_a == 0.0
    }

    pub fn contains(&self, s: f64) -> bool {
        s >= self.s_lo && s <= self.s_hi
    }

    fn check_range(&self, s: f64) -> Result<(), FunctionalError> {
        if self.contains(s) {
            Ok(())
        } else {
            Err(FunctionalError::OutOfRange {
                s,
                lo: self.s_lo,
                hi: self.s_hi,
            })
        }
    }

    fn sample_at_r(&self, r: f64, s: f64) -> ArcSample {
        let y = self.parent.eval_unchecked(r);
        let j = if r == 0.0 {
            self.nl.f(self.parent.alpha()) / self.dimension()
        } else {
            -y[1] / r
        };
        ArcSample { s, r, du: y[1], j }
    }

    fn r_of_s_unchecked(&self, s: f64) -> f64 {
        let g = |r: f64| self.parent.eval_unchecked(r)[0] - s;
        bisect(g, self.r_a, self.r_b, 0.0)
    }

    /// The inverse `r(s)` on this arc, by bisection on the dense output.
    pub fn r_of_s(&self, s: f64) -> Result<f64, FunctionalError> {
        self.check_range(s)?;
        if s == self.start_s() {
            return Ok(self.r_a);
        }
        if s == self.end_s() {
            return Ok(self.r_b);
        }
        Ok(self.r_of_s_unchecked(s))
    }

    /// `s` at the arc start (smallest `r`).
    pub fn start_s(&self) -> f64 {
        match self.direction {
            Direction::Down => self.s_hi,
            Direction::Up => self.s_lo,
        }
    }

    pub fn end_s(&self) -> f64 {
        match self.direction {
            Direction::Down => self.s_lo,
            Direction::Up => self.s_hi,
        }
    }

    /// `(r, u', J)` evaluated directly from the dense output at `s`.
    pub fn state_at(&self, s: f64) -> Result<ArcSample, FunctionalError> {
        let r = self.r_of_s(s)?;
        Ok(self.sample_at_r(r, s))
    }

    /// Monotone-cubic interpolant of the sampled `J`.
    pub fn j_of_s(&self, s: f64) -> Result<f64, FunctionalError> {
        self.check_range(s)?;
        if s == self.start_s() {
            return Ok(self.samples[0].j);
        }
        if s == self.end_s() {
            return Ok(self.samples[self.samples.len() - 1].j);
        }
        match &self.interp {
            Some(p) => p.eval(s).ok_or(FunctionalError::OutOfRange {
                s,
                lo: self.s_lo,
                hi: self.s_hi,
            }),
            None => Ok(self.state_at(s)?.j),
        }
    }

    pub fn functionals_at(&self, s: f64) -> Result<FunctionalRecord, FunctionalError> {
        let smp = self.state_at(s)?;
        Ok(FunctionalRecord::from_sample(
            self.nl,
            self.dimension(),
            &smp,
        ))
    }

    pub fn records(&self) -> Vec<FunctionalRecord> {
        self.samples
            .iter()
            .map(|smp| FunctionalRecord::from_sample(self.nl, self.dimension(), smp))
            .collect()
    }
}

/// `I = r² J² / 2 + F(s)`, identical to `u'²/2 + F(u)`.
pub fn energy_from(nl: &Nonlinearity, s: f64, r: f64, j: f64) -> f64 {
    let rj = r * j;
    0.5 * rj * rj + nl.big_f(s)
}

/// Energy in `r`-form on a trajectory.
pub fn energy_i(
    traj: &Trajectory,
    nl: &Nonlinearity,
    r: f64,
) -> Result<f64, crate::shooting::ShootingError> {
    traj.energy_at(nl, r)
}

/// Energy in `s`-form on an arc.
pub fn energy_i_s(arc: &MonotoneArc, s: f64) -> Result<f64, FunctionalError> {
    let smp = arc.state_at(s)?;
    Ok(energy_from(arc.nl, s, smp.r, smp.j))
}

/// `H = r^{2(N-1)} I`.
pub fn h_from(nl: &Nonlinearity, n: f64, s: f64, r: f64, j: f64) -> f64 {
    r.powf(2.0 * (n - 1.0)) * energy_from(nl, s, r, j)
}

/// `P = r^N (2N (F/f) J - r² J² - 2F)`.
pub fn pohozaev_from(
    nl: &Nonlinearity,
    n: f64,
    s: f64,
    r: f64,
    j: f64,
) -> Result<f64, FunctionalError> {
    let f = nl.f(s);
    if f.abs() < 1e-8 {
        return Err(FunctionalError::NearSingularF(s));
    }
    let big_f = nl.big_f(s);
    let rj = r * j;
    Ok(r.powf(n) * (2.0 * n * (big_f / f) * j - rj * rj - 2.0 * big_f))
}

pub fn pohozaev_p(arc: &MonotoneArc, s: f64) -> Result<f64, FunctionalError> {
    let smp = arc.state_at(s)?;
    pohozaev_from(arc.nl, arc.dimension(), s, smp.r, smp.j)
}

/// `W = r sqrt(2 I)`.
pub fn w_from(nl: &Nonlinearity, s: f64, r: f64, j: f64) -> Result<f64, FunctionalError> {
    let i = energy_from(nl, s, r, j);
    if i <= 0.0 {
        return Err(FunctionalError::NonpositiveEnergy { s, i });
    }
    Ok(r * (2.0 * i).sqrt())
}

/// Closed form `W' = ((N-2) r² J² - 2F) / (r J sqrt(r² J² + 2F))`.
pub fn w_prime_from(
    nl: &Nonlinearity,
    n: f64,
    s: f64,
    r: f64,
    j: f64,
) -> Result<f64, FunctionalError> {
    let i = energy_from(nl, s, r, j);
    if i <= 0.0 {
        return Err(FunctionalError::NonpositiveEnergy { s, i });
    }
    let rj = r * j;
    Ok(((n - 2.0) * rj * rj - 2.0 * nl.big_f(s)) / (rj * (2.0 * i).sqrt()))
}

pub fn peletier_serrin_w(arc: &MonotoneArc, s: f64) -> Result<f64, FunctionalError> {
    let smp = arc.state_at(s)?;
    w_from(arc.nl, s, smp.r, smp.j)
}

/// Roots of `f' r² x² - N x + 1`, returned as `(psi1, 1/psi2)` so that the
/// `r -> 0` limit stays finite.
pub fn psi_from(nl: &Nonlinearity, n: f64, s: f64, r: f64) -> Result<(f64, f64), FunctionalError> {
    let a = nl.df(s) * r * r;
    let disc = n * n - 4.0 * a;
    if disc < 0.0 {
        return Err(FunctionalError::NoRealRoots(a));
    }
    let q = n + disc.sqrt();
    Ok((2.0 / q, 2.0 * a / q))
}

pub fn psi_bounds(arc: &MonotoneArc, s: f64) -> Result<(f64, f64), FunctionalError> {
    let r = arc.r_of_s(s)?;
    psi_from(arc.nl, arc.dimension(), s, r)
}

/// `J r²`, which equals `-u' r`.
pub fn jr2(arc: &MonotoneArc, s: f64) -> Result<f64, FunctionalError> {
    let smp = arc.state_at(s)?;
    Ok(smp.j * smp.r * smp.r)
}

/// All functionals at one sample; partial-domain entries are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalRecord {
    pub s: f64,
    pub r: f64,
    pub j: f64,
    pub i: f64,
    pub h: f64,
    pub p: Option<f64>,
    pub w: Option<f64>,
    pub psi1: Option<f64>,
    pub psi2_recip: Option<f64>,
    pub jr2: f64,
}

impl FunctionalRecord {
    pub fn from_sample(nl: &Nonlinearity, n: f64, smp: &ArcSample) -> Self {
        let (s, r, j) = (smp.s, smp.r, smp.j);
        let psi = psi_from(nl, n, s, r).ok();
        FunctionalRecord {
            s,
            r,
            j,
            i: energy_from(nl, s, r, j),
            h: h_from(nl, n, s, r, j),
            p: pohozaev_from(nl, n, s, r, j).ok(),
            w: w_from(nl, s, r, j).ok(),
            psi1: psi.map(|p| p.0),
            psi2_recip: psi.map(|p| p.1),
            jr2: j * r * r,
        }
    }
}

/// CSV `s,r,J,I,H,P,W,psi1,psi2r`, empty fields outside partial domains.
pub fn records_csv(records: &[FunctionalRecord]) -> String {
    use crate::io::fmt17;
    let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
    let mut out = String::from("s,r,J,I,H,P,W,psi1,psi2r\n");
    for rec in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt17(rec.s),
            fmt17(rec.r),
            fmt17(rec.j),
            fmt17(rec.i),
            fmt17(rec.h),
            opt(rec.p),
            opt(rec.w),
            opt(rec.psi1),
            opt(rec.psi2_recip)
        ));
    }
    out
}
