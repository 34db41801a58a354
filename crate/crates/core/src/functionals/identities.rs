//! Finite-difference residual checks of the differential identities in `s`.

use serde::Serialize;

use super::{energy_from, pohozaev_from, w_from, w_prime_from, Direction, MonotoneArc};
use crate::hypotheses::f_over_f_prime;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeOptions {
    /// Restrict probes to this `s`-interval (intersected with the arc).
    pub s_range: Option<(f64, f64)>,
    /// FD step as a fraction of the arc width.
    pub fd_rel_step: f64,
    /// Probes closer than this fraction of the width to an arc end are skipped.
    pub endpoint_frac: f64,
    /// Probes with `|f|` or `|J|` below this are skipped.
    pub small: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            s_range: None,
            fd_rel_step: 2e-4,
            endpoint_frac: 1e-3,
            small: 1e-8,
        }
    }
}

impl ProbeOptions {
    pub fn in_range(lo: f64, hi: f64) -> Self {
        ProbeOptions {
            s_range: Some((lo, hi)),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub identity: String,
    pub arc: usize,
    pub max_rel_residual: f64,
    pub at_s: f64,
    pub probes: usize,
    pub excluded: usize,
}

impl ResidualReport {
    fn new(identity: &str, arc: usize) -> Self {
        ResidualReport {
            identity: identity.to_string(),
            arc,
            max_rel_residual: 0.0,
            at_s: f64::NAN,
            probes: 0,
            excluded: 0,
        }
    }

    fn record(&mut self, s: f64, lhs: f64, rhs: f64, scale: f64) {
        self.probes += 1;
        let rel = (lhs - rhs).abs() / scale.max(f64::MIN_POSITIVE);
        if !(rel <= self.max_rel_residual) {
            self.max_rel_residual = rel;
            self.at_s = s;
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_residual < tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignReport {
    pub property: String,
    pub arc: usize,
    pub checked: usize,
    pub violations: usize,
    pub first_violation: Option<f64>,
}

impl SignReport {
    fn new(property: &str, arc: usize) -> Self {
        SignReport {
            property: property.to_string(),
            arc,
            checked: 0,
            violations: 0,
            first_violation: None,
        }
    }

    fn record(&mut self, s: f64, ok: bool) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            self.first_violation.get_or_insert(s);
        }
    }

    pub fn passes(&self) -> bool {
        self.violations == 0
    }
}

/// Probe points: the arc's sample nodes minus exclusion zones, with the FD step
/// usable at each.
fn probes(arc: &MonotoneArc, opts: &ProbeOptions) -> (Vec<(f64, f64)>, usize) {
    let width = arc.width();
    let margin = opts.endpoint_frac * width;
    let (lo, hi) = opts.s_range.unwrap_or((arc.s_lo, arc.s_hi));
    let mut out = Vec::new();
    let mut excluded = 0;
    for smp in &arc.samples {
        let s = smp.s;
        if s < lo || s > hi {
            continue;
        }
        let dist = (s - arc.s_lo).min(arc.s_hi - s);
        if dist < margin || arc.nl.f(s).abs() < opts.small || smp.j.abs() < opts.small {
            excluded += 1;
            continue;
        }
        if arc
            .nl
            .kinks
            .iter()
            .any(|k| (s.abs() - k).abs() < 4.0 * opts.fd_rel_step * width)
        {
            excluded += 1;
            continue;
        }
        let h = (opts.fd_rel_step * width).min(0.02 * dist);
        out.push((s, h));
    }
    (out, excluded)
}

/// Richardson-extrapolated central difference.
fn fd(g: impl Fn(f64) -> Option<f64>, s: f64, h: f64) -> Option<f64> {
    let d = |h: f64| Some((g(s + h)? - g(s - h)?) / (2.0 * h));
    let (d1, d2) = (d(h)?, d(0.5 * h)?);
    Some((4.0 * d2 - d1) / 3.0)
}

fn second_fd(g: impl Fn(f64) -> Option<f64>, s: f64, h: f64) -> Option<f64> {
    let d = |h: f64| Some((g(s + h)? - 2.0 * g(s)? + g(s - h)?) / (h * h));
    let (d1, d2) = (d(h)?, d(0.5 * h)?);
    Some((4.0 * d2 - d1) / 3.0)
}

fn j_at(arc: &MonotoneArc, s: f64) -> Option<f64> {
    arc.state_at(s).ok().map(|p| p.j)
}

/// `J'(s) = (N - f/J)/r²`.
pub fn check_j_ode(arc: &MonotoneArc, opts: &ProbeOptions) -> ResidualReport {
    let n = arc.dimension();
    let mut rep = ResidualReport::new("J' = (N - f/J)/r^2", arc.index);
    let (pts, excluded) = probes(arc, opts);
    rep.excluded = excluded;
    for (s, h) in pts {
        let Ok(smp) = arc.state_at(s) else { continue };
        let Some(lhs) = fd(|t| j_at(arc, t), s, h) else {
            continue;
        };
        let r2 = smp.r * smp.r;
        let f_over_j = arc.nl.f(s) / smp.j;
        let rhs = (n - f_over_j) / r2;
        let scale = (n / r2).max(f_over_j.abs() / r2);
        rep.record(s, lhs, rhs, scale);
    }
    rep
}

/// `(J r²)' = (N-2) - f/J`.
pub fn check_jr2_ode(arc: &MonotoneArc, opts: &ProbeOptions) -> ResidualReport {
    let n = arc.dimension();
    let mut rep = ResidualReport::new("(J r^2)' = (N-2) - f/J", arc.index);
    let (pts, excluded) = probes(arc, opts);
    rep.excluded = excluded;
    for (s, h) in pts {
        let Ok(smp) = arc.state_at(s) else { continue };
        let g = |t: f64| arc.state_at(t).ok().map(|p| p.j * p.r * p.r);
        let Some(lhs) = fd(g, s, h) else { continue };
        let f_over_j = arc.nl.f(s) / smp.j;
        let rhs = (n - 2.0) - f_over_j;
        rep.record(s, lhs, rhs, (n - 2.0).max(f_over_j.abs()));
    }
    rep
}

/// `I'(s) = (N-1) J`.
pub fn check_i_ode(arc: &MonotoneArc, opts: &ProbeOptions) -> ResidualReport {
    let n = arc.dimension();
    let mut rep = ResidualReport::new("I' = (N-1) J", arc.index);
    let (pts, excluded) = probes(arc, opts);
    rep.excluded = excluded;
    for (s, h) in pts {
        let Ok(smp) = arc.state_at(s) else { continue };
        let g = |t: f64| {
            arc.state_at(t)
                .ok()
                .map(|p| energy_from(arc.nl, t, p.r, p.j))
        };
        let Some(lhs) = fd(g, s, h) else { continue };
        let rhs = (n - 1.0) * smp.j;
        rep.record(s, lhs, rhs, rhs.abs().max(arc.nl.f(s).abs()));
    }
    rep
}

/// `W' ` by finite differences against its closed form, where `I > 0`.
pub fn check_w_identity(arc: &MonotoneArc, opts: &ProbeOptions) -> ResidualReport {
    let n = arc.dimension();
    let mut rep = ResidualReport::new("W' closed form", arc.index);
    let (pts, excluded) = probes(arc, opts);
    rep.excluded = excluded;
    for (s, h) in pts {
        let Ok(smp) = arc.state_at(s) else { continue };
        if energy_from(arc.nl, s, smp.r, smp.j) <= opts.small {
            rep.excluded += 1;
            continue;
        }
        let Ok(rhs) = w_prime_from(arc.nl, n, s, smp.r, smp.j) else {
            continue;
        };
        let g = |t: f64| {
            let p = arc.state_at(t).ok()?;
            w_from(arc.nl, t, p.r, p.j).ok()
        };
        let Some(lhs) = fd(g, s, h) else {
            rep.excluded += 1;
            continue;
        };
        let rj = smp.r * smp.j;
        let i = energy_from(arc.nl, s, smp.r, smp.j);
        let scale = ((n - 2.0) * rj * rj)
            .abs()
            .max((2.0 * arc.nl.big_f(s)).abs())
            / (rj * (2.0 * i).sqrt()).abs();
        rep.record(s, lhs, rhs, scale);
    }
    rep
}

/// Where `F < 0` and `J > 0`, `H = r^{2(N-1)} I` increases in `s`.
pub fn check_h_monotone(arc: &MonotoneArc, opts: &ProbeOptions) -> SignReport {
    let n = arc.dimension();
    let mut rep = SignReport::new("H' > 0 where F < 0, J > 0", arc.index);
    let (pts, _) = probes(arc, opts);
    for (s, h) in pts {
        let Ok(smp) = arc.state_at(s) else { continue };
        if !(arc.nl.big_f(s) < 0.0 && smp.j > 0.0) {
            continue;
        }
        let g = |t: f64| {
            let p = arc.state_at(t).ok()?;
            Some(super::h_from(arc.nl, n, t, p.r, p.j))
        };
        if let Some(d) = fd(g, s, h) {
            rep.record(s, d > 0.0);
        }
    }
    rep
}

/// Sign relations on decreasing arcs:
/// `sign J' = sign(J - f/N)` and `sign(-r'') = sign(f/(N-1) - J)`.
pub fn check_j_basics(arc: &MonotoneArc, opts: &ProbeOptions) -> (SignReport, SignReport) {
    let n = arc.dimension();
    let mut first = SignReport::new("sign J' = sign(J - f/N)", arc.index);
    let mut second = SignReport::new("sign(-r'') = sign(f/(N-1) - J)", arc.index);
    if arc.direction != Direction::Down {
        return (first, second);
    }
    let (pts, _) = probes(arc, opts);
    for (s, h) in pts {
        let Ok(smp) = arc.state_at(s) else { continue };
        let f = arc.nl.f(s);
        let mag = smp.j.abs().max(f.abs());
        let a = smp.j - f / n;
        if a.abs() > 1e-6 * mag {
            if let Some(d) = fd(|t| j_at(arc, t), s, h) {
                first.record(s, (d > 0.0) == (a > 0.0));
            }
        }
        let b = f / (n - 1.0) - smp.j;
        if b.abs() > 1e-4 * mag {
            let g = |t: f64| arc.r_of_s(t).ok();
            let h2 = (4.0 * h).min(0.2 * (s - arc.s_lo).min(arc.s_hi - s));
            if let Some(d2) = second_fd(g, s, h2) {
                second.record(s, (-d2 > 0.0) == (b > 0.0));
            }
        }
    }
    (first, second)
}

/// `P' = (2N (F/f)' - (N-2)) r^N J` is positive wherever the (H2) margin and
/// `J` are; checked by finite differences of `P`.
pub fn check_p_prime_sign(arc: &MonotoneArc, opts: &ProbeOptions) -> SignReport {
    let n = arc.dimension();
    let mut rep = SignReport::new("P' > 0 where (F/f)' > (N-2)/(2N), J > 0", arc.index);
    let (pts, _) = probes(arc, opts);
    for (s, h) in pts {
        let Ok(smp) = arc.state_at(s) else { continue };
        let margin = f_over_f_prime(arc.nl, s) - (n - 2.0) / (2.0 * n);
        if !(margin > 0.0 && smp.j > 0.0) {
            continue;
        }
        let g = |t: f64| {
            let p = arc.state_at(t).ok()?;
            pohozaev_from(arc.nl, n, t, p.r, p.j).ok()
        };
        if let Some(d) = fd(g, s, h) {
            rep.record(s, d > 0.0);
        }
    }
    rep
}

/// Second-order one-sided difference of `J` at the start of arc 1, paired with
/// the limit value `f'(alpha)/(N+2)`.
pub fn j_prime_at_alpha(arc: &MonotoneArc, h: f64) -> Option<(f64, f64)> {
    if !arc.starts_at_origin() || arc.direction != Direction::Down {
        return None;
    }
    let a = arc.s_hi;
    let j0 = arc.j_of_s(a).ok()?;
    let j1 = j_at(arc, a - h)?;
    let j2 = j_at(arc, a - 2.0 * h)?;
    let fd = (3.0 * j0 - 4.0 * j1 + j2) / (2.0 * h);
    Some((fd, arc.nl.df(a) / (arc.dimension() + 2.0)))
}

#[cfg(test)]
mod tests {
    use super::super::extract_arcs;
    use super::*;
    use crate::nonlinearity::Nonlinearity;
    use crate::shooting::{integrate_alpha, ProblemParams};

    #[test]
    fn j_ode_on_first_arc() {
        let nl = Nonlinearity::power_difference(3.0).unwrap();
        let tr = integrate_alpha(&nl, &ProblemParams::probe(3.0), 2.0).unwrap();
        let set = extract_arcs(&tr, &nl);
        let rep = check_j_ode(&set.arcs[0], &ProbeOptions::in_range(1.6, 1.95));
        assert!(rep.probes > 10);
        assert!(rep.passes(1e-5), "{rep:?}");
        let (fd, exact) = j_prime_at_alpha(&set.arcs[0], 1e-4).unwrap();
        assert!((fd / exact - 1.0).abs() < 1e-3, "{fd} {exact}");
    }

    #[test]
    fn up_arc_identities() {
        let nl = Nonlinearity::power_difference(3.0).unwrap();
        let tr = integrate_alpha(&nl, &ProblemParams::probe(3.0), 1.45).unwrap();
        let set = extract_arcs(&tr, &nl);
        let up = &set.arcs[1];
        assert_eq!(up.direction, Direction::Up);
        for rep in [
            check_j_ode(up, &ProbeOptions::default()),
            check_jr2_ode(up, &ProbeOptions::default()),
            check_i_ode(up, &ProbeOptions::default()),
        ] {
            assert!(rep.probes > 10);
            assert!(rep.passes(1e-5), "{rep:?}");
        }
    }
}
