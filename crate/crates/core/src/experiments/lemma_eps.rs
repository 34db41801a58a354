//! Bounds on `r` and `r|v'|` while a decreasing solution crosses a band
//! `[ᾱ, ᾱ + δ]` on which `f > 0`.

use serde::{Deserialize, Serialize};

use super::{first_arc_state, Check, ExperimentError};
use crate::nonlinearity::Nonlinearity;
use crate::roots::bisect;
use crate::shooting::{integrate, InitialCondition, ProblemParams};

/// Solution entering the band at `r_delta` with `v = alpha_bar + delta`, `v' = du_delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonFixture {
    pub alpha_bar: f64,
    pub delta: f64,
    pub r_delta: f64,
    pub du_delta: f64,
    pub zeta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonRow {
    pub fixture: EpsilonFixture,
    pub b: f64,
    /// `ζ/(ζ-(N-2)δ)` raised to `1/(N-2)`.
    pub b_closed: f64,
    pub r_bar: f64,
    pub rdu_bar: f64,
    pub g_plus: f64,
    pub lower: f64,
    pub upper: f64,
    pub radius_bound: bool,
    pub lower_bound: bool,
    pub upper_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonReport {
    pub rows: Vec<EpsilonRow>,
    pub checks: Vec<Check>,
}

/// `B` solving `δ B^{N-2}/(B^{N-2}-1) = ζ/(N-2)` in closed form.
pub fn b_closed_form(n: f64, delta: f64, zeta: f64) -> f64 {
    let y = zeta / (zeta - (n - 2.0) * delta);
    y.powf(1.0 / (n - 2.0))
}

/// `B` from the defining relation by bisection on `(1, ∞)`.
pub fn b_from_relation(n: f64, delta: f64, zeta: f64) -> f64 {
    let target = zeta / (n - 2.0);
    let g = |b: f64| {
        let y = b.powf(n - 2.0);
        delta * y / (y - 1.0) - target
    };
    // g decreases from +∞ at B = 1 towards δ - ζ/(N-2) < 0.
    let mut hi = 2.0;
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    bisect(g, 1.0 + f64::EPSILON, hi, 0.0)
}

/// Fixtures for the default model `s³ - s`, `N = 3`, including a thin band.
pub fn default_fixtures() -> Vec<EpsilonFixture> {
    vec![
        EpsilonFixture {
            alpha_bar: 2.0,
            delta: 0.1,
            r_delta: 0.5,
            du_delta: -2.0,
            zeta: 0.4,
        },
        EpsilonFixture {
            alpha_bar: 3.0,
            delta: 0.5,
            r_delta: 0.2,
            du_delta: -10.0,
            zeta: 1.5,
        },
        EpsilonFixture {
            alpha_bar: 1.5,
            delta: 0.25,
            r_delta: 1.0,
            du_delta: -0.8,
            zeta: 0.6,
        },
        EpsilonFixture {
            alpha_bar: 2.0,
            delta: 1e-4,
            r_delta: 0.5,
            du_delta: -2.0,
            zeta: 0.4,
        },
    ]
}

fn row(
    nl: &Nonlinearity,
    params: &ProblemParams,
    fx: &EpsilonFixture,
) -> Result<EpsilonRow, ExperimentError> {
    let n = params.dimension;
    let bad = |m: String| Err(ExperimentError::FixtureInvalid(m));
    let finite = [fx.alpha_bar, fx.delta, fx.r_delta, fx.du_delta, fx.zeta]
        .iter()
        .all(|v| v.is_finite());
    if !finite || fx.delta <= 0.0 || fx.r_delta <= 0.0 || fx.du_delta >= 0.0 || fx.alpha_bar <= 0.0
    {
        return bad(format!(
            "need finite delta, r_delta > 0, du_delta < 0, alpha_bar > 0: {fx:?}"
        ));
    }
    if fx.delta >= fx.zeta / (n - 2.0) {
        return bad(format!(
            "delta = {} must be below zeta/(N-2) = {}",
            fx.delta,
            fx.zeta / (n - 2.0)
        ));
    }
    let rdu0 = fx.r_delta * fx.du_delta.abs();
    if fx.zeta >= rdu0 {
        return bad(format!(
            "zeta = {} must be below r_delta|v'(r_delta)| = {rdu0}",
            fx.zeta
        ));
    }
    const BAND_SAMPLES: usize = 1000;
    let g_plus = (0..=BAND_SAMPLES)
        .map(|i| nl.f(fx.alpha_bar + fx.delta * i as f64 / BAND_SAMPLES as f64))
        .try_fold(0.0f64, |m, g| if g > 0.0 { Ok(m.max(g)) } else { Err(g) });
    let g_plus = match g_plus {
        Ok(g) => g,
        Err(g) => return bad(format!("f = {g} is not positive on the band")),
    };

    let ic = InitialCondition::interior(fx.r_delta, fx.alpha_bar + fx.delta, fx.du_delta);
    let p = ProblemParams {
        stop_on_trap: false,
        r_max: params.r_max.max(fx.r_delta * 10.0),
        ..*params
    };
    let traj = integrate(nl, &p, &ic)?;
    let Some((r_bar, du_bar)) = first_arc_state(&traj, fx.alpha_bar) else {
        return bad("solution never reaches alpha_bar while decreasing".into());
    };
    let b = b_from_relation(n, fx.delta, fx.zeta);
    let b_closed = b_closed_form(n, fx.delta, fx.zeta);
    let rdu_bar = r_bar * du_bar.abs();
    let lower = fx.zeta / b.powf(n - 2.0);
    let upper = rdu0 + (b.powf(n) - 1.0) / n * g_plus * fx.r_delta.powf(n);
    Ok(EpsilonRow {
        fixture: *fx,
        b,
        b_closed,
        r_bar,
        rdu_bar,
        g_plus,
        lower,
        upper,
        radius_bound: r_bar < b * fx.r_delta,
        lower_bound: lower <= rdu_bar,
        upper_bound: rdu_bar <= upper,
    })
}

/// Integrates each fixture across its band and checks the three bounds.
pub fn lemma_epsilon_check(
    nl: &Nonlinearity,
    params: &ProblemParams,
    fixtures: &[EpsilonFixture],
) -> Result<EpsilonReport, ExperimentError> {
    let rows = fixtures
        .iter()
        .map(|fx| row(nl, params, fx))
        .collect::<Result<Vec<_>, _>>()?;
    let mut checks = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        checks.push(Check::new(
            &format!("fixture {i}: r_bar < B r_delta"),
            r.radius_bound,
            format!(
                "r_bar = {}, B r_delta = {}",
                r.r_bar,
                r.b * r.fixture.r_delta
            ),
        ));
        checks.push(Check::new(
            &format!("fixture {i}: lower bound"),
            r.lower_bound,
            format!("zeta/B^(N-2) = {} <= r|v'| = {}", r.lower, r.rdu_bar),
        ));
        checks.push(Check::new(
            &format!("fixture {i}: upper bound"),
            r.upper_bound,
            format!("r|v'| = {} <= {}", r.rdu_bar, r.upper),
        ));
        let gap = (r.b - r.b_closed).abs();
        checks.push(Check::new(
            &format!("fixture {i}: B relation vs closed form"),
            gap <= 1e-12 * r.b_closed.max(1.0),
            format!("|B - B_closed| = {gap:e}"),
        ));
    }
    Ok(EpsilonReport { rows, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_for_three_dimensions() {
        assert!((b_closed_form(3.0, 0.1, 0.4) - 4.0 / 3.0).abs() < 1e-15);
        assert!((b_from_relation(3.0, 0.1, 0.4) - 4.0 / 3.0).abs() < 1e-12);
        assert!((b_from_relation(4.5, 0.2, 1.0) - b_closed_form(4.5, 0.2, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_fixtures() {
        let nl = Nonlinearity::power_difference(3.0).unwrap();
        let p = ProblemParams::probe(3.0);
        let mut fx = default_fixtures()[0];
        fx.delta = 0.5;
        assert!(matches!(
            lemma_epsilon_check(&nl, &p, &[fx]),
            Err(ExperimentError::FixtureInvalid(_))
        ));
        let mut fx = default_fixtures()[0];
        fx.zeta = 1.2;
        assert!(lemma_epsilon_check(&nl, &p, &[fx]).is_err());
        // Band through the zero of f.
        let mut fx = default_fixtures()[0];
        fx.alpha_bar = 0.95;
        assert!(lemma_epsilon_check(&nl, &p, &[fx]).is_err());
    }
}
