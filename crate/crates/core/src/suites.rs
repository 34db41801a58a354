//! Property suites run by `verify`: each returns named pass/fail checks on
//! fixed probe trajectories of the default model `s³ - s`, `N = 3`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::experiments::{
    default_fixtures, lemma_epsilon_check, scaling_checks, Check, ExperimentError, ScalingConfig,
};
use crate::functionals::{
    check_h_monotone, check_i_ode, check_j_basics, check_j_ode, check_jr2_ode, check_p_prime_sign,
    check_w_identity, compare_solutions, extract_arcs, j_prime_at_alpha, phase_curve, pohozaev_p,
    self_intersection_check, winding_increments, ProbeOptions,
};
use crate::nonlinearity::Nonlinearity;
use crate::shooting::{integrate_alpha, ProblemParams};

/// Residual limit for the differential identities.
pub const IDENTITY_TOL: f64 = 1e-5;

/// Initial values whose first two arcs serve as identity probes.
pub const PROBE_ALPHAS: [f64; 4] = [1.45, 2.0, 3.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Functionals,
    Comparison,
    LemmaEpsilon,
    Scaling,
    Shape,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Functionals,
        Suite::Comparison,
        Suite::LemmaEpsilon,
        Suite::Scaling,
        Suite::Shape,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Functionals => "functionals",
            Suite::Comparison => "comparison",
            Suite::LemmaEpsilon => "lemma-epsilon",
            Suite::Scaling => "scaling",
            Suite::Shape => "shape",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Suite::ALL.iter().map(|x| x.name()).collect();
                format!("unknown suite '{s}', expected one of {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

pub fn run_suite(suite: Suite) -> Result<SuiteReport, ExperimentError> {
    let checks = match suite {
        Suite::Functionals => {
            let mut c = j_initialization()?;
            c.extend(identity_residuals()?);
            c.extend(sign_properties()?);
            c.extend(pohozaev_sign()?);
            c
        }
        Suite::Comparison => comparison()?,
        Suite::LemmaEpsilon => {
            let nl = default_model();
            lemma_epsilon_check(&nl, &ProblemParams::probe(3.0), &default_fixtures())?.checks
        }
        Suite::Scaling => scaling_checks(&ScalingConfig::default())?.checks,
        Suite::Shape => shape()?,
    };
    Ok(SuiteReport {
        suite,
        passed: checks.iter().all(|c| c.pass),
        checks,
    })
}

fn default_model() -> Nonlinearity {
    Nonlinearity::power_difference(3.0).expect("s^3 - s is a valid model")
}

/// `J` near the origin against `f(α)/N`, and its slope against `f'(α)/(N+2)`.
pub fn j_initialization() -> Result<Vec<Check>, ExperimentError> {
    let nl = default_model();
    let params = ProblemParams::probe(3.0);
    let n = params.dimension;
    let mut out = Vec::new();
    for alpha in [1.6, 2.0, 3.0, 5.0] {
        let tr = integrate_alpha(&nl, &params, alpha)?;
        let r = 1e-3;
        let (_, du) = tr.dense_eval(r)?;
        let want = nl.f(alpha) / n;
        let rel = (-du / r / want - 1.0).abs();
        out.push(Check::new(
            &format!("J(1e-3) = f(alpha)/N at alpha = {alpha}"),
            rel < 1e-5,
            format!("relative error {rel:.3e}"),
        ));
        let set = extract_arcs(&tr, &nl);
        let slope = set
            .arcs
            .first()
            .and_then(|a| j_prime_at_alpha(a, 1e-4 * alpha));
        let (pass, detail) = match slope {
            Some((fd, exact)) => {
                let rel = (fd / exact - 1.0).abs();
                (
                    rel < 1e-3,
                    format!("fd {fd:.9}, f'/(N+2) {exact:.9}, relative {rel:.3e}"),
                )
            }
            None => (false, "no decreasing first arc".to_string()),
        };
        out.push(Check::new(
            &format!("J'(alpha) = f'(alpha)/(N+2) at alpha = {alpha}"),
            pass,
            detail,
        ));
    }
    Ok(out)
}

/// The four differential identities on the first two arcs of each probe. The
/// `W` identity is skipped on a second arc carrying no positive energy.
pub fn identity_residuals() -> Result<Vec<Check>, ExperimentError> {
    let nl = default_model();
    let params = ProblemParams::probe(3.0);
    let opts = ProbeOptions::default();
    let mut out = Vec::new();
    for alpha in PROBE_ALPHAS {
        let tr = integrate_alpha(&nl, &params, alpha)?;
        let set = extract_arcs(&tr, &nl);
        for arc in set.arcs.iter().take(2) {
            for rep in [
                check_j_ode(arc, &opts),
                check_jr2_ode(arc, &opts),
                check_i_ode(arc, &opts),
                check_w_identity(arc, &opts),
            ] {
                // W needs I > 0; trapped arcs after the first have none.
                if rep.identity == "W' closed form" && arc.index > 1 && rep.probes == 0 {
                    continue;
                }
                out.push(Check::new(
                    &format!("{} on arc {} at alpha = {alpha}", rep.identity, arc.index),
                    rep.probes > 0 && rep.passes(IDENTITY_TOL),
                    format!(
                        "max relative residual {:.3e} at s = {:.6} over {} probes ({} excluded)",
                        rep.max_rel_residual, rep.at_s, rep.probes, rep.excluded
                    ),
                ));
            }
        }
    }
    Ok(out)
}

/// Monotonicity of `H`, the sign relations of `J'` and `r''`, and `P' > 0`.
pub fn sign_properties() -> Result<Vec<Check>, ExperimentError> {
    let nl = default_model();
    let params = ProblemParams::probe(3.0);
    let opts = ProbeOptions::default();
    let mut out = Vec::new();
    for alpha in PROBE_ALPHAS {
        let tr = integrate_alpha(&nl, &params, alpha)?;
        let set = extract_arcs(&tr, &nl);
        let Some(arc) = set.arcs.first() else {
            out.push(Check::new(
                &format!("first arc at alpha = {alpha}"),
                false,
                "no arc",
            ));
            continue;
        };
        let (a, b) = check_j_basics(arc, &opts);
        for rep in [
            check_h_monotone(arc, &opts),
            a,
            b,
            check_p_prime_sign(arc, &opts),
        ] {
            out.push(Check::new(
                &format!("{} on arc 1 at alpha = {alpha}", rep.property),
                rep.passes(),
                format!(
                    "{} checked, {} violations, first at {:?}",
                    rep.checked, rep.violations, rep.first_violation
                ),
            ));
        }
    }
    Ok(out)
}

/// `P < 0` below the top of the first arc and `P(α) = 0`.
pub fn pohozaev_sign() -> Result<Vec<Check>, ExperimentError> {
    let nl = default_model();
    let params = ProblemParams::probe(3.0);
    let mut out = Vec::new();
    for alpha in [2.0, 4.0, 8.0] {
        let tr = integrate_alpha(&nl, &params, alpha)?;
        let set = extract_arcs(&tr, &nl);
        let Some(arc) = set.arcs.first() else {
            out.push(Check::new(
                &format!("P on arc 1 at alpha = {alpha}"),
                false,
                "no arc",
            ));
            continue;
        };
        let (lo, hi) = (nl.beta + 0.01, alpha - 0.01);
        const SAMPLES: usize = 200;
        let mut worst = f64::NEG_INFINITY;
        for i in 0..=SAMPLES {
            let s = lo + (hi - lo) * i as f64 / SAMPLES as f64;
            worst = worst.max(pohozaev_p(arc, s).unwrap_or(f64::INFINITY));
        }
        out.push(Check::new(
            &format!("P < 0 on [beta+0.01, alpha-0.01] at alpha = {alpha}"),
            worst < 0.0,
            format!("max P {worst:.6e}"),
        ));
        let top = pohozaev_p(arc, alpha).unwrap_or(f64::NAN);
        out.push(Check::new(
            &format!("P(alpha) = 0 at alpha = {alpha}"),
            top.abs() < 1e-10,
            format!("P(alpha) = {top:e}"),
        ));
    }
    Ok(out)
}

/// Pairs of initial values in the first-crossing region of the default model.
pub fn comparison_pairs() -> Vec<(f64, f64)> {
    let grid: Vec<f64> = (0..=20).map(|i| 4.5 + 7.5 * i as f64 / 20.0).collect();
    grid.windows(2).map(|w| (w[1], w[0])).collect()
}

/// `J_u > J_v` down to `s = 0` whenever `α_u > α_v`.
pub fn comparison() -> Result<Vec<Check>, ExperimentError> {
    let nl = default_model();
    let params = ProblemParams::probe(3.0);
    let mut out = Vec::new();
    for (au, av) in comparison_pairs() {
        let u = integrate_alpha(&nl, &params, au)?;
        let v = integrate_alpha(&nl, &params, av)?;
        let rep = compare_solutions(&nl, &u, &v, None, 400)?;
        out.push(Check::new(
            &format!("J_u > J_v for alpha_u = {au}, alpha_v = {av}"),
            rep.ordered() && rep.s_lo <= 1e-9,
            format!(
                "{:?} on [{:.3e}, {:.6}], min gap {:.3e}",
                rep.status, rep.s_lo, rep.s_hi, rep.min_gap
            ),
        ));
    }
    Ok(out)
}

/// No self-intersections and counterclockwise rotation of the `(u, J)` curve.
pub fn shape() -> Result<Vec<Check>, ExperimentError> {
    let nl = default_model();
    let params = ProblemParams::probe(3.0);
    let mut out = Vec::new();
    for alpha in [4.33, 1.45] {
        let tr = integrate_alpha(&nl, &params, alpha)?;
        let curve = phase_curve(&tr, &nl, 4);
        let rep = self_intersection_check(&curve);
        out.push(Check::new(
            &format!("phase curve without self-intersections at alpha = {alpha}"),
            rep.crossings == 0,
            format!("{} segments, {} crossings", rep.segments, rep.crossings),
        ));
        let inc = winding_increments(&tr, &curve);
        let pass = !inc.is_empty() && inc.iter().all(|&d| d > 0.0);
        out.push(Check::new(
            &format!("positive winding increments at alpha = {alpha}"),
            pass,
            format!(
                "{} arcs, min increment {:.3e}",
                inc.len(),
                inc.iter().cloned().fold(f64::INFINITY, f64::min)
            ),
        ));
    }
    Ok(out)
}
