//! Advisory checks of the structural hypotheses on `f`.
//!
//! Nothing here blocks a computation; each clause is evaluated on a sample grid and
//! reported with a witness.

use serde::Serialize;

use crate::nonlinearity::Nonlinearity;

/// Uniform sample grid on `(b, s_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleGrid {
    pub s_max: f64,
    pub n: usize,
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid {
            s_max: 10.0,
            n: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseResult {
    pub pass: bool,
    pub witness: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H2Result {
    pub pass: bool,
    /// Smallest value of `(F/f)' - (N-2)/(2N)` over grid points above `beta`.
    pub worst_margin: f64,
    pub at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H3Result {
    /// `s f'/f` decreasing on the grid.
    pub monotone_pass: bool,
    pub monotone_witness: String,
    /// `(s f'/f)(beta)` and whether it stays below `N/(N-2)`.
    pub value_at_beta: f64,
    pub value_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub h1: ClauseResult,
    pub h2: H2Result,
    pub h3: H3Result,
    pub notes: Vec<String>,
}

/// `(F/f)'` by the quotient rule.
pub fn f_over_f_prime(nl: &Nonlinearity, s: f64) -> f64 {
    let f = nl.f(s);
    1.0 - nl.big_f(s) * nl.df(s) / (f * f)
}

/// `s f'(s) / f(s)`.
pub fn elasticity(nl: &Nonlinearity, s: f64) -> f64 {
    s * nl.df(s) / nl.f(s)
}

fn grid_points(nl: &Nonlinearity, grid: SampleGrid) -> Vec<f64> {
    let lo = nl.b;
    let n = grid.n.max(2);
    (1..=n)
        .map(|i| lo + (grid.s_max - lo) * i as f64 / n as f64)
        .filter(|s| {
            nl.kinks.iter().all(|k| (s - k).abs() > 1e-9 * (1.0 + k)) && nl.f(*s).abs() > 1e-12
        })
        .collect()
}

pub fn check_hypotheses(nl: &Nonlinearity, dimension: f64, grid: SampleGrid) -> HypothesisReport {
    let pts = grid_points(nl, grid);
    let mut notes = Vec::new();
    if pts.is_empty() {
        notes.push("sample grid is empty".to_string());
    }

    let h1 = check_h1(nl, &pts);

    let threshold = (dimension - 2.0) / (2.0 * dimension);
    let mut worst = f64::INFINITY;
    let mut at = f64::NAN;
    for &s in pts.iter().filter(|&&s| s > nl.beta) {
        let m = f_over_f_prime(nl, s) - threshold;
        if m < worst {
            worst = m;
            at = s;
        }
    }
    let h2 = H2Result {
        pass: worst > 0.0,
        worst_margin: worst,
        at,
    };

    let mut monotone_pass = true;
    let mut monotone_witness = "s f'/f non-increasing on the grid".to_string();
    for w in pts.windows(2) {
        let (e0, e1) = (elasticity(nl, w[0]), elasticity(nl, w[1]));
        if e1 > e0 + 1e-12 * e0.abs().max(1.0) {
            monotone_pass = false;
            monotone_witness = format!("s f'/f increases between {} and {}", w[0], w[1]);
            break;
        }
    }
    let value_at_beta = if nl.f(nl.beta) != 0.0 {
        elasticity(nl, nl.beta)
    } else {
        notes.push("f(beta) = 0, elasticity at beta undefined".to_string());
        f64::NAN
    };
    let h3 = H3Result {
        monotone_pass,
        monotone_witness,
        value_at_beta,
        value_pass: value_at_beta < dimension / (dimension - 2.0),
    };

    HypothesisReport { h1, h2, h3, notes }
}

fn check_h1(nl: &Nonlinearity, pts: &[f64]) -> ClauseResult {
    let fail = |w: String| ClauseResult {
        pass: false,
        witness: w,
    };
    if nl.f(0.0) != 0.0 {
        return fail("f(0) != 0".into());
    }
    if nl.b <= 0.0 {
        return fail("f is not negative on any (0, eps): b = 0".into());
    }
    for i in 1..200 {
        let s = nl.b * i as f64 / 200.0;
        if nl.f(s) > 0.0 {
            return fail(format!("f({s}) > 0 below b"));
        }
    }
    if let Some(s) = pts.iter().find(|&&s| s > nl.b && nl.f(s) <= 0.0) {
        return fail(format!("f({s}) <= 0 above b"));
    }
    if nl.big_f(nl.beta).abs() > 1e-9 {
        return fail(format!("|F(beta)| = {}", nl.big_f(nl.beta).abs()));
    }
    ClauseResult {
        pass: true,
        witness: format!("b = {}, beta = {}", nl.b, nl.beta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_power_h2_threshold() {
        // (F/f)' = 1/(p+1) for s^p, so (H2) holds iff p < (N+2)/(N-2).
        for (p, n, expect) in [
            (3.0, 3.0, true),
            (4.9, 3.0, true),
            (5.5, 3.0, false),
            (7.0, 3.0, false),
            (2.5, 4.0, true),
            (3.5, 4.0, false),
        ] {
            let nl = Nonlinearity::pure_power(p).unwrap();
            let rep = check_hypotheses(&nl, n, SampleGrid { s_max: 5.0, n: 100 });
            assert_eq!(rep.h2.pass, expect, "p={p} N={n}");
            let margin = 1.0 / (p + 1.0) - (n - 2.0) / (2.0 * n);
            assert!((rep.h2.worst_margin - margin).abs() < 1e-12);
            assert!(!rep.h1.pass);
        }
    }

    #[test]
    fn power_difference_h3_value_clause_fails() {
        let nl = Nonlinearity::power_difference(3.0).unwrap();
        let rep = check_hypotheses(
            &nl,
            3.0,
            SampleGrid {
                s_max: 10.0,
                n: 1000,
            },
        );
        assert!(rep.h1.pass, "{}", rep.h1.witness);
        assert!((rep.h3.value_at_beta - 5.0).abs() < 1e-9);
        assert!(!rep.h3.value_pass);
        assert!(rep.h3.monotone_pass);
        // Subcritical: (H2) holds on [beta, 10].
        assert!(
            rep.h2.pass,
            "margin {} at {}",
            rep.h2.worst_margin, rep.h2.at
        );
    }

    #[test]
    fn deterministic() {
        let nl = Nonlinearity::power_difference(3.0).unwrap();
        let a = check_hypotheses(&nl, 3.0, SampleGrid::default());
        let b = check_hypotheses(&nl, 3.0, SampleGrid::default());
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
