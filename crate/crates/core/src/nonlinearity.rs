//! Nonlinearities `f` for `Δu + f(u) = 0`, their primitives `F` and derivatives.
//!
//! Every model is defined on `s ≥ 0` and extended to the whole line as an odd
//! function, so `F` is even. The two piecewise constructions glue an inner
//! nonlinearity to a steep outer branch through a linear bridge of width `eps`;
//! the gluing points are recorded as kinks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinearityError {
    #[error("invalid breakpoint: {0}")]
    InvalidBreakpoint(String),
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("primitive F never becomes positive below {0}")]
    NoPositivePart(f64),
}

/// Closed-form model of the nonlinearity restricted to `s ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NonlinearityModel {
    /// `f(s) = s^p - s`.
    #[serde(rename = "power-diff")]
    PowerDifference { p: f64 },
    /// `f(s) = s^p`.
    PurePower { p: f64 },
    /// `f(s) = (s + a)^p`.
    ShiftedPower { p: f64, a: f64 },
    /// `inner` below `alpha1`, a line on `[alpha1, alpha1 + eps]`,
    /// `lambda² · outer(s / mu)` above.
    PiecewiseMu {
        inner: Box<NonlinearityModel>,
        outer: Box<NonlinearityModel>,
        alpha1: f64,
        eps: f64,
        lambda: f64,
        mu: f64,
    },
    /// `inner` below `alpha1`, a line on `[alpha1, alpha1 + eps]`,
    /// `lambda² · (s + a)^p` above.
    PiecewiseA {
        inner: Box<NonlinearityModel>,
        alpha1: f64,
        eps: f64,
        lambda: f64,
        a: f64,
        p: f64,
    },
}

/// Which one-sided derivative to take at a kink.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

pub(crate) fn pow(s: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() <= 64.0 {
        s.powi(p as i32)
    } else {
        s.powf(p)
    }
}

fn finite_positive(name: &str, v: f64) -> Result<(), NonlinearityError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(NonlinearityError::InvalidParameter(format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

fn exponent(p: f64) -> Result<(), NonlinearityError> {
    if p.is_finite() && p > 1.0 && p <= 1.0e3 {
        Ok(())
    } else {
        Err(NonlinearityError::InvalidParameter(format!(
            "exponent must lie in (1, 1000], got {p}"
        )))
    }
}

impl NonlinearityModel {
    pub fn is_piecewise(&self) -> bool {
        matches!(self, Self::PiecewiseMu { .. } | Self::PiecewiseA { .. })
    }

    fn validate(&self) -> Result<(), NonlinearityError> {
        match self {
            Self::PowerDifference { p } | Self::PurePower { p } => exponent(*p),
            Self::ShiftedPower { p, a } => {
                exponent(*p)?;
                if a.is_finite() && *a >= 0.0 {
                    Ok(())
                } else {
                    Err(NonlinearityError::InvalidParameter(format!(
                        "shift must be finite and >= 0, got {a}"
                    )))
                }
            }
            Self::PiecewiseMu {
                inner,
                outer,
                alpha1,
                eps,
                lambda,
                mu,
            } => {
                if inner.is_piecewise() || outer.is_piecewise() {
                    return Err(NonlinearityError::InvalidParameter(
                        "piecewise models cannot be nested".into(),
                    ));
                }
                inner.validate()?;
                outer.validate()?;
                breakpoints(*alpha1, *eps)?;
                finite_positive("lambda", *lambda)?;
                finite_positive("mu", *mu)
            }
            Self::PiecewiseA {
                inner,
                alpha1,
                eps,
                lambda,
                a,
                p,
            } => {
                if inner.is_piecewise() {
                    return Err(NonlinearityError::InvalidParameter(
                        "piecewise models cannot be nested".into(),
                    ));
                }
                inner.validate()?;
                breakpoints(*alpha1, *eps)?;
                finite_positive("lambda", *lambda)?;
                Self::ShiftedPower { p: *p, a: *a }.validate()
            }
        }
    }

    /// `f(s)` for `s ≥ 0`.
    fn f_pos(&self, s: f64) -> f64 {
        match self {
            Self::PowerDifference { p } => pow(s, *p) - s,
            Self::PurePower { p } => pow(s, *p),
            Self::ShiftedPower { p, a } => pow(s + a, *p),
            Self::PiecewiseMu { .. } | Self::PiecewiseA { .. } => {
                let g = self.glue();
                if s <= g.alpha1 {
                    g.inner.f_pos(s)
                } else if s < g.right {
                    g.bridge(s)
                } else {
                    self.outer_f(s)
                }
            }
        }
    }

    fn df_pos(&self, s: f64, side: Side) -> f64 {
        match self {
            Self::PowerDifference { p } => p * pow(s, p - 1.0) - 1.0,
            Self::PurePower { p } => p * pow(s, p - 1.0),
            Self::ShiftedPower { p, a } => p * pow(s + a, p - 1.0),
            Self::PiecewiseMu { .. } | Self::PiecewiseA { .. } => {
                let g = self.glue();
                let on_inner = s < g.alpha1 || (s == g.alpha1 && side == Side::Left);
                let on_outer = s > g.right || (s == g.right && side == Side::Right);
                if on_inner {
                    g.inner.df_pos(s, side)
                } else if on_outer {
                    self.outer_df(s)
                } else {
                    g.slope()
                }
            }
        }
    }

    fn big_f_pos(&self, s: f64) -> f64 {
        match self {
            Self::PowerDifference { p } => pow(s, p + 1.0) / (p + 1.0) - 0.5 * s * s,
            Self::PurePower { p } => pow(s, p + 1.0) / (p + 1.0),
            Self::ShiftedPower { p, a } => (pow(s + a, p + 1.0) - pow(*a, p + 1.0)) / (p + 1.0),
            Self::PiecewiseMu { .. } | Self::PiecewiseA { .. } => {
                let g = self.glue();
                let base = g.inner.big_f_pos(s.min(g.alpha1));
                if s <= g.alpha1 {
                    return base;
                }
                let t = s.min(g.right) - g.alpha1;
                let bridge = g.left_value * t + 0.5 * g.slope() * t * t;
                if s < g.right {
                    return base + bridge;
                }
                base + bridge + self.outer_big_f(s) - self.outer_big_f(g.right)
            }
        }
    }

    fn outer_f(&self, s: f64) -> f64 {
        match self {
            Self::PiecewiseMu {
                outer, lambda, mu, ..
            } => lambda * lambda * outer.f_pos(s / mu),
            Self::PiecewiseA { lambda, a, p, .. } => lambda * lambda * pow(s + a, *p),
            _ => unreachable!("outer branch of a smooth model"),
        }
    }

    fn outer_df(&self, s: f64) -> f64 {
        match self {
            Self::PiecewiseMu {
                outer, lambda, mu, ..
            } => lambda * lambda / mu * outer.df_pos(s / mu, Side::Right),
            Self::PiecewiseA { lambda, a, p, .. } => lambda * lambda * p * pow(s + a, p - 1.0),
            _ => unreachable!("outer branch of a smooth model"),
        }
    }

    fn outer_big_f(&self, s: f64) -> f64 {
        match self {
            Self::PiecewiseMu {
                outer, lambda, mu, ..
            } => lambda * lambda * mu * outer.big_f_pos(s / mu),
            Self::PiecewiseA { lambda, a, p, .. } => {
                lambda * lambda * pow(s + a, p + 1.0) / (p + 1.0)
            }
            _ => unreachable!("outer branch of a smooth model"),
        }
    }

    fn glue(&self) -> Glue<'_> {
        match self {
            Self::PiecewiseMu {
                inner, alpha1, eps, ..
            }
            | Self::PiecewiseA {
                inner, alpha1, eps, ..
            } => {
                let right = alpha1 + eps;
                Glue {
                    inner,
                    alpha1: *alpha1,
                    right,
                    left_value: inner.f_pos(*alpha1),
                    right_value: self.outer_f(right),
                }
            }
            _ => unreachable!("glue of a smooth model"),
        }
    }

    /// First positive zero of `f` (the constant `b`).
    fn first_zero(&self) -> f64 {
        match self {
            Self::PowerDifference { .. } => 1.0,
            Self::PurePower { .. } | Self::ShiftedPower { .. } => 0.0,
            Self::PiecewiseMu { inner, .. } | Self::PiecewiseA { inner, .. } => inner.first_zero(),
        }
    }
}

struct Glue<'a> {
    inner: &'a NonlinearityModel,
    alpha1: f64,
    right: f64,
    left_value: f64,
    right_value: f64,
}

impl Glue<'_> {
    fn slope(&self) -> f64 {
        (self.right_value - self.left_value) / (self.right - self.alpha1)
    }

    fn bridge(&self, s: f64) -> f64 {
        let t = (s - self.alpha1) / (self.right - self.alpha1);
        self.left_value + (self.right_value - self.left_value) * t
    }
}

fn breakpoints(alpha1: f64, eps: f64) -> Result<(), NonlinearityError> {
    if !(alpha1.is_finite() && alpha1 > 0.0) {
        return Err(NonlinearityError::InvalidBreakpoint(format!(
            "alpha1 must be > 0, got {alpha1}"
        )));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(NonlinearityError::InvalidBreakpoint(format!(
            "eps must be > 0, got {eps}"
        )));
    }
    Ok(())
}

/// A validated nonlinearity together with its structural constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Nonlinearity {
    pub model: NonlinearityModel,
    /// First positive zero of `f`.
    pub b: f64,
    /// Positive zero of `F`, `beta ≥ b`.
    pub beta: f64,
    /// Points where `f` is not differentiable (sorted, positive).
    pub kinks: Vec<f64>,
}

/// Bound on the bracketing search for `beta`.
const BETA_SEARCH_LIMIT: f64 = 1.0e12;

impl Nonlinearity {
    pub fn new(model: NonlinearityModel) -> Result<Self, NonlinearityError> {
        model.validate()?;
        let kinks = match &model {
            NonlinearityModel::PiecewiseMu { alpha1, eps, .. }
            | NonlinearityModel::PiecewiseA { alpha1, eps, .. } => vec![*alpha1, alpha1 + eps],
            _ => Vec::new(),
        };
        if let NonlinearityModel::PiecewiseMu { inner, alpha1, .. }
        | NonlinearityModel::PiecewiseA { inner, alpha1, .. } = &model
        {
            let inner_beta = Nonlinearity::new((**inner).clone())?.beta;
            if *alpha1 <= inner_beta {
                return Err(NonlinearityError::InvalidBreakpoint(format!(
                    "alpha1 = {alpha1} must exceed beta of the inner model ({inner_beta})"
                )));
            }
        }
        let b = model.first_zero();
        let mut nl = Nonlinearity {
            model,
            b,
            beta: b,
            kinks,
        };
        nl.beta = find_beta(&nl)?;
        Ok(nl)
    }

    pub fn power_difference(p: f64) -> Result<Self, NonlinearityError> {
        Self::new(NonlinearityModel::PowerDifference { p })
    }

    pub fn pure_power(p: f64) -> Result<Self, NonlinearityError> {
        Self::new(NonlinearityModel::PurePower { p })
    }

    /// `f(s)`, odd in `s`.
    pub fn f(&self, s: f64) -> f64 {
        if s < 0.0 {
            -self.model.f_pos(-s)
        } else if s == 0.0 {
            // (H1) forces f(0) = 0 even for the shifted outer branch.
            0.0
        } else {
            self.model.f_pos(s)
        }
    }

    /// `f'(s)` using the left branch at the lower kink and the right branch at the
    /// upper kink, the same convention as [`Nonlinearity::f`].
    pub fn df(&self, s: f64) -> f64 {
        let a = s.abs();
        let side = match self.kinks.as_slice() {
            [lo, _] if a == *lo => Side::Left,
            _ => Side::Right,
        };
        self.df_side(s, side)
    }

    /// One-sided derivative; `side` refers to `|s|`.
    pub fn df_side(&self, s: f64, side: Side) -> f64 {
        self.model.df_pos(s.abs(), side)
    }

    /// `F(s) = ∫₀ˢ f`, even in `s`.
    pub fn big_f(&self, s: f64) -> f64 {
        self.model.big_f_pos(s.abs())
    }

    /// Kinks mirrored onto both half-lines, sorted.
    pub fn signed_kinks(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.kinks.iter().flat_map(|&k| [-k, k]).collect();
        out.sort_by(f64::total_cmp);
        out
    }

    /// Stable digest of the model, used for trajectory provenance.
    pub fn model_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(&self.model).unwrap_or_default();
        let digest = Sha256::digest(&json);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Locates `beta`: `F(beta) = 0`, `F < 0` on `(0, beta)`.
///
/// Brackets on `[b, s_hi]` with `s_hi` doubling until `F(s_hi) > 0`, then bisects to
/// the resolution of `f64`.
pub fn find_beta(nl: &Nonlinearity) -> Result<f64, NonlinearityError> {
    let b = nl.b;
    let big_f = |s: f64| nl.big_f(s);
    if big_f(b) >= 0.0 {
        // Degenerate case b = 0 with F ≥ 0: beta coincides with b.
        return Ok(b);
    }
    let mut lo = b;
    let mut hi = if b > 0.0 { 2.0 * b } else { 1.0 };
    while big_f(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > BETA_SEARCH_LIMIT {
            return Err(NonlinearityError::NoPositivePart(BETA_SEARCH_LIMIT));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if big_f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Return whichever endpoint has the smaller residual.
    Ok(if big_f(lo).abs() <= big_f(hi).abs() {
        lo
    } else {
        hi
    })
}

/// Assembles the piecewise nonlinearity with outer branch `lam² f2(s / mu)`.
pub fn build_fmu(
    f1: NonlinearityModel,
    f2: NonlinearityModel,
    alpha1: f64,
    eps: f64,
    lam: f64,
    mu: f64,
) -> Result<Nonlinearity, NonlinearityError> {
    breakpoints(alpha1, eps)?;
    Nonlinearity::new(NonlinearityModel::PiecewiseMu {
        inner: Box::new(f1),
        outer: Box::new(f2),
        alpha1,
        eps,
        lambda: lam,
        mu,
    })
}

/// Assembles the piecewise nonlinearity with outer branch `lam² (s + a)^p`.
pub fn build_fa(
    f1: NonlinearityModel,
    alpha1: f64,
    eps: f64,
    lam: f64,
    a: f64,
    p: f64,
) -> Result<Nonlinearity, NonlinearityError> {
    breakpoints(alpha1, eps)?;
    Nonlinearity::new(NonlinearityModel::PiecewiseA {
        inner: Box::new(f1),
        alpha1,
        eps,
        lambda: lam,
        a,
        p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pd3() -> Nonlinearity {
        Nonlinearity::power_difference(3.0).unwrap()
    }

    fn fmu_fixture() -> Nonlinearity {
        build_fmu(
            NonlinearityModel::PowerDifference { p: 3.0 },
            NonlinearityModel::PurePower { p: 3.0 },
            2.0,
            0.1,
            10.0,
            2.0,
        )
        .unwrap()
    }

    fn fa_fixture() -> Nonlinearity {
        build_fa(
            NonlinearityModel::PowerDifference { p: 3.0 },
            2.0,
            0.1,
            3.0,
            0.5,
            7.0,
        )
        .unwrap()
    }

    #[test]
    fn eval_examples() {
        let nl = pd3();
        assert_eq!(nl.f(2.0), 6.0);
        assert_eq!(nl.f(0.0), 0.0);
        assert_eq!(nl.f(-2.0), -6.0);
        assert_eq!(nl.big_f(2.0), 2.0);
        assert_eq!(nl.big_f(0.0), 0.0);
        let pure = Nonlinearity::pure_power(3.0).unwrap();
        assert_eq!(pure.big_f(1.0), 0.25);
        assert_eq!(fmu_fixture().f(0.0), 0.0);
        assert_eq!(fa_fixture().f(0.0), 0.0);
    }

    #[test]
    fn beta_examples() {
        assert!((pd3().beta - 2f64.sqrt()).abs() < 1e-12);
        assert!((Nonlinearity::power_difference(2.0).unwrap().beta - 1.5).abs() < 1e-12);
        assert_eq!(Nonlinearity::pure_power(5.0).unwrap().beta, 0.0);
        assert_eq!(Nonlinearity::pure_power(5.0).unwrap().b, 0.0);
    }

    #[test]
    fn beta_matches_closed_form() {
        for p in [2.0, 3.0, 4.0, 4.9] {
            let nl = Nonlinearity::power_difference(p).unwrap();
            let closed = ((p + 1.0) / 2.0).powf(1.0 / (p - 1.0));
            assert!(
                (nl.beta - closed).abs() < 1e-10,
                "p={p}: {} vs {closed}",
                nl.beta
            );
            assert!(nl.big_f(nl.beta).abs() < 1e-12);
        }
    }

    #[test]
    fn fmu_examples() {
        let nl = fmu_fixture();
        assert!((nl.f(2.1) - 115.7625).abs() < 1e-9);
        assert_eq!(nl.f(2.0), 6.0);
        assert_eq!(nl.kinks, vec![2.0, 2.1]);
        // b and beta come from the inner model.
        assert_eq!(nl.b, 1.0);
        assert!((nl.beta - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fa_examples() {
        let nl = fa_fixture();
        // 9 · 2.6^7, evaluated by hand: 2.6^7 = 803.1810176.
        assert!((nl.f(2.1) - 7228.629_158_4).abs() < 1e-8);
        assert_eq!(nl.f(2.0), 6.0);
        let unit = build_fa(
            NonlinearityModel::PowerDifference { p: 3.0 },
            0.2,
            0.1,
            1.0,
            0.0,
            7.0,
        );
        // alpha1 below beta of the inner model is rejected.
        assert!(matches!(unit, Err(NonlinearityError::InvalidBreakpoint(_))));
        let unit = build_fa(
            NonlinearityModel::PowerDifference { p: 3.0 },
            0.5 + 2f64.sqrt(),
            0.1,
            1.0,
            0.0,
            7.0,
        )
        .unwrap();
        assert_eq!(unit.model.outer_f(1.0), 1.0);
    }

    #[test]
    fn breakpoint_errors() {
        let f1 = NonlinearityModel::PowerDifference { p: 3.0 };
        let f2 = NonlinearityModel::PurePower { p: 3.0 };
        for (a, e) in [(0.0, 0.1), (-1.0, 0.1), (2.0, 0.0), (2.0, -0.5)] {
            assert!(matches!(
                build_fmu(f1.clone(), f2.clone(), a, e, 1.0, 1.0),
                Err(NonlinearityError::InvalidBreakpoint(_))
            ));
            assert!(matches!(
                build_fa(f1.clone(), a, e, 1.0, 0.0, 7.0),
                Err(NonlinearityError::InvalidBreakpoint(_))
            ));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Nonlinearity::power_difference(1.0).is_err());
        assert!(Nonlinearity::power_difference(f64::NAN).is_err());
        assert!(Nonlinearity::new(NonlinearityModel::ShiftedPower { p: 3.0, a: -1.0 }).is_err());
        let nested = NonlinearityModel::PiecewiseMu {
            inner: Box::new(fmu_fixture().model),
            outer: Box::new(NonlinearityModel::PurePower { p: 3.0 }),
            alpha1: 3.0,
            eps: 0.1,
            lambda: 1.0,
            mu: 1.0,
        };
        assert!(Nonlinearity::new(nested).is_err());
    }

    #[test]
    fn identity_configuration_tracks_inner() {
        let f1 = NonlinearityModel::PowerDifference { p: 3.0 };
        let nl = build_fmu(f1.clone(), f1, 2.0, 0.1, 1.0, 1.0).unwrap();
        let reference = pd3();
        // Secant deviation of s³ - s over [2, 2.1] is at most max|f''| ε² / 8.
        let bound = 6.0 * 2.1 * 0.01 / 8.0;
        for i in 0..=400 {
            let s = i as f64 * 0.01;
            assert!((nl.f(s) - reference.f(s)).abs() <= bound + 1e-12, "s={s}");
        }
    }

    #[test]
    fn kinks_are_continuous() {
        for nl in [fmu_fixture(), fa_fixture()] {
            let g = nl.model.glue();
            let left_at_alpha1 = g.inner.f_pos(g.alpha1);
            let right_at_alpha1 = g.bridge(g.alpha1);
            assert!(
                (left_at_alpha1 - right_at_alpha1).abs() < 1e-12 * (1.0 + left_at_alpha1.abs())
            );
            let left_at_right = g.bridge(g.right);
            let right_at_right = nl.model.outer_f(g.right);
            assert!((left_at_right - right_at_right).abs() < 1e-12 * (1.0 + right_at_right.abs()));
            // F is continuous too.
            for k in &nl.kinks {
                let d = 1e-9 * k;
                assert!(
                    (nl.big_f(k - d) - nl.big_f(k + d)).abs() < 1e-6 * (1.0 + nl.big_f(*k).abs())
                );
            }
        }
    }

    #[test]
    fn one_sided_derivatives_at_kinks() {
        let nl = fmu_fixture();
        assert_eq!(nl.df_side(2.0, Side::Left), 11.0);
        let slope = (115.7625 - 6.0) / 0.1;
        assert!((nl.df_side(2.0, Side::Right) - slope).abs() < 1e-6);
        assert!((nl.df_side(2.1, Side::Left) - slope).abs() < 1e-6);
        assert!((nl.df_side(2.1, Side::Right) - 100.0 / 2.0 * 3.0 * 1.05f64.powi(2)).abs() < 1e-9);
        assert_eq!(nl.df(2.0), 11.0);
    }

    fn central_diff(g: impl Fn(f64) -> f64, s: f64) -> f64 {
        let h = 1e-5 * (1.0 + s.abs());
        (g(s + h) - g(s - h)) / (2.0 * h)
    }

    fn away_from_kinks(nl: &Nonlinearity, s: f64) -> bool {
        nl.kinks.iter().all(|k| (s.abs() - k).abs() > 1e-3)
    }

    proptest! {
        #[test]
        fn oddness_is_exact(s in -50.0f64..50.0) {
            for nl in [pd3(), fmu_fixture(), fa_fixture(), Nonlinearity::pure_power(5.0).unwrap()] {
                prop_assert_eq!(nl.f(-s), -nl.f(s));
                prop_assert_eq!(nl.big_f(-s), nl.big_f(s));
            }
        }

        #[test]
        fn primitive_and_derivative_are_consistent(s in -4.0f64..4.0) {
            for nl in [pd3(), fmu_fixture(), fa_fixture(), Nonlinearity::pure_power(3.0).unwrap()] {
                prop_assume!(away_from_kinks(&nl, s));
                let fd_big = central_diff(|x| nl.big_f(x), s);
                let f = nl.f(s);
                prop_assert!((fd_big - f).abs() <= 1e-6 * (1.0 + f.abs()), "F' {} vs f {}", fd_big, f);
                let fd_f = central_diff(|x| nl.f(x), s);
                let df = nl.df(s);
                prop_assert!((fd_f - df).abs() <= 1e-6 * (1.0 + df.abs()), "f' {} vs df {}", fd_f, df);
            }
        }
    }

    #[test]
    fn model_json_shape() {
        let m: NonlinearityModel =
            serde_json::from_str(r#"{"model":"power-diff","p":3.0}"#).unwrap();
        assert_eq!(m, NonlinearityModel::PowerDifference { p: 3.0 });
        let nested = r#"{"model":"piecewise-mu","inner":{"model":"power-diff","p":3.0},
            "outer":{"model":"pure-power","p":3.0},"alpha1":2.0,"eps":0.1,"lambda":10.0,"mu":2.0}"#;
        let m: NonlinearityModel = serde_json::from_str(nested).unwrap();
        assert_eq!(m, fmu_fixture().model);
        assert!(serde_json::from_str::<NonlinearityModel>(
            r#"{"model":"power-diff","p":3.0,"q":1}"#
        )
        .is_err());
    }
}
