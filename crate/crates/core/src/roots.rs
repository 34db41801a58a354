//! Bracketing root finders shared by event location and the diagnostics.

/// Bisects `g` on `[a, b]`, assuming `g(a)` and `g(b)` have opposite signs (a zero
/// at either end is accepted). Stops once the bracket is narrower than `tol` or can
/// no longer be split in `f64`. Returns the endpoint with the smaller `|g|`.
pub fn bisect(mut g: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut ga = g(a);
    let mut gb = g(b);
    if ga == 0.0 {
        return a;
    }
    if gb == 0.0 {
        return b;
    }
    for _ in 0..400 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
            gb = gm;
        }
    }
    if ga.abs() <= gb.abs() {
        a
    } else {
        b
    }
}

/// Tolerance used for event location: `1e-13` absolute, widened to a few ulps
/// where `r` is large enough that `1e-13` is below the `f64` spacing.
pub fn event_tol(r: f64) -> f64 {
    (4.0 * f64::EPSILON * r.abs()).max(1e-13)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15);
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn accepts_reversed_sign() {
        let r = bisect(|x| 1.0 - x, 0.0, 3.0, 1e-14);
        assert!((r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_at_endpoint() {
        assert_eq!(bisect(|x| x, 0.0, 1.0, 1e-12), 0.0);
    }
}
