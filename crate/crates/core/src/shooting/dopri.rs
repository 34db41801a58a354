//! Dormand–Prince 5(4) step with FSAL and the classical quartic continuous extension.

pub(crate) type State = [f64; 2];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy(y: &State, terms: &[(f64, &State)], h: f64) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// One accepted-or-rejected attempt.
pub(crate) struct Attempt {
    pub y1: State,
    pub k7: State,
    /// Weighted RMS error estimate; the step is acceptable when `<= 1`.
    pub err: f64,
    pub segment: StepSegment,
}

pub(crate) fn attempt(
    rhs: &impl Fn(f64, &State) -> State,
    r: f64,
    y: &State,
    k1: &State,
    h: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Attempt {
    let k2 = rhs(r + C2 * h, &axpy(y, &[(A21, k1)], h));
    let k3 = rhs(r + C3 * h, &axpy(y, &[(A31, k1), (A32, &k2)], h));
    let k4 = rhs(
        r + C4 * h,
        &axpy(y, &[(A41, k1), (A42, &k2), (A43, &k3)], h),
    );
    let k5 = rhs(
        r + C5 * h,
        &axpy(y, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
    );
    let k6 = rhs(
        r + h,
        &axpy(
            y,
            &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            h,
        ),
    );
    let y1 = axpy(
        y,
        &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        h,
    );
    let k7 = rhs(r + h, &y1);

    let mut sum = 0.0;
    for i in 0..2 {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sk = abs_tol + rel_tol * y[i].abs().max(y1[i].abs());
        sum += (e / sk) * (e / sk);
    }
    let err = (sum / 2.0).sqrt();

    let mut rc = [[0.0; 2]; 5];
    for i in 0..2 {
        let dy = y1[i] - y[i];
        let bspl = h * k1[i] - dy;
        rc[0][i] = y[i];
        rc[1][i] = dy;
        rc[2][i] = bspl;
        rc[3][i] = dy - h * k7[i] - bspl;
        rc[4][i] =
            h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    Attempt {
        y1,
        k7,
        err,
        segment: StepSegment {
            r0: r,
            r1: r + h,
            y0: *y,
            y1,
            rc,
        },
    }
}

/// Dense-output record of one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSegment {
    pub r0: f64,
    pub r1: f64,
    pub y0: State,
    pub y1: State,
    pub(crate) rc: [[f64; 2]; 5],
}

impl StepSegment {
    pub fn eval(&self, r: f64) -> State {
        if r == self.r0 {
            return self.y0;
        }
        if r == self.r1 {
            return self.y1;
        }
        let t = (r - self.r0) / (self.r1 - self.r0);
        let t1 = 1.0 - t;
        let rc = &self.rc;
        let mut out = [0.0; 2];
        for i in 0..2 {
            out[i] = rc[0][i] + t * (rc[1][i] + t1 * (rc[2][i] + t * (rc[3][i] + t1 * rc[4][i])));
        }
        out
    }

    /// Derivative of the interpolant with respect to `r`.
    pub fn eval_derivative(&self, r: f64) -> State {
        let h = self.r1 - self.r0;
        let t = (r - self.r0) / h;
        let t1 = 1.0 - t;
        let rc = &self.rc;
        let mut out = [0.0; 2];
        for i in 0..2 {
            let a = rc[3][i] + t1 * rc[4][i];
            let da = -rc[4][i];
            let b = rc[2][i] + t * a;
            let db = a + t * da;
            let c = rc[1][i] + t1 * b;
            let dc = -b + t1 * db;
            out[i] = (c + t * dc) / h;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_step_is_fifth_order() {
        // y' = y on both components.
        let rhs = |_r: f64, y: &State| *y;
        let y = [1.0, 1.0];
        let mut prev = None;
        for h in [0.1, 0.05] {
            let a = attempt(&rhs, 0.0, &y, &y, h, 1e-12, 1e-12);
            let e = (a.y1[0] - h.exp()).abs();
            if let Some(p) = prev {
                let ratio: f64 = p / e;
                // Local error O(h^6).
                assert!(ratio > 40.0, "ratio {ratio}");
            }
            prev = Some(e);
        }
    }

    #[test]
    fn dense_output_interpolates() {
        let rhs = |_r: f64, y: &State| [y[1], -y[0]];
        let y = [0.0, 1.0];
        let max_err = |h: f64| {
            let a = attempt(&rhs, 0.0, &y, &rhs(0.0, &y), h, 1e-12, 1e-12);
            assert_eq!(a.segment.eval(h), a.y1);
            (0..=10)
                .map(|i| {
                    let r = h * i as f64 / 10.0;
                    let s = a.segment.eval(r);
                    let d = a.segment.eval_derivative(r);
                    assert!((d[0] - s[1]).abs() < 1e-5);
                    (s[0] - r.sin()).abs().max((s[1] - r.cos()).abs())
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (max_err(0.2), max_err(0.1));
        assert!(e1 < 1e-7, "{e1}");
        // Interpolation error is O(h^5).
        assert!(e1 / e2 > 20.0, "{e1} {e2}");
    }
}
