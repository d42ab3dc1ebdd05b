//! Dormand–Prince 5(4) tableau with Hairer's fourth-order continuous extension.

pub(crate) const C2: f64 = 1.0 / 5.0;
pub(crate) const C3: f64 = 3.0 / 10.0;
pub(crate) const C4: f64 = 4.0 / 5.0;
pub(crate) const C5: f64 = 8.0 / 9.0;

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

/// Nominal order of the propagated solution.
pub const ORDER: i32 = 5;

/// Work arrays for one step.
pub(crate) struct Stages {
    pub k: [Vec<f64>; 7],
    pub tmp: Vec<f64>,
    pub y_new: Vec<f64>,
    pub err: Vec<f64>,
}

impl Stages {
    pub fn new(dim: usize) -> Self {
        Stages {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
            y_new: vec![0.0; dim],
            err: vec![0.0; dim],
        }
    }
}

/// Take one step from `(t, y)` to `t_new`; `stages.k[0]` must already hold
/// `f(t, y)`. Fills `k[1..7]`, `y_new` and the embedded error estimate. The
/// last stage is evaluated at exactly `t_new` so it can be reused as the first
/// stage of the next step.
pub(crate) fn step<F>(rhs: &mut F, t: f64, t_new: f64, y: &[f64], s: &mut Stages)
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let h = t_new - t;
    let Stages { k, tmp, y_new, err } = s;

    for i in 0..n {
        tmp[i] = y[i] + h * A21 * k[0][i];
    }
    rhs(t + C2 * h, tmp, &mut k[1]);
    for i in 0..n {
        tmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
    }
    rhs(t + C3 * h, tmp, &mut k[2]);
    for i in 0..n {
        tmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
    }
    rhs(t + C4 * h, tmp, &mut k[3]);
    for i in 0..n {
        tmp[i] = y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
    }
    rhs(t + C5 * h, tmp, &mut k[4]);
    for i in 0..n {
        tmp[i] = y[i]
            + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
    }
    rhs(t_new, tmp, &mut k[5]);
    for i in 0..n {
        y_new[i] = y[i]
            + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
    }
    rhs(t_new, y_new, &mut k[6]);
    for i in 0..n {
        err[i] = h
            * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i]
                + E7 * k[6][i]);
    }
}

/// Dense-output coefficients `[r2, r3, r4, r5]` for an accepted step, laid
/// out as `4 * dim` values.
pub(crate) fn dense_coefficients(y: &[f64], h: f64, s: &Stages, out: &mut Vec<f64>) {
    let n = y.len();
    let k = &s.k;
    let start = out.len();
    out.resize(start + 4 * n, 0.0);
    let (r2, rest) = out[start..].split_at_mut(n);
    let (r3, rest) = rest.split_at_mut(n);
    let (r4, r5) = rest.split_at_mut(n);
    for i in 0..n {
        let dy = s.y_new[i] - y[i];
        let bspl = h * k[0][i] - dy;
        r2[i] = dy;
        r3[i] = bspl;
        r4[i] = dy - h * k[6][i] - bspl;
        r5[i] = h
            * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i]
                + D7 * k[6][i]);
    }
}

/// Interpolated state at fraction `theta` of a step.
pub(crate) fn interpolate(y0: &[f64], coeffs: &[f64], theta: f64, out: &mut [f64]) {
    let n = y0.len();
    let th1 = 1.0 - theta;
    for i in 0..n {
        let (r2, r3, r4, r5) = (coeffs[i], coeffs[n + i], coeffs[2 * n + i], coeffs[3 * n + i]);
        out[i] = y0[i] + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)));
    }
}

/// Time derivative of the interpolant at fraction `theta` of a step of size `h`.
pub(crate) fn interpolate_derivative(coeffs: &[f64], h: f64, theta: f64, out: &mut [f64]) {
    let n = out.len();
    let th1 = 1.0 - theta;
    for i in 0..n {
        let (r2, r3, r4, r5) = (coeffs[i], coeffs[n + i], coeffs[2 * n + i], coeffs[3 * n + i]);
        let q = r3 + theta * (r4 + th1 * r5);
        let dq = r4 + (1.0 - 2.0 * theta) * r5;
        let s = r2 + th1 * q;
        let ds = -q + th1 * dq;
        out[i] = (s + theta * ds) / h;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tableau_rows_sum_to_nodes() {
        assert!((A21 - C2).abs() < 1e-16);
        assert!((A31 + A32 - C3).abs() < 1e-16);
        assert!((A41 + A42 + A43 - C4).abs() < 1e-15);
        assert!((A51 + A52 + A53 + A54 - C5).abs() < 1e-14);
        assert!((A61 + A62 + A63 + A64 + A65 - 1.0).abs() < 1e-14);
        assert!((A71 + A73 + A74 + A75 + A76 - 1.0).abs() < 1e-15);
        assert!((E1 + E3 + E4 + E5 + E6 + E7).abs() < 1e-16);
    }

    #[test]
    fn one_step_of_exponential() {
        let mut rhs = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0];
        let mut s = Stages::new(1);
        s.k[0][0] = 1.0;
        let h = 0.1;
        step(&mut rhs, 0.0, h, &[1.0], &mut s);
        assert!((s.y_new[0] - h.exp()).abs() < 1e-8);
        let mut c = Vec::new();
        dense_coefficients(&[1.0], h, &s, &mut c);
        let mut out = [0.0];
        interpolate(&[1.0], &c, 0.5, &mut out);
        assert!((out[0] - (0.5 * h).exp()).abs() < 1e-8);
        interpolate_derivative(&c, h, 0.0, &mut out);
        assert!((out[0] - 1.0).abs() < 1e-14);
        interpolate_derivative(&c, h, 1.0, &mut out);
        assert!((out[0] - s.k[6][0]).abs() < 1e-13);
    }
}
