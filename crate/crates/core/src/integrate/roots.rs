//! Bracketing root refinement: bisection safeguarded inverse quadratic
//! interpolation (Brent's zeroin).

/// Refine a root of `f` inside `[a, b]` where `fa = f(a)` and `fb = f(b)` have
/// opposite signs (or one is zero). Stops once the bracket is narrower than
/// `xtol`, or `f` is exactly zero. Returns the endpoint with the smaller
/// residual.
pub fn brent<F>(mut f: F, a: f64, b: f64, fa: f64, fb: f64, xtol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol1 || fb == 0.0 {
            return b;
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(m) };
        fb = f(b);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_pi() {
        let root = brent(f64::sin, 3.0, 3.3, 3f64.sin(), 3.3f64.sin(), 1e-14);
        assert!((root - std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn steep_and_flat_functions() {
        let f = |x: f64| (x - 1.0).powi(3);
        let root = brent(f, 0.0, 3.0, f(0.0), f(3.0), 1e-12);
        assert!((root - 1.0).abs() < 1e-6);
        let g = |x: f64| (20.0 * (x - 0.3)).tanh();
        let root = brent(g, 0.0, 1.0, g(0.0), g(1.0), 1e-13);
        assert!((root - 0.3).abs() < 1e-12);
    }

    #[test]
    fn counts_few_evaluations_on_smooth_roots() {
        let mut calls = 0;
        let root = brent(
            |x| {
                calls += 1;
                x * x - 2.0
            },
            1.0,
            2.0,
            -1.0,
            2.0,
            1e-14,
        );
        assert!((root - 2f64.sqrt()).abs() < 1e-14);
        assert!(calls < 15, "{calls} evaluations");
    }
}
