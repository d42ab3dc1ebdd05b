//! Reference values for the modelforge test suites.
//!
//! Everything here is computed from closed-form space-form formulas or by
//! deliberately naive bisection. Nothing in this crate shares code with the
//! numeric library it is used to check.

use std::f64::consts::PI;
use std::fmt;

/// Which displayed space-form coefficient formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceFormKind {
    Sphere,
    Hyperbolic,
    Euclidean,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    /// The formula's denominator vanishes at this radius.
    Domain { r: f64 },
    /// `f(a)` and `f(b)` have the same sign.
    NoSignChange { a: f64, fa: f64, b: f64, fb: f64 },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::Domain { r } => write!(f, "denominator vanishes at r = {r}"),
            OracleError::NoSignChange { a, fa, b, fb } => {
                write!(f, "no sign change on [{a}, {b}]: f(a) = {fa}, f(b) = {fb}")
            }
        }
    }
}

impl std::error::Error for OracleError {}

/// Unit-curvature coefficient formulas, written exactly as displayed:
///
/// * sphere: `A cos r / (-A cos r + 1 + A)`
/// * hyperbolic: `A cosh r / (A cosh r + 1 - A)`
/// * euclidean: `2A / (A r^2 + 2)`
pub fn oracle_h(kind: SpaceFormKind, a: f64, r: f64) -> Result<f64, OracleError> {
    let (num, den) = match kind {
        SpaceFormKind::Sphere => (a * r.cos(), -a * r.cos() + 1.0 + a),
        SpaceFormKind::Hyperbolic => (a * r.cosh(), a * r.cosh() + 1.0 - a),
        SpaceFormKind::Euclidean => (2.0 * a, a * r * r + 2.0),
    };
    if den == 0.0 {
        // A = -1 on the sphere: -cos r / cos r, removable.
        if kind == SpaceFormKind::Sphere && a == -1.0 {
            return Ok(-1.0);
        }
        return Err(OracleError::Domain { r });
    }
    Ok(num / den)
}

/// Closed-form model with constant profile `G ≡ k` (k < 0 sphere, k > 0
/// hyperbolic, k = 0 Euclidean).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceFormOracle {
    pub k: f64,
}

impl SpaceFormOracle {
    pub fn new(k: f64) -> Self {
        SpaceFormOracle { k }
    }

    /// Warping function `g`.
    pub fn g(&self, r: f64) -> f64 {
        let k = self.k;
        if k < 0.0 {
            let s = (-k).sqrt();
            (s * r).sin() / s
        } else if k > 0.0 {
            let s = k.sqrt();
            (s * r).sinh() / s
        } else {
            r
        }
    }

    pub fn gp(&self, r: f64) -> f64 {
        let k = self.k;
        if k < 0.0 {
            ((-k).sqrt() * r).cos()
        } else if k > 0.0 {
            (k.sqrt() * r).cosh()
        } else {
            1.0
        }
    }

    /// `g''` = `k g`.
    pub fn gpp(&self, r: f64) -> f64 {
        self.k * self.g(r)
    }

    /// `∫_0^r g`.
    pub fn integral(&self, r: f64) -> f64 {
        let k = self.k;
        if k < 0.0 {
            (1.0 - ((-k).sqrt() * r).cos()) / (-k)
        } else if k > 0.0 {
            ((k.sqrt() * r).cosh() - 1.0) / k
        } else {
            0.5 * r * r
        }
    }

    pub fn alpha(&self, a: f64, b: f64, r: f64) -> f64 {
        a * self.integral(r) + b
    }

    /// `A g' / (A ∫g + 1)`, with the removable point of the sphere family
    /// at `A = k` resolved to `k`.
    pub fn h(&self, a: f64, r: f64) -> Result<f64, OracleError> {
        let den = a * self.integral(r) + 1.0;
        if self.k < 0.0 && a == self.k {
            return Ok(self.k);
        }
        if den == 0.0 {
            return Err(OracleError::Domain { r });
        }
        Ok(a * self.gp(r) / den)
    }

    /// First positive zero of `g`, if any.
    pub fn first_zero(&self) -> Option<f64> {
        (self.k < 0.0).then(|| PI / (-self.k).sqrt())
    }
}

/// Plain bisection to bracket width `tol`.
pub fn brute_root<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, OracleError>
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (a, b);
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(OracleError::NoSignChange { a, fa: flo, b, fb: fhi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sign scan of `f` on `n` uniform points of `[a, b]`; returns the first grid
/// point where `f <= 0`, if any.
pub fn brute_first_nonpositive<F>(f: F, a: f64, b: f64, n: usize) -> Option<f64>
where
    F: Fn(f64) -> f64,
{
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .find(|&t| f(t) <= 0.0)
}

/// Taylor expansion `ε²/sin²ε - 1 ≈ ε²/3 + ε⁴/15` of the metric seed drift on
/// the unit sphere.
pub fn sphere_seed_drift(eps: f64) -> f64 {
    eps * eps / 3.0 + eps.powi(4) / 15.0
}

/// `ε²/sinh²ε - 1 ≈ -ε²/3 + ε⁴/15`.
pub fn hyperbolic_seed_drift(eps: f64) -> f64 {
    -eps * eps / 3.0 + eps.powi(4) / 15.0
}

/// `n` uniform points on `[a, b]`, endpoints included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}
