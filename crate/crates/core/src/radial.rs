//! The coefficient family `H_A = A g' / (A ∫g + 1)`, its radial solutions
//! `α_A = A ∫g + B`, and the admissible radius `R*`.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{self, roots, DenseSolution, IvpOptions};
use crate::warping::WarpingSolution;

/// Residual grids default to this many uniform points.
pub const DEFAULT_GRID: usize = 200;

/// Below this magnitude a numerator or denominator counts as zero.
pub const ZERO_GUARD: f64 = 1e-10;

/// A zero of the denominator where `|g'|` is below this is treated as a
/// removable (shared) zero of the quotient.
pub const REMOVABLE_TOL: f64 = 1e-7;

/// Outcome of the search for the first zero of `A I + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    /// First non-removable zero of the denominator; `None` means none up to
    /// `r_end`.
    pub r_star: Option<f64>,
    /// A shared zero of numerator and denominator passed over by the search.
    pub removable: Option<f64>,
    pub admissible: bool,
}

/// Locate `R*` for `A` on `ws` and decide admissibility.
///
/// `A I + 1` has derivative `A g`, so it is monotone on `[0, r_{-G}]` and
/// turns back after it. A sign check at the first zero of `g` (or at
/// `r_end`) therefore decides whether a zero exists, and a bracketed root
/// search finds it.
pub fn admissible_r_star(ws: &WarpingSolution, a: f64) -> Admissibility {
    let beyond = Admissibility {
        r_star: None,
        removable: None,
        admissible: true,
    };
    if a >= 0.0 {
        return beyond;
    }
    let z = ws.chart_radius();
    let den = |t: f64| ws.values(t).map_or(f64::NAN, |v| a * v.integral + 1.0);
    let dz = den(z);
    if dz > 0.0 {
        return beyond;
    }
    let root = roots::brent(den, 0.0, z, 1.0, dz, 1e-13 * (1.0 + z));
    let gp = ws.values(root).map_or(f64::NAN, |v| v.gp);
    if gp.abs() < REMOVABLE_TOL {
        return Admissibility {
            removable: Some(root),
            ..beyond
        };
    }
    Admissibility {
        r_star: Some(root),
        removable: None,
        admissible: false,
    }
}

/// `H_A` and `α_A` on a fixed warping solution.
#[derive(Debug, Clone, Copy)]
pub struct RadialSystem<'a> {
    ws: &'a WarpingSolution,
    a: f64,
    b: f64,
    adm: Admissibility,
}

impl<'a> RadialSystem<'a> {
    pub fn new(ws: &'a WarpingSolution, a: f64, b: f64) -> Result<Self> {
        if a == 0.0 || !a.is_finite() {
            return Err(Error::InvalidArgument(format!("A = {a} must be nonzero and finite")));
        }
        if !b.is_finite() {
            return Err(Error::InvalidArgument(format!("B = {b} must be finite")));
        }
        Ok(RadialSystem {
            ws,
            a,
            b,
            adm: admissible_r_star(ws, a),
        })
    }

    /// `B = 1`, the normalization `α(0) = 1`.
    pub fn normalized(ws: &'a WarpingSolution, a: f64) -> Result<Self> {
        Self::new(ws, a, 1.0)
    }

    pub fn warping(&self) -> &'a WarpingSolution {
        self.ws
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn admissibility(&self) -> Admissibility {
        self.adm
    }

    pub fn r_star(&self) -> Option<f64> {
        self.adm.r_star
    }

    pub fn is_admissible(&self) -> bool {
        self.adm.admissible
    }

    /// Right end of the range on which `H` is defined: `min(R*, r_end)`.
    pub fn domain_end(&self) -> f64 {
        self.adm.r_star.unwrap_or(f64::INFINITY).min(self.ws.r_end())
    }

    /// `H_A(t) = A g'(t) / (A I(t) + 1)`.
    pub fn coefficient_h(&self, t: f64) -> Result<f64> {
        if let Some(rs) = self.adm.r_star {
            if t >= rs {
                let den = self.ws.values(t.min(self.ws.r_end()))?.integral * self.a + 1.0;
                return Err(Error::DomainExceeded { t, denominator: den });
            }
        }
        let v = self.ws.values(t)?;
        let num = self.a * v.gp;
        let den = self.a * v.integral + 1.0;
        if den.abs() < ZERO_GUARD {
            if num.abs() < ZERO_GUARD && v.g != 0.0 {
                // Shared zero: H = A g'' / (A g) = g'' / g.
                return Ok(self.ws.derivative_at(t, 2)? / v.g);
            }
            return Err(Error::DomainExceeded { t, denominator: den });
        }
        Ok(num / den)
    }

    /// `α(t) = A I(t) + B`.
    pub fn alpha(&self, t: f64) -> Result<f64> {
        Ok(self.a * self.ws.values(t)?.integral + self.b)
    }

    /// `α'(t) = A g(t)`.
    pub fn alpha_prime(&self, t: f64) -> Result<f64> {
        Ok(self.a * self.ws.values(t)?.g)
    }

    /// Range checked by [`verify_second_order`]:
    /// `0.999 · min(R*, r_{-G}, r_end)`.
    pub fn checked_range(&self) -> f64 {
        0.999 * self.domain_end().min(self.ws.chart_radius())
    }

    fn report(&self, grid_n: usize, worst: (f64, f64), tol: f64) -> ResidualReport {
        ResidualReport {
            profile: self.ws.profile().to_string(),
            a: self.a,
            b: self.b,
            grid_n,
            max_residual: worst.0,
            argmax_t: worst.1,
            pass: worst.0 <= tol,
        }
    }
}

/// Flat record for a residual check over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub profile: String,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub grid_n: usize,
    pub max_residual: f64,
    pub argmax_t: f64,
    pub pass: bool,
}

fn uniform(end: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| end * i as f64 / (n - 1) as f64)
}

fn max_deviation<F>(end: f64, n: usize, mut f: F) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut worst = (0.0, 0.0);
    for t in uniform(end, n) {
        let d = f(t)?.abs();
        if d > worst.0 || d.is_nan() {
            worst = (d, t);
        }
    }
    Ok(worst)
}

/// Integrate `y'' = H y`, `y(0) = 1`, `y'(0) = 0` on the checked range and
/// compare with `α = A I + 1` on `n_grid` uniform points. `B` plays no role
/// here since `H` is normalized to `α(0) = 1`.
pub fn verify_second_order(sys: &RadialSystem<'_>, n_grid: usize, tol: f64) -> Result<ResidualReport> {
    if sys.r_star().is_some_and(|rs| rs <= sys.ws.chart_radius()) {
        return Err(Error::DomainExceeded {
            t: sys.r_star().unwrap_or(0.0),
            denominator: 0.0,
        });
    }
    let end = sys.checked_range();
    let failure = RefCell::new(None);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let h = match sys.coefficient_h(t) {
            Ok(h) => h,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        };
        dy[0] = y[1];
        dy[1] = h * y[0];
    };
    let opts = IvpOptions::new(sys.ws.working_tolerances());
    let result = integrate::integrate_ivp(rhs, &[1.0, 0.0], (0.0, end), &opts);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let sol = result?;
    let mut buf = [0.0; 2];
    let worst = max_deviation(end, n_grid, |t| {
        sol.eval_into(t, &mut buf)?;
        Ok(buf[0] - (sys.a * sys.ws.values(t)?.integral + 1.0))
    })?;
    Ok(sys.report(n_grid, worst, tol))
}

/// Numeric solution of `y''' = G y'` with `(y, y', y'')(0) = (B, 0, A)` and
/// its deviation from `A I + B`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThirdOrderSolution {
    pub solution: DenseSolution,
    pub a: f64,
    pub b: f64,
    pub max_residual: f64,
    pub argmax_t: f64,
    pub profile: String,
}

impl ThirdOrderSolution {
    pub fn report(&self, tol: f64) -> ResidualReport {
        ResidualReport {
            profile: self.profile.clone(),
            a: self.a,
            b: self.b,
            grid_n: DEFAULT_GRID,
            max_residual: self.max_residual,
            argmax_t: self.argmax_t,
            pass: self.max_residual <= tol,
        }
    }
}

/// Solve the third-order Cauchy problem on `[0, t_end]`. `A = 0` is allowed
/// here and gives `y ≡ B`.
pub fn solve_third_order(ws: &WarpingSolution, a: f64, b: f64, t_end: f64) -> Result<ThirdOrderSolution> {
    if !(t_end > 0.0 && t_end <= ws.r_end()) {
        return Err(Error::OutOfRange {
            t: t_end,
            lo: 0.0,
            hi: ws.r_end(),
        });
    }
    let profile = ws.profile();
    let failure = RefCell::new(None);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let big_g = match profile.value(t) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(Error::from(e));
                f64::NAN
            }
        };
        dy[0] = y[1];
        dy[1] = y[2];
        dy[2] = big_g * y[1];
    };
    let opts = IvpOptions::new(ws.working_tolerances());
    let result = integrate::integrate_ivp(rhs, &[b, 0.0, a], (0.0, t_end), &opts);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let solution = result?;
    let mut buf = [0.0; 3];
    let (max_residual, argmax_t) = max_deviation(t_end, DEFAULT_GRID, |t| {
        solution.eval_into(t, &mut buf)?;
        Ok(buf[0] - (a * ws.values(t)?.integral + b))
    })?;
    Ok(ThirdOrderSolution {
        solution,
        a,
        b,
        max_residual,
        argmax_t,
        profile: profile.to_string(),
    })
}
