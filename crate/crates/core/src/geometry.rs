//! Scalar (rotationally reduced) forms of the tensor identities on the model
//! `dr² + g(r)² dθ²`.
//!
//! Every residual mixes at least one quantity obtained from the dense-output
//! polynomials or finite differences with one obtained from the defining
//! recurrence, so that no check reduces to `0 = 0`.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{self, IvpOptions};
use crate::radial::RadialSystem;
use crate::warping::WarpingSolution;

/// Radii below this are treated as the pole.
pub const POLE_GUARD: f64 = 1e-8;

/// The third `vector8` line divides by `g'`; it is skipped where `|g'|` is
/// below this.
pub const CRITICAL_GP: f64 = 1e-3;

/// Default manifold dimension.
pub const DEFAULT_DIMENSION: usize = 3;

/// Eigenvalues of a rotationally symmetric Hessian: one along `∂r`, one of
/// multiplicity `m - 1` on the distance spheres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianEigenpair {
    pub radial: f64,
    pub tangential: f64,
    pub r: f64,
}

fn interior(ws: &WarpingSolution, r: f64) -> Result<()> {
    if r < POLE_GUARD {
        return Err(Error::PoleSingularity { r });
    }
    let hi = ws.chart_radius();
    if r >= hi {
        return Err(Error::OutOfRange { t: r, lo: 0.0, hi });
    }
    Ok(())
}

/// `Hess(r) = (g'/g)(⟨,⟩ - dr ⊗ dr)`: eigenvalues `(0, g'/g)`.
pub fn hess_r_eigen(ws: &WarpingSolution, r: f64) -> Result<HessianEigenpair> {
    interior(ws, r)?;
    let v = ws.values(r)?;
    Ok(HessianEigenpair {
        radial: 0.0,
        tangential: v.gp / v.g,
        r,
    })
}

/// Hessian eigenvalues of `α_A` and their residuals against `H α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialHessian {
    pub eigen: HessianEigenpair,
    pub h_alpha: f64,
    pub residuals: [f64; 2],
}

/// `(α'', α' g'/g)` with `α'` and `α''` read from the dense-output derivative
/// of the stored `I` and `g`, compared with `H(r) α(r)`.
pub fn hess_radial_fn(sys: &RadialSystem<'_>, r: f64) -> Result<RadialHessian> {
    let ws = sys.warping();
    interior(ws, r)?;
    let h = sys.coefficient_h(r)?;
    let alpha = sys.alpha(r)?;
    let v = ws.values(r)?;
    let d = ws.state_derivative(r)?;
    let radial = sys.a() * d.g;
    let tangential = sys.a() * d.integral * v.gp / v.g;
    let h_alpha = h * alpha;
    Ok(RadialHessian {
        eigen: HessianEigenpair {
            radial,
            tangential,
            r,
        },
        h_alpha,
        residuals: [(radial - h_alpha).abs(), (tangential - h_alpha).abs()],
    })
}

/// Left-hand sides of the three `vector8` lines with `K = G`, `y = A g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vector8Residuals {
    pub second_order: f64,
    pub first_order: f64,
    /// `None` where `|g'| < CRITICAL_GP`.
    pub mixed: Option<f64>,
}

impl Vector8Residuals {
    pub fn max(&self) -> f64 {
        self.second_order.max(self.first_order).max(self.mixed.unwrap_or(0.0))
    }
}

pub fn residuals_vector8(ws: &WarpingSolution, a: f64, r: f64) -> Result<Vector8Residuals> {
    interior(ws, r)?;
    let v = ws.values(r)?;
    let d = ws.state_derivative(r)?;
    let k = ws.profile().value(r)?;
    let y = a * v.g;
    // y' and y'' from the interpolant, g'' for (g g')' from the recurrence.
    let yp = a * d.g;
    let ypp = a * d.gp;
    let gpp = ws.derivative_at(r, 2)?;
    let second_order = (ypp - k * y).abs();
    let first_order = (yp - y * v.gp / v.g).abs();
    let mixed = (v.gp.abs() >= CRITICAL_GP).then(|| {
        let ggp = v.g * v.gp;
        let ggp_prime = v.gp * v.gp + v.g * gpp;
        (yp + y * ggp_prime / ggp - 2.0 * y * v.gp / v.g - k * y * v.g / v.gp).abs()
    });
    Ok(Vector8Residuals {
        second_order,
        first_order,
        mixed,
    })
}

/// Radial component of `D Hess(r)`: `|lhs - rhs|` from [`dhess_r_sides`].
pub fn dhess_r_residual(ws: &WarpingSolution, r: f64) -> Result<f64> {
    let (lhs, rhs) = dhess_r_sides(ws, r)?;
    Ok((lhs - rhs).abs())
}

/// `d/dr (g'/g)` by Richardson-extrapolated central differences and `((g g')'/(g g') - 2 g'/g) g'/g`.
pub fn dhess_r_sides(ws: &WarpingSolution, r: f64) -> Result<(f64, f64)> {
    interior(ws, r)?;
    let v = ws.values(r)?;
    if v.gp.abs() < 1e-8 {
        return Err(Error::SkippedCriticalRadius { r });
    }
    let h = (1e-5 * (1.0 + r)).min(0.5 * r);
    let q = |s: f64| ws.values(s).map(|w| w.gp / w.g);
    let d1 = (q(r + h)? - q(r - h)?) / (2.0 * h);
    let d2 = (q(r + 0.5 * h)? - q(r - 0.5 * h)?) / h;
    let lhs = (4.0 * d2 - d1) / 3.0;
    let gpp = ws.derivative_at(r, 2)?;
    let ratio = v.gp / v.g;
    let rhs = ((v.gp * v.gp + v.g * gpp) / (v.g * v.gp) - 2.0 * ratio) * ratio;
    Ok((lhs, rhs))
}

/// Radial sectional curvature `-g''/g` and its residual against `-G(r)`,
/// the residual using a finite-difference `g''`.
pub fn radial_curvature(ws: &WarpingSolution, r: f64) -> Result<(f64, f64)> {
    interior(ws, r)?;
    let g = ws.values(r)?.g;
    let sec = -ws.derivative_at(r, 2)? / g;
    let fd = -ws.gpp_finite_difference(r)? / g;
    Ok((sec, (fd + ws.profile().value(r)?).abs()))
}

/// Drift of the rebuilt metric coefficient from `g²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricDrift {
    pub eps: f64,
    pub r_end_check: f64,
    /// `max |σ/g² - 1|` over the check grid.
    pub max_drift: f64,
    /// `σ/g² - 1` at `r_end_check`.
    pub signed_drift: f64,
    /// `(1 + max|G| on [0, eps]) eps²` plus the integration tolerance.
    pub bound: f64,
    pub pass: bool,
}

/// Integrate `σ' = 2 (g'/g) σ` from `σ(eps) = eps²` and compare with `g²`.
/// The unknown is carried as `σ / eps²` so that the absolute tolerance does
/// not swamp the small seed.
pub fn reconstruct_metric_coefficient(
    ws: &WarpingSolution,
    eps: f64,
    r_end_check: f64,
) -> Result<MetricDrift> {
    if !(eps > 0.0 && eps < r_end_check && r_end_check < ws.chart_radius()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < eps ({eps}) < r_end_check ({r_end_check}) < {}",
            ws.chart_radius()
        )));
    }
    let failure = RefCell::new(None);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| match ws.values(t) {
        Ok(v) => dy[0] = 2.0 * v.gp / v.g * y[0],
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            dy[0] = f64::NAN;
        }
    };
    let tol = ws.working_tolerances();
    let opts = IvpOptions::new(tol);
    let result = integrate::integrate_ivp(rhs, &[1.0], (eps, r_end_check), &opts);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let sol = result?;
    let n = 200;
    let mut max_drift = 0.0f64;
    let mut signed_drift = 0.0;
    for i in 0..n {
        let t = (eps + (r_end_check - eps) * i as f64 / (n - 1) as f64).min(r_end_check);
        let g = ws.values(t)?.g;
        let sigma = eps * eps * sol.eval(t)?[0];
        let d = sigma / (g * g) - 1.0;
        max_drift = max_drift.max(d.abs());
        signed_drift = d;
    }
    let c = 1.0 + ws.profile().max_abs_on(0.0, eps, 16)?;
    let bound = c * eps * eps + 100.0 * tol.rel.max(tol.abs);
    Ok(MetricDrift {
        eps,
        r_end_check,
        max_drift,
        signed_drift,
        bound,
        pass: max_drift <= bound,
    })
}

/// `Z = y(r) ∂r` with `y = A g`.
#[derive(Debug, Clone, Copy)]
pub struct RadialGradientField<'a> {
    ws: &'a WarpingSolution,
    a: f64,
}

impl<'a> RadialGradientField<'a> {
    pub fn new(ws: &'a WarpingSolution, a: f64) -> Self {
        RadialGradientField { ws, a }
    }

    /// `y(r) = A g(r)`; `|Z| = |y|`.
    pub fn magnitude(&self, r: f64) -> Result<f64> {
        Ok(self.a * self.ws.values(r)?.g)
    }

    /// `div Z = y' + (m - 1) y g'/g`, which is `m A g'` for `y = A g`.
    pub fn divergence(&self, r: f64, m: usize) -> Result<f64> {
        let v = self.ws.values(r)?;
        if r < POLE_GUARD {
            return Ok(m as f64 * self.a * v.gp);
        }
        let y = self.a * v.g;
        Ok(self.a * v.gp + (m as f64 - 1.0) * y * v.gp / v.g)
    }
}

/// For `G ≡ k ≠ 0`, `∇ div Z = m k Z`: returns `|m k A g - m A g''|` with
/// `g''` by finite differences.
pub fn divergence_relation_check(field: &RadialGradientField<'_>, m: usize, r: f64) -> Result<f64> {
    let ws = field.ws;
    let k = ws.profile().as_constant().ok_or(Error::NotConstantProfile)?;
    if k == 0.0 {
        return Err(Error::InvalidArgument("the relation needs k ≠ 0".into()));
    }
    if m < 2 {
        return Err(Error::InvalidArgument(format!("dimension m = {m} must be at least 2")));
    }
    if r != 0.0 {
        interior(ws, r)?;
    }
    let mf = m as f64;
    let g = ws.values(r)?.g;
    let gpp = ws.gpp_finite_difference(r)?;
    Ok((mf * k * field.a * g - mf * field.a * gpp).abs())
}

/// One line of an audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub check_name: String,
    pub r: f64,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl AuditRecord {
    fn new(name: &str, r: f64, residual: f64, threshold: f64) -> Self {
        AuditRecord {
            check_name: name.to_string(),
            r,
            residual,
            threshold,
            pass: residual <= threshold,
        }
    }
}

/// `n` interior radii of `(0, upper)`, uniformly spaced and away from both
/// ends.
pub fn audit_radii(upper: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| upper * i as f64 / (n + 1) as f64).collect()
}

/// Run the pointwise identity checks for `sys` at `radii`.
pub fn audit(sys: &RadialSystem<'_>, radii: &[f64]) -> Result<Vec<AuditRecord>> {
    let ws = sys.warping();
    let mut out = Vec::with_capacity(radii.len() * 6);
    for &r in radii {
        if sys.is_admissible() || r < sys.domain_end() {
            let hr = hess_radial_fn(sys, r)?;
            let thr = 1e-7 * (1.0 + hr.h_alpha.abs());
            out.push(AuditRecord::new("hessian_radial", r, hr.residuals[0], thr));
            out.push(AuditRecord::new("hessian_tangential", r, hr.residuals[1], thr));
        }
        let v8 = residuals_vector8(ws, sys.a(), r)?;
        let thr = 1e-7 * (1.0 + (sys.a() * ws.values(r)?.g).abs());
        out.push(AuditRecord::new("vector8_second_order", r, v8.second_order, thr));
        out.push(AuditRecord::new("vector8_first_order", r, v8.first_order, thr));
        if let Some(mixed) = v8.mixed {
            out.push(AuditRecord::new("vector8_mixed", r, mixed, thr));
        }
        match dhess_r_sides(ws, r) {
            Ok((lhs, rhs)) => out.push(AuditRecord::new(
                "dhess_r",
                r,
                (lhs - rhs).abs(),
                1e-6 * (1.0 + rhs.abs()),
            )),
            Err(Error::SkippedCriticalRadius { .. }) => {}
            Err(e) => return Err(e),
        }
        let (_, res) = radial_curvature(ws, r)?;
        out.push(AuditRecord::new("radial_curvature", r, res, 1e-5));
    }
    Ok(out)
}
