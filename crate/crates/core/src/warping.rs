//! The warping function `g`: `g'' = G g`, `g(0) = 0`, `g'(0) = 1`.
//!
//! The state carried through the integration is `(g, g', I)` with
//! `I(t) = ∫_0^t g`, so `g` and its integral share one mesh and one error
//! control. Integration stops a short guard distance after the first
//! positive zero of `g`, when there is one.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{
    self, roots, Control, DenseRecord, DenseSolution, Direction, IvpOptions, Tolerances,
};
use crate::profile::{CurvatureProfile, ProfileError, ProfileSpec};

pub const RECORD_FORMAT: &str = "modelforge.warping";
pub const RECORD_VERSION: u32 = 1;

/// `(g, g', ∫g)` at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpingValues {
    pub g: f64,
    pub gp: f64,
    pub integral: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Backing {
    Numeric(DenseSolution),
    ClosedForm { k: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpingSolution {
    profile: CurvatureProfile,
    backing: Backing,
    r_max: f64,
    r_end: f64,
    first_zero: Option<f64>,
    tol: Tolerances,
}

/// Zeros at or below this radius are the trivial zero at the pole.
pub fn zero_guard(tol: Tolerances) -> f64 {
    (10.0 * tol.abs).max(1e-8)
}

/// Distance integrated past a detected first zero.
pub fn overshoot(first_zero: f64) -> f64 {
    (0.01 * first_zero).min(0.05)
}

/// Integrate the warping problem for `profile` on `[0, r_max]`.
pub fn solve_warping(
    profile: &CurvatureProfile,
    r_max: f64,
    tol: Tolerances,
) -> Result<WarpingSolution> {
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("r_max = {r_max} must be positive")));
    }
    let (lo, hi) = profile.domain();
    if lo > 0.0 || hi < r_max {
        return Err(ProfileError::OutOfRange { r: r_max, lo, hi }.into());
    }

    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let big_g = profile.value(t).unwrap_or(f64::NAN);
        dy[0] = y[1];
        dy[1] = big_g * y[0];
        dy[2] = y[0];
    };
    let guard = zero_guard(tol);
    let mut crossed = false;
    let monitor = |step: &integrate::StepView<'_>| {
        if crossed || step.t1 <= guard || step.y1[0] > 0.0 {
            return Control::Continue;
        }
        let ta = step.t0.max(guard);
        let mut buf = [0.0; 3];
        step.eval(ta, &mut buf);
        let ga = buf[0];
        if ga <= 0.0 {
            return Control::Continue;
        }
        let root = roots::brent(
            |t| {
                step.eval(t, &mut buf);
                buf[0]
            },
            ta,
            step.t1,
            ga,
            step.y1[0],
            1e-12 * (1.0 + step.t1),
        );
        crossed = true;
        Control::Retarget(root + overshoot(root))
    };
    let opts = IvpOptions::new(tol);
    let dense =
        integrate::integrate_ivp_monitored(rhs, &[0.0, 1.0, 0.0], (0.0, r_max), &opts, monitor)?;
    let first_zero =
        integrate::locate_event(&dense, |_, y| y[0], guard, Direction::Falling)?.map(|e| e.t);
    let r_end = dense.span().1;
    Ok(WarpingSolution {
        profile: profile.clone(),
        backing: Backing::Numeric(dense),
        r_max,
        r_end,
        first_zero,
        tol,
    })
}

/// Exact space-form warping for `G ≡ k` (`k < 0` sphere, `k > 0` hyperbolic,
/// `k = 0` Euclidean), behind the same interface as a numeric solution.
pub fn closed_form_warping(k: f64, r_max: f64) -> WarpingSolution {
    let first_zero = (k < 0.0)
        .then(|| PI / (-k).sqrt())
        .filter(|&z| z <= r_max);
    let r_end = first_zero.map_or(r_max, |z| (z + overshoot(z)).min(r_max));
    WarpingSolution {
        profile: CurvatureProfile::constant(k),
        backing: Backing::ClosedForm { k },
        r_max,
        r_end,
        first_zero,
        tol: Tolerances::new(0.0, 0.0),
    }
}

fn closed_form_values(k: f64, t: f64) -> WarpingValues {
    if k < 0.0 {
        let s = (-k).sqrt();
        WarpingValues {
            g: (s * t).sin() / s,
            gp: (s * t).cos(),
            integral: (1.0 - (s * t).cos()) / (-k),
        }
    } else if k > 0.0 {
        let s = k.sqrt();
        WarpingValues {
            g: (s * t).sinh() / s,
            gp: (s * t).cosh(),
            integral: ((s * t).cosh() - 1.0) / k,
        }
    } else {
        WarpingValues {
            g: t,
            gp: 1.0,
            integral: 0.5 * t * t,
        }
    }
}

impl WarpingSolution {
    pub fn profile(&self) -> &CurvatureProfile {
        &self.profile
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Right end of the data.
    pub fn r_end(&self) -> f64 {
        self.r_end
    }

    /// First positive zero of `g` found on `[0, r_end]`. `None` means no zero
    /// up to `r_max`, not an infinite radius.
    pub fn first_zero(&self) -> Option<f64> {
        self.first_zero
    }

    /// `min(r_{-G}, r_end)`: the outer edge of the model's polar chart.
    pub fn chart_radius(&self) -> f64 {
        self.first_zero.unwrap_or(self.r_end).min(self.r_end)
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    /// Tolerances for auxiliary integrations driven by this solution; the
    /// defaults for closed forms.
    pub fn working_tolerances(&self) -> Tolerances {
        if self.tol.rel > 0.0 && self.tol.abs > 0.0 {
            self.tol
        } else {
            Tolerances::default()
        }
    }

    pub fn dense(&self) -> Option<&DenseSolution> {
        match &self.backing {
            Backing::Numeric(d) => Some(d),
            Backing::ClosedForm { .. } => None,
        }
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.backing, Backing::ClosedForm { .. })
    }

    fn check(&self, t: f64) -> Result<()> {
        if !(0.0..=self.r_end).contains(&t) {
            return Err(Error::OutOfRange {
                t,
                lo: 0.0,
                hi: self.r_end,
            });
        }
        Ok(())
    }

    /// `(g, g', ∫g)` at `t`.
    pub fn values(&self, t: f64) -> Result<WarpingValues> {
        self.check(t)?;
        match &self.backing {
            Backing::ClosedForm { k } => Ok(closed_form_values(*k, t)),
            Backing::Numeric(d) => {
                let mut y = [0.0; 3];
                d.eval_into(t, &mut y)?;
                Ok(WarpingValues {
                    g: y[0],
                    gp: y[1],
                    integral: y[2],
                })
            }
        }
    }

    /// Time derivative of the stored state, `(g', g'', g)`, taken from the
    /// dense-output polynomial rather than the right-hand side. Exact for
    /// closed forms.
    pub fn state_derivative(&self, t: f64) -> Result<WarpingValues> {
        self.check(t)?;
        match &self.backing {
            Backing::ClosedForm { k } => {
                let v = closed_form_values(*k, t);
                Ok(WarpingValues {
                    g: v.gp,
                    gp: k * v.g,
                    integral: v.g,
                })
            }
            Backing::Numeric(d) => {
                let mut y = [0.0; 3];
                d.derivative_into(t, &mut y)?;
                Ok(WarpingValues {
                    g: y[0],
                    gp: y[1],
                    integral: y[2],
                })
            }
        }
    }

    /// `g^{(order)}(t)` for `order <= 4`: orders 0 and 1 from the solution,
    /// higher orders from `g'' = G g` differentiated.
    pub fn derivative_at(&self, t: f64, order: usize) -> Result<f64> {
        let v = self.values(t)?;
        let p = &self.profile;
        Ok(match order {
            0 => v.g,
            1 => v.gp,
            2 => p.eval(t, 0)? * v.g,
            3 => p.eval(t, 1)? * v.g + p.eval(t, 0)? * v.gp,
            4 => {
                let g0 = p.eval(t, 0)?;
                p.eval(t, 2)? * v.g + 2.0 * p.eval(t, 1)? * v.gp + g0 * g0 * v.g
            }
            _ => {
                return Err(ProfileError::DerivativeUnavailable { order, max: 4 }.into());
            }
        })
    }

    /// `g''(t)` by a central difference of the interpolated `g'` with step
    /// `1e-5 (1 + t)`. Points left of the pole are reflected (`g'` is even);
    /// the stencil is shifted inward at `r_end`.
    pub fn gpp_finite_difference(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        let h = 1e-5 * (1.0 + t);
        let c = t.min(self.r_end - h);
        let gp = |s: f64| self.values(s.abs()).map(|v| v.gp);
        Ok((gp(c + h)? - gp(c - h)?) / (2.0 * h))
    }

    /// Largest `|g'' - G g| / (1 + |g|)` over `n` uniform radii of
    /// `[0, r_end]`, with `g''` from the dense-output derivative of `g'`.
    /// Returns `(residual, radius)`.
    pub fn ode_residual(&self, n: usize) -> Result<(f64, f64)> {
        let mut worst = (0.0, 0.0);
        for i in 0..n.max(2) {
            let t = self.r_end * i as f64 / (n.max(2) - 1) as f64;
            let v = self.values(t)?;
            let d = self.state_derivative(t)?;
            let res = (d.gp - self.profile.value(t)? * v.g).abs() / (1.0 + v.g.abs());
            if res > worst.0 || res.is_nan() {
                worst = (res, t);
            }
        }
        Ok(worst)
    }

    /// Replays every mesh step and returns the largest deviation from the
    /// stored data. Zero for an untouched numeric solution; zero for closed
    /// forms.
    pub fn replay_deviation(&self) -> f64 {
        match &self.backing {
            Backing::ClosedForm { .. } => 0.0,
            Backing::Numeric(d) => d.replay_deviation(|t, y, dy| {
                let big_g = self.profile.value(t).unwrap_or(f64::NAN);
                dy[0] = y[1];
                dy[1] = big_g * y[0];
                dy[2] = y[0];
            }),
        }
    }

    pub fn to_record(&self) -> Result<WarpingRecord> {
        match &self.backing {
            Backing::ClosedForm { .. } => Err(Error::InvalidArgument(
                "closed-form solutions carry no mesh to serialize".into(),
            )),
            Backing::Numeric(d) => Ok(WarpingRecord {
                format: RECORD_FORMAT.to_string(),
                version: RECORD_VERSION,
                profile: self.profile.to_spec(),
                r_max: self.r_max,
                r_end: self.r_end,
                first_zero: self.first_zero,
                tol: self.tol,
                dense: d.to_record(),
            }),
        }
    }

    pub fn from_record(rec: WarpingRecord) -> Result<Self> {
        if rec.format != RECORD_FORMAT {
            return Err(Error::Record(format!("unknown format `{}`", rec.format)));
        }
        if rec.version != RECORD_VERSION {
            return Err(Error::Record(format!("unsupported version {}", rec.version)));
        }
        let profile = CurvatureProfile::from_spec(&rec.profile)?;
        let dense = DenseSolution::from_record(rec.dense)?;
        if dense.dim() != 3 || dense.span().0 != 0.0 || dense.span().1 != rec.r_end {
            return Err(Error::Record("mesh does not match the stated span".into()));
        }
        Ok(WarpingSolution {
            profile,
            backing: Backing::Numeric(dense),
            r_max: rec.r_max,
            r_end: rec.r_end,
            first_zero: rec.first_zero,
            tol: rec.tol,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(&self.to_record()?).map_err(|e| Error::Record(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: WarpingRecord =
            serde_json::from_str(text).map_err(|e| Error::Record(e.to_string()))?;
        Self::from_record(rec)
    }
}

/// Versioned on-disk form of a numeric [`WarpingSolution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpingRecord {
    pub format: String,
    pub version: u32,
    pub profile: ProfileSpec,
    pub r_max: f64,
    pub r_end: f64,
    pub first_zero: Option<f64>,
    pub tol: Tolerances,
    pub dense: DenseRecord,
}
