//! Geodesics of `dr² + g(r)² dφ²` on a totally geodesic 2-plane.
//!
//! The integrated state is `(r, ψ, r', φ')` with `ψ = φ - φ0`, so the radial
//! motion does not depend on the starting angle at all.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{
    self, roots, Control, DenseSolution, Direction, IvpOptions, Tolerances,
};
use crate::profile::ProfileError;
use crate::radial::RadialSystem;
use crate::warping::WarpingSolution;

/// Paths are cut when `r` falls to this value.
pub const POLE_CLIP: f64 = 1e-6;

/// Gap tolerance of the oscillation check.
pub const GAP_TOL: f64 = 1e-3;

/// Position and velocity in the `(∂r, ∂φ)` frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicState {
    pub r: f64,
    pub phi: f64,
    pub dr: f64,
    pub dphi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipEdge {
    Pole,
    Outer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPath {
    dense: DenseSolution,
    phi0: f64,
    length: f64,
    clipped: Option<ClipEdge>,
    energy0: f64,
    clairaut0: f64,
}

/// One exported row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub t: f64,
    pub r: f64,
    pub phi: f64,
    pub dr: f64,
    pub dphi: f64,
    pub energy_drift: f64,
    pub clairaut_drift: f64,
}

fn energy(g: f64, s: &GeodesicState) -> f64 {
    s.dr * s.dr + g * g * s.dphi * s.dphi
}

/// Unit-speed geodesic from `(r0, phi0)` leaving at `angle` from `∂r`.
pub fn integrate_geodesic(
    ws: &WarpingSolution,
    r0: f64,
    phi0: f64,
    angle: f64,
    length: f64,
    tol: Tolerances,
) -> Result<GeodesicPath> {
    if r0 < POLE_CLIP {
        return Err(Error::PoleSingularity { r: r0 });
    }
    let upper = ws.chart_radius();
    if r0 >= upper {
        return Err(Error::OutOfRange {
            t: r0,
            lo: 0.0,
            hi: upper,
        });
    }
    let g0 = ws.values(r0)?.g;
    let start = GeodesicState {
        r: r0,
        phi: phi0,
        dr: angle.cos(),
        dphi: angle.sin() / g0,
    };
    integrate_geodesic_from(ws, start, length, tol)
}

/// Right-hand side of the geodesic equations; `false` if `g` could not be
/// evaluated.
fn geodesic_rhs(ws: &WarpingSolution, y: &[f64], dy: &mut [f64]) -> bool {
    let r = y[0].clamp(0.5 * POLE_CLIP, ws.r_end());
    let (g, gp, ok) = match ws.values(r) {
        Ok(v) => (v.g, v.gp, true),
        Err(_) => (f64::NAN, f64::NAN, false),
    };
    dy[0] = y[2];
    dy[1] = y[3];
    dy[2] = g * gp * y[3] * y[3];
    dy[3] = -2.0 * gp / g * y[2] * y[3];
    ok
}

/// Geodesic with arbitrary initial velocity.
pub fn integrate_geodesic_from(
    ws: &WarpingSolution,
    start: GeodesicState,
    length: f64,
    tol: Tolerances,
) -> Result<GeodesicPath> {
    let upper = ws.chart_radius();
    if !(start.r >= POLE_CLIP && start.r < upper) {
        return Err(if start.r < POLE_CLIP {
            Error::PoleSingularity { r: start.r }
        } else {
            Error::OutOfRange {
                t: start.r,
                lo: 0.0,
                hi: upper,
            }
        });
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::InvalidArgument(format!("length = {length} must be positive")));
    }
    let failed = Cell::new(false);
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        if !geodesic_rhs(ws, y, dy) {
            failed.set(true);
        }
    };
    let outside = |r: f64| r <= POLE_CLIP || r >= upper;
    let monitor = |step: &integrate::StepView<'_>| {
        if outside(step.y1[0]) {
            Control::Stop
        } else {
            Control::Continue
        }
    };
    // φ' = c/g² gets tiny far out; keep its error relative so that the
    // Clairaut constant stays accurate there.
    let opts = IvpOptions::new(tol).with_abs_weights(vec![1.0, 1.0, 1.0, 1e-12]);
    let y0 = [start.r, 0.0, start.dr, start.dphi];
    let dense = integrate::integrate_ivp_monitored(rhs, &y0, (0.0, length), &opts, monitor)?;
    if failed.get() {
        return Err(Error::InvalidArgument("warping evaluation failed along the path".into()));
    }
    let mut end = dense.span().1;
    let mut clipped = None;
    if outside(dense.node_state(dense.steps())[0]) {
        let pole = integrate::locate_event(&dense, |_, y| y[0] - POLE_CLIP, 0.0, Direction::Falling)?;
        let outer = integrate::locate_event(&dense, |_, y| y[0] - upper, 0.0, Direction::Rising)?;
        for (ev, edge) in [(pole, ClipEdge::Pole), (outer, ClipEdge::Outer)] {
            if let Some(ev) = ev {
                if ev.t <= end {
                    end = ev.t;
                    clipped = Some(edge);
                }
            }
        }
    }
    let g0 = ws.values(start.r)?.g;
    Ok(GeodesicPath {
        dense,
        phi0: start.phi,
        length: end,
        clipped,
        energy0: energy(g0, &start),
        clairaut0: g0 * g0 * start.dphi,
    })
}

impl GeodesicPath {
    /// Parameter length actually covered (shorter than requested when
    /// clipped).
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn clipped(&self) -> Option<ClipEdge> {
        self.clipped
    }

    pub fn energy0(&self) -> f64 {
        self.energy0
    }

    pub fn clairaut0(&self) -> f64 {
        self.clairaut0
    }

    pub fn dense(&self) -> &DenseSolution {
        &self.dense
    }

    /// `ψ(t) = φ(t) - φ0`.
    pub fn angle_offset(&self, t: f64) -> Result<f64> {
        Ok(self.raw(t)?[1])
    }

    fn raw(&self, t: f64) -> Result<[f64; 4]> {
        if !(0.0..=self.length).contains(&t) {
            return Err(Error::OutOfRange {
                t,
                lo: 0.0,
                hi: self.length,
            });
        }
        let mut y = [0.0; 4];
        self.dense.eval_into(t, &mut y)?;
        Ok(y)
    }

    pub fn state(&self, t: f64) -> Result<GeodesicState> {
        let y = self.raw(t)?;
        Ok(GeodesicState {
            r: y[0],
            phi: self.phi0 + y[1],
            dr: y[2],
            dphi: y[3],
        })
    }

    /// Mesh nodes inside the covered span, plus its end point.
    pub fn sample_times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self
            .dense
            .nodes()
            .iter()
            .copied()
            .take_while(|&t| t < self.length)
            .collect();
        ts.push(self.length);
        ts
    }

    /// `(energy drift, Clairaut drift)` at `t`.
    pub fn drifts(&self, ws: &WarpingSolution, t: f64) -> Result<(f64, f64)> {
        let s = self.state(t)?;
        let g = ws.values(s.r)?.g;
        Ok((
            (energy(g, &s) - self.energy0).abs(),
            (g * g * s.dphi - self.clairaut0).abs(),
        ))
    }

    /// Largest drifts over the sample times.
    pub fn max_drifts(&self, ws: &WarpingSolution) -> Result<(f64, f64)> {
        let mut worst = (0.0f64, 0.0f64);
        for t in self.sample_times() {
            let (e, c) = self.drifts(ws, t)?;
            worst = (worst.0.max(e), worst.1.max(c));
        }
        Ok(worst)
    }

    pub fn rows(&self, ws: &WarpingSolution) -> Result<Vec<PathRow>> {
        self.sample_times()
            .into_iter()
            .map(|t| {
                let s = self.state(t)?;
                let (energy_drift, clairaut_drift) = self.drifts(ws, t)?;
                Ok(PathRow {
                    t,
                    r: s.r,
                    phi: s.phi,
                    dr: s.dr,
                    dphi: s.dphi,
                    energy_drift,
                    clairaut_drift,
                })
            })
            .collect()
    }

    /// End state with the velocity reversed.
    pub fn reversed_end(&self) -> Result<GeodesicState> {
        let s = self.state(self.length)?;
        Ok(GeodesicState {
            dr: -s.dr,
            dphi: -s.dphi,
            ..s
        })
    }
}

/// Largest `|(u∘γ)'' - H(r) u|` along a path, `u = α_A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlongPathReport {
    pub samples: usize,
    pub step: f64,
    pub max_residual: f64,
    pub argmax_t: f64,
    pub pass: bool,
}

/// Times and radii at `t + k h`, `k = -2..=2`. The dense output is only
/// continuous in its first derivative up to the local error, which a
/// second difference with a small step magnifies, so the five points come
/// from one fixed-step integration started at `t - 2h` instead.
fn stencil(ws: &WarpingSolution, path: &GeodesicPath, t: f64, h: f64) -> Result<[(f64, f64); 5]> {
    let t0 = t - 2.0 * h;
    let y0 = path.raw(t0)?;
    let failed = Cell::new(false);
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        if !geodesic_rhs(ws, y, dy) {
            failed.set(true);
        }
    };
    let mut opts = IvpOptions::new(Tolerances::new(1.0, 1.0)).with_max_step(h);
    opts.initial_step = Some(h);
    let sol = integrate::integrate_ivp(rhs, &y0, (t0, t + 2.0 * h), &opts)?;
    if failed.get() || sol.steps() != 4 {
        return Err(Error::InvalidArgument(format!("stencil integration failed at t = {t}")));
    }
    let mut out = [(0.0, 0.0); 5];
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = (sol.nodes()[k], sol.node_state(k)[0]);
    }
    Ok(out)
}

/// Second divided difference on three possibly uneven points.
fn second_difference(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    2.0 * ((c.1 - b.1) / (c.0 - b.0) - (b.1 - a.1) / (b.0 - a.0)) / (c.0 - a.0)
}

/// `(u∘γ)''` by central differences with step `h = 1e-4 · length`,
/// extrapolated against step `2h`, at 64 interior times.
pub fn hessian_along_geodesic(
    sys: &RadialSystem<'_>,
    path: &GeodesicPath,
    tol: f64,
) -> Result<AlongPathReport> {
    let len = path.length();
    let h = 1e-4 * len;
    let ws = sys.warping();
    let n = 64;
    let mut worst = (0.0f64, 0.0);
    for i in 0..n {
        let t = 2.0 * h + (len - 4.0 * h) * (i as f64 + 0.5) / n as f64;
        let pts = stencil(ws, path, t, h)?;
        if let Some(&(_, r)) = pts.iter().find(|p| sys.r_star().is_some_and(|rs| p.1 >= rs)) {
            return Err(Error::DomainExceeded { t: r, denominator: 0.0 });
        }
        // I near the centre radius from its Taylor series, which is smooth
        // where the interpolated I is not.
        let center = pts[2].1;
        let v = ws.values(center)?;
        let mut series = vec![v.integral, v.g, v.gp];
        for order in 2..=4 {
            match ws.derivative_at(center, order) {
                Ok(d) => series.push(d),
                Err(Error::Profile(ProfileError::DerivativeUnavailable { .. })) => break,
                Err(e) => return Err(e),
            }
        }
        let u = |r: f64| {
            let d = r - center;
            let (mut sum, mut term) = (0.0, 1.0);
            for (k, c) in series.iter().enumerate() {
                if k > 0 {
                    term *= d / k as f64;
                }
                sum += c * term;
            }
            sys.a() * sum + sys.b()
        };
        let mut vals = [(0.0, 0.0); 5];
        for (v, &(s, r)) in vals.iter_mut().zip(&pts) {
            *v = (s, u(r));
        }
        let d_h = second_difference(vals[1], vals[2], vals[3]);
        let d_2h = second_difference(vals[0], vals[2], vals[4]);
        let upp = (4.0 * d_h - d_2h) / 3.0;
        let (r, u0) = (pts[2].1, vals[2].1);
        let res = (upp - sys.coefficient_h(r)? * u0).abs();
        if res > worst.0 || res.is_nan() {
            worst = (res, t);
        }
    }
    Ok(AlongPathReport {
        samples: n,
        step: h,
        max_residual: worst.0,
        argmax_t: worst.1,
        pass: worst.0 <= tol,
    })
}

/// Critical points of `u∘γ` and the gaps between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub half_period: f64,
    pub critical_times: Vec<f64>,
    pub gaps: Vec<f64>,
    /// `u∘γ` vanishes to working precision on the whole path.
    pub identically_critical: bool,
    pub pass: bool,
}

impl OscillationReport {
    /// Largest `|gap - π/√k|`.
    pub fn max_gap_error(&self) -> f64 {
        self.gaps
            .iter()
            .map(|g| (g - self.half_period).abs())
            .fold(0.0, f64::max)
    }
}

/// Along a geodesic of the constant-curvature model `G ≡ -k`, `u = α_A`
/// satisfies `y'' = -k y`, so its critical points are `π/√k` apart.
pub fn oscillation_check(
    ws: &WarpingSolution,
    a: f64,
    path: &GeodesicPath,
) -> Result<OscillationReport> {
    let big_g = ws.profile().as_constant().ok_or(Error::NotConstantProfile)?;
    if big_g >= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "oscillation needs positive curvature, got G = {big_g}"
        )));
    }
    let half_period = std::f64::consts::PI / (-big_g).sqrt();
    if path.length() < half_period {
        return Err(Error::PathTooShort {
            length: path.length(),
            required: half_period,
        });
    }
    let u = |t: f64| -> Result<f64> { Ok(a * ws.values(path.state(t)?.r)?.integral + 1.0) };
    let len = path.length();
    let h = 1e-5 * (1.0 + len);
    let du = |t: f64| -> Result<f64> { Ok((u(t + h)? - u(t - h)?) / (2.0 * h)) };

    let n = 4000;
    let ts: Vec<f64> = (0..=n).map(|i| h + (len - 2.0 * h) * i as f64 / n as f64).collect();
    let us = ts.iter().map(|&t| u(t)).collect::<Result<Vec<_>>>()?;
    let scale = us.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let spread = us.iter().fold(0.0f64, |m, v| m.max((v - us[0]).abs()));
    if scale < 1e-10 || spread < 1e-10 {
        return Ok(OscillationReport {
            half_period,
            critical_times: Vec::new(),
            gaps: Vec::new(),
            identically_critical: true,
            pass: true,
        });
    }

    let ds = ts.iter().map(|&t| du(t)).collect::<Result<Vec<_>>>()?;
    let mut critical_times = Vec::new();
    for i in 0..n {
        let (fa, fb) = (ds[i], ds[i + 1]);
        if fa == 0.0 || fa.signum() != fb.signum() {
            let t = roots::brent(
                |t| du(t).unwrap_or(f64::NAN),
                ts[i],
                ts[i + 1],
                fa,
                fb,
                1e-12 * (1.0 + len),
            );
            if critical_times.last().is_none_or(|&last: &f64| t - last > 1e-9) {
                critical_times.push(t);
            }
        }
    }
    let gaps: Vec<f64> = critical_times.windows(2).map(|w| w[1] - w[0]).collect();
    let pass = gaps.iter().all(|&g| g <= half_period + GAP_TOL);
    Ok(OscillationReport {
        half_period,
        critical_times,
        gaps,
        identically_critical: false,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::parse_profile;
    use crate::warping::solve_warping;
    use std::f64::consts::PI;

    fn ws(text: &str, r_max: f64) -> WarpingSolution {
        solve_warping(&parse_profile(text).unwrap(), r_max, Tolerances::default()).unwrap()
    }

    const TOL: Tolerances = Tolerances::new(1e-12, 1e-12);

    #[test]
    fn radial_ray_in_the_plane() {
        let flat = ws("0", 20.0);
        let p = integrate_geodesic(&flat, 1.0, 0.3, 0.0, 5.0, TOL).unwrap();
        for i in 0..=50 {
            let t = 0.1 * i as f64;
            let s = p.state(t).unwrap();
            assert!((s.r - (1.0 + t)).abs() < 1e-10);
            assert_eq!(s.phi, 0.3);
        }
    }

    #[test]
    fn tangent_line() {
        let flat = ws("0", 20.0);
        let p = integrate_geodesic(&flat, 1.0, 0.0, PI / 2.0, 5.0, TOL).unwrap();
        assert!((p.clairaut0() - 1.0).abs() < 1e-15);
        for i in 0..=50 {
            let t = 0.1 * i as f64;
            assert!((p.state(t).unwrap().r - (1.0 + t * t).sqrt()).abs() < 1e-7);
        }
        assert!(p.clipped().is_none());
    }

    #[test]
    fn equator_closes() {
        let sphere = ws("const:-1", 4.0);
        let p = integrate_geodesic(&sphere, PI / 2.0, 0.0, PI / 2.0, 2.0 * PI, TOL).unwrap();
        let s = p.state(2.0 * PI).unwrap();
        assert!((s.r - PI / 2.0).abs() < 1e-6);
        assert!((s.phi - 2.0 * PI).abs() < 1e-6);
        let (e, c) = p.max_drifts(&sphere).unwrap();
        assert!(e < 1e-8 && c < 1e-8);
    }

    #[test]
    fn clipping() {
        let flat = ws("0", 5.0);
        let p = integrate_geodesic(&flat, 1.0, 0.0, PI, 5.0, TOL).unwrap();
        assert_eq!(p.clipped(), Some(ClipEdge::Pole));
        assert!((p.length() - (1.0 - POLE_CLIP)).abs() < 1e-9);
        let p = integrate_geodesic(&flat, 1.0, 0.0, 0.0, 10.0, TOL).unwrap();
        assert_eq!(p.clipped(), Some(ClipEdge::Outer));
        assert!((p.length() - 4.0).abs() < 1e-9);
        assert!(matches!(
            integrate_geodesic(&flat, 1e-7, 0.0, 0.0, 1.0, TOL),
            Err(Error::PoleSingularity { .. })
        ));
    }

    #[test]
    fn shift_equivariance_is_exact() {
        let bump = ws("-1 - 0.3*r^2", 3.0);
        let a = integrate_geodesic(&bump, 1.0, 0.0, 0.7, 4.0, TOL).unwrap();
        let b = integrate_geodesic(&bump, 1.0, 1.25, 0.7, 4.0, TOL).unwrap();
        for t in a.sample_times() {
            let (sa, sb) = (a.state(t).unwrap(), b.state(t).unwrap());
            assert_eq!(sa.r.to_bits(), sb.r.to_bits());
            assert_eq!(a.angle_offset(t).unwrap(), b.angle_offset(t).unwrap());
        }
    }

    #[test]
    fn euclidean_along_path_identity() {
        let flat = ws("0", 20.0);
        let s = RadialSystem::normalized(&flat, 1.0).unwrap();
        let p = integrate_geodesic(&flat, 1.0, 0.0, 1.0, 6.0, TOL).unwrap();
        let rep = hessian_along_geodesic(&s, &p, 1e-6).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn equator_u_vanishes() {
        let sphere = ws("const:-1", 4.0);
        let s = RadialSystem::normalized(&sphere, -1.0).unwrap();
        let p = integrate_geodesic(&sphere, PI / 2.0, 0.0, PI / 2.0, 6.0, TOL).unwrap();
        let rep = hessian_along_geodesic(&s, &p, 1e-8).unwrap();
        assert!(rep.pass, "{rep:?}");
        let osc = oscillation_check(&sphere, -1.0, &p).unwrap();
        assert!(osc.identically_critical && osc.pass);
    }

    #[test]
    fn oscillation_gaps() {
        for text in ["const:-1", "const:-4"] {
            let w = ws(text, 4.0);
            let p = integrate_geodesic(&w, 1.0, 0.0, PI / 4.0, 10.0, TOL).unwrap();
            let rep = oscillation_check(&w, -1.0, &p).unwrap();
            assert!(rep.gaps.len() >= 2, "{rep:?}");
            assert!(rep.max_gap_error() < 1e-3, "{rep:?}");
            assert!(rep.pass);
        }
    }

    #[test]
    fn oscillation_preconditions() {
        let flat = ws("0", 5.0);
        let p = integrate_geodesic(&flat, 1.0, 0.0, 1.0, 2.0, TOL).unwrap();
        assert!(oscillation_check(&flat, 1.0, &p).is_err());
        let bump = ws("-1 - 0.3*r^2", 3.0);
        let p = integrate_geodesic(&bump, 1.0, 0.0, 1.0, 2.0, TOL).unwrap();
        assert!(matches!(oscillation_check(&bump, 1.0, &p), Err(Error::NotConstantProfile)));
        let sphere = ws("const:-1", 4.0);
        let p = integrate_geodesic(&sphere, 1.0, 0.0, 1.0, 2.0, TOL).unwrap();
        assert!(matches!(oscillation_check(&sphere, -1.0, &p), Err(Error::PathTooShort { .. })));
    }
}
