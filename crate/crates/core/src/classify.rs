//! Which case a `(profile, A)` pair lands in, and the smooth-extension
//! conditions at the first zero of `g`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::ProfileError;
use crate::radial::RadialSystem;
use crate::warping::WarpingSolution;

/// Default threshold for `|H(r_{-G})|` and the derivative checks.
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// No zero of `g` up to `r_max`.
    CompleteModelUpToRMax,
    TwistedSphereCandidate,
    SmoothRoundExtension,
    Inadmissible,
}

impl Case {
    pub fn as_str(self) -> &'static str {
        match self {
            Case::CompleteModelUpToRMax => "CompleteModelUpToRMax",
            Case::TwistedSphereCandidate => "TwistedSphereCandidate",
            Case::SmoothRoundExtension => "SmoothRoundExtension",
            Case::Inadmissible => "Inadmissible",
        }
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub profile: String,
    #[serde(rename = "A")]
    pub a: f64,
    pub case: Case,
    pub r_minus_g: Option<f64>,
    pub r_star: Option<f64>,
    pub h_at_boundary: Option<f64>,
    pub gprime_at_boundary: Option<f64>,
    /// `|g^{(2k)}(r_{-G})|` keyed by order.
    pub even_derivative_residuals: BTreeMap<usize, f64>,
    /// Whether `g'(r_{-G}) ≠ 0` beyond `tol`.
    pub gprime_nonzero: Option<bool>,
    /// `|H(r_{-G})| > tol` and `g'(r_{-G}) ≠ 0` disagree.
    pub criteria_disagree: bool,
    pub notes: Vec<String>,
}

/// `g^{(k)}(r_{-G})` for `k = 1..=4`. `g''` comes from finite differences of
/// the interpolated `g'` (the recurrence makes it zero by construction);
/// orders 3 and 4 use the recurrence and are omitted for tabulated profiles.
pub fn boundary_derivatives(ws: &WarpingSolution) -> Result<BTreeMap<usize, f64>> {
    let z = ws
        .first_zero()
        .ok_or_else(|| Error::InvalidArgument("g has no zero up to r_max".into()))?;
    let mut out = BTreeMap::new();
    out.insert(1, ws.values(z)?.gp);
    out.insert(2, ws.gpp_finite_difference(z)?);
    for order in 3..=4 {
        match ws.derivative_at(z, order) {
            Ok(v) => {
                out.insert(order, v);
            }
            Err(Error::Profile(ProfileError::DerivativeUnavailable { .. })) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

pub fn classify(ws: &WarpingSolution, a: f64, tol: f64) -> Result<ClassificationReport> {
    let sys = RadialSystem::normalized(ws, a)?;
    let mut report = ClassificationReport {
        profile: ws.profile().to_string(),
        a,
        case: Case::Inadmissible,
        r_minus_g: ws.first_zero(),
        r_star: sys.r_star(),
        h_at_boundary: None,
        gprime_at_boundary: None,
        even_derivative_residuals: BTreeMap::new(),
        gprime_nonzero: None,
        criteria_disagree: false,
        notes: Vec::new(),
    };
    if let Some(t) = sys.admissibility().removable {
        report
            .notes
            .push(format!("removable zero of A I + 1 at r = {t:.12}"));
    }
    if !sys.is_admissible() {
        report.notes.push("R* <= r_{-G}".into());
        return Ok(report);
    }
    let Some(z) = ws.first_zero() else {
        report.case = Case::CompleteModelUpToRMax;
        report
            .notes
            .push(format!("no zero of g up to r_max = {}", ws.r_max()));
        return Ok(report);
    };

    let h = match sys.coefficient_h(z) {
        Ok(h) => h,
        Err(Error::DomainExceeded { denominator, .. }) => {
            report.notes.push(format!(
                "A I + 1 = {denominator:e} at r_{{-G}}: vanishes to working precision"
            ));
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    let derivs = boundary_derivatives(ws)?;
    let gp = derivs[&1];
    report.h_at_boundary = Some(h);
    report.gprime_at_boundary = Some(gp);
    let h_nonzero = h.abs() > tol;
    let gp_nonzero = gp.abs() > tol;
    report.gprime_nonzero = Some(gp_nonzero);
    report.criteria_disagree = h_nonzero != gp_nonzero;
    for (&order, &v) in derivs.iter().filter(|(k, _)| *k % 2 == 0) {
        report.even_derivative_residuals.insert(order, v.abs());
    }
    if !h_nonzero {
        // g and g' cannot vanish together for a nontrivial solution, so
        // this only happens when the integration has gone wrong.
        return Err(Error::InvalidArgument(format!(
            "H(r_{{-G}}) = {h:e} and g'(r_{{-G}}) = {gp:e}: degenerate boundary"
        )));
    }
    report.case = Case::TwistedSphereCandidate;
    let smooth = (gp + 1.0).abs() <= tol
        && report.even_derivative_residuals.len() >= 2
        && report.even_derivative_residuals.values().all(|&v| v <= tol);
    if smooth {
        report.case = Case::SmoothRoundExtension;
    } else if !derivs.contains_key(&4) {
        report
            .notes
            .push("fourth derivative unavailable; smooth extension not checked".into());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::Tolerances;
    use crate::profile::{parse_profile, CurvatureProfile};
    use crate::warping::solve_warping;
    use std::f64::consts::PI;

    fn ws(text: &str, r_max: f64) -> WarpingSolution {
        solve_warping(&parse_profile(text).unwrap(), r_max, Tolerances::default()).unwrap()
    }

    #[test]
    fn round_sphere_extends_smoothly() {
        let w = ws("const:-1", 4.0);
        let rep = classify(&w, -1.0, DEFAULT_TOL).unwrap();
        assert_eq!(rep.case, Case::SmoothRoundExtension, "{rep:?}");
        assert!((rep.r_minus_g.unwrap() - PI).abs() < 1e-8);
        assert!((rep.gprime_at_boundary.unwrap() + 1.0).abs() < 1e-7);
        assert!((rep.h_at_boundary.unwrap() + 1.0).abs() < 1e-7);
        assert!(rep.even_derivative_residuals[&2] < 1e-6);
        assert!(rep.even_derivative_residuals[&4] < 1e-6);
        assert_eq!(rep.gprime_nonzero, Some(true));
        assert!(!rep.criteria_disagree);
    }

    #[test]
    fn hyperbolic_is_complete() {
        let rep = classify(&ws("const:1", 5.0), 1.0, DEFAULT_TOL).unwrap();
        assert_eq!(rep.case, Case::CompleteModelUpToRMax);
    }

    #[test]
    fn steep_negative_a_is_inadmissible() {
        let rep = classify(&ws("const:-1", 4.0), -0.6, DEFAULT_TOL).unwrap();
        assert_eq!(rep.case, Case::Inadmissible);
        assert!(rep.r_star.unwrap() < rep.r_minus_g.unwrap());
    }

    #[test]
    fn bump_is_a_twisted_candidate_only() {
        let rep = classify(&ws("-1 - 0.3*r^2", 4.0), 1.0, DEFAULT_TOL).unwrap();
        assert_eq!(rep.case, Case::TwistedSphereCandidate, "{rep:?}");
        assert!(rep.r_minus_g.unwrap() < PI);
        assert!((rep.gprime_at_boundary.unwrap() + 1.0).abs() > 1e-3);
    }

    #[test]
    fn boundary_derivative_tables() {
        let d = boundary_derivatives(&ws("const:-1", 4.0)).unwrap();
        for (k, want) in [(1, -1.0), (2, 0.0), (3, 1.0), (4, 0.0)] {
            assert!((d[&k] - want).abs() < 1e-6, "order {k}: {}", d[&k]);
        }
        let d = boundary_derivatives(&ws("const:-4", 4.0)).unwrap();
        assert!((d[&1] + 1.0).abs() < 1e-6 && d[&2].abs() < 1e-6);

        let samples = (0..=80).map(|i| (0.05 * i as f64, -1.0)).collect();
        let p = CurvatureProfile::tabulated(samples).unwrap();
        let w = solve_warping(&p, 4.0, Tolerances::default()).unwrap();
        let d = boundary_derivatives(&w).unwrap();
        assert_eq!(d.keys().copied().collect::<Vec<_>>(), vec![1, 2]);
        assert!((d[&1] + 1.0).abs() < 1e-4);

        assert!(boundary_derivatives(&ws("const:1", 2.0)).is_err());
    }

    #[test]
    fn report_serializes_case_as_string() {
        let rep = classify(&ws("const:-1", 4.0), -1.0, DEFAULT_TOL).unwrap();
        let v = serde_json::to_value(&rep).unwrap();
        assert_eq!(v["case"], "SmoothRoundExtension");
    }
}
