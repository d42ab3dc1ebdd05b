//! Radial curvature profiles `G(r)`.
//!
//! A profile is a constant, an expression in `r` with symbolic derivatives,
//! or a table of samples with monotone cubic interpolation. Constant and
//! expression profiles must be even; this is checked by sampling when they
//! are parsed.

mod expr;
mod parse;
mod table;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use expr::{Expr, Func};
pub use parse::parse_expr;
pub use table::Table;

/// Highest derivative order available for constant and expression profiles.
pub const MAX_DERIVATIVE_ORDER: usize = 4;

/// Audit points for evenness and division checks: 32 points on `(0, 4]`,
/// each compared with its mirror image.
pub const AUDIT_POINTS: usize = 32;
pub const AUDIT_RADIUS: f64 = 4.0;
pub const EVENNESS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("syntax error at offset {pos}: expected one of {}", expected.join(", "))]
    Syntax { pos: usize, expected: Vec<String> },
    #[error("profile is not even: |G(r) - G(-r)| = {diff:e} at r = {r}")]
    NotEven { r: f64, diff: f64 },
    #[error("unsupported function `{name}` at offset {pos}")]
    UnsupportedFunction { name: String, pos: usize },
    #[error("division by zero at r = {r}")]
    DivisionByZero { r: f64 },
    #[error("profile is not finite at r = {r}")]
    NonFinite { r: f64 },
    #[error("derivative of order {order} unavailable (max {max})")]
    DerivativeUnavailable { order: usize, max: usize },
    #[error("r = {r} outside the tabulated range [{lo}, {hi}]")]
    OutOfRange { r: f64, lo: f64, hi: f64 },
    #[error("invalid table: {0}")]
    InvalidTable(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    Constant(f64),
    /// `derivatives[q]` is the q-th symbolic derivative; `derivatives[0]` is
    /// the parsed tree itself.
    Expression { derivatives: Vec<Expr> },
    Tabulated(Table),
}

/// An even radial curvature function `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureProfile {
    kind: ProfileKind,
    source: String,
    evenness_checked: bool,
}

/// Parse a profile from text.
///
/// `const:<number>` forces a constant profile; anything else is an
/// expression in `r`. Expressions without `r` are folded to constants.
pub fn parse_profile(text: &str) -> Result<CurvatureProfile, ProfileError> {
    let trimmed = text.trim();
    if let Some(rest) = trimmed.strip_prefix("const:") {
        let value = rest.trim();
        let k = value
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or(ProfileError::Syntax {
                pos: text.find("const:").unwrap_or(0) + 6,
                expected: vec!["number".into()],
            })?;
        return Ok(CurvatureProfile::constant_with_source(k, trimmed.to_string()));
    }

    let ast = parse_expr(trimmed)?;
    audit_expr(&ast)?;
    if !ast.contains_var() {
        let k = ast.eval(0.0);
        return Ok(CurvatureProfile::constant_with_source(k, trimmed.to_string()));
    }
    let mut derivatives = Vec::with_capacity(MAX_DERIVATIVE_ORDER + 1);
    derivatives.push(ast);
    for q in 1..=MAX_DERIVATIVE_ORDER {
        let next = derivatives[q - 1].derivative();
        derivatives.push(next);
    }
    Ok(CurvatureProfile {
        kind: ProfileKind::Expression { derivatives },
        source: trimmed.to_string(),
        evenness_checked: true,
    })
}

/// Sample points used by the parse-time audit, `r = 4 i / 32` for `i = 0..=32`.
pub fn audit_points() -> impl Iterator<Item = f64> {
    (0..=AUDIT_POINTS).map(|i| AUDIT_RADIUS * i as f64 / AUDIT_POINTS as f64)
}

fn audit_expr(ast: &Expr) -> Result<(), ProfileError> {
    for r in audit_points() {
        let plus = ast
            .eval_checked(r)
            .map_err(|_| ProfileError::DivisionByZero { r })?;
        let minus = ast
            .eval_checked(-r)
            .map_err(|_| ProfileError::DivisionByZero { r: -r })?;
        if !plus.is_finite() {
            return Err(ProfileError::NonFinite { r });
        }
        if !minus.is_finite() {
            return Err(ProfileError::NonFinite { r: -r });
        }
        let diff = (plus - minus).abs();
        if diff > EVENNESS_TOL * plus.abs().max(1.0) {
            return Err(ProfileError::NotEven { r, diff });
        }
    }
    Ok(())
}

impl CurvatureProfile {
    pub fn constant(k: f64) -> Self {
        Self::constant_with_source(k, format!("const:{k:?}"))
    }

    fn constant_with_source(k: f64, source: String) -> Self {
        CurvatureProfile {
            kind: ProfileKind::Constant(k),
            source,
            evenness_checked: true,
        }
    }

    /// Profile from samples `(r, G(r))` with strictly increasing `r`.
    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self, ProfileError> {
        let table = Table::new(samples)?;
        Ok(CurvatureProfile {
            source: String::new(),
            kind: ProfileKind::Tabulated(table),
            evenness_checked: false,
        })
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    /// The text this profile was parsed from; empty for tables.
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn evenness_checked(&self) -> bool {
        self.evenness_checked
    }

    pub fn max_derivative_order(&self) -> usize {
        match self.kind {
            ProfileKind::Tabulated(_) => 0,
            _ => MAX_DERIVATIVE_ORDER,
        }
    }

    /// `Some(k)` when `G ≡ k`.
    pub fn as_constant(&self) -> Option<f64> {
        match self.kind {
            ProfileKind::Constant(k) => Some(k),
            _ => None,
        }
    }

    /// Range of `r` on which the profile can be evaluated.
    pub fn domain(&self) -> (f64, f64) {
        match &self.kind {
            ProfileKind::Tabulated(t) => t.range(),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// `G^{(order)}(r)`.
    pub fn eval(&self, r: f64, order: usize) -> Result<f64, ProfileError> {
        let max = self.max_derivative_order();
        if order > max {
            return Err(ProfileError::DerivativeUnavailable { order, max });
        }
        match &self.kind {
            ProfileKind::Constant(k) => Ok(if order == 0 { *k } else { 0.0 }),
            ProfileKind::Expression { derivatives } => Ok(derivatives[order].eval(r)),
            ProfileKind::Tabulated(t) => t.eval(r),
        }
    }

    /// Plain evaluation `G(r)`.
    pub fn value(&self, r: f64) -> Result<f64, ProfileError> {
        self.eval(r, 0)
    }

    /// Largest `|G|` over `n` uniform samples of `[a, b]`.
    pub fn max_abs_on(&self, a: f64, b: f64, n: usize) -> Result<f64, ProfileError> {
        let mut best = 0.0f64;
        for i in 0..n.max(2) {
            let r = a + (b - a) * i as f64 / (n.max(2) - 1) as f64;
            best = best.max(self.value(r)?.abs());
        }
        Ok(best)
    }

    pub fn to_spec(&self) -> ProfileSpec {
        match &self.kind {
            ProfileKind::Tabulated(t) => ProfileSpec::Tabulated {
                samples: t.samples().to_vec(),
            },
            _ => ProfileSpec::Text {
                text: self.source.clone(),
            },
        }
    }

    pub fn from_spec(spec: &ProfileSpec) -> Result<Self, ProfileError> {
        match spec {
            ProfileSpec::Text { text } => parse_profile(text),
            ProfileSpec::Tabulated { samples } => Self::tabulated(samples.clone()),
        }
    }
}

impl fmt::Display for CurvatureProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ProfileKind::Tabulated(t) => write!(f, "table[{} samples]", t.samples().len()),
            _ => f.write_str(&self.source),
        }
    }
}

/// Serializable description from which a profile is rebuilt exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSpec {
    Text { text: String },
    Tabulated { samples: Vec<(f64, f64)> },
}

/// Profiles shipped with the tool, used by sweeps and test matrices.
pub fn builtin_profiles() -> Vec<(&'static str, &'static str)> {
    vec![
        ("sphere", "const:-1"),
        ("sphere_k4", "const:-4"),
        ("sphere_k025", "const:-0.25"),
        ("euclidean", "0"),
        ("hyperbolic", "const:1"),
        ("hyperbolic_k4", "const:4"),
        ("bump", "-1 - 0.3*r^2"),
        ("wave", "-1 + 0.5*cos(r)"),
        ("well", "1 - 2*exp(-r^2)"),
    ]
}
