//! Explicit adaptive integration with dense output and event location.
//!
//! The method is the Dormand–Prince 5(4) pair with a fourth-order continuous
//! extension. Accepted steps are stored together with their interpolation
//! coefficients, so a [`DenseSolution`] can be evaluated anywhere on its span
//! and events can be located without re-integrating.

mod dopri;
pub mod roots;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dopri::ORDER;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("right-hand side is not finite at t = {t} (state {state:?})")]
    NonFiniteRhs { t: f64, state: Vec<f64> },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
    #[error("t = {t} outside the integrated span [{t0}, {t1}]")]
    OutOfSpan { t: f64, t0: f64, t1: f64 },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("corrupt dense solution: {0}")]
    Corrupt(String),
}

/// Relative and absolute error tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerances {
    pub const fn new(rel: f64, abs: f64) -> Self {
        Tolerances { rel, abs }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Tolerances {
            rel: self.rel * factor,
            abs: self.abs * factor,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances::new(1e-12, 1e-12)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IvpOptions {
    pub tol: Tolerances,
    pub max_step: f64,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
    /// Per-component multipliers of the absolute tolerance.
    pub abs_weights: Option<Vec<f64>>,
}

impl IvpOptions {
    pub fn new(tol: Tolerances) -> Self {
        IvpOptions {
            tol,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
            initial_step: None,
            abs_weights: None,
        }
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    pub fn with_abs_weights(mut self, weights: Vec<f64>) -> Self {
        self.abs_weights = Some(weights);
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// What an integration monitor wants after seeing an accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Control {
    Continue,
    Stop,
    /// Move the end of the span to the given time (never later than the
    /// current end). Integration stops at once if it is already past it.
    Retarget(f64),
}

/// An accepted step as seen by a monitor.
pub struct StepView<'a> {
    pub t0: f64,
    pub t1: f64,
    pub y0: &'a [f64],
    pub y1: &'a [f64],
    coeffs: &'a [f64],
}

impl StepView<'_> {
    /// Dense-output state at `t` in `[t0, t1]`.
    pub fn eval(&self, t: f64, out: &mut [f64]) {
        if t == self.t1 {
            out.copy_from_slice(self.y1);
            return;
        }
        let theta = (t - self.t0) / (self.t1 - self.t0);
        dopri::interpolate(self.y0, self.coeffs, theta, out);
    }
}

/// Accepted-step mesh with per-step interpolation coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSolution {
    dim: usize,
    nodes: Vec<f64>,
    /// `(nodes.len()) * dim`, row-major.
    states: Vec<f64>,
    /// `(nodes.len() - 1) * 4 * dim`.
    coeffs: Vec<f64>,
    tol: Tolerances,
    stats: Stats,
}

impl DenseSolution {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn span(&self) -> (f64, f64) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node_state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    fn step_coeffs(&self, i: usize) -> &[f64] {
        let w = 4 * self.dim;
        &self.coeffs[i * w..(i + 1) * w]
    }

    fn check_span(&self, t: f64) -> Result<(), IntegrateError> {
        let (t0, t1) = self.span();
        if !(t0..=t1).contains(&t) {
            return Err(IntegrateError::OutOfSpan { t, t0, t1 });
        }
        Ok(())
    }

    /// Index of the step containing `t`, or `Err(node)` when `t` is exactly
    /// a mesh node.
    fn locate(&self, t: f64) -> Result<usize, usize> {
        let i = self.nodes.partition_point(|&x| x <= t) - 1;
        if self.nodes[i] == t {
            Err(i)
        } else {
            Ok(i)
        }
    }

    /// State at `t`. Exact at mesh nodes.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<(), IntegrateError> {
        self.check_span(t)?;
        match self.locate(t) {
            Err(node) => out.copy_from_slice(self.node_state(node)),
            Ok(i) => {
                let h = self.nodes[i + 1] - self.nodes[i];
                let theta = (t - self.nodes[i]) / h;
                dopri::interpolate(self.node_state(i), self.step_coeffs(i), theta, out);
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>, IntegrateError> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    /// Time derivative of the interpolant at `t`. At a node this is the
    /// right-hand side evaluated there.
    pub fn derivative_into(&self, t: f64, out: &mut [f64]) -> Result<(), IntegrateError> {
        self.check_span(t)?;
        let (i, theta) = match self.locate(t) {
            Err(node) if node == self.steps() => (node - 1, 1.0),
            Err(node) => (node, 0.0),
            Ok(i) => (i, (t - self.nodes[i]) / (self.nodes[i + 1] - self.nodes[i])),
        };
        let h = self.nodes[i + 1] - self.nodes[i];
        dopri::interpolate_derivative(self.step_coeffs(i), h, theta, out);
        Ok(())
    }

    pub fn derivative(&self, t: f64) -> Result<Vec<f64>, IntegrateError> {
        let mut out = vec![0.0; self.dim];
        self.derivative_into(t, &mut out)?;
        Ok(out)
    }

    /// Re-run every stored step from its stored start state and report the
    /// largest deviation from the stored end state and coefficients. A mesh
    /// produced by [`integrate_ivp`] with the same right-hand side replays
    /// with deviation exactly zero.
    pub fn replay_deviation<F>(&self, mut rhs: F) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let mut stages = dopri::Stages::new(self.dim);
        let mut coeffs = Vec::with_capacity(4 * self.dim);
        let mut worst = 0.0f64;
        for i in 0..self.steps() {
            let (t, t_new) = (self.nodes[i], self.nodes[i + 1]);
            let y = self.node_state(i);
            rhs(t, y, &mut stages.k[0]);
            dopri::step(&mut rhs, t, t_new, y, &mut stages);
            coeffs.clear();
            dopri::dense_coefficients(y, t_new - t, &stages, &mut coeffs);
            let ends = stages.y_new.iter().zip(self.node_state(i + 1));
            let cs = coeffs.iter().zip(self.step_coeffs(i));
            for (a, b) in ends.chain(cs) {
                let d = (a - b).abs();
                worst = if d.is_nan() { f64::INFINITY } else { worst.max(d) };
            }
        }
        worst
    }

    pub fn to_record(&self) -> DenseRecord {
        DenseRecord {
            dim: self.dim,
            nodes: self.nodes.clone(),
            states: self.states.chunks(self.dim).map(<[f64]>::to_vec).collect(),
            coefficients: self.coeffs.chunks(4 * self.dim).map(<[f64]>::to_vec).collect(),
            tol: self.tol,
            stats: self.stats,
        }
    }

    pub fn from_record(rec: DenseRecord) -> Result<Self, IntegrateError> {
        let dim = rec.dim;
        let bad = |m: &str| Err(IntegrateError::Corrupt(m.to_string()));
        if dim == 0 || rec.nodes.len() < 2 {
            return bad("empty mesh");
        }
        if rec.states.len() != rec.nodes.len() || rec.states.iter().any(|s| s.len() != dim) {
            return bad("state table does not match mesh");
        }
        if rec.coefficients.len() != rec.nodes.len() - 1
            || rec.coefficients.iter().any(|c| c.len() != 4 * dim)
        {
            return bad("coefficient table does not match mesh");
        }
        if rec.nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("mesh nodes are not strictly increasing");
        }
        Ok(DenseSolution {
            dim,
            nodes: rec.nodes,
            states: rec.states.concat(),
            coeffs: rec.coefficients.concat(),
            tol: rec.tol,
            stats: rec.stats,
        })
    }
}

/// Serialized form of a [`DenseSolution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseRecord {
    pub dim: usize,
    pub nodes: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub coefficients: Vec<Vec<f64>>,
    pub tol: Tolerances,
    pub stats: Stats,
}

/// Integrate `y' = rhs(t, y)` from `state0` over `span`.
pub fn integrate_ivp<F>(
    rhs: F,
    state0: &[f64],
    span: (f64, f64),
    opts: &IvpOptions,
) -> Result<DenseSolution, IntegrateError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    integrate_ivp_monitored(rhs, state0, span, opts, |_| Control::Continue)
}

fn weighted_rms(v: &[f64], y0: &[f64], y1: &[f64], atol: &[f64], rel: f64) -> f64 {
    let sum: f64 = v
        .iter()
        .zip(y0.iter().zip(y1))
        .zip(atol)
        .map(|((e, (a, b)), abs)| {
            let sc = abs + rel * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / v.len() as f64).sqrt()
}

fn initial_step<F>(rhs: &mut F, t0: f64, y0: &[f64], f0: &[f64], atol: &[f64], rel: f64, max: f64) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let sk: Vec<f64> = y0.iter().zip(atol).map(|(y, abs)| abs + rel * y.abs()).collect();
    let dnf: f64 = f0.iter().zip(&sk).map(|(f, s)| (f / s).powi(2)).sum();
    let dny: f64 = y0.iter().zip(&sk).map(|(y, s)| (y / s).powi(2)).sum();
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(max);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h * f).collect();
    let mut f1 = vec![0.0; y0.len()];
    rhs(t0 + h, &y1, &mut f1);
    let der2: f64 = f1
        .iter()
        .zip(f0)
        .zip(&sk)
        .map(|((a, b), s)| ((a - b) / s).powi(2))
        .sum::<f64>()
        .sqrt()
        / h;
    let der12 = der2.abs().max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(1.0 / ORDER as f64)
    };
    let h = (100.0 * h).min(h1).min(max);
    if h.is_finite() && h > 0.0 {
        h
    } else {
        1e-6f64.min(max)
    }
}

/// Like [`integrate_ivp`], calling `monitor` after every accepted step.
pub fn integrate_ivp_monitored<F, M>(
    mut rhs: F,
    state0: &[f64],
    span: (f64, f64),
    opts: &IvpOptions,
    mut monitor: M,
) -> Result<DenseSolution, IntegrateError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    M: FnMut(&StepView<'_>) -> Control,
{
    let (t0, t1) = span;
    let tol = opts.tol;
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(IntegrateError::InvalidProblem(format!(
            "span [{t0}, {t1}] must be finite with t1 > t0"
        )));
    }
    if !(tol.rel > 0.0 && tol.abs > 0.0) {
        return Err(IntegrateError::InvalidProblem(
            "tolerances must be positive".into(),
        ));
    }
    if state0.is_empty() || state0.iter().any(|v| !v.is_finite()) {
        return Err(IntegrateError::InvalidProblem(
            "initial state must be non-empty and finite".into(),
        ));
    }
    let atol: Vec<f64> = match &opts.abs_weights {
        None => vec![tol.abs; state0.len()],
        Some(w) if w.len() == state0.len() && w.iter().all(|&x| x > 0.0 && x.is_finite()) => {
            w.iter().map(|x| x * tol.abs).collect()
        }
        Some(_) => {
            return Err(IntegrateError::InvalidProblem(
                "absolute tolerance weights must be positive, one per component".into(),
            ))
        }
    };

    let dim = state0.len();
    let max_step = opts.max_step.min(t1 - t0);
    let mut stages = dopri::Stages::new(dim);
    let mut y = state0.to_vec();
    let mut t = t0;
    let mut t_end = t1;
    let mut stats = Stats::default();

    rhs(t, &y, &mut stages.k[0]);
    stats.rhs_evals += 1;
    if stages.k[0].iter().any(|v| !v.is_finite()) {
        return Err(IntegrateError::NonFiniteRhs { t, state: y });
    }
    let mut h = match opts.initial_step {
        Some(h) => h.min(max_step),
        None => {
            stats.rhs_evals += 1;
            initial_step(&mut rhs, t, &y, &stages.k[0], &atol, tol.rel, max_step)
        }
    };

    let mut nodes = vec![t0];
    let mut states = y.clone();
    let mut coeffs = Vec::new();
    let mut last_rejected = false;

    while t < t_end {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(IntegrateError::TooManySteps {
                t,
                max_steps: opts.max_steps,
            });
        }
        h = h.min(max_step);
        let remaining = t_end - t;
        let t_new = if 1.01 * h >= remaining { t_end } else { t + h };
        let h_used = t_new - t;
        if h_used <= 16.0 * f64::EPSILON * t.abs().max(1e-300) || h_used <= 0.0 {
            return Err(IntegrateError::StepSizeUnderflow { t });
        }

        dopri::step(&mut rhs, t, t_new, &y, &mut stages);
        stats.rhs_evals += 6;
        let finite = stages.k[1..]
            .iter()
            .flatten()
            .chain(&stages.y_new)
            .all(|v| v.is_finite());
        if !finite {
            return Err(IntegrateError::NonFiniteRhs { t, state: y });
        }

        let err = weighted_rms(&stages.err, &y, &stages.y_new, &atol, tol.rel);
        if err <= 1.0 {
            stats.accepted += 1;
            let start = coeffs.len();
            dopri::dense_coefficients(&y, h_used, &stages, &mut coeffs);
            nodes.push(t_new);
            states.extend_from_slice(&stages.y_new);
            let control = monitor(&StepView {
                t0: t,
                t1: t_new,
                y0: &y,
                y1: &stages.y_new,
                coeffs: &coeffs[start..],
            });

            y.copy_from_slice(&stages.y_new);
            t = t_new;
            stages.k.swap(0, 6);

            let mut fac = if err == 0.0 {
                10.0
            } else {
                (0.9 * err.powf(-1.0 / ORDER as f64)).clamp(0.2, 10.0)
            };
            if last_rejected {
                fac = fac.min(1.0);
            }
            last_rejected = false;
            h = h_used * fac;

            match control {
                Control::Continue => {}
                Control::Stop => break,
                Control::Retarget(te) => t_end = t_end.min(te),
            }
        } else {
            stats.rejected += 1;
            last_rejected = true;
            h = h_used * (0.9 * err.powf(-1.0 / ORDER as f64)).max(0.2);
        }
    }

    Ok(DenseSolution {
        dim,
        nodes,
        states,
        coeffs,
        tol,
        stats,
    })
}

/// Which zero crossings an event search accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Negative to non-negative.
    Rising,
    /// Positive to non-positive.
    Falling,
    Either,
}

impl Direction {
    fn accepts(self, fa: f64, fb: f64) -> bool {
        match self {
            Direction::Rising => fa < 0.0 && fb >= 0.0,
            Direction::Falling => fa > 0.0 && fb <= 0.0,
            Direction::Either => (fa < 0.0 && fb >= 0.0) || (fa > 0.0 && fb <= 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t: f64,
    pub state: Vec<f64>,
}

/// Sub-samples per step used to detect sign changes.
const EVENT_SUBSAMPLES: usize = 4;

/// First zero crossing of `event(t, state)` strictly after `from`, refined on
/// the dense output to a bracket of width `1e-12 (1 + |t*|)`.
pub fn locate_event<E>(
    sol: &DenseSolution,
    event: E,
    from: f64,
    direction: Direction,
) -> Result<Option<Event>, IntegrateError>
where
    E: Fn(f64, &[f64]) -> f64,
{
    let (t0, t1) = sol.span();
    if from >= t1 {
        return Ok(None);
    }
    let from = from.max(t0);
    let mut buf = vec![0.0; sol.dim()];
    let mut f_at = |t: f64| -> f64 {
        sol.eval_into(t, &mut buf).expect("sample inside span");
        event(t, &buf)
    };

    let mut ta = from;
    let mut fa = f_at(ta);
    let first = sol.nodes().partition_point(|&x| x <= from).max(1);
    for i in first - 1..sol.steps() {
        let (sa, sb) = (sol.nodes()[i], sol.nodes()[i + 1]);
        for j in 1..=EVENT_SUBSAMPLES {
            let tb = if j == EVENT_SUBSAMPLES {
                sb
            } else {
                sa + (sb - sa) * j as f64 / EVENT_SUBSAMPLES as f64
            };
            if tb <= ta {
                continue;
            }
            let fb = f_at(tb);
            if direction.accepts(fa, fb) {
                let xtol = 1e-12 * (1.0 + tb.abs());
                let root = roots::brent(&mut f_at, ta, tb, fa, fb, xtol);
                let state = sol.eval(root)?;
                return Ok(Some(Event { t: root, state }));
            }
            ta = tb;
            fa = fb;
        }
    }
    Ok(None)
}
