//! Stochastic delay differential equations
//!
//! ```text
//! dX(t) = β(t, X(δ₁(t)), …, X(δ_k(t)), X(t)) dt + α(t, X(δ₁(t)), …, X(δ_k(t)), X(t)) dW_t
//! X(t)  = ξ(t)   for t ∈ [−C, 0]
//! ```
//!
//! with nondecreasing delay functions bounded by `−C ≤ δᵢ(t) ≤ ⌊t/τ⌋τ`.
//! Coefficients are plain callables; the builtin registry lives in
//! [`builtin`].

mod builtin;
mod validate;

pub use builtin::{builtin, builtin_labels, ModelRegistry};
pub use validate::{validate_model, CheckResult, ValidationReport};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Relative tolerance used when snapping a ratio onto the integers.
pub(crate) const LATTICE_SNAP: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("delay value {value} at t={t} violates -C <= delta(t) <= floor(t/tau)*tau (C={history}, tau={tau})")]
    DelayBoundViolation {
        t: f64,
        value: f64,
        history: f64,
        tau: f64,
    },
    #[error("unknown model '{0}'")]
    UnknownModel(String),
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("all delays must share one tau (found {first} and {other})")]
    MismatchedDelayUnits { first: f64, other: f64 },
    #[error("initial segment covers [-{have}, 0] but the delays reach back to -{need}")]
    InitialSegmentTooShort { have: f64, need: f64 },
    #[error("time {t} lies outside the initial segment [-{history}, 0]")]
    OutsideHistory { t: f64, history: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Returns `Some(k)` when `x` is within a relative snap tolerance of the integer `k`.
pub fn as_integer(x: f64) -> Option<i64> {
    if !x.is_finite() {
        return None;
    }
    let r = x.round();
    if (x - r).abs() <= LATTICE_SNAP * r.abs().max(1.0) {
        Some(r as i64)
    } else {
        None
    }
}

/// `⌊t/τ⌋·τ`, with `t/τ` snapped onto the integers first so that lattice
/// points like `t = 0.3, τ = 0.1` are not lost to rounding.
pub fn lattice_floor(t: f64, tau: f64) -> f64 {
    let q = t / tau;
    let k = match as_integer(q) {
        Some(k) => k as f64,
        None => q.floor(),
    };
    k * tau
}

pub type DelayFn = dyn Fn(f64) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum DelayKind {
    /// `δ(t) = t − τ`
    Fixed,
    /// `δ(t) = ⌊t/τ⌋·τ`
    PiecewiseConstant,
    /// User supplied; the bound is checked at evaluation time.
    Custom(Arc<DelayFn>),
}

impl fmt::Debug for DelayKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DelayKind::Fixed => f.write_str("Fixed"),
            DelayKind::PiecewiseConstant => f.write_str("PiecewiseConstant"),
            DelayKind::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// One delay argument `δᵢ` together with its lattice unit `τ` and history depth `C`.
#[derive(Clone, Debug)]
pub struct DelaySpec {
    kind: DelayKind,
    tau: f64,
    history: f64,
}

impl DelaySpec {
    pub fn fixed(tau: f64) -> Self {
        assert!(tau > 0.0 && tau.is_finite(), "tau must be positive");
        Self {
            kind: DelayKind::Fixed,
            tau,
            history: tau,
        }
    }

    pub fn piecewise_constant(tau: f64) -> Self {
        assert!(tau > 0.0 && tau.is_finite(), "tau must be positive");
        Self {
            kind: DelayKind::PiecewiseConstant,
            tau,
            history: 0.0,
        }
    }

    pub fn custom<F>(f: F, tau: f64, history: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        assert!(tau > 0.0 && tau.is_finite(), "tau must be positive");
        assert!(history >= 0.0, "history depth must be nonnegative");
        Self {
            kind: DelayKind::Custom(Arc::new(f)),
            tau,
            history,
        }
    }

    pub fn kind(&self) -> &DelayKind {
        &self.kind
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// History depth `C`: the delay never reaches further back than `−C`.
    pub fn history(&self) -> f64 {
        self.history
    }

    /// Raw value of the delay function, without the bound check.
    pub fn value(&self, t: f64) -> f64 {
        match &self.kind {
            DelayKind::Fixed => t - self.tau,
            DelayKind::PiecewiseConstant => lattice_floor(t, self.tau),
            DelayKind::Custom(f) => f(t),
        }
    }

    /// Evaluates `δ(t)` and checks `−C ≤ δ(t) ≤ ⌊t/τ⌋·τ`.
    pub fn eval(&self, t: f64) -> Result<f64, ModelError> {
        let value = self.value(t);
        let eps = 1e-12 * t.abs().max(1.0);
        let upper = lattice_floor(t, self.tau);
        if !value.is_finite() || value < -self.history - eps || value > upper + eps {
            return Err(ModelError::DelayBoundViolation {
                t,
                value,
                history: self.history,
                tau: self.tau,
            });
        }
        Ok(value)
    }

    /// Left limit `δ(t−)`. Differs from `δ(t)` only at the jumps of the
    /// piecewise-constant delay.
    pub fn left_limit(&self, t: f64) -> f64 {
        match &self.kind {
            DelayKind::PiecewiseConstant if t > 0.0 => match as_integer(t / self.tau) {
                Some(k) => (k - 1) as f64 * self.tau,
                None => lattice_floor(t, self.tau),
            },
            _ => self.value(t),
        }
    }
}

pub type SegmentFn = dyn Fn(f64, &mut [f64]) + Send + Sync;

/// Deterministic (or seed-deterministic) initial history `ξ` on `[−C, 0]`.
#[derive(Clone)]
pub struct InitialSegment {
    dim: usize,
    history: f64,
    value: Arc<SegmentFn>,
}

impl fmt::Debug for InitialSegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialSegment")
            .field("dim", &self.dim)
            .field("history", &self.history)
            .finish_non_exhaustive()
    }
}

impl InitialSegment {
    pub fn constant(value: Vec<f64>, history: f64) -> Self {
        let dim = value.len();
        Self::from_fn(dim, history, move |_, out| out.copy_from_slice(&value))
    }

    pub fn from_fn<F>(dim: usize, history: f64, f: F) -> Self
    where
        F: Fn(f64, &mut [f64]) + Send + Sync + 'static,
    {
        assert!(dim > 0, "initial segment needs a positive dimension");
        assert!(history >= 0.0, "history depth must be nonnegative");
        Self {
            dim,
            history,
            value: Arc::new(f),
        }
    }

    /// A segment drawn from a seeded family: `ξ(t) = f(t, seed)`.
    pub fn seeded<F>(dim: usize, history: f64, seed: u64, f: F) -> Self
    where
        F: Fn(f64, u64, &mut [f64]) + Send + Sync + 'static,
    {
        Self::from_fn(dim, history, move |t, out| f(t, seed, out))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn history(&self) -> f64 {
        self.history
    }

    pub fn eval(&self, t: f64, out: &mut [f64]) -> Result<(), ModelError> {
        let eps = 1e-12 * self.history.max(1.0);
        if t > eps || t < -self.history - eps {
            return Err(ModelError::OutsideHistory {
                t,
                history: self.history,
            });
        }
        (self.value)(t.min(0.0), out);
        Ok(())
    }

    pub fn eval_vec(&self, t: f64) -> Result<Vec<f64>, ModelError> {
        let mut out = vec![0.0; self.dim];
        self.eval(t, &mut out)?;
        Ok(out)
    }

    /// `λ·ξ`
    pub fn scaled(&self, lambda: f64) -> Self {
        let inner = self.value.clone();
        Self::from_fn(self.dim, self.history, move |t, out| {
            inner(t, out);
            out.iter_mut().for_each(|v| *v *= lambda);
        })
    }
}

/// Drift `β(t, y, x) → ℝ^d` written into `out`.
pub type DriftFn = dyn Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync;
/// Diffusion `α(t, y, x) → ℝ^{d×m}` written row-major into `out`.
pub type DiffusionFn = dyn Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync;

/// The pair `(β, α)` with its dimensions. `y` is the concatenation of the
/// `k` delayed states (length `d·k`), `x` the current state (length `d`).
#[derive(Clone)]
pub struct CoefficientField {
    d: usize,
    m: usize,
    k: usize,
    drift: Arc<DriftFn>,
    diffusion: Arc<DiffusionFn>,
    state_independent: bool,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("d", &self.d)
            .field("m", &self.m)
            .field("k", &self.k)
            .field("state_independent", &self.state_independent)
            .finish_non_exhaustive()
    }
}

impl CoefficientField {
    pub fn new<B, A>(d: usize, m: usize, k: usize, drift: B, diffusion: A) -> Result<Self, ModelError>
    where
        B: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        A: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if d == 0 || m == 0 || k == 0 {
            return Err(ModelError::InvalidDimensions(format!(
                "d, m, k must be positive (got d={d}, m={m}, k={k})"
            )));
        }
        Ok(Self {
            d,
            m,
            k,
            drift: Arc::new(drift),
            diffusion: Arc::new(diffusion),
            state_independent: false,
        })
    }

    /// Declares that neither coefficient reads the current state `x`. This is
    /// what makes the exact method-of-steps reference available.
    pub fn state_independent(mut self) -> Self {
        self.state_independent = true;
        self
    }

    pub fn is_state_independent(&self) -> bool {
        self.state_independent
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn drift(&self, t: f64, y: &[f64], x: &[f64], out: &mut [f64]) {
        (self.drift)(t, y, x, out)
    }

    #[inline]
    pub fn diffusion(&self, t: f64, y: &[f64], x: &[f64], out: &mut [f64]) {
        (self.diffusion)(t, y, x, out)
    }

    /// Multiplies both coefficients by `1{t < cutoff}`.
    fn cut_off_after(&self, cutoff: f64) -> Self {
        let drift = self.drift.clone();
        let diffusion = self.diffusion.clone();
        Self {
            drift: Arc::new(move |t, y, x, out: &mut [f64]| {
                if t < cutoff {
                    drift(t, y, x, out)
                } else {
                    out.fill(0.0)
                }
            }),
            diffusion: Arc::new(move |t, y, x, out: &mut [f64]| {
                if t < cutoff {
                    diffusion(t, y, x, out)
                } else {
                    out.fill(0.0)
                }
            }),
            ..self.clone()
        }
    }
}

/// Hypothesis class a model is known to satisfy; selects the default
/// almost-sure rate exponent probed by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionClass {
    /// Local Lipschitz in `(y, x)`: rate `n^{-γ}` for every `γ < 1/2`.
    LocalLipschitz,
    /// One-sided Lipschitz (monotone) in `x`: rate `n^{-γ}` for every `γ < 1/4`.
    Monotone,
}

impl ConditionClass {
    /// Supremum of the admissible rate exponents.
    pub fn rate_bound(self) -> f64 {
        match self {
            ConditionClass::LocalLipschitz => 0.5,
            ConditionClass::Monotone => 0.25,
        }
    }

    pub fn default_kappa(self) -> f64 {
        match self {
            ConditionClass::LocalLipschitz => 0.4,
            ConditionClass::Monotone => 0.2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SddeModel {
    label: String,
    coeffs: CoefficientField,
    base_coeffs: CoefficientField,
    delays: Vec<DelaySpec>,
    initial: InitialSegment,
    horizon: f64,
    requested_horizon: f64,
    tau: f64,
    history: f64,
    condition_class: Option<ConditionClass>,
}

impl SddeModel {
    /// Builds a model. A horizon that is not a multiple of `τ` is extended to
    /// the next multiple `T'`, with both coefficients switched off after the
    /// requested `T`; on `[0, T]` the solution is unchanged.
    pub fn new(
        label: impl Into<String>,
        coeffs: CoefficientField,
        delays: Vec<DelaySpec>,
        initial: InitialSegment,
        horizon: f64,
    ) -> Result<Self, ModelError> {
        if delays.len() != coeffs.k() {
            return Err(ModelError::InvalidDimensions(format!(
                "coefficients take k={} delayed arguments but {} delays were given",
                coeffs.k(),
                delays.len()
            )));
        }
        if initial.dim() != coeffs.d() {
            return Err(ModelError::InvalidDimensions(format!(
                "initial segment has dimension {} but the state has dimension {}",
                initial.dim(),
                coeffs.d()
            )));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let tau = delays[0].tau();
        for spec in &delays[1..] {
            if (spec.tau() - tau).abs() > 1e-12 * tau {
                return Err(ModelError::MismatchedDelayUnits {
                    first: tau,
                    other: spec.tau(),
                });
            }
        }
        let history = delays.iter().map(DelaySpec::history).fold(0.0, f64::max);
        if initial.history() + 1e-12 < history {
            return Err(ModelError::InitialSegmentTooShort {
                have: initial.history(),
                need: history,
            });
        }
        let (effective_horizon, coeffs_eff) = match as_integer(horizon / tau) {
            Some(_) => (horizon, coeffs.clone()),
            None => {
                let extended = (horizon / tau).ceil() * tau;
                (extended, coeffs.cut_off_after(horizon))
            }
        };
        Ok(Self {
            label: label.into(),
            coeffs: coeffs_eff,
            base_coeffs: coeffs,
            delays,
            history: initial.history().max(history),
            initial,
            horizon: effective_horizon,
            requested_horizon: horizon,
            tau,
            condition_class: None,
        })
    }

    pub fn with_condition_class(mut self, class: ConditionClass) -> Self {
        self.condition_class = Some(class);
        self
    }

    /// Same model on a different horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self, ModelError> {
        let model = Self::new(
            self.label.clone(),
            self.base_coeffs.clone(),
            self.delays.clone(),
            self.initial.clone(),
            horizon,
        )?;
        Ok(Self {
            condition_class: self.condition_class,
            ..model
        })
    }

    /// Same model with a different initial segment.
    pub fn with_initial(&self, initial: InitialSegment) -> Result<Self, ModelError> {
        let model = Self::new(
            self.label.clone(),
            self.base_coeffs.clone(),
            self.delays.clone(),
            initial,
            self.requested_horizon,
        )?;
        Ok(Self {
            condition_class: self.condition_class,
            ..model
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn coeffs(&self) -> &CoefficientField {
        &self.coeffs
    }

    pub fn delays(&self) -> &[DelaySpec] {
        &self.delays
    }

    pub fn initial(&self) -> &InitialSegment {
        &self.initial
    }

    /// Integration horizon: always a positive multiple of `τ`.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// The horizon as supplied by the caller, before normalization.
    pub fn requested_horizon(&self) -> f64 {
        self.requested_horizon
    }

    pub fn is_normalized(&self) -> bool {
        self.horizon != self.requested_horizon
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn history(&self) -> f64 {
        self.history
    }

    pub fn d(&self) -> usize {
        self.coeffs.d()
    }

    pub fn m(&self) -> usize {
        self.coeffs.m()
    }

    pub fn k(&self) -> usize {
        self.coeffs.k()
    }

    pub fn condition_class(&self) -> Option<ConditionClass> {
        self.condition_class
    }
}
