use super::{
    CoefficientField, ConditionClass, DelaySpec, InitialSegment, ModelError, SddeModel,
};
use std::collections::BTreeMap;
use std::sync::Arc;

const BUILTINS: &[(&str, &str)] = &[
    (
        "drift_only",
        "beta=1, alpha=0, fixed delay tau=1, xi=1, T=2; exact solution 1+t",
    ),
    (
        "pure_sde_gbm",
        "beta=0.1x, alpha=0.2x, delay ignored (tau=1), xi=1, T=1",
    ),
    (
        "linear_pure_delay",
        "beta=0.5y, alpha=0.3y, fixed delay tau=0.5, xi(t)=1+t, T=2",
    ),
    (
        "delay_gbm",
        "beta=0.1yx, alpha=0.2yx, fixed delay tau=0.5, xi=1, T=2",
    ),
    (
        "monotone_cubic",
        "beta=-x^3+y, alpha=0.2y, fixed delay tau=0.5, xi=1, T=1",
    ),
    (
        "two_delay_mixed",
        "beta=0.3y1-0.2y2-x, alpha=0.1(y1+x), fixed + piecewise-constant delays tau=0.5, xi=1, T=2",
    ),
];

/// Labels of the builtin models, in registry order.
pub fn builtin_labels() -> Vec<&'static str> {
    BUILTINS.iter().map(|(label, _)| *label).collect()
}

pub fn builtin(label: &str) -> Result<SddeModel, ModelError> {
    let model = match label {
        "drift_only" => drift_only(),
        "pure_sde_gbm" => pure_sde_gbm(0.1, 0.2),
        "linear_pure_delay" => linear_pure_delay(0.5, 0.3),
        "delay_gbm" => delay_gbm(0.1, 0.2),
        "monotone_cubic" => monotone_cubic(),
        "two_delay_mixed" => two_delay_mixed(),
        other => return Err(ModelError::UnknownModel(other.to_string())),
    };
    Ok(model.expect("builtin models are well formed"))
}

fn drift_only() -> Result<SddeModel, ModelError> {
    let coeffs = CoefficientField::new(
        1,
        1,
        1,
        |_, _, _, out| out[0] = 1.0,
        |_, _, _, out| out[0] = 0.0,
    )?
    .state_independent();
    SddeModel::new(
        "drift_only",
        coeffs,
        vec![DelaySpec::fixed(1.0)],
        InitialSegment::constant(vec![1.0], 1.0),
        2.0,
    )
    .map(|m| m.with_condition_class(ConditionClass::LocalLipschitz))
}

fn pure_sde_gbm(mu: f64, sigma: f64) -> Result<SddeModel, ModelError> {
    let coeffs = CoefficientField::new(
        1,
        1,
        1,
        move |_, _, x, out| out[0] = mu * x[0],
        move |_, _, x, out| out[0] = sigma * x[0],
    )?;
    SddeModel::new(
        "pure_sde_gbm",
        coeffs,
        vec![DelaySpec::fixed(1.0)],
        InitialSegment::constant(vec![1.0], 1.0),
        1.0,
    )
    .map(|m| m.with_condition_class(ConditionClass::LocalLipschitz))
}

pub(crate) fn linear_pure_delay(a: f64, b: f64) -> Result<SddeModel, ModelError> {
    let coeffs = CoefficientField::new(
        1,
        1,
        1,
        move |_, y, _, out| out[0] = a * y[0],
        move |_, y, _, out| out[0] = b * y[0],
    )?
    .state_independent();
    SddeModel::new(
        "linear_pure_delay",
        coeffs,
        vec![DelaySpec::fixed(0.5)],
        InitialSegment::from_fn(1, 0.5, |t, out| out[0] = 1.0 + t),
        2.0,
    )
    .map(|m| m.with_condition_class(ConditionClass::LocalLipschitz))
}

fn delay_gbm(mu: f64, sigma: f64) -> Result<SddeModel, ModelError> {
    let coeffs = CoefficientField::new(
        1,
        1,
        1,
        move |_, y, x, out| out[0] = mu * y[0] * x[0],
        move |_, y, x, out| out[0] = sigma * y[0] * x[0],
    )?;
    SddeModel::new(
        "delay_gbm",
        coeffs,
        vec![DelaySpec::fixed(0.5)],
        InitialSegment::constant(vec![1.0], 0.5),
        2.0,
    )
    .map(|m| m.with_condition_class(ConditionClass::LocalLipschitz))
}

fn monotone_cubic() -> Result<SddeModel, ModelError> {
    let coeffs = CoefficientField::new(
        1,
        1,
        1,
        |_, y, x, out| out[0] = -x[0] * x[0] * x[0] + y[0],
        |_, y, _, out| out[0] = 0.2 * y[0],
    )?;
    SddeModel::new(
        "monotone_cubic",
        coeffs,
        vec![DelaySpec::fixed(0.5)],
        InitialSegment::constant(vec![1.0], 0.5),
        1.0,
    )
    .map(|m| m.with_condition_class(ConditionClass::Monotone))
}

fn two_delay_mixed() -> Result<SddeModel, ModelError> {
    let coeffs = CoefficientField::new(
        1,
        1,
        2,
        |_, y, x, out| out[0] = 0.3 * y[0] - 0.2 * y[1] - x[0],
        |_, y, x, out| out[0] = 0.1 * (y[0] + x[0]),
    )?;
    SddeModel::new(
        "two_delay_mixed",
        coeffs,
        vec![DelaySpec::fixed(0.5), DelaySpec::piecewise_constant(0.5)],
        InitialSegment::constant(vec![1.0], 0.5),
        2.0,
    )
    .map(|m| m.with_condition_class(ConditionClass::LocalLipschitz))
}

type Factory = Arc<dyn Fn() -> SddeModel + Send + Sync>;

struct Entry {
    description: String,
    factory: Factory,
}

/// Label-addressed model lookup. Starts with the builtins; callers may add
/// their own models programmatically.
pub struct ModelRegistry {
    entries: BTreeMap<String, Entry>,
}

impl Default for ModelRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl ModelRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        for (label, description) in BUILTINS {
            let label = *label;
            reg.register(label, description, move || {
                builtin(label).expect("label comes from the builtin table")
            });
        }
        reg
    }

    /// Adds (or replaces) a model under `label`.
    pub fn register<F>(&mut self, label: &str, description: &str, factory: F)
    where
        F: Fn() -> SddeModel + Send + Sync + 'static,
    {
        self.entries.insert(
            label.to_string(),
            Entry {
                description: description.to_string(),
                factory: Arc::new(factory),
            },
        );
    }

    pub fn get(&self, label: &str) -> Result<SddeModel, ModelError> {
        self.entries
            .get(label)
            .map(|e| (e.factory)())
            .ok_or_else(|| ModelError::UnknownModel(label.to_string()))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.entries.contains_key(label)
    }

    /// `(label, description)` pairs in label order.
    pub fn list(&self) -> Vec<(&str, &str)> {
        self.entries
            .iter()
            .map(|(k, e)| (k.as_str(), e.description.as_str()))
            .collect()
    }
}
