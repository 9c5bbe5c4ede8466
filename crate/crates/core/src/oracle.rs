//! Reference solutions standing in for the true solution on a given noise path.
//!
//! When neither coefficient reads the current state, the equation can be
//! solved interval by interval on `[iτ, (i+1)τ]`: every delayed argument is
//! already known there, so the solution is a pair of integrals against a known
//! integrand. Otherwise the reference is the Euler scheme run at the noise
//! resolution itself.

use crate::brownian::{grid_steps, BrownianGrid, NoiseError};
use crate::euler::{integrate, EulerError, SampledPath};
use crate::model::{as_integer, DelayKind, ModelError, SddeModel};
use crate::rng::StreamKey;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("exact reference unavailable: {0}")]
    OracleUnavailable(String),
    #[error(transparent)]
    Euler(#[from] EulerError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Provenance {
    /// Method of steps with trapezoidal `ds` and left-point `dW` sums.
    ExactSteps,
    /// Euler scheme at the reference resolution.
    FineEuler { n_ref: u64 },
}

#[derive(Debug, Clone)]
pub struct ReferencePath {
    label: String,
    d: usize,
    n_ref: u64,
    horizon: f64,
    values: Vec<f64>,
    provenance: Provenance,
    noise_seed: u64,
    stream: Option<StreamKey>,
}

impl ReferencePath {
    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn n_ref(&self) -> u64 {
        self.n_ref
    }

    /// Values on the grid `j/n_ref`, row-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, j: usize) -> &[f64] {
        &self.values[j * self.d..(j + 1) * self.d]
    }

    pub fn steps(&self) -> usize {
        self.values.len() / self.d - 1
    }
}

impl SampledPath for ReferencePath {
    fn label(&self) -> &str {
        &self.label
    }

    fn noise_identity(&self) -> (u64, Option<StreamKey>) {
        (self.noise_seed, self.stream)
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn resolution(&self) -> u64 {
        self.n_ref
    }

    fn trajectory(&self, n_eval: u64) -> Result<Vec<f64>, EulerError> {
        if n_eval == 0 || !self.n_ref.is_multiple_of(n_eval) {
            return Err(EulerError::GridMisaligned(format!(
                "reference at n={} cannot be sampled at n={n_eval}",
                self.n_ref
            )));
        }
        let stride = (self.n_ref / n_eval) as usize;
        Ok(self
            .values
            .chunks_exact(self.d)
            .step_by(stride)
            .flatten()
            .copied()
            .collect())
    }
}

/// Exact-steps reference for models whose coefficients ignore the current state.
pub fn method_of_steps(model: &SddeModel, noise: &BrownianGrid) -> Result<ReferencePath, OracleError> {
    let coeffs = model.coeffs();
    if !coeffs.is_state_independent() {
        return Err(OracleError::OracleUnavailable(format!(
            "coefficients of '{}' depend on the current state",
            model.label()
        )));
    }
    let (d, m, k) = (model.d(), model.m(), model.k());
    if noise.m() != m {
        return Err(EulerError::DimensionMismatch(format!(
            "model needs m={m}, noise has m={}",
            noise.m()
        ))
        .into());
    }
    let n = noise.n();
    let lag = match as_integer(n as f64 * model.tau()) {
        Some(s) if s > 0 => s as usize,
        _ => return Err(EulerError::DelayGridMisaligned { n, tau: model.tau() }.into()),
    };
    if noise.horizon() + 1e-12 < model.horizon() {
        return Err(EulerError::GridMisaligned("noise is shorter than the model horizon".into()).into());
    }
    let steps = grid_steps(n, model.horizon())?;
    let h = 1.0 / n as f64;

    let mut values = vec![0.0; (steps + 1) * d];
    model.initial().eval(0.0, &mut values[..d])?;
    let mut y_left = vec![0.0; d * k];
    let mut y_right = vec![0.0; d * k];
    let mut b_left = vec![0.0; d];
    let mut b_right = vec![0.0; d];
    let mut a_left = vec![0.0; d * m];

    for l in 0..steps {
        let (s0, s1) = (l as f64 * h, (l + 1) as f64 * h);
        for (i, spec) in model.delays().iter().enumerate() {
            // delayed argument at s0 and just before s1; both already known
            let (left, right) = match spec.kind() {
                DelayKind::Fixed => (
                    Known::Grid(l as i64 - lag as i64),
                    Known::Grid((l + 1) as i64 - lag as i64),
                ),
                DelayKind::PiecewiseConstant => {
                    let idx = ((l / lag) * lag) as i64;
                    (Known::Grid(idx), Known::Grid(idx))
                }
                DelayKind::Custom(_) => (
                    Known::Time(spec.eval(s0)?),
                    Known::Time(spec.left_limit(s1)),
                ),
            };
            let slot = i * d..(i + 1) * d;
            read_known(model, &values, l, n, left, &mut y_left[slot.clone()])?;
            if read_known(model, &values, l, n, right, &mut y_right[slot.clone()]).is_err() {
                y_right[slot.clone()].copy_from_slice(&y_left[slot]);
            }
        }
        let x = &values[l * d..(l + 1) * d];
        coeffs.drift(s0, &y_left, x, &mut b_left);
        coeffs.drift(s1, &y_right, x, &mut b_right);
        coeffs.diffusion(s0, &y_left, x, &mut a_left);
        let dw = noise.increment(l);
        for r in 0..d {
            let mut v = values[l * d + r] + 0.5 * (b_left[r] + b_right[r]) * h;
            for c in 0..m {
                v += a_left[r * m + c] * dw[c];
            }
            values[(l + 1) * d + r] = v;
        }
    }

    Ok(ReferencePath {
        label: model.label().to_string(),
        d,
        n_ref: n,
        horizon: model.horizon(),
        values,
        provenance: Provenance::ExactSteps,
        noise_seed: noise.seed(),
        stream: noise.stream(),
    })
}

#[derive(Debug, Clone, Copy)]
enum Known {
    Grid(i64),
    Time(f64),
}

/// Reads `X` at a point that is either in the history or at a computed grid
/// index `≤ current`.
fn read_known(
    model: &SddeModel,
    values: &[f64],
    current: usize,
    n: u64,
    at: Known,
    out: &mut [f64],
) -> Result<(), OracleError> {
    let d = out.len();
    let idx = match at {
        Known::Grid(idx) if idx < 0 => {
            model.initial().eval(idx as f64 / n as f64, out)?;
            return Ok(());
        }
        Known::Grid(idx) => idx as usize,
        Known::Time(t) if t < 0.0 => {
            model.initial().eval(t, out)?;
            return Ok(());
        }
        Known::Time(t) => match as_integer(t * n as f64) {
            Some(idx) => idx as usize,
            None => {
                return Err(OracleError::OracleUnavailable(format!(
                    "delayed time {t} is not on the noise grid n={n}"
                )))
            }
        },
    };
    if idx > current {
        return Err(OracleError::OracleUnavailable(format!(
            "delayed index {idx} lies beyond the current step {current}"
        )));
    }
    out.copy_from_slice(&values[idx * d..(idx + 1) * d]);
    Ok(())
}

/// Euler reference at the noise's own resolution.
pub fn fine_reference(model: &SddeModel, noise: &BrownianGrid, n_ref: u64) -> Result<ReferencePath, OracleError> {
    if n_ref != noise.n() {
        return Err(EulerError::GridMisaligned(format!(
            "reference resolution {n_ref} must equal the noise resolution {}",
            noise.n()
        ))
        .into());
    }
    let path = integrate(model, noise, n_ref)?;
    Ok(ReferencePath {
        label: model.label().to_string(),
        d: model.d(),
        n_ref,
        horizon: model.horizon(),
        values: path.values().to_vec(),
        provenance: Provenance::FineEuler { n_ref },
        noise_seed: noise.seed(),
        stream: noise.stream(),
    })
}
