//! Explicit Euler scheme for SDDEs.
//!
//! On the grid `t_j = j/n` the scheme reads
//!
//! ```text
//! X_n(t_{j+1}) = X_n(t_j) + β(t_j, Y_n(t_j), X_n(t_j))/n + α(t_j, Y_n(t_j), X_n(t_j)) ΔW_j
//! Y_n(t_j)     = (X_n(δ₁(t_j)), …, X_n(δ_k(t_j)))
//! ```
//!
//! and between grid points the path is the frozen-coefficient Itô
//! interpolant `X_n(κ(t)) + β·(t − κ(t)) + α·(W_t − W_{κ(t)})`, where
//! `κ(t) = ⌊nt⌋/n`. Delayed values come from the initial segment for negative
//! times and from already computed grid values otherwise; `n·τ ∈ ℕ` puts every
//! builtin delay on the grid.

use crate::brownian::{grid_steps, BrownianGrid, NoiseError};
use crate::model::{as_integer, DelayKind, ModelError, SddeModel};
use crate::rng::StreamKey;
use thiserror::Error;

/// Paths whose norm exceeds this are aborted as blown up.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Error)]
pub enum EulerError {
    #[error("n*tau = {n}*{tau} is not an integer; delayed arguments would fall off the grid")]
    DelayGridMisaligned { n: u64, tau: f64 },
    #[error("grid misaligned: {0}")]
    GridMisaligned(String),
    #[error("delay {delay} at step {step} evaluates to {value}, which is not a grid point")]
    OffGridDelay { step: usize, delay: usize, value: f64 },
    #[error("numerical blow-up at step {step} (|X| = {value:e})")]
    NumericalBlowup { step: usize, value: f64 },
    #[error("t={t} is not covered by the stored noise (n={n})")]
    OffGridQuery { t: f64, n: u64 },
    #[error("t={t} is outside [-C, T] = [-{history}, {horizon}]")]
    OutOfRange { t: f64, history: f64, horizon: f64 },
    #[error("paths are not comparable: {0}")]
    IncomparablePaths(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// What to do with a custom delay that lands between grid points.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum OffGridPolicy {
    /// Fail with [`EulerError::OffGridDelay`].
    #[default]
    Reject,
    /// Interpolate linearly between the neighbouring grid values. This is
    /// outside the setting covered by the convergence theory.
    Linear,
}

/// `κ(t) = ⌊nt⌋/n`, with `nt` snapped onto the integers first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridMap {
    n: u64,
}

impl GridMap {
    pub fn new(n: u64) -> Self {
        assert!(n > 0, "grid needs n >= 1");
        Self { n }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn index(&self, t: f64) -> i64 {
        let x = t * self.n as f64;
        as_integer(x).unwrap_or_else(|| x.floor() as i64)
    }

    pub fn kappa(&self, t: f64) -> f64 {
        self.index(t) as f64 / self.n as f64
    }

    pub fn is_grid_point(&self, t: f64) -> bool {
        as_integer(t * self.n as f64).is_some()
    }
}

#[derive(Debug, Clone, Copy)]
enum Lookup {
    Grid(usize),
    History(f64),
    Between { lo: usize, frac: f64 },
}

/// A computed Euler path: grid values plus the per-step coefficients and
/// noise needed to evaluate the continuous interpolant anywhere the noise
/// resolves.
#[derive(Debug, Clone)]
pub struct EulerPath {
    model: SddeModel,
    n: u64,
    steps: usize,
    values: Vec<f64>,
    drift: Vec<f64>,
    diffusion: Vec<f64>,
    noise: BrownianGrid,
    step_noise: BrownianGrid,
}

pub fn integrate(model: &SddeModel, noise: &BrownianGrid, n: u64) -> Result<EulerPath, EulerError> {
    integrate_with(model, noise, n, OffGridPolicy::Reject)
}

pub fn integrate_with(
    model: &SddeModel,
    noise: &BrownianGrid,
    n: u64,
    policy: OffGridPolicy,
) -> Result<EulerPath, EulerError> {
    let (d, m, k) = (model.d(), model.m(), model.k());
    if noise.m() != m {
        return Err(EulerError::DimensionMismatch(format!(
            "model is driven by {m} Brownian motions but the noise has {}",
            noise.m()
        )));
    }
    if n == 0 {
        return Err(EulerError::GridMisaligned("n must be at least 1".into()));
    }
    let lag = match as_integer(n as f64 * model.tau()) {
        Some(s) if s > 0 => s as usize,
        _ => {
            return Err(EulerError::DelayGridMisaligned {
                n,
                tau: model.tau(),
            })
        }
    };
    if !noise.n().is_multiple_of(n) {
        return Err(EulerError::GridMisaligned(format!(
            "scheme resolution n={n} does not divide the noise resolution {}",
            noise.n()
        )));
    }
    if noise.horizon() + 1e-12 < model.horizon() {
        return Err(EulerError::GridMisaligned(format!(
            "noise covers [0, {}] but the model runs to {}",
            noise.horizon(),
            model.horizon()
        )));
    }
    let steps = grid_steps(n, model.horizon())?;
    let step_noise = noise.coarsen(noise.n() / n)?;

    let coeffs = model.coeffs();
    let h = 1.0 / n as f64;
    let mut values = vec![0.0; (steps + 1) * d];
    let mut drift = vec![0.0; steps * d];
    let mut diffusion = vec![0.0; steps * d * m];
    model.initial().eval(0.0, &mut values[..d])?;

    let mut y = vec![0.0; d * k];
    for j in 0..steps {
        let t = j as f64 * h;
        for (i, spec) in model.delays().iter().enumerate() {
            let lookup = match spec.kind() {
                DelayKind::Fixed => {
                    let idx = j as i64 - lag as i64;
                    if idx >= 0 {
                        Lookup::Grid(idx as usize)
                    } else {
                        Lookup::History(idx as f64 * h)
                    }
                }
                DelayKind::PiecewiseConstant => Lookup::Grid((j / lag) * lag),
                DelayKind::Custom(_) => {
                    let v = spec.eval(t)?;
                    if v < 0.0 {
                        Lookup::History(v)
                    } else {
                        match as_integer(v * n as f64) {
                            Some(idx) => Lookup::Grid(idx as usize),
                            None => match policy {
                                OffGridPolicy::Reject => {
                                    return Err(EulerError::OffGridDelay {
                                        step: j,
                                        delay: i,
                                        value: v,
                                    })
                                }
                                OffGridPolicy::Linear => {
                                    let x = v * n as f64;
                                    Lookup::Between {
                                        lo: x.floor() as usize,
                                        frac: x - x.floor(),
                                    }
                                }
                            },
                        }
                    }
                }
            };
            let slot = &mut y[i * d..(i + 1) * d];
            match lookup {
                Lookup::Grid(idx) => {
                    debug_assert!(idx <= j, "scheme must not read ahead");
                    slot.copy_from_slice(&values[idx * d..(idx + 1) * d]);
                }
                Lookup::History(s) => model.initial().eval(s, slot)?,
                Lookup::Between { lo, frac } => {
                    debug_assert!(lo < j, "scheme must not read ahead");
                    for r in 0..d {
                        let a = values[lo * d + r];
                        let b = values[(lo + 1) * d + r];
                        slot[r] = a + frac * (b - a);
                    }
                }
            }
        }

        let (done, rest) = values.split_at_mut((j + 1) * d);
        let x = &done[j * d..];
        let b = &mut drift[j * d..(j + 1) * d];
        let a = &mut diffusion[j * d * m..(j + 1) * d * m];
        coeffs.drift(t, &y, x, b);
        coeffs.diffusion(t, &y, x, a);
        if b.iter().chain(a.iter()).any(|v| !v.is_finite()) {
            return Err(EulerError::NumericalBlowup {
                step: j,
                value: f64::NAN,
            });
        }
        let dw = step_noise.increment(j);
        let next = &mut rest[..d];
        let mut norm2 = 0.0;
        for r in 0..d {
            let mut v = x[r] + b[r] * h;
            for c in 0..m {
                v += a[r * m + c] * dw[c];
            }
            next[r] = v;
            norm2 += v * v;
        }
        let norm = norm2.sqrt();
        if norm.is_nan() || norm > BLOWUP_THRESHOLD {
            return Err(EulerError::NumericalBlowup {
                step: j,
                value: norm,
            });
        }
    }

    Ok(EulerPath {
        model: model.clone(),
        n,
        steps,
        values,
        drift,
        diffusion,
        noise: noise.clone(),
        step_noise,
    })
}

impl EulerPath {
    pub fn model(&self) -> &SddeModel {
        &self.model
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn d(&self) -> usize {
        self.model.d()
    }

    pub fn grid(&self) -> GridMap {
        GridMap::new(self.n)
    }

    /// Grid values, row-major `[j][coordinate]` for `j = 0..=steps`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, j: usize) -> &[f64] {
        let d = self.d();
        &self.values[j * d..(j + 1) * d]
    }

    /// `β(t_j, Y_n(t_j), X_n(t_j))` as used in step `j`.
    pub fn step_drift(&self, j: usize) -> &[f64] {
        let d = self.d();
        &self.drift[j * d..(j + 1) * d]
    }

    /// `α(t_j, Y_n(t_j), X_n(t_j))`, row-major `d × m`.
    pub fn step_diffusion(&self, j: usize) -> &[f64] {
        let dm = self.d() * self.model.m();
        &self.diffusion[j * dm..(j + 1) * dm]
    }

    /// The noise the path was integrated with (possibly finer than `n`).
    pub fn noise(&self) -> &BrownianGrid {
        &self.noise
    }

    /// The noise coarsened to the scheme's own grid.
    pub fn step_noise(&self) -> &BrownianGrid {
        &self.step_noise
    }

    pub fn horizon(&self) -> f64 {
        self.model.horizon()
    }

    /// The continuous-time Euler process at `t ∈ [−C, T]`.
    pub fn eval_continuous(&self, t: f64) -> Result<Vec<f64>, EulerError> {
        let d = self.d();
        let m = self.model.m();
        let horizon = self.horizon();
        let history = self.model.history();
        let eps = 1e-12 * horizon.max(1.0);
        if t < -history - eps || t > horizon + eps {
            return Err(EulerError::OutOfRange {
                t,
                history,
                horizon,
            });
        }
        if t <= 0.0 {
            return Ok(self.model.initial().eval_vec(t.min(0.0))?);
        }
        let grid = self.grid();
        if grid.is_grid_point(t) {
            let j = (grid.index(t) as usize).min(self.steps);
            return Ok(self.value(j).to_vec());
        }
        let j = grid.index(t) as usize;
        let fine = self
            .noise
            .index_of(t)
            .ok_or(EulerError::OffGridQuery {
                t,
                n: self.noise.n(),
            })?;
        let ratio = (self.noise.n() / self.n) as usize;
        let start = j * ratio;
        let elapsed = (fine - start) as f64 / self.noise.n() as f64;
        let w_t = self.noise.value_at_index(fine);
        let w_k = self.noise.value_at_index(start);
        let b = self.step_drift(j);
        let a = self.step_diffusion(j);
        let x = self.value(j);
        let mut out = vec![0.0; d];
        for r in 0..d {
            let mut v = x[r] + b[r] * elapsed;
            for c in 0..m {
                v += a[r * m + c] * (w_t[c] - w_k[c]);
            }
            out[r] = v;
        }
        Ok(out)
    }
}

/// A path that can be sampled on a uniform grid for comparison with others.
pub trait SampledPath {
    fn label(&self) -> &str;
    /// Identity of the driving noise.
    fn noise_identity(&self) -> (u64, Option<StreamKey>);
    fn dim(&self) -> usize;
    fn horizon(&self) -> f64;
    /// Native resolution (steps per unit time).
    fn resolution(&self) -> u64;
    /// Values at `i/n_eval`, `i = 0..=n_eval·T`, row-major.
    fn trajectory(&self, n_eval: u64) -> Result<Vec<f64>, EulerError>;
}

impl SampledPath for EulerPath {
    fn label(&self) -> &str {
        self.model.label()
    }

    fn noise_identity(&self) -> (u64, Option<StreamKey>) {
        (self.noise.seed(), self.noise.stream())
    }

    fn dim(&self) -> usize {
        self.d()
    }

    fn horizon(&self) -> f64 {
        self.model.horizon()
    }

    fn resolution(&self) -> u64 {
        self.n
    }

    /// The continuous interpolant on a finer grid, accumulated step by step.
    fn trajectory(&self, n_eval: u64) -> Result<Vec<f64>, EulerError> {
        if n_eval == 0 || !n_eval.is_multiple_of(self.n) {
            return Err(EulerError::GridMisaligned(format!(
                "evaluation grid n={n_eval} is not a multiple of the path's n={}",
                self.n
            )));
        }
        if !self.noise.n().is_multiple_of(n_eval) {
            return Err(EulerError::OffGridQuery {
                t: 1.0 / n_eval as f64,
                n: self.noise.n(),
            });
        }
        let (d, m) = (self.d(), self.model.m());
        let q = (n_eval / self.n) as usize;
        let eval_noise = self.noise.coarsen(self.noise.n() / n_eval)?;
        let h = 1.0 / n_eval as f64;
        let mut out = Vec::with_capacity((self.steps * q + 1) * d);
        let mut acc = vec![0.0; m];
        for j in 0..self.steps {
            out.extend_from_slice(self.value(j));
            let x = self.value(j);
            let b = self.step_drift(j);
            let a = self.step_diffusion(j);
            acc.fill(0.0);
            for s in 1..q {
                let dw = eval_noise.increment(j * q + s - 1);
                for c in 0..m {
                    acc[c] += dw[c];
                }
                let elapsed = s as f64 * h;
                for r in 0..d {
                    let mut v = x[r] + b[r] * elapsed;
                    for c in 0..m {
                        v += a[r * m + c] * acc[c];
                    }
                    out.push(v);
                }
            }
        }
        out.extend_from_slice(self.value(self.steps));
        Ok(out)
    }
}

/// Largest Euclidean distance between two trajectories of dimension `d`.
pub fn sup_distance(a: &[f64], b: &[f64], d: usize) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.chunks_exact(d)
        .zip(b.chunks_exact(d))
        .map(|(u, v)| {
            u.iter()
                .zip(v)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// `sup_t |a(t) − b(t)|` over the grid `i/eval_n`.
pub fn sup_error(a: &dyn SampledPath, b: &dyn SampledPath, eval_n: u64) -> Result<f64, EulerError> {
    if a.label() != b.label() {
        return Err(EulerError::IncomparablePaths(format!(
            "models differ: '{}' vs '{}'",
            a.label(),
            b.label()
        )));
    }
    if a.noise_identity() != b.noise_identity() {
        return Err(EulerError::IncomparablePaths(format!(
            "noise differs: {:?} vs {:?}",
            a.noise_identity(),
            b.noise_identity()
        )));
    }
    if (a.horizon() - b.horizon()).abs() > 1e-12 {
        return Err(EulerError::IncomparablePaths("horizons differ".into()));
    }
    if eval_n < a.resolution().max(b.resolution()) {
        return Err(EulerError::GridMisaligned(format!(
            "evaluation grid n={eval_n} is coarser than the paths ({}, {})",
            a.resolution(),
            b.resolution()
        )));
    }
    let ta = a.trajectory(eval_n)?;
    let tb = b.trajectory(eval_n)?;
    Ok(sup_distance(&ta, &tb, a.dim()))
}
