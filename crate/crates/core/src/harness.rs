//! Coupled-level convergence experiments.
//!
//! Path `p` of an experiment is driven by `StreamKey(seed, p)` sampled once at
//! the reference resolution `n_ref`; every level `n_ℓ = n0·2^ℓ` sees the same
//! Brownian path through coarsening. Errors are sup distances to the
//! reference, measured on the `n_ref` grid.

use crate::brownian::{sample_stream, NoiseError};
use crate::euler::{integrate, sup_error, EulerError};
use crate::model::{as_integer, ModelError, SddeModel};
use crate::oracle::{fine_reference, method_of_steps, OracleError, Provenance, ReferencePath};
use crate::rng::StreamKey;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Levels with `n_ref / n_ℓ` below this are too close to the reference to
/// enter the rate fit.
pub const MIN_REFERENCE_GAP: u64 = 4;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Euler(#[from] EulerError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferencePolicy {
    /// Method of steps when the model allows it, fine Euler otherwise.
    #[default]
    Auto,
    Exact,
    FineEuler,
}

fn default_ref_multiplier() -> u64 {
    16
}

fn default_eps() -> Vec<f64> {
    vec![0.05]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateExperimentConfig {
    pub model: String,
    pub n0: u64,
    pub levels: usize,
    pub paths: usize,
    #[serde(default = "default_ref_multiplier")]
    pub ref_multiplier: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub reference: ReferencePolicy,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl RateExperimentConfig {
    pub fn new(model: &str, n0: u64, levels: usize, paths: usize, seed: u64) -> Self {
        Self {
            model: model.to_string(),
            n0,
            levels,
            paths,
            ref_multiplier: default_ref_multiplier(),
            seed,
            eps: default_eps(),
            kappa: None,
            reference: ReferencePolicy::Auto,
            threads: None,
        }
    }

    pub fn level_ns(&self) -> Vec<u64> {
        (0..self.levels).map(|l| self.n0 << l).collect()
    }

    pub fn n_ref(&self) -> u64 {
        (self.n0 << (self.levels.max(1) - 1)) * self.ref_multiplier
    }

    pub fn validate(&self, model: &SddeModel) -> Result<(), HarnessError> {
        let bad = |s: String| Err(HarnessError::InvalidConfig(s));
        if self.levels < 3 {
            return bad(format!("at least 3 levels are needed, got {}", self.levels));
        }
        if self.levels > 40 {
            return bad(format!("{} levels overflow the grid size", self.levels));
        }
        if self.paths == 0 {
            return bad("paths must be positive".into());
        }
        if self.n0 == 0 || self.ref_multiplier == 0 {
            return bad("n0 and ref_multiplier must be positive".into());
        }
        if self.paths > u32::MAX as usize {
            return bad("too many paths for the stream index".into());
        }
        if as_integer(self.n0 as f64 * model.tau()).is_none_or(|v| v < 1) {
            return bad(format!("n0*tau = {}*{} is not a positive integer", self.n0, model.tau()));
        }
        if self.eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return bad("thresholds eps must be positive".into());
        }
        if let Some(k) = self.kappa {
            if !(k.is_finite() && k >= 0.0) {
                return bad(format!("kappa must be nonnegative, got {k}"));
            }
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        Ok(())
    }

    /// `κ` from the config, or the default of the model's condition class.
    pub fn kappa_for(&self, model: &SddeModel) -> f64 {
        self.kappa.unwrap_or_else(|| {
            model
                .condition_class()
                .map(|c| c.default_kappa())
                .unwrap_or(0.4)
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSummary {
    pub n: u64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q99: f64,
    /// Fraction of paths with error above each threshold, paired with it.
    pub exceedance: Vec<(f64, f64)>,
    pub blowups: usize,
    /// Whether the level enters the rate fit.
    pub retained: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub model: String,
    pub provenance: Provenance,
    pub n_ref: u64,
    pub paths: usize,
    pub seed: u64,
    pub kappa: f64,
    pub levels: Vec<LevelSummary>,
    pub gamma_hat: Option<f64>,
    pub gamma_stderr: Option<f64>,
    pub gamma_hat_without_finest: Option<f64>,
    pub fit_note: String,
    pub blowups: usize,
    /// `errors[ℓ][p]`; blown-up paths hold `+∞`.
    #[serde(skip)]
    pub errors: Vec<Vec<f64>>,
}

impl RateReport {
    /// Summarizes an error matrix `errors[ℓ][p]` for levels `ns`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_errors(
        model: &str,
        provenance: Provenance,
        ns: &[u64],
        n_ref: u64,
        errors: Vec<Vec<f64>>,
        eps: &[f64],
        kappa: f64,
        seed: u64,
    ) -> Result<Self, HarnessError> {
        if ns.len() != errors.len() || errors.is_empty() {
            return Err(HarnessError::InvalidConfig(
                "one error row per level is required".into(),
            ));
        }
        let paths = errors[0].len();
        if paths == 0 || errors.iter().any(|r| r.len() != paths) {
            return Err(HarnessError::InvalidConfig(
                "every level needs the same positive number of paths".into(),
            ));
        }
        let levels: Vec<LevelSummary> = ns
            .iter()
            .zip(&errors)
            .map(|(&n, row)| summarize_level(n, n_ref, row, eps))
            .collect();
        let retained: Vec<(f64, f64)> = levels
            .iter()
            .zip(&errors)
            .filter(|(l, _)| l.retained)
            .map(|(l, row)| (l.n as f64, median_log(row)))
            .collect();
        let (fit, note) = fit_rate(&retained);
        let without_finest = if retained.len() >= 3 {
            fit_rate(&retained[..retained.len() - 1]).0.map(|f| f.0)
        } else {
            None
        };
        let blowups = levels.iter().map(|l| l.blowups).sum();
        Ok(Self {
            model: model.to_string(),
            provenance,
            n_ref,
            paths,
            seed,
            kappa,
            levels,
            gamma_hat: fit.map(|f| f.0),
            gamma_stderr: fit.and_then(|f| f.1),
            gamma_hat_without_finest: without_finest,
            fit_note: note,
            blowups,
            errors,
        })
    }

    pub fn level_ns(&self) -> Vec<u64> {
        self.levels.iter().map(|l| l.n).collect()
    }

    pub fn medians(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.q50).collect()
    }
}

fn summarize_level(n: u64, n_ref: u64, row: &[f64], eps: &[f64]) -> LevelSummary {
    let mut finite: Vec<f64> = row.iter().copied().filter(|e| e.is_finite()).collect();
    finite.sort_by(f64::total_cmp);
    let blowups = row.len() - finite.len();
    let q = |p| quantile_sorted(&finite, p);
    let exceedance = eps
        .iter()
        .map(|&e| {
            let over = row.iter().filter(|&&v| v.is_nan() || v > e).count();
            (e, over as f64 / row.len() as f64)
        })
        .collect();
    LevelSummary {
        n,
        q25: q(0.25),
        q50: q(0.5),
        q75: q(0.75),
        q99: q(0.99),
        exceedance,
        blowups,
        retained: n_ref / n >= MIN_REFERENCE_GAP && n_ref.is_multiple_of(n),
    }
}

/// Type-7 sample quantile of sorted data (linear interpolation between
/// order statistics at `h = (N−1)p`). `NaN` for empty data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        len => {
            let h = (len - 1) as f64 * p.clamp(0.0, 1.0);
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(len - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

/// Median of `ln e` over the paths that did not blow up.
fn median_log(row: &[f64]) -> f64 {
    let mut logs: Vec<f64> = row.iter().filter(|e| e.is_finite()).map(|e| e.ln()).collect();
    logs.sort_by(f64::total_cmp);
    quantile_sorted(&logs, 0.5)
}

/// Least-squares slope of the median `ln e` against `−ln n`, with its
/// standard error when at least three points are available.
fn fit_rate(points: &[(f64, f64)]) -> (Option<(f64, Option<f64>)>, String) {
    if points.len() < 2 {
        return (None, format!("{} retained levels; a fit needs two", points.len()));
    }
    if let Some(&(n, y)) = points.iter().find(|(_, y)| !y.is_finite()) {
        return (
            None,
            format!("median log error {y} at n={n}; the log-log fit is undefined"),
        );
    }
    let xs: Vec<f64> = points.iter().map(|(n, _)| -n.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, y)| *y).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let stderr = (xs.len() >= 3).then(|| {
        let rss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let r = y - my - slope * (x - mx);
                r * r
            })
            .sum();
        (rss / (k - 2.0) / sxx).sqrt()
    });
    (
        Some((slope, stderr)),
        format!("least squares on {} levels with n_ref/n >= {MIN_REFERENCE_GAP}", points.len()),
    )
}

/// Runs the coupled-level experiment on `model`.
pub fn run_convergence(model: &SddeModel, cfg: &RateExperimentConfig) -> Result<RateReport, HarnessError> {
    cfg.validate(model)?;
    let ns = cfg.level_ns();
    let n_ref = cfg.n_ref();
    // reject misaligned grids before spawning work
    crate::brownian::grid_steps(ns[0], model.horizon())?;

    let use_exact = match cfg.reference {
        ReferencePolicy::FineEuler => false,
        ReferencePolicy::Exact => true,
        ReferencePolicy::Auto => model.coeffs().is_state_independent(),
    };
    let one_path = |p: usize| -> Result<Vec<f64>, HarnessError> {
        let noise = sample_stream(model.m(), model.horizon(), n_ref, StreamKey::new(cfg.seed, p as u32))?;
        let reference: ReferencePath = match if use_exact {
            method_of_steps(model, &noise)
        } else {
            fine_reference(model, &noise, n_ref)
        } {
            Ok(r) => r,
            Err(OracleError::Euler(EulerError::NumericalBlowup { .. })) => {
                return Ok(vec![f64::INFINITY; ns.len()]);
            }
            Err(e) => return Err(e.into()),
        };
        let mut errors = Vec::with_capacity(ns.len());
        for &n in &ns {
            match integrate(model, &noise, n) {
                Ok(path) => errors.push(sup_error(&path, &reference, n_ref)?),
                Err(EulerError::NumericalBlowup { .. }) => errors.push(f64::INFINITY),
                Err(e) => return Err(e.into()),
            }
        }
        Ok(errors)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::ThreadPool(e.to_string()))?;
    let per_path: Vec<Vec<f64>> = pool.install(|| {
        (0..cfg.paths)
            .into_par_iter()
            .map(one_path)
            .collect::<Result<_, _>>()
    })?;

    let provenance = if use_exact {
        Provenance::ExactSteps
    } else {
        Provenance::FineEuler { n_ref }
    };
    let mut errors = vec![Vec::with_capacity(cfg.paths); ns.len()];
    for row in &per_path {
        for (l, e) in row.iter().enumerate() {
            errors[l].push(*e);
        }
    }
    RateReport::from_errors(
        model.label(),
        provenance,
        &ns,
        n_ref,
        errors,
        &cfg.eps,
        cfg.kappa_for(model),
        cfg.seed,
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct ExceedanceRow {
    pub n: u64,
    pub fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExceedanceTable {
    pub eps: f64,
    pub rows: Vec<ExceedanceRow>,
    /// Nonincreasing in `n` up to a two-standard-error allowance
    /// `2√(p(1−p)/P)` per adjacent pair, `p` the larger of the two.
    pub nonincreasing: bool,
    pub violations: Vec<u64>,
}

/// `P(sup error > ε)` per level, recomputed from the stored errors.
pub fn exceedance_table(report: &RateReport, eps: f64) -> ExceedanceTable {
    let paths = report.paths as f64;
    let rows: Vec<ExceedanceRow> = report
        .levels
        .iter()
        .zip(&report.errors)
        .map(|(l, row)| ExceedanceRow {
            n: l.n,
            fraction: row.iter().filter(|&&v| v.is_nan() || v > eps).count() as f64 / paths,
        })
        .collect();
    let violations: Vec<u64> = rows
        .windows(2)
        .filter(|w| {
            let p = w[0].fraction.max(w[1].fraction);
            let allowance = 2.0 * (p * (1.0 - p) / paths).sqrt();
            w[1].fraction > w[0].fraction + allowance
        })
        .map(|w| w[1].n)
        .collect();
    ExceedanceTable {
        eps,
        nonincreasing: violations.is_empty(),
        rows,
        violations,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateDiagnostic {
    pub kappa: f64,
    /// Per-path `ζ̂_p(κ) = max_ℓ n_ℓ^κ e[p][ℓ]` over all levels.
    pub zeta: Vec<f64>,
    /// Level index at which each `ζ̂_p` is attained.
    pub argmax_level: Vec<usize>,
    pub zeta_p50: f64,
    pub zeta_p99: f64,
    /// 99th percentile of `ζ̂_p` restricted to the coarser half of the levels.
    pub zeta_p99_coarse_half: f64,
    /// 99th percentile of `ζ̂_p` restricted to the finer half of the levels.
    pub zeta_p99_fine_half: f64,
    /// `zeta_p99 / zeta_p99_coarse_half`: how much the 99th percentile of the
    /// running maximum still grows once the finer half of the levels is
    /// added. A bounded `ζ` keeps this near one.
    pub stability_ratio: f64,
    /// `zeta_p99_fine_half / zeta_p99_coarse_half`. Falls below one whenever
    /// the error decays faster than `n^{−κ}` over the observed levels.
    pub halves_ratio: f64,
    /// Fraction of paths whose `ζ̂_p` is attained at the finest level.
    pub finest_argmax_fraction: f64,
    /// Set when `n^κ e` keeps growing: most paths peak at the finest level
    /// and the stability ratio exceeds one.
    pub growth_flag: bool,
}

/// Per-path maximum of `scale[ℓ]·errors[ℓ][p]` over `levels`, with its argmax.
fn path_maxima(errors: &[Vec<f64>], scale: &[f64], levels: std::ops::Range<usize>, paths: usize) -> Vec<(f64, usize)> {
    (0..paths)
        .map(|p| {
            let mut best = (f64::NEG_INFINITY, levels.start);
            for l in levels.clone() {
                let v = scale[l] * errors[l][p];
                if v > best.0 {
                    best = (v, l);
                }
            }
            best
        })
        .collect()
}

fn sorted_finite(v: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = v.filter(|x| x.is_finite()).collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Tightness check of `n^κ · sup error` across levels.
pub fn as_rate_diagnostic(report: &RateReport, kappa: f64) -> RateDiagnostic {
    let ns = report.level_ns();
    let levels = ns.len();
    let scale: Vec<f64> = ns.iter().map(|&n| (n as f64).powf(kappa)).collect();
    let all = path_maxima(&report.errors, &scale, 0..levels, report.paths);
    let half = (levels / 2).max(1);
    let coarse = path_maxima(&report.errors, &scale, 0..half, report.paths);
    let fine = path_maxima(&report.errors, &scale, levels - half..levels, report.paths);

    let zeta: Vec<f64> = all.iter().map(|z| z.0).collect();
    let argmax_level: Vec<usize> = all.iter().map(|z| z.1).collect();
    let sorted = sorted_finite(zeta.iter().copied());
    let coarse_p99 = quantile_sorted(&sorted_finite(coarse.iter().map(|z| z.0)), 0.99);
    let fine_p99 = quantile_sorted(&sorted_finite(fine.iter().map(|z| z.0)), 0.99);
    let all_p99 = quantile_sorted(&sorted, 0.99);
    let stability_ratio = all_p99 / coarse_p99;
    let at_finest = argmax_level.iter().filter(|&&l| l + 1 == levels).count();
    let finest_argmax_fraction = at_finest as f64 / report.paths as f64;
    RateDiagnostic {
        kappa,
        zeta_p50: quantile_sorted(&sorted, 0.5),
        zeta_p99: all_p99,
        zeta,
        argmax_level,
        zeta_p99_coarse_half: coarse_p99,
        zeta_p99_fine_half: fine_p99,
        stability_ratio,
        halves_ratio: fine_p99 / coarse_p99,
        finest_argmax_fraction,
        growth_flag: finest_argmax_fraction > 0.5 && stability_ratio > 1.0,
    }
}
