use super::{as_integer, SddeModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Half-width of the box in which coefficient finiteness is probed.
const PROBE_BOX: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(check: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            check: check.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub model: String,
    pub probes: usize,
    pub seed: u64,
    pub horizon: f64,
    pub requested_horizon: f64,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.check == name)
    }
}

/// Sampled sanity checks on a model. Failures are reported, never raised.
pub fn validate_model(model: &SddeModel, probes: usize, seed: u64) -> ValidationReport {
    let probes = probes.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = model.horizon();
    let mut times: Vec<f64> = (0..probes).map(|_| rng.gen::<f64>() * horizon).collect();
    times.push(0.0);
    times.push(horizon);
    times.sort_by(f64::total_cmp);

    let mut checks = Vec::new();

    let steps = as_integer(horizon / model.tau());
    checks.push(match (steps, model.is_normalized()) {
        (Some(k), false) => CheckResult::new(
            "horizon",
            k > 0,
            format!("T={horizon} is {k} multiples of tau={}", model.tau()),
        ),
        (Some(k), true) => CheckResult::new(
            "horizon",
            k > 0,
            format!(
                "requested T={} extended to T'={horizon} ({k} multiples of tau={}); coefficients vanish after the requested T",
                model.requested_horizon(),
                model.tau()
            ),
        ),
        (None, _) => CheckResult::new(
            "horizon",
            false,
            format!("T={horizon} is not a multiple of tau={}", model.tau()),
        ),
    });

    let mut bound_failure = None;
    let mut monotone_failure = None;
    'delays: for (i, spec) in model.delays().iter().enumerate() {
        let mut prev = f64::NEG_INFINITY;
        for &t in &times {
            match spec.eval(t) {
                Ok(v) => {
                    if v < prev && monotone_failure.is_none() {
                        monotone_failure = Some(format!("delay {i} decreases before t={t}"));
                    }
                    prev = v;
                }
                Err(e) => {
                    bound_failure = Some(format!("delay {i}: {e}"));
                    // monotonicity is meaningless past a bound failure
                    let v = spec.value(t);
                    if v < prev && monotone_failure.is_none() {
                        monotone_failure = Some(format!("delay {i} decreases before t={t}"));
                    }
                    continue 'delays;
                }
            }
        }
    }
    checks.push(match bound_failure {
        None => CheckResult::new(
            "delay_bound",
            true,
            format!("{} delays within [-C, floor(t/tau)*tau] at {} times", model.k(), times.len()),
        ),
        Some(d) => CheckResult::new("delay_bound", false, d),
    });
    checks.push(match monotone_failure {
        None => CheckResult::new("delay_monotone", true, "nondecreasing on sampled pairs"),
        Some(d) => CheckResult::new("delay_monotone", false, d),
    });

    checks.push(check_initial_finite(model, &mut rng, probes));
    checks.push(check_initial_continuity(model, &mut rng, probes));
    checks.push(check_coefficients(model, &mut rng, probes));

    ValidationReport {
        model: model.label().to_string(),
        probes,
        seed,
        horizon,
        requested_horizon: model.requested_horizon(),
        checks,
    }
}

fn check_initial_finite(model: &SddeModel, rng: &mut ChaCha8Rng, probes: usize) -> CheckResult {
    let seg = model.initial();
    let mut buf = vec![0.0; seg.dim()];
    let mut ts = vec![0.0, -seg.history()];
    ts.extend((0..probes).map(|_| -rng.gen::<f64>() * seg.history()));
    for t in ts {
        if seg.eval(t, &mut buf).is_err() || buf.iter().any(|v| !v.is_finite()) {
            return CheckResult::new("initial_finite", false, format!("xi({t}) is not finite"));
        }
    }
    CheckResult::new("initial_finite", true, "xi finite on sampled points of [-C, 0]")
}

/// Differences over shrinking offsets must shrink.
fn check_initial_continuity(model: &SddeModel, rng: &mut ChaCha8Rng, probes: usize) -> CheckResult {
    let seg = model.initial();
    let c = seg.history();
    if c == 0.0 {
        return CheckResult::new("initial_continuity", true, "segment reduces to the point 0");
    }
    let rungs = [1e-2, 1e-4, 1e-6];
    let (mut a, mut b) = (vec![0.0; seg.dim()], vec![0.0; seg.dim()]);
    let base: Vec<f64> = (0..probes.min(2000)).map(|_| -rng.gen::<f64>() * c).collect();
    let mut sups = Vec::with_capacity(rungs.len());
    for h in rungs {
        let mut sup: f64 = 0.0;
        for &t in &base {
            let s = if t + h <= 0.0 { t + h } else { t - h };
            if seg.eval(t, &mut a).is_err() || seg.eval(s, &mut b).is_err() {
                continue;
            }
            sup = sup.max(norm_diff(&a, &b));
        }
        sups.push(sup);
    }
    let (first, last) = (sups[0], sups[sups.len() - 1]);
    let passed = last <= 1e-9 || last <= 1e-3 * first;
    CheckResult::new(
        "initial_continuity",
        passed,
        format!("sup |xi(t)-xi(s)| at |t-s| in {rungs:?}: {sups:?}"),
    )
}

fn check_coefficients(model: &SddeModel, rng: &mut ChaCha8Rng, probes: usize) -> CheckResult {
    let coeffs = model.coeffs();
    let (d, m, k) = (coeffs.d(), coeffs.m(), coeffs.k());
    let mut y = vec![0.0; d * k];
    let mut x = vec![0.0; d];
    let (mut b1, mut b2) = (vec![0.0; d], vec![0.0; d]);
    let (mut a1, mut a2) = (vec![0.0; d * m], vec![0.0; d * m]);
    for _ in 0..probes {
        let t = rng.gen::<f64>() * model.horizon();
        y.iter_mut()
            .for_each(|v| *v = rng.gen_range(-PROBE_BOX..=PROBE_BOX));
        x.iter_mut()
            .for_each(|v| *v = rng.gen_range(-PROBE_BOX..=PROBE_BOX));
        coeffs.drift(t, &y, &x, &mut b1);
        coeffs.diffusion(t, &y, &x, &mut a1);
        if b1.iter().chain(a1.iter()).any(|v| !v.is_finite()) {
            return CheckResult::new(
                "coefficients_finite",
                false,
                format!("non-finite coefficient at t={t}, y={y:?}, x={x:?}"),
            );
        }
        coeffs.drift(t, &y, &x, &mut b2);
        coeffs.diffusion(t, &y, &x, &mut a2);
        if b1 != b2 || a1 != a2 {
            return CheckResult::new(
                "coefficients_finite",
                false,
                format!("coefficients are not pure at t={t}, y={y:?}, x={x:?}"),
            );
        }
    }
    CheckResult::new(
        "coefficients_finite",
        true,
        format!("beta, alpha finite and repeatable on {probes} probes in [-{PROBE_BOX}, {PROBE_BOX}]"),
    )
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}
