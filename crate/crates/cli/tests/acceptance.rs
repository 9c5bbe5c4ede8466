//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use sdde_core::brownian::{sample_path, sample_stream};
use sdde_core::euler::{integrate, sup_error};
use sdde_core::harness::{
    as_rate_diagnostic, exceedance_table, run_convergence, RateExperimentConfig, RateReport,
};
use sdde_core::model::builtin;
use sdde_core::oracle::{method_of_steps, Provenance};
use sdde_core::probe::{probe_growth, probe_lipschitz, probe_onesided};
use sdde_core::rng::StreamKey;
use std::process::Command;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// drift_only is integrated exactly at every level.
fn exactness() -> Outcome {
    let model = builtin("drift_only").unwrap();
    let mut worst: f64 = 0.0;
    for q in 2..=8 {
        let n = 1u64 << q;
        let noise = sample_path(1, model.horizon(), n, q as u64).unwrap();
        let path = integrate(&model, &noise, n).map_err(|e| e.to_string())?;
        for j in 0..=path.steps() {
            let exact = 1.0 + j as f64 / n as f64;
            worst = worst.max((path.value(j)[0] - exact).abs() / exact);
        }
    }
    check(worst <= 1e-12, format!("max relative error {worst:e} over n = 4..256"))
}

/// Coarsening undoes refinement, coarsening is associative, and increments
/// have the right variance.
fn noise_consistency() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let g = sample_stream(2, 1.0, 64, StreamKey::new(seed, 0)).unwrap();
        let coarse = g.coarsen(4).unwrap();
        let back = coarse.refine(4).map_err(|e| e.to_string())?;
        let twice = g.coarsen(2).unwrap().coarsen(2).unwrap();
        let chain = g.coarsen(2).unwrap().coarsen(4).unwrap();
        let direct = g.coarsen(8).unwrap();
        for (x, y) in back.increments().iter().zip(g.increments()) {
            worst = worst.max((x - y).abs());
        }
        for (x, y) in twice.increments().iter().zip(coarse.increments()) {
            worst = worst.max((x - y).abs());
        }
        for (x, y) in chain.increments().iter().zip(direct.increments()) {
            worst = worst.max((x - y).abs());
        }
    }
    let mut draws = Vec::with_capacity(100_000);
    for p in 0..25_000u32 {
        draws.extend_from_slice(sample_stream(1, 1.0, 4, StreamKey::new(1, p)).unwrap().increments());
    }
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let sigma = 0.25 * (2.0 / (n - 1.0)).sqrt();
    check(
        worst <= 1e-12 && (var - 0.25).abs() <= 3.0 * sigma,
        format!(
            "max deviation {worst:e} over 100 seeds; pooled variance {var:.5} (0.25 +/- {:.5})",
            3.0 * sigma
        ),
    )
}

/// Euler at 2^14 and the exact reference agree on the first delay interval;
/// a hand-written sum reproduces the scheme at n = 8.
fn oracle_equivalence() -> Outcome {
    let (a, b, tau) = (0.5, 0.3, 0.5);
    let model = builtin("linear_pure_delay").unwrap().with_horizon(tau).unwrap();
    let n = 1u64 << 14;
    let mut agree = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let noise = sample_path(1, tau, n, seed).unwrap();
        let exact = method_of_steps(&model, &noise).map_err(|e| e.to_string())?;
        let euler = integrate(&model, &noise, n).map_err(|e| e.to_string())?;
        let err = sup_error(&euler, &exact, n).map_err(|e| e.to_string())?;
        worst = worst.max(err);
        if err < 1e-3 {
            agree += 1;
        }
    }
    let mut resum: f64 = 0.0;
    for seed in 0..50u64 {
        let noise = sample_path(1, tau, 8, seed).unwrap();
        let path = integrate(&model, &noise, 8).map_err(|e| e.to_string())?;
        let mut acc = 1.0;
        for j in 0..=noise.steps() {
            resum = resum.max((path.value(j)[0] - acc).abs());
            let t = j as f64 / 8.0;
            if j < noise.steps() {
                let xi = 1.0 + (t - tau);
                acc += a * xi / 8.0 + b * xi * noise.increment(j)[0];
            }
        }
    }
    check(
        agree == 50 && resum <= 1e-12,
        format!("{agree}/50 seeds below 1e-3 (worst {worst:.2e}); re-summation gap {resum:e}"),
    )
}

fn standard_config(label: &str, paths: usize) -> RateExperimentConfig {
    // levels 8·2^{0..6}, reference 16× the top level, seed 1
    let cfg = RateExperimentConfig::new(label, 8, 7, paths, 1);
    assert_eq!(cfg.n_ref(), 16 * 512);
    cfg
}

fn experiment(label: &str, paths: usize) -> Result<RateReport, String> {
    let model = builtin(label).unwrap();
    run_convergence(&model, &standard_config(label, paths)).map_err(|e| e.to_string())
}

/// Fitted rate under the local Lipschitz condition.
fn rate_lipschitz(linear: &RateReport) -> Outcome {
    let gbm = experiment("delay_gbm", 200)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for r in [linear, &gbm] {
        let g = r.gamma_hat.unwrap_or(f64::NAN);
        ok &= (0.35..=0.65).contains(&g) && r.blowups == 0;
        parts.push(format!("{}: gamma_hat {g:.4}, blow-ups {}", r.model, r.blowups));
    }
    check(ok, parts.join("; "))
}

/// Median errors decrease with a positive rate under the monotone condition.
fn rate_monotone() -> Outcome {
    let r = experiment("monotone_cubic", 200)?;
    let med = r.medians();
    let decreasing = med.windows(2).all(|w| w[1] < w[0]);
    let g = r.gamma_hat.unwrap_or(f64::NAN);
    check(
        decreasing && g >= 0.15,
        format!("medians strictly decreasing: {decreasing}; gamma_hat {g:.4}"),
    )
}

/// Exceedance probabilities fall with n and end below 0.05.
fn convergence_in_probability() -> Outcome {
    let r = experiment("delay_gbm", 400)?;
    let t = exceedance_table(&r, 0.05);
    let last = t.rows.last().map_or(1.0, |row| row.fraction);
    let row: Vec<String> = t.rows.iter().map(|row| format!("{}", row.fraction)).collect();
    check(
        t.nonincreasing && last < 0.05,
        format!("p_hat = [{}], nonincreasing within tolerance: {}", row.join(", "), t.nonincreasing),
    )
}

/// `n^κ · error` stays bounded for the linear model and the diagnostic
/// flags a profile that decays too slowly.
fn bound_diagnostic(linear: &RateReport) -> Outcome {
    let d = as_rate_diagnostic(linear, 0.4);
    let ns: Vec<u64> = (0..7).map(|l| 8u64 << l).collect();
    let errors: Vec<Vec<f64>> = ns
        .iter()
        .map(|&n| (0..200).map(|p| (1.0 + p as f64 / 100.0) * (n as f64).powf(-0.25)).collect())
        .collect();
    let synthetic =
        RateReport::from_errors("synthetic", Provenance::ExactSteps, &ns, 16 * 512, errors, &[], 0.4, 0)
            .map_err(|e| e.to_string())?;
    let s = as_rate_diagnostic(&synthetic, 0.4);
    check(
        (0.5..=2.0).contains(&d.stability_ratio) && !d.growth_flag && s.growth_flag,
        format!(
            "linear_pure_delay stability ratio {:.4} (coarse/fine halves {:.4}); synthetic n^-1/4 flagged: {}",
            d.stability_ratio, d.halves_ratio, s.growth_flag
        ),
    )
}

/// Probe estimates match the closed-form constants at 10^6 probes.
fn probe_constants() -> Outcome {
    let n = 1_000_000;
    let growth = probe_growth(&builtin("pure_sde_gbm").unwrap(), 2.0, n, 1).estimated_constant;
    let lip = probe_lipschitz(&builtin("linear_pure_delay").unwrap(), 2.0, n, 1)
        .component("drift")
        .unwrap_or(f64::NAN);
    let one = probe_onesided(&builtin("monotone_cubic").unwrap(), 2.0, n, 1)
        .component("x_one_sided")
        .unwrap_or(f64::NAN);
    let ok = (growth - 0.24).abs() <= 0.05 * 0.24 && (lip - 0.5).abs() <= 0.05 * 0.5 && one.abs() <= 0.05;
    check(
        ok,
        format!("growth {growth:.5} (0.24); drift Lipschitz {lip:.6} (0.5); cubic one-sided {one:.2e} (0)"),
    )
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_sdde"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

/// Every command reproduces its outputs bitwise.
fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"seed": 11, "format": ["json", "csv", "svg"], "threads": 2,
            "converge": {"model": "delay_gbm", "n0": 8, "levels": 4, "paths": 24, "eps": [0.05, 0.1]}}"#,
    )
    .map_err(|e| e.to_string())?;
    let cfg = cfg.to_str().unwrap();
    let mut checked = 0;
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        std::fs::create_dir_all(&out).map_err(|e| e.to_string())?;
        let o = out.to_str().unwrap();
        run_cli(&["simulate", "--model", "two_delay_mixed", "--n", "64", "--seed", "3", "--out", &format!("{o}/path.csv")])?;
        run_cli(&["simulate", "--model", "monotone_cubic", "--n", "64", "--seed", "3", "--format", "json", "--out", &format!("{o}/path.json")])?;
        run_cli(&["converge", "--config", cfg, "--out", o])?;
        run_cli(&["probe", "--model", "delay_gbm", "--samples", "5000", "--seed", "2", "--out", &format!("{o}/probe.json")])?;
        let listing = run_cli(&["list-models"])?;
        std::fs::write(out.join("list.txt"), listing).map_err(|e| e.to_string())?;
    }
    let mut names: Vec<_> = std::fs::read_dir(dir.path().join("a"))
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    for name in &names {
        let a = std::fs::read(dir.path().join("a").join(name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(dir.path().join("b").join(name)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{} differs between runs", name.to_string_lossy()));
        }
        checked += 1;
    }
    check(checked == 7, format!("{checked} output files identical across reruns"))
}

fn main() {
    let started = Instant::now();
    let mut failures = 0;
    let mut report = |id: u32, title: &str, budget: Duration, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let outcome = f();
        let elapsed = t.elapsed();
        let (mut ok, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        let mut timing = format!("{:.2}s", elapsed.as_secs_f64());
        if elapsed > budget {
            ok = false;
            timing.push_str(&format!(" > budget {}s", budget.as_secs()));
        }
        println!(
            "criterion {id} [{}] {title}: {detail} ({timing})",
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            failures += 1;
        }
    };

    report(1, "deterministic exactness", Duration::from_secs(1), &mut exactness);
    report(2, "noise consistency", Duration::from_secs(10), &mut noise_consistency);
    report(3, "oracle equivalence", Duration::from_secs(30), &mut oracle_equivalence);

    // criteria 4 and 7 share the linear_pure_delay experiment
    let t = Instant::now();
    let linear = experiment("linear_pure_delay", 200);
    let shared = t.elapsed();
    report(4, "rate under local Lipschitz", Duration::from_secs(120).saturating_sub(shared), &mut || {
        linear.as_ref().map_err(Clone::clone).and_then(rate_lipschitz)
    });
    report(5, "rate under monotonicity", Duration::from_secs(120), &mut rate_monotone);
    report(6, "convergence in probability", Duration::from_secs(180), &mut convergence_in_probability);
    report(7, "almost-sure bound diagnostic", Duration::from_secs(60).saturating_sub(shared), &mut || {
        linear.as_ref().map_err(Clone::clone).and_then(bound_diagnostic)
    });
    report(8, "condition probing", Duration::from_secs(60), &mut probe_constants);
    report(9, "CLI determinism", Duration::from_secs(120), &mut cli_determinism);

    println!(
        "acceptance: {} of 9 criteria passed in {:.1}s",
        9 - failures,
        started.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
