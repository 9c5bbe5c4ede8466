use sdde_core::brownian::sample_path;
use sdde_core::euler::{integrate, sup_error};
use sdde_core::model::builtin;
use sdde_core::oracle::{fine_reference, method_of_steps, Provenance};

const A: f64 = 0.5;
const B: f64 = 0.3;
const TAU: f64 = 0.5;

fn xi(t: f64) -> f64 {
    1.0 + t
}

#[test]
fn euler_on_the_first_interval_is_a_plain_sum() {
    let model = builtin("linear_pure_delay").unwrap().with_horizon(TAU).unwrap();
    let n = 8u64;
    for seed in 0..20 {
        let noise = sample_path(1, TAU, n, seed).unwrap();
        let path = integrate(&model, &noise, n).unwrap();
        let mut acc = 1.0;
        for j in 0..=noise.steps() {
            assert!((path.value(j)[0] - acc).abs() < 1e-12, "seed {seed} step {j}");
            if j < noise.steps() {
                let t = j as f64 / n as f64;
                acc += A * xi(t - TAU) / n as f64 + B * xi(t - TAU) * noise.increment(j)[0];
            }
        }
    }
}

#[test]
fn fine_euler_approaches_the_exact_reference() {
    let model = builtin("linear_pure_delay").unwrap().with_horizon(TAU).unwrap();
    let n = 1u64 << 14;
    for seed in 0..5 {
        let noise = sample_path(1, TAU, n, seed).unwrap();
        let exact = method_of_steps(&model, &noise).unwrap();
        let euler = integrate(&model, &noise, n).unwrap();
        let err = sup_error(&euler, &exact, n).unwrap();
        assert!(err < 1e-3, "seed {seed}: {err}");
    }
}

#[test]
fn references_agree_over_the_full_horizon() {
    // both references share left-point dW sums, so on x-free models they
    // differ only through the ds quadrature and delayed-value lag
    let model = builtin("linear_pure_delay").unwrap();
    let coarse_gap = {
        let noise = sample_path(1, model.horizon(), 512, 3).unwrap();
        let exact = method_of_steps(&model, &noise).unwrap();
        let fine = fine_reference(&model, &noise, 512).unwrap();
        sup_error(&fine, &exact, 512).unwrap()
    };
    let noise = sample_path(1, model.horizon(), 1 << 14, 3).unwrap();
    let exact = method_of_steps(&model, &noise).unwrap();
    let fine = fine_reference(&model, &noise, 1 << 14).unwrap();
    assert_eq!(exact.provenance(), Provenance::ExactSteps);
    assert_eq!(fine.provenance(), Provenance::FineEuler { n_ref: 1 << 14 });
    let gap = sup_error(&fine, &exact, 1 << 14).unwrap();
    assert!(gap < coarse_gap, "{gap} vs {coarse_gap}");
    assert!(gap < 5e-3, "{gap}");
}

#[test]
fn method_of_steps_closed_form_drift_part() {
    // with b = 0 only the ds integral remains: a(t²/2 + (1−τ)t) on [0, τ]
    let model = builtin("linear_pure_delay").unwrap().with_horizon(TAU).unwrap();
    let noise = sample_path(1, TAU, 64, 0).unwrap();
    let exact = method_of_steps(&model, &noise).unwrap();
    let mut stoch = 0.0;
    for j in 0..=noise.steps() {
        let t = j as f64 / 64.0;
        let drift = A * (t * t / 2.0 + (1.0 - TAU) * t);
        assert!((exact.value(j)[0] - (1.0 + drift + B * stoch)).abs() < 1e-10, "t={t}");
        if j < noise.steps() {
            stoch += xi(t - TAU) * noise.increment(j)[0];
        }
    }
}
