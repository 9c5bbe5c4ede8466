use proptest::prelude::*;
use sdde_core::brownian::{sample_path, sample_stream, BrownianGrid};
use sdde_core::euler::{integrate, sup_error, EulerError};
use sdde_core::model::{builtin, builtin_labels, CoefficientField, DelaySpec, InitialSegment, SddeModel};
use sdde_core::rng::StreamKey;

fn noise_for(model: &SddeModel, n: u64, seed: u64) -> BrownianGrid {
    sample_path(model.m(), model.horizon(), n, seed).unwrap()
}

#[test]
fn coarsening_inside_and_outside_agree() {
    for label in builtin_labels() {
        let model = builtin(label).unwrap();
        let fine = noise_for(&model, 64, 17);
        let inside = integrate(&model, &fine, 16).unwrap();
        let outside = integrate(&model, &fine.coarsen(2).unwrap(), 16).unwrap();
        assert_eq!(inside.values(), outside.values(), "{label}");
    }
}

#[test]
fn replay_is_bitwise() {
    for label in builtin_labels() {
        let model = builtin(label).unwrap();
        let a = integrate(&model, &noise_for(&model, 32, 5), 32).unwrap();
        let b = integrate(&builtin(label).unwrap(), &noise_for(&model, 32, 5), 32).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(a.values()), bits(b.values()), "{label}");
    }
}

#[test]
fn scaling_the_initial_segment_scales_the_path() {
    let model = builtin("linear_pure_delay").unwrap();
    let noise = noise_for(&model, 64, 3);
    let base = integrate(&model, &noise, 64).unwrap();
    // powers of two scale without rounding
    for lambda in [2.0, 0.25, -8.0] {
        let scaled = model.with_initial(model.initial().scaled(lambda)).unwrap();
        let path = integrate(&scaled, &noise, 64).unwrap();
        for (x, y) in base.values().iter().zip(path.values()) {
            assert_eq!(lambda * x, *y);
        }
    }
    let scaled = model.with_initial(model.initial().scaled(1.7)).unwrap();
    let path = integrate(&scaled, &noise, 64).unwrap();
    for (x, y) in base.values().iter().zip(path.values()) {
        assert!((1.7 * x - y).abs() <= 1e-12 * y.abs().max(1.0));
    }
}

#[test]
fn delay_free_coefficients_reduce_to_plain_euler_maruyama() {
    let (mu, sigma) = (0.1, 0.2);
    let model = builtin("pure_sde_gbm").unwrap();
    let n = 128u64;
    let noise = noise_for(&model, n, 99);
    let path = integrate(&model, &noise, n).unwrap();
    let h = 1.0 / n as f64;
    let mut x = 1.0f64;
    for j in 0..noise.steps() {
        assert_eq!(path.value(j)[0], x, "step {j}");
        x = x + mu * x * h + sigma * x * noise.increment(j)[0];
    }
    assert_eq!(path.value(noise.steps())[0], x);
}

#[test]
fn restricting_the_extended_horizon_reproduces_the_original() {
    // T = 1.3 is extended to 1.5 = 3τ; the shorter run must be a prefix
    let extended = builtin("delay_gbm").unwrap().with_horizon(1.3).unwrap();
    assert!((extended.horizon() - 1.5).abs() < 1e-12);
    for n in [10u64, 20] {
        let noise = noise_for(&extended, n, 8);
        let long = integrate(&extended, &noise, n).unwrap();
        let short_model = builtin("delay_gbm").unwrap().with_horizon(1.0).unwrap();
        let short = integrate(&short_model, &noise, n).unwrap();
        let cut = (1.3 * n as f64).round() as usize;
        for j in 0..=short.steps() {
            assert_eq!(long.value(j), short.value(j));
        }
        let uncut = integrate(&builtin("delay_gbm").unwrap().with_horizon(1.5).unwrap(), &noise, n).unwrap();
        for j in 0..=cut {
            assert_eq!(long.value(j), uncut.value(j));
        }
        assert_ne!(long.value(long.steps()), uncut.value(uncut.steps()));
        // after the requested horizon the coefficients vanish
        for j in cut..long.steps() {
            assert_eq!(long.value(j + 1), long.value(cut));
        }
    }
}

#[test]
fn scheme_never_reads_ahead() {
    let model = builtin("two_delay_mixed").unwrap();
    let n = 16u64;
    let base = noise_for(&model, n, 1);
    let path = integrate(&model, &base, n).unwrap();
    for cut in [1usize, 7, 8, 20, 31] {
        let mut incs = base.increments().to_vec();
        for v in incs.iter_mut().skip(cut) {
            *v = 1e3;
        }
        let altered = BrownianGrid::from_increments(1, model.horizon(), n, 1, incs).unwrap();
        match integrate(&model, &altered, n) {
            Ok(other) => {
                for j in 0..=cut {
                    assert_eq!(path.value(j), other.value(j), "cut {cut} step {j}");
                }
            }
            Err(EulerError::NumericalBlowup { step, .. }) => assert!(step >= cut),
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn continuous_interpolant_agrees_with_grid_values_and_trajectory() {
    let model = builtin("monotone_cubic").unwrap();
    let noise = noise_for(&model, 256, 4);
    let path = integrate(&model, &noise, 16).unwrap();
    for j in 0..=path.steps() {
        let t = j as f64 / 16.0;
        assert_eq!(path.eval_continuous(t).unwrap(), path.value(j));
    }
    let traj = sdde_core::euler::SampledPath::trajectory(&path, 256).unwrap();
    for i in [1usize, 5, 17, 100, 255] {
        let t = i as f64 / 256.0;
        let v = path.eval_continuous(t).unwrap();
        assert!((v[0] - traj[i]).abs() < 1e-12, "t={t}");
    }
    assert!(path.eval_continuous(1.5).is_err());
    assert_eq!(path.eval_continuous(-0.25).unwrap(), vec![1.0]);
}

#[test]
fn sup_error_needs_matching_noise() {
    let model = builtin("delay_gbm").unwrap();
    let a = integrate(&model, &noise_for(&model, 64, 1), 8).unwrap();
    let b = integrate(&model, &noise_for(&model, 64, 2), 8).unwrap();
    assert!(matches!(sup_error(&a, &b, 64), Err(EulerError::IncomparablePaths(_))));
    let c = integrate(&model, &noise_for(&model, 64, 1), 16).unwrap();
    assert!(sup_error(&a, &c, 64).unwrap() > 0.0);
}

fn scalar_model(a: f64, b: f64, tau: f64) -> SddeModel {
    let coeffs = CoefficientField::new(
        1,
        1,
        1,
        move |_, y, x, o| o[0] = a * y[0] - 0.5 * x[0],
        move |_, y, _, o| o[0] = b * y[0],
    )
    .unwrap();
    SddeModel::new(
        "scalar",
        coeffs,
        vec![DelaySpec::fixed(tau)],
        InitialSegment::from_fn(1, tau, |t, o| o[0] = 1.0 + 0.5 * t),
        4.0 * tau,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coupling_holds_for_random_parameters(
        seed in any::<u64>(),
        path in 0u32..1000,
        a in -1.0f64..1.0,
        b in -0.5f64..0.5,
        q in 0u32..3,
    ) {
        let model = scalar_model(a, b, 0.5);
        let n = 8u64 << q;
        let noise = sample_stream(1, model.horizon(), 4 * n, StreamKey::new(seed, path)).unwrap();
        let direct = integrate(&model, &noise, n).unwrap();
        let via = integrate(&model, &noise.coarsen(4).unwrap(), n).unwrap();
        prop_assert_eq!(direct.values(), via.values());
        prop_assert!(direct.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn sup_error_is_a_symmetric_distance(seed in any::<u64>(), q in 0u32..3) {
        let model = scalar_model(0.4, 0.3, 0.5);
        let noise = sample_path(1, model.horizon(), 128, seed).unwrap();
        let coarse = integrate(&model, &noise, 8 << q).unwrap();
        let fine = integrate(&model, &noise, 128).unwrap();
        let ab = sup_error(&coarse, &fine, 128).unwrap();
        let ba = sup_error(&fine, &coarse, 128).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(sup_error(&coarse, &coarse, 128).unwrap(), 0.0);
    }
}
