use nlreg_core::conditions::{run_suite, SuiteOptions};
use nlreg_core::continuity::*;
use nlreg_core::growth::{growth_params, GrowthOptions, GrowthParams};
use nlreg_core::kernel::{presets, KernelSpec, TwoPointKernel};
use nlreg_core::quadrature::QuadConfig;
use nlreg_core::Error;

fn fractional_params() -> (KernelSpec, GrowthParams) {
    let cfg = QuadConfig::default();
    let spec = presets::fractional(0.25, 1);
    let k = TwoPointKernel::translation_invariant(spec.clone());
    let reports = run_suite(&k, SuiteOptions { r0: 0.5, seed: 3 }, &cfg).unwrap();
    let p = growth_params(&spec, &reports, 0.5, GrowthOptions::default(), &cfg).unwrap();
    (spec, p)
}

#[test]
fn fractional_schedule_is_consistent() {
    let (spec, mut p) = fractional_params();
    let cfg = QuadConfig::default();
    let (omega, s) = build_modulus(&mut p, 1.5, 0.125, 24, &spec, &cfg).unwrap();
    assert!(s.radii.windows(2).all(|w| w[1] < w[0]));
    assert!(s.kappa > 0.5 && s.kappa < 1.0);
    for n in 0..s.g.len() {
        // independent recomputation of the defining max
        let mut best: f64 = 0.0;
        for i in 1..=n {
            best = best.max(s.kappa.powi(i as i32 - 1) / s.h[n - i]);
        }
        let g = 2.0 * 1.5 * best;
        let gt = s.kappa.powi(n as i32).max(g);
        assert!((gt - s.g_tilde_raw[n]).abs() <= 1e-12 * gt, "n = {n}");
    }
    assert!(s.g_tilde.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(omega.eval(0.0).unwrap(), 0.0);
    let mut prev = 0.0;
    for i in 0..2000 {
        let t = 0.2 * i as f64 / 2000.0;
        let v = omega.eval(t).unwrap();
        assert!(v >= prev);
        prev = v;
    }
}

#[test]
fn single_step_modulus() {
    let (spec, mut p) = fractional_params();
    let (omega, s) = build_modulus(&mut p, 1.0, 0.125, 1, &spec, &QuadConfig::default()).unwrap();
    assert_eq!(omega.breakpoints().len(), 2);
    assert_eq!(omega.breakpoints()[1], (s.radii[1], s.g_tilde[0].max(2.0)));
    assert!(s.g_tilde[0] >= s.g_tilde_raw[0]);
    assert!(matches!(build_modulus(&mut p, 1.0, 0.125, 0, &spec, &QuadConfig::default()), Err(Error::Argument(_))));
}

#[test]
fn modulus_evaluation() {
    let w = Modulus::new(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 4.0)]).unwrap();
    assert_eq!(eval_modulus(&w, 0.0).unwrap(), 0.0);
    assert_eq!(eval_modulus(&w, 2.0).unwrap(), 3.0);
    assert_eq!(eval_modulus(&w, 10.0).unwrap(), 4.0);
    assert!(eval_modulus(&w, -1.0).is_err());
    assert!(Modulus::new(vec![(0.0, 0.0), (1.0, 2.0), (2.0, 1.0)]).is_err());
}

#[test]
fn step_branches() {
    let (spec, p) = fractional_params();
    let cfg = QuadConfig::default();
    let h = p.h(&spec, 0.125, &cfg).unwrap();
    let (r, b) = oscillation_step(0.0, 0.125, &p, 1.0, 1.0, &spec, &cfg).unwrap();
    assert!(r < 0.125);
    assert!((b - 2.0 / h).abs() < 1e-12 * b);
    let kappa = (2.0 - p.theta) / 2.0;
    let (_, b) = oscillation_step(1e6, 0.125, &p, 1.0, 1.0, &spec, &cfg).unwrap();
    assert_eq!(b, kappa * 1e6);
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn piecewise_linear_modulus_is_nondecreasing(steps in proptest::collection::vec((1e-3f64..1.0, 0.0f64..1.0), 1..12), t in 0.0f64..20.0, dt in 0.0f64..5.0) {
            let mut bp = vec![(0.0, 0.0)];
            let (mut x, mut y) = (0.0, 0.0);
            for (dx, dy) in steps {
                x += dx;
                y += dy;
                bp.push((x, y));
            }
            let omega = Modulus::new(bp).unwrap();
            prop_assert_eq!(omega.eval(0.0).unwrap(), 0.0);
            prop_assert!(omega.eval(t + dt).unwrap() >= omega.eval(t).unwrap());
        }

    }

    proptest! {
        // Each case builds a full schedule (~1 s).
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn constructed_modulus_is_monotone_in_t(k_tilde in 1.0f64..20.0, r_star in 0.01f64..0.2, t in 0.0f64..1.0, f in 1.0f64..4.0) {
            static PARAMS: std::sync::OnceLock<(KernelSpec, GrowthParams)> = std::sync::OnceLock::new();
            let (spec, p) = PARAMS.get_or_init(fractional_params);
            let mut p = p.clone();
            let cfg = QuadConfig::default();
            let (omega, s) = build_modulus(&mut p, k_tilde, r_star, 12, spec, &cfg).unwrap();
            prop_assert!(s.g_tilde.windows(2).all(|w| w[1] <= w[0]));
            prop_assert!(omega.eval(t * f).unwrap() >= omega.eval(t).unwrap());
            prop_assert!(omega.breakpoints().windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 >= w[0].1));
        }
    }
}
