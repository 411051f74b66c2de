use nlreg_core::kernel::presets::{cone_quarter_pi, fractional, indicator_ball, one_minus_sin_log};
use nlreg_core::quadrature::{annulus_integral, bv_estimate, first_moment, l_total, tail_integral, BoundedFunction, QuadConfig};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn fractional_closed_forms_across_scales() {
    let spec = fractional(0.25, 1);
    let cfg = QuadConfig::default();
    for k in 1..=12 {
        let r = 2f64.powi(-k);
        // j = |t|^{-3/2} on both half-lines.
        let l_r_1 = 4.0 * (r.powf(-0.5) - 1.0);
        let m = 4.0 * r.sqrt();
        let l = m / r + 4.0 * r.powf(-0.5);
        if r < 1.0 {
            assert!(rel(annulus_integral(&spec, r, 1.0, &cfg).unwrap().value, l_r_1) < 1e-6, "L({r}, 1)");
        }
        assert!(rel(first_moment(&spec, r, &cfg).unwrap().value, m) < 1e-6, "m({r})");
        assert!(rel(l_total(&spec, r, &cfg).unwrap().value, l) < 1e-6, "L({r})");
    }
}

#[test]
fn worked_values() {
    let spec = fractional(0.25, 1);
    let cfg = QuadConfig::default();
    assert!(rel(annulus_integral(&spec, 0.25, 1.0, &cfg).unwrap().value, 4.0) < 1e-8);
    assert_eq!(annulus_integral(&spec, 0.3, 0.3, &cfg).unwrap().value, 0.0);
    assert!(rel(first_moment(&spec, 0.25, &cfg).unwrap().value, 2.0) < 1e-8);
    assert!(rel(l_total(&spec, 1.0, &cfg).unwrap().value, 8.0) < 1e-8);
    assert!(rel(first_moment(&indicator_ball(1.0, 1), 1.0, &cfg).unwrap().value, 1.0) < 1e-10);
    assert_eq!(tail_integral(&BoundedFunction::Zero, &[0.0], 1.0, &spec, &cfg).unwrap(), 0.0);
    let one = BoundedFunction::Constant { value: 1.0 };
    assert!(rel(tail_integral(&one, &[0.0], 1.0, &spec, &cfg).unwrap(), 4.0) < 1e-8);
    // Indicator of B_2: ∫_{|z|>1} j = 2.
    assert!(rel(tail_integral(&one, &[0.0], 1.0, &indicator_ball(2.0, 1), &cfg).unwrap(), 2.0) < 1e-10);
}

#[test]
fn divergent_moment_is_detected() {
    let err = first_moment(&fractional(0.5, 1), 0.5, &QuadConfig::default());
    assert!(err.is_err());
}

#[test]
fn bv_of_monotone_profile_is_endpoint_difference() {
    let spec = fractional(0.25, 1);
    let cfg = QuadConfig::default();
    for (r, big_r) in [(0.1, 0.2), (0.01, 0.5), (0.3, 0.9)] {
        let exact = 2.0 * (f64::powf(r, -1.5) - f64::powf(big_r, -1.5));
        let bv = bv_estimate(&spec, r, big_r, &cfg).unwrap();
        assert!(!bv.lower_bound);
        assert!(rel(bv.value, exact) < 1e-6, "{} vs {exact}", bv.value);
    }
}

#[test]
fn cone_bv_within_bound() {
    let spec = cone_quarter_pi();
    let cfg = QuadConfig::default();
    let (r, big_r) = (0.1, 0.2);
    let m = 8.0 / std::f64::consts::PI + 2.0;
    let bv = bv_estimate(&spec, r, big_r, &cfg).unwrap().value;
    let tail = annulus_integral(&spec, r, f64::INFINITY, &cfg).unwrap().value;
    assert!(bv > 0.0 && bv <= m / r * tail, "{bv} vs {}", m / r * tail);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn annulus_is_additive(a in 1e-4f64..0.3, b in 0.0f64..1.0, c in 0.0f64..1.0) {
        let (r, big_r, s) = (a, a + b * 0.4 + 1e-3, a + b * 0.4 + 1e-3 + c * 2.0 + 1e-3);
        let cfg = QuadConfig::default();
        for spec in [fractional(0.25, 1), one_minus_sin_log(1), one_minus_sin_log(2)] {
            let whole = annulus_integral(&spec, r, s, &cfg).unwrap().value;
            let parts = annulus_integral(&spec, r, big_r, &cfg).unwrap().value + annulus_integral(&spec, big_r, s, &cfg).unwrap().value;
            prop_assert!((whole - parts).abs() <= 2.0 * cfg.rel_tol * whole + cfg.abs_tol, "{} vs {}", whole, parts);
        }
    }

    #[test]
    fn quantities_are_monotone(r in 1e-4f64..0.4, f in 1.05f64..2.0) {
        let cfg = QuadConfig::default();
        let slack = 1e-7;
        for spec in [fractional(0.3, 1), one_minus_sin_log(1), cone_quarter_pi()] {
            let r2 = r * f;
            let l1 = annulus_integral(&spec, r, 1.0, &cfg).unwrap().value;
            let l2 = annulus_integral(&spec, r2, 1.0, &cfg).unwrap().value;
            prop_assert!(l2 <= l1 * (1.0 + slack));
            let l3 = annulus_integral(&spec, r, 1.5, &cfg).unwrap().value;
            prop_assert!(l3 >= l1 * (1.0 - slack));
            let m1 = first_moment(&spec, r, &cfg).unwrap().value;
            let m2 = first_moment(&spec, r2, &cfg).unwrap().value;
            prop_assert!(m2 >= m1 * (1.0 - slack));
            let t1 = l_total(&spec, r, &cfg).unwrap().value;
            let t2 = l_total(&spec, r2, &cfg).unwrap().value;
            prop_assert!(t2 <= t1 * (1.0 + slack), "L({}) = {} < L({}) = {}", r, t1, r2, t2);
        }
    }
}
