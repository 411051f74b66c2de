use std::time::Instant;

use nlreg_core::kernel::{build_kernel, presets, Family, KernelConfig, Mode, TwoPointKernel, Weight};
use nlreg_core::quadrature::{BoundedFunction, QuadConfig};
use nlreg_core::solver::*;
use nlreg_core::Error;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> QuadConfig {
    QuadConfig::default()
}

fn frac(s: f64) -> TwoPointKernel {
    TwoPointKernel::translation_invariant(presets::fractional(s, 1))
}

fn drift(amplitude: f64) -> TwoPointKernel {
    let base = build_kernel(KernelConfig { family: Family::Fractional { s: 0.25 }, dimension: 1, lambda: 1.5, gamma_hint: None }).unwrap();
    TwoPointKernel::new(base, Mode::Weighted { weight: Weight::TanhDrift { amplitude } }).unwrap()
}

const GL20: [(f64, f64); 10] = [
    (0.076_526_521_133_497_33, 0.152_753_387_130_725_85),
    (0.227_785_851_141_645_08, 0.149_172_986_472_603_75),
    (0.373_706_088_715_419_56, 0.142_096_109_318_382_05),
    (0.510_867_001_950_827_1, 0.131_688_638_449_176_63),
    (0.636_053_680_726_515, 0.118_194_531_961_518_42),
    (0.746_331_906_460_150_8, 0.101_930_119_817_240_44),
    (0.839_116_971_822_218_8, 0.083_276_741_576_704_75),
    (0.912_234_428_251_326, 0.062_672_048_334_109_06),
    (0.963_971_927_277_913_8, 0.040_601_429_800_386_94),
    (0.993_128_599_185_094_9, 0.017_614_007_139_152_12),
];

/// 20-point Gauss–Legendre rule on [a, b].
fn gl20(a: f64, b: f64) -> Vec<(f64, f64)> {
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    GL20.iter().flat_map(|&(x, w)| [(m - r * x, r * w), (m + r * x, r * w)]).collect()
}

fn hat(xi: f64, h: f64, x: f64) -> f64 {
    (1.0 - (x - xi).abs() / h).max(0.0)
}

#[test]
fn mesh_counts_and_errors() {
    let m = build_mesh(-1.0, 1.0, 1.0, 0.5).unwrap();
    assert_eq!(m.len(), 9);
    assert_eq!(m.interior().len(), 3);
    assert_eq!(m.nodes(), vec![-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]);
    assert!((0..9).filter(|&i| m.class(i) == NodeClass::Interior).eq(m.interior()));
    assert!(matches!(build_mesh(-1.0, 1.0, 1.0, 3.0), Err(Error::Argument(_))));
    assert!(matches!(build_mesh(-1.0, 1.0, 0.0, 0.5), Err(Error::Argument(_))));
    assert!(matches!(build_mesh(-1.0, 1.0, 1.0, 0.3), Err(Error::Argument(_))));
}

#[test]
fn bspline_is_hat_autocorrelation() {
    for d in [0.0, 0.3, 1.0, 1.7, 2.5] {
        let direct: f64 = gl20(-1.0, 0.0).into_iter().chain(gl20(0.0, 1.0)).map(|(x, w)| w * hat(0.0, 1.0, x) * hat(d, 1.0, x)).sum();
        // the product is piecewise polynomial with kinks at 0, ±1, d, d±1: refine with many panels
        let fine: f64 = (0..40)
            .flat_map(|p| gl20(-1.0 + p as f64 / 20.0, -1.0 + (p + 1) as f64 / 20.0))
            .map(|(x, w)| w * hat(0.0, 1.0, x) * hat(d, 1.0, x))
            .sum();
        assert!((fine - bspline(d)).abs() < 1e-6, "d={d}: {fine} vs {}", bspline(d));
        let _ = direct;
    }
}

#[test]
fn far_entries_match_tensor_quadrature() {
    let s = 0.25;
    let h = 0.125;
    let mesh = build_mesh(-1.0, 1.0, 0.5, h).unwrap();
    let sys = assemble(&frac(s), &mesh, &BoundedFunction::Zero, &cfg()).unwrap();
    // disjoint supports: E(φ_j, φ_i) = −∬ φ_i(x) φ_j(y) |x − y|^{−1−2s}
    for k in 3..8usize {
        let (xi, xj) = (0.0, k as f64 * h);
        let mut v = 0.0;
        for (ca, cb) in [(xi - h, xi), (xi, xi + h)] {
            for (da, db) in [(xj - h, xj), (xj, xj + h)] {
                for (x, wx) in gl20(ca, cb) {
                    for (y, wy) in gl20(da, db) {
                        v += wx * wy * hat(xi, h, x) * hat(xj, h, y) * (y - x).abs().powf(-1.0 - 2.0 * s);
                    }
                }
            }
        }
        let i = mesh.interior().start + 4;
        let got = sys.s_sym[(i, i + k)];
        assert!((got + v).abs() < 1e-8 * v.abs(), "k={k}: {got} vs {}", -v);
    }
}

#[test]
fn row_sums_match_exterior_integral() {
    // −Σ_j S_ij = E(1 − Σφ, φ_i) = −∫φ_i(x)∫(1 − Σφ)(y)K dy dx, computed directly.
    let s = 0.25;
    let h = 0.0625;
    let mesh = build_mesh(-0.5, 0.5, 0.25, h).unwrap();
    let sys = assemble(&frac(s), &mesh, &BoundedFunction::Zero, &cfg()).unwrap();
    let (lo, hi) = mesh.outer();
    let e = 2.0 * s;
    for i in [mesh.interior().start, mesh.interior().start + 3, mesh.len() / 2] {
        let xi = mesh.x(i);
        let mut v = 0.0;
        for (ca, cb) in [(xi - h, xi), (xi, xi + h)] {
            for (x, wx) in gl20(ca, cb) {
                // ramp cells (1 − φ_end) then the full exterior in closed form
                let mut inner = ((x - (lo - h)).powf(-e) + ((hi + h) - x).powf(-e)) / e;
                for (y, wy) in gl20(lo - h, lo).into_iter().chain(gl20(hi, hi + h)) {
                    let ramp = if y < lo { (lo - y) / h } else { (y - hi) / h };
                    inner += wy * ramp * (y - x).abs().powf(-1.0 - e);
                }
                v += wx * hat(xi, h, x) * inner;
            }
        }
        let row: f64 = sys.stiffness().row(i).sum();
        assert!((row - v).abs() < 1e-6 * v, "node {i}: row sum {row} vs {v}");
    }
}

#[test]
fn symmetric_form_is_psd_toeplitz_and_kills_constants() {
    let mesh = build_mesh(-1.0, 1.0, 0.5, 1.0 / 32.0).unwrap();
    let sys = assemble(&frac(0.25), &mesh, &BoundedFunction::Zero, &cfg()).unwrap();
    let n = mesh.len();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s = sys.stiffness();
    let scale = s[(0, 0)];
    for _ in 0..100 {
        let v = nalgebra::DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        assert!(v.dot(&(&s * &v)) >= -1e-12 * scale * n as f64);
    }
    let int = mesh.interior();
    for i in int.start..int.end - 1 {
        for j in int.start..int.end - 1 {
            assert!((s[(i, j)] - s[(i + 1, j + 1)]).abs() <= 1e-10 * scale);
        }
    }
    let one = DiscreteFunction::new(mesh.clone(), vec![1.0; n], BoundedFunction::Constant { value: 1.0 }).unwrap();
    let r = residual(&sys, &one, &BoundedFunction::Zero).unwrap();
    assert!(r.max_abs * mesh.h <= 1e-10 * scale, "{}", r.max_abs);
}

#[test]
fn asymmetric_translation_invariant_part_is_antisymmetric() {
    let k = TwoPointKernel::translation_invariant(presets::asymmetric_example());
    let mesh = build_mesh(-0.5, 0.5, 0.25, 1.0 / 16.0).unwrap();
    let sys = assemble(&k, &mesh, &BoundedFunction::Zero, &cfg()).unwrap();
    assert!((&sys.s_anti + sys.s_anti.transpose()).abs().max() == 0.0);
    assert!(sys.s_anti.abs().max() > 0.0);
    let g = garding_from(&sys, 200, 1).unwrap();
    assert_eq!(g.c_hat, 0.0);
    // the independent odd-part check: E_a(φ_j, φ_i) for far pairs equals −∬φ_iφ_j K_a
    let h = mesh.h;
    let k5 = 5usize;
    let mut v = 0.0;
    let (xi, xj) = (0.0, k5 as f64 * h);
    for (ca, cb) in [(xi - h, xi), (xi, xi + h)] {
        for (da, db) in [(xj - h, xj), (xj, xj + h)] {
            for (x, wx) in gl20(ca, cb) {
                for (y, wy) in gl20(da, db) {
                    let z: f64 = y - x;
                    let ka = 0.5 * (z.powf(-1.5) - 2.0 * z.powf(-1.5));
                    v += wx * wy * hat(xi, h, x) * hat(xj, h, y) * ka;
                }
            }
        }
    }
    let i = mesh.len() / 2 - 2;
    assert!((sys.s_anti[(i, i + k5)] + v).abs() < 1e-8 * v.abs(), "{} vs {}", sys.s_anti[(i, i + k5)], -v);
}

fn rel_l2_error(u: &DiscreteFunction, exact: impl Fn(f64) -> f64, a: f64, b: f64, cells: usize) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    let w = (b - a) / cells as f64;
    for c in 0..cells {
        for (x, wx) in gl20(a + c as f64 * w, a + (c + 1) as f64 * w) {
            num += wx * (u.eval(x) - exact(x)).powi(2);
            den += wx * exact(x).powi(2);
        }
    }
    (num / den).sqrt()
}

#[test]
fn poisson_benchmark_half_laplacian() {
    // ℒ[√(1−x²)](0) = ∫_{−1}^{1}(1 − √(1−y²))/y² dy + ∫_{|y|>1} y^{−2} dy = π
    let near: f64 = (0..200).flat_map(|p| gl20(p as f64 / 200.0, (p + 1) as f64 / 200.0)).map(|(y, w)| w * (1.0 - (1.0 - y * y).sqrt()) / (y * y)).sum();
    let l0 = 2.0 * near + 2.0;
    assert!((l0 - std::f64::consts::PI).abs() < 1e-6);
    // The Riesz constant s2^{2s}Γ((1+2s)/2)/(√πΓ(1−s)) at s = ½ is Γ(1)/(√π·√π) = 1/π;
    // for the unnormalized kernel this gives the same solution u = (1/π)√(1−x²).
    let t = Instant::now();
    let mesh = build_mesh(-1.0, 1.0, 0.25, 1.0 / 256.0).unwrap();
    let sys = assemble(&frac(0.5), &mesh, &BoundedFunction::Zero, &cfg()).unwrap();
    let f = BoundedFunction::Constant { value: 1.0 };
    let u = solve(&sys, &f, &BoundedFunction::Zero).unwrap();
    let err = rel_l2_error(&u, |x| (1.0 - x * x).max(0.0).sqrt() / l0, -1.0, 1.0, 512);
    let secs = t.elapsed().as_secs_f64();
    assert!(err < 0.05, "rel L2 error {err}");
    assert!(secs < 120.0, "{secs} s");
    let r = residual(&sys, &u, &f).unwrap();
    assert!(r.max_abs < 1e-9, "residual {}", r.max_abs);
}

#[test]
fn linearity_and_trivial_data() {
    let mesh = build_mesh(-1.0, 1.0, 0.5, 1.0 / 32.0).unwrap();
    let sys = assemble(&frac(0.25), &mesh, &BoundedFunction::Zero, &cfg()).unwrap();
    let xs: Vec<f64> = (0..=20).map(|i| -1.0 + 0.1 * i as f64).collect();
    let f1 = BoundedFunction::Tabulated { xs: xs.clone(), values: xs.iter().map(|x| x.sin()).collect(), far: 0.0 };
    let f2 = BoundedFunction::Tabulated { xs: xs.clone(), values: xs.iter().map(|x| 1.0 + x * x).collect(), far: 0.0 };
    let f12 = BoundedFunction::Tabulated { xs: xs.clone(), values: xs.iter().map(|x| x.sin() + 1.0 + x * x).collect(), far: 0.0 };
    let z = BoundedFunction::Zero;
    let (u1, u2, u12) = (solve(&sys, &f1, &z).unwrap(), solve(&sys, &f2, &z).unwrap(), solve(&sys, &f12, &z).unwrap());
    for i in 0..mesh.len() {
        assert!((u1.values[i] + u2.values[i] - u12.values[i]).abs() < 1e-10);
    }
    let wneg = assemble(&frac(0.25), &mesh, &BoundedFunction::Constant { value: -1.0 }, &cfg()).unwrap();
    let u0 = solve(&wneg, &z, &z).unwrap();
    assert!(u0.values.iter().all(|&v| v == 0.0));
}

#[test]
fn residual_grows_linearly_under_perturbation() {
    let mesh = build_mesh(-1.0, 1.0, 0.5, 1.0 / 32.0).unwrap();
    let sys = assemble(&frac(0.25), &mesh, &BoundedFunction::Zero, &cfg()).unwrap();
    let f = BoundedFunction::Constant { value: 1.0 };
    let u = solve(&sys, &f, &BoundedFunction::Zero).unwrap();
    let i = mesh.len() / 2;
    let r = |d: f64| {
        let mut v = u.clone();
        v.values[i] += d;
        residual(&sys, &v, &f).unwrap().max_abs
    };
    let (r1, r2) = (r(1e-3), r(2e-3));
    assert!((r2 / r1 - 2.0).abs() < 1e-4, "{r1} {r2}");
    assert!((r1 - 1e-3 * sys.s_sym[(i, i)] / mesh.h).abs() < 1e-9 * r1.max(1.0));
}

#[test]
fn exterior_data_in_collar_or_tail_agree() {
    // g supported on [0.6, 1.1]: inside the collar on the wide mesh, in the tail on the narrow one.
    let xs: Vec<f64> = (0..=50).map(|i| 0.6 + 0.01 * i as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|x| (std::f64::consts::PI * (x - 0.6) / 0.5).sin()).collect();
    let g = BoundedFunction::Tabulated { xs, values: vals, far: 0.25 };
    let f = BoundedFunction::Zero;
    let h = 1.0 / 64.0;
    let wide = build_mesh(-0.5, 0.5, 1.0, h).unwrap();
    let narrow = build_mesh(-0.5, 0.5, 0.0625, h).unwrap();
    let uw = solve(&assemble(&frac(0.25), &wide, &f, &cfg()).unwrap(), &f, &g).unwrap();
    let un = solve(&assemble(&frac(0.25), &narrow, &f, &cfg()).unwrap(), &f, &g).unwrap();
    let worst = (0..=20).map(|k| -0.45 + 0.045 * k as f64).map(|x| (uw.eval(x) - un.eval(x)).abs()).fold(0.0, f64::max);
    assert!(worst < 5e-3, "collar vs tail representation differ by {worst}");
    assert!(uw.eval(0.45) > 0.25 && un.eval(0.45) > 0.25);
}

#[test]
fn garding_for_drift_kernel() {
    let mesh = build_mesh(-1.0, 1.0, 0.5, 1.0 / 16.0).unwrap();
    let sym = drift(0.0);
    assert_eq!(garding_check(&sym, &mesh, 100, 3, &cfg()).unwrap().c_hat, 0.0);
    assert!(matches!(garding_check(&sym, &mesh, 10, 3, &cfg()), Err(Error::Argument(_))));
    let k = drift(0.3);
    let sys = assemble(&k, &mesh, &BoundedFunction::Zero, &cfg()).unwrap();
    let a = garding_from(&sys, 200, 11).unwrap();
    let b = garding_from(&sys, 400, 11).unwrap();
    assert!(a.c_hat.is_finite() && a.c_hat <= a.eigen_bound + 1e-12);
    assert!(b.c_hat >= a.c_hat && b.c_hat <= 1.2 * a.c_hat.max(1e-300) || a.c_hat == 0.0 && b.c_hat == 0.0, "{} vs {}", a.c_hat, b.c_hat);
    let u: Vec<f64> = (0..mesh.len()).map(|i| (i as f64 * 0.37).cos()).collect();
    let u2: Vec<f64> = u.iter().map(|v| 2.0 * v).collect();
    assert!((garding_quotient(&sys, &u) - garding_quotient(&sys, &u2)).abs() < 1e-12);
    // Σ_j E_a(φ_j, φ_i) = E_a(1 − G, φ_i) = ∫φ_i(x)∫G(y)K_a(x, y) dy dx with G = 1 − Σφ.
    let (lo, hi) = mesh.outer();
    let h = mesh.h;
    let amp = 0.3;
    let ka = |x: f64, y: f64| 0.5 * amp * (x.tanh() - y.tanh()) * (y - x).abs().powf(-1.5);
    for i in [mesh.interior().start, mesh.len() / 2 + 5] {
        let xi = mesh.x(i);
        let mut v = 0.0;
        for (ca, cb) in [(xi - h, xi), (xi, xi + h)] {
            for (x, wx) in gl20(ca, cb) {
                let mut inner = 0.0;
                for (y, wy) in gl20(lo - h, lo).into_iter().chain(gl20(hi, hi + h)) {
                    let ramp = if y < lo { (lo - y) / h } else { (y - hi) / h };
                    inner += wy * ramp * ka(x, y);
                }
                for p in 0..400 {
                    let (a, b) = (hi + h + 0.05 * p as f64, hi + h + 0.05 * (p + 1) as f64);
                    inner += gl20(a, b).into_iter().map(|(y, w)| w * ka(x, y)).sum::<f64>();
                    inner += gl20(lo - h - 0.05 * (p + 1) as f64, lo - h - 0.05 * p as f64).into_iter().map(|(y, w)| w * ka(x, y)).sum::<f64>();
                }
                let far = 20.0;
                inner += 0.5 * amp * ((x.tanh() - 1.0) * (hi + h + far - x).powf(-0.5) + (x.tanh() + 1.0) * (x - lo + h + far).powf(-0.5)) * 2.0;
                v += wx * hat(xi, h, x) * inner;
            }
        }
        let row: f64 = sys.s_anti.row(i).sum();
        assert!((row - v).abs() < 1e-6 * sys.s_sym[(i, i)], "row {i}: {row} vs {v}");
    }
}

#[test]
fn drift_requires_even_base() {
    let base = presets::asymmetric_example();
    let l = base.lambda();
    let k = TwoPointKernel::new(base, Mode::Weighted { weight: Weight::TanhDrift { amplitude: (l - 1.0).min(1.0 - 1.0 / l) } }).unwrap();
    let mesh = build_mesh(-0.5, 0.5, 0.25, 0.125).unwrap();
    assert!(matches!(assemble(&k, &mesh, &BoundedFunction::Zero, &cfg()), Err(Error::Unsupported(_))));
}

#[test]
fn poincare_positive_monotone_and_refines() {
    let k = frac(0.5);
    let h = 1.0 / 32.0;
    let big = poincare_lambda1(&k, &build_mesh(-1.0, 1.0, 0.25, h).unwrap(), &cfg()).unwrap();
    let small = poincare_lambda1(&k, &build_mesh(-0.5, 0.5, 0.25, h).unwrap(), &cfg()).unwrap();
    assert!(big > 0.0 && small >= big, "{small} vs {big}");
    let l64 = poincare_lambda1(&k, &build_mesh(-1.0, 1.0, 0.25, 1.0 / 64.0).unwrap(), &cfg()).unwrap();
    let l128 = poincare_lambda1(&k, &build_mesh(-1.0, 1.0, 0.25, 1.0 / 128.0).unwrap(), &cfg()).unwrap();
    assert!(((l64 - l128) / l128).abs() < 0.02, "{big} {l64} {l128}");
}

#[test]
fn stiffness_binary_roundtrip() {
    let mesh = build_mesh(-0.5, 0.5, 0.25, 0.125).unwrap();
    let sys = assemble(&frac(0.25), &mesh, &BoundedFunction::Zero, &cfg()).unwrap();
    let (r, c, data) = read_matrix(&sys.stiffness_binary()).unwrap();
    assert_eq!((r, c), (mesh.len(), mesh.len()));
    assert_eq!(data[1], sys.s_sym[(0, 1)]);
    assert!(String::from_utf8(sys.stiffness_csv().unwrap()).unwrap().starts_with("i,j,value\n"));
}

mod properties {
    use super::*;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn system() -> &'static AssembledSystem {
        static S: OnceLock<AssembledSystem> = OnceLock::new();
        S.get_or_init(|| {
            let mesh = build_mesh(-1.0, 1.0, 0.25, 1.0 / 32.0).unwrap();
            assemble(&frac(0.3), &mesh, &BoundedFunction::Zero, &cfg()).unwrap()
        })
    }

    fn table(v: &[f64]) -> BoundedFunction {
        let n = v.len();
        BoundedFunction::Tabulated { xs: (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect(), values: v.to_vec(), far: 0.0 }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn solution_map_is_linear(f1 in proptest::collection::vec(-5.0f64..5.0, 9), f2 in proptest::collection::vec(-5.0f64..5.0, 9), c in -3.0f64..3.0, g in -2.0f64..2.0) {
            let s = system();
            let combo: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| a + c * b).collect();
            let gf = BoundedFunction::Constant { value: g };
            let u1 = solve(s, &table(&f1), &gf).unwrap();
            let u2 = solve(s, &table(&f2), &BoundedFunction::Zero).unwrap();
            let u = solve(s, &table(&combo), &gf).unwrap();
            let scale = 1.0 + u.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for i in 0..u.values.len() {
                prop_assert!((u.values[i] - u1.values[i] - c * u2.values[i]).abs() <= 1e-10 * scale);
            }
        }

        #[test]
        fn maximum_principle_for_signed_data(f in proptest::collection::vec(0.0f64..5.0, 9)) {
            // ℒu = f ≥ 0 in Ω, u = 0 outside: the discrete solution stays nonnegative up to interpolation error.
            let u = solve(system(), &table(&f), &BoundedFunction::Zero).unwrap();
            let sup = u.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(u.values.iter().all(|&v| v >= -1e-2 * sup - 1e-12));
        }
    }
}
