use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use solsym::heat_kernel::{
    apply_kernel, boundary_flux, eigen, flux_sweep, mass_bound, solve_via_kernel, ImageKernel,
};
use solsym::Error;
use std::f64::consts::PI;

#[test]
fn images_match_eigen_series_on_random_queries() {
    let start = std::time::Instant::now();
    let k = ImageKernel::new(4.0, 1e-12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let x = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
        let y = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
        // Log-uniform time in [0.01, 16].
        let t = 0.01 * 1600f64.powf(rng.gen_range(0.0..1.0));
        let a = k.eval(x, y, t).unwrap();
        assert!(a.error <= 1e-12);
        worst = worst.max((a.value - eigen::square(4.0, x, y, t)).abs());
    }
    assert!(worst <= 1e-8, "max deviation {worst}");
    assert!(start.elapsed().as_secs_f64() < 60.0);
}

#[test]
fn kernel_vanishes_on_the_boundary() {
    let k = ImageKernel::new(4.0, 1e-12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let x = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
        let s = rng.gen_range(-4.0..4.0);
        let y = match rng.gen_range(0..4) {
            0 => [4.0, s],
            1 => [-4.0, s],
            2 => [s, 4.0],
            _ => [s, -4.0],
        };
        let v = k.eval(x, y, rng.gen_range(0.01..16.0)).unwrap();
        assert!(v.value.abs() <= v.error.max(1e-15), "{v:?}");
    }
}

#[test]
fn single_image_is_the_free_gaussian() {
    // Far from the walls every other image is negligible.
    let k = ImageKernel::new(200.0, 1e-15).unwrap();
    let (x, y, t) = ([0.3, -0.2], [1.1, 0.4], 0.7);
    let free = ImageKernel::free_gaussian(x, y, t);
    assert!((k.eval(x, y, t).unwrap().value - free).abs() < 1e-15);
    let d2: f64 = (0.8f64).powi(2) + (0.6f64).powi(2);
    assert!((free - (-d2 / (4.0 * t)).exp() / (4.0 * PI * t)).abs() < 1e-16);
    assert!(matches!(k.eval(x, y, 0.0), Err(Error::Domain(_))));
    assert!(matches!(k.eval(x, y, -1.0), Err(Error::Domain(_))));
}

#[test]
fn mass_examples() {
    let big = ImageKernel::new(60.0, 1e-12).unwrap();
    let m = mass_bound(&big, [0.0, 0.0], 1.0).unwrap();
    assert!(m.value - m.error <= 1.0 + 1e-15 && m.value > 1.0 - 1e-9, "{m:?}");
    let mut prev = 0.0;
    for l in [2.0, 4.0, 8.0] {
        let k = ImageKernel::new(l, 1e-12).unwrap();
        let v = mass_bound(&k, [0.0, 0.0], 1.0).unwrap().value;
        assert!(v > prev && v < 1.0);
        prev = v;
    }

    let k = ImageKernel::new(4.0, 1e-12).unwrap();
    let r = 4.0 / 25.0;
    for x in [[0.0, 0.0], [r, r], [-r, 0.5 * r]] {
        for t in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let m = mass_bound(&k, x, t).unwrap();
            assert!(m.value + m.error <= 1.0 + 1e-6);
        }
    }
}

#[test]
fn small_time_kernel_is_a_delta() {
    let k = ImageKernel::new(4.0, 1e-13).unwrap();
    let f = |y1: f64, y2: f64| (0.5 * y1).cos() * (1.0 + 0.2 * y2) + 0.1 * y1 * y2;
    for x in [[0.0, 0.0], [1.3, -0.7], [-2.0, 2.5]] {
        let v = apply_kernel(&k, x, 1e-4, f, 1e-10).unwrap();
        assert!((v.value - f(x[0], x[1])).abs() <= 1e-4);
    }
}

#[test]
fn flux_examples() {
    let k = ImageKernel::new(4.0, 1e-12).unwrap();
    // Exponentially small for short times.
    let mut prev = f64::INFINITY;
    for s in [1.0, 0.5, 0.2, 0.1, 0.05] {
        let f = boundary_flux(&k, [0.0, 0.0], s).unwrap().value;
        assert!(f < prev);
        prev = f;
    }
    assert!(prev < 1e-25);

    let r = 4.0 / 25.0;
    let xs: Vec<[f64; 2]> = [-r, 0.0, r].iter().flat_map(|&a| [-r, 0.0, r].map(|b| [a, b])).collect();
    let sweep = flux_sweep(&k, &xs, &[0.5, 1.0, 2.0, 4.0, 8.0]).unwrap();
    assert!(sweep.constant_50.is_finite() && sweep.constant_50 > 0.0);
    assert!(sweep.constant_1000.is_finite() && sweep.constant_1000 > 0.0);
    for row in &sweep.rows {
        assert!(row.flux <= sweep.constant_50 * row.envelope_50 * (1.0 + 1e-12));
    }
    assert!(matches!(boundary_flux(&k, [1.0, 0.0], 1.0), Err(Error::Domain(_))));
    assert!(matches!(boundary_flux(&k, [0.0, 0.0], 16.0), Err(Error::Domain(_))));
}

#[test]
fn flux_scales_with_l_squared_over_s() {
    let normalized = |l: f64, s: f64| {
        let k = ImageKernel::new(l, 1e-12).unwrap();
        boundary_flux(&k, [0.0, 0.0], s).unwrap().value * s * s / (l * l)
    };
    for ratio in [1.0 / 32.0, 1.0 / 16.0, 1.0 / 4.0] {
        let a = normalized(2.0, ratio * 4.0);
        let b = normalized(4.0, ratio * 16.0);
        assert!((a / b - 1.0).abs() < 0.2, "s/L² = {ratio}: {a} vs {b}");
    }
}

#[test]
fn solution_formula_examples() {
    let k = ImageKernel::new(1.0, 1e-13).unwrap();
    let zero = solve_via_kernel(&k, |_, _| 0.0, |_, _, _| 0.0, [0.2, -0.1], 0.0, 0.5, 1e-9).unwrap();
    assert_eq!(zero.value, 0.0);

    let l = 1.0;
    let (k1, k2) = (1.0, 2.0);
    let phi = move |y1: f64, y2: f64| (PI * k1 * (y1 + l) / (2.0 * l)).sin() * (PI * k2 * (y2 + l) / (2.0 * l)).sin();
    let x = [0.3, -0.4];
    let t = 0.2;
    let u = solve_via_kernel(&k, phi, |_, _, _| 0.0, x, 0.0, t, 1e-9).unwrap();
    let exact = (-(k1 * k1 + k2 * k2) * PI * PI / (4.0 * l * l) * t).exp() * phi(x[0], x[1]);
    assert!((u.value - exact).abs() <= 1e-6, "{} vs {exact}", u.value);

    let u = solve_via_kernel(&k, |_, _| 0.0, |_, _, _| 1.0, [0.1, 0.2], 0.0, 10.0 * l * l, 1e-7).unwrap();
    assert!((u.value - 1.0).abs() <= 1e-3, "steady state {}", u.value);
}

/// Centered-difference residual of ∂_t K − Δ_x K at a fixed interior point.
fn heat_residual(h: f64) -> f64 {
    let k = ImageKernel::new(2.0, 1e-15).unwrap();
    let y = [0.4, -0.3];
    let kv = |x: [f64; 2], t: f64| k.eval(x, y, t).unwrap().value;
    let (x, t) = ([0.1, 0.2], 0.5);
    let dt = (kv(x, t + h) - kv(x, t - h)) / (2.0 * h);
    let c = kv(x, t);
    let lap = (kv([x[0] + h, x[1]], t) + kv([x[0] - h, x[1]], t) + kv([x[0], x[1] + h], t) + kv([x[0], x[1] - h], t)
        - 4.0 * c)
        / (h * h);
    (dt - lap).abs()
}

#[test]
fn kernel_solves_the_heat_equation() {
    let r: Vec<f64> = [0.08, 0.04, 0.02].iter().map(|&h| heat_residual(h)).collect();
    for w in r.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.8, "order {order} from {r:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_symmetric(x1 in -4.0f64..4.0, x2 in -4.0f64..4.0, y1 in -4.0f64..4.0, y2 in -4.0f64..4.0, t in 0.01f64..16.0) {
        let k = ImageKernel::new(4.0, 1e-12).unwrap();
        let a = k.eval([x1, x2], [y1, y2], t).unwrap();
        let b = k.eval([y1, y2], [x1, x2], t).unwrap();
        prop_assert!((a.value - b.value).abs() <= 2.0 * a.error.max(b.error).max(1e-16));
    }

    #[test]
    fn truncation_is_monotone(x in -1.0f64..1.0, y in -1.0f64..1.0, t in 0.05f64..20.0, km in 1usize..6) {
        let k = ImageKernel::new(1.0, 1e-12).unwrap();
        let a = k.eval_truncated([x, 0.1], [y, -0.2], t, km).unwrap();
        for extra in 1..5 {
            let b = k.eval_truncated([x, 0.1], [y, -0.2], t, km + extra).unwrap();
            prop_assert!((a.value - b.value).abs() <= a.error);
            prop_assert!(b.error <= a.error);
        }
    }

    #[test]
    fn images_match_eigen_series(x1 in -4.0f64..4.0, x2 in -4.0f64..4.0, y1 in -4.0f64..4.0, y2 in -4.0f64..4.0, t in 0.01f64..16.0) {
        let k = ImageKernel::new(4.0, 1e-12).unwrap();
        let a = k.eval([x1, x2], [y1, y2], t).unwrap().value;
        prop_assert!((a - eigen::square(4.0, [x1, x2], [y1, y2], t)).abs() <= 1e-8);
    }
}
