use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use solsym::barrier::{
    barrier_coefficient, barrier_sweep, max_principle_check, measure_c_n, phi_profile, region_coefficient_samples,
    step3_constants, step3_validity_threshold, tabulate_barrier, translator_step3_barrier, BarrierParams,
    BarrierSweepConfig, BowlModel, CoefficientSample, JacobiField, RegionSpec, Step3Config,
};
use solsym::geometry::{sample_model, GridSpec, ModelTag, SurfaceSampleSet};
use solsym::linalg::random_rotation;
use solsym::Error;
use std::sync::OnceLock;

fn measured_c_n() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let probe = BowlModel::cross_r(4, 1e3, 2).unwrap();
        measure_c_n(&probe, 1.0, 1e3).unwrap()
    })
}

/// Bowl³×ℝ reaching the lateral boundary of Ω_j for j up to 1400.
fn wide_model() -> &'static BowlModel {
    static M: OnceLock<BowlModel> = OnceLock::new();
    M.get_or_init(|| {
        let far = BarrierParams::new(4, 1400, 10.0, 0.5).unwrap();
        BowlModel::cross_r(4, far.d, 2).unwrap()
    })
}

#[test]
fn params_follow_the_assignments() {
    let p = BarrierParams::new(4, 300, 10.0, 0.5).unwrap();
    assert!((p.d - 8.0 * 10.0).abs() < 1e-12);
    assert!((p.w - 64.0 * 100.0).abs() < 1e-9);
    assert_eq!(p.w, p.t_depth);
    assert!((p.w - (p.d / 10.0).powi(2) * 100.0).abs() < 1e-9);
    assert!((p.lambda - 0.25 / 4.0 / p.d).abs() < 1e-15);
    assert!((p.mu - 0.5 / p.d.sqrt()).abs() < 1e-15);
    assert!(BarrierParams::new(2, 1, 10.0, 0.5).is_err());
    assert!(BarrierParams::new(4, 1, 10.0, 1.5).is_err());
    assert!(phi_profile(4, 10.0, 0.5, 0, 10).is_err());
}

#[test]
fn phi_is_normalized_and_increasing() {
    let p = BarrierParams::new(4, 50, 10.0, 0.5).unwrap();
    assert_eq!(p.phi(0.0), 0.0);
    for s in [1e-6, 0.1, 1.0, 10.0, 1e3, 1e6] {
        assert!(p.dphi(s) > 0.0);
        assert_eq!(p.phi(s), p.phi(-s));
        // (s − ln 2) ≤ log cosh s ≤ s.
        assert!(p.phi(s) <= p.phi_scale * s && p.phi(s) >= p.phi_scale * (s - std::f64::consts::LN_2));
    }
}

#[test]
fn slope_threshold_matches_closed_form() {
    // With sup φ' equal to the prefactor the slope condition reads c_n ≤ D_j^{1/2}.
    let (lambda1, c_n) = (0.05, 0.5);
    let rep = phi_profile(4, lambda1, c_n, 1, 600).unwrap();
    let analytic = rep.analytic_slope_threshold;
    assert!((analytic - 100.0 * (c_n * c_n / lambda1).log2()).abs() < 1e-12);
    for j in 1..600 {
        let p = BarrierParams::new(4, j, lambda1, c_n).unwrap();
        let holds = p.phi_scale <= c_n / 4.0 / p.d.sqrt() * (1.0 + 1e-12);
        assert_eq!(holds, j as f64 >= analytic, "j = {j}");
    }
    // Sampling only s ∈ [−W, W] can make the condition hold earlier, never later.
    let scanned = rep.thresholds[0].unwrap();
    assert!(scanned as f64 <= analytic.ceil());
}

#[test]
fn far_growth_threshold_matches_direct_scan() {
    let (lambda1, c_n) = (10.0, 0.5);
    let rep = phi_profile(4, lambda1, c_n, 1, 4000).unwrap();
    assert!(rep.monotone);
    // Independent scan: (c²/n)/D·(W − ln 2 + ln(1 + e^{−2W})) ≥ 20 ln(2W + D).
    let direct = (1..=4000usize)
        .find(|&j| {
            (j..=4000).all(|jj| {
                let jf = jj as f64;
                let d = 2f64.powf(jf / 100.0) * lambda1;
                let w = 2f64.powf(jf / 50.0) * lambda1 * lambda1;
                let phi_w = c_n * c_n / 4.0 / d * (w - std::f64::consts::LN_2 + (-2.0 * w).exp().ln_1p());
                phi_w >= 20.0 * (2.0 * w + d).ln()
            })
        })
        .unwrap();
    assert_eq!(rep.thresholds[2], Some(direct));
    let j1 = rep.j1.unwrap();
    assert!(j1 >= direct);
    let at = phi_profile(4, lambda1, c_n, j1, j1).unwrap();
    assert!(at.conditions.all());
    let before = phi_profile(4, lambda1, c_n, j1 - 1, j1 - 1).unwrap();
    assert!(!before.conditions.all());
}

#[test]
fn only_lambda_survives_on_real_samples() {
    let model = wide_model();
    let mut p = BarrierParams::new(4, 100, 10.0, 0.5).unwrap();
    p.mu = 0.0;
    p.phi_scale = 0.0;
    let region = RegionSpec::from_params(&p, 6, 5, 3);
    let samples = region_coefficient_samples(model, &p, &region).unwrap();
    let r = barrier_coefficient(&samples, &p).unwrap();
    assert_eq!(r.max, p.lambda);
    assert_eq!(r.min, p.lambda);
    assert!(!r.negative);
    assert!(barrier_coefficient(&[], &p).is_err());
}

#[test]
fn cylinder_second_fundamental_form_margin() {
    let s = sample_model(ModelTag::Cylinder { n: 4, t: -1.0 }, &GridSpec::default(), 0.0).unwrap();
    for p in &s.samples {
        let margin = p.a_norm_sq - p.h * p.h / 4.0;
        // H²(1/(n−2) − 1/n) = 1/4 at H = 1.
        assert!((margin - 0.25).abs() < 1e-10);
    }
}

#[test]
fn measured_c_n_is_stable() {
    let c = measured_c_n();
    assert!(c > 0.0 && c < 1.0);
    assert!((c - 0.2373).abs() < 1e-3, "c_n = {c}");
}

#[test]
fn coefficient_is_negative_for_large_j() {
    let c_n = measured_c_n();
    let model = wide_model();
    for j in [1200, 1400] {
        let p = BarrierParams::new(4, j, 10.0, c_n).unwrap();
        let region = RegionSpec::from_params(&p, 24, 21, 3);
        let r = barrier_coefficient(&region_coefficient_samples(model, &p, &region).unwrap(), &p).unwrap();
        assert!(r.negative, "j = {j}: max {}", r.max);
    }
}

#[test]
fn region_outside_validity_is_refused() {
    let p = BarrierParams::new(4, 1, 10.0, 0.9).unwrap();
    let s = CoefficientSample { h: 1.5 * p.mu, a_norm_sq: 0.1, dt_phi: 0.0, lap_phi: 0.0, grad_phi_sq: 0.0, grad_phi_dot_grad_h: 0.0 };
    assert!(matches!(barrier_coefficient(&[s], &p), Err(Error::RegionValidity(_))));
    let bowl = BowlModel::bowl(4, 10.0, 2).unwrap();
    let region = RegionSpec::from_params(&p, 4, 3, 2);
    assert!(tabulate_barrier(&bowl, &p, &region, &JacobiField::mean_curvature(4), 0.0).is_err());
}

#[test]
fn region_partition_is_unique() {
    use solsym::barrier::BoundaryPiece::*;
    let p = BarrierParams::new(4, 10, 10.0, 0.5).unwrap();
    let r = RegionSpec::from_params(&p, 4, 5, 3);
    assert_eq!(r.classify(4, 0, 0), Lateral);
    assert_eq!(r.classify(2, 0, 0), Split);
    assert_eq!(r.classify(2, 4, 2), Split);
    assert_eq!(r.classify(2, 2, 0), Initial);
    assert_eq!(r.classify(2, 2, 2), Interior);
    assert_eq!(r.z_nodes().first().copied(), Some(-p.w));
    assert_eq!(r.t_nodes().last().copied(), Some(-1.0));
    assert!((r.t_nodes()[0] - (-1.0 - p.t_depth)).abs() < 1e-9);
}

#[test]
fn mean_curvature_field_obeys_the_maximum_principle() {
    let model = wide_model();
    let p = BarrierParams::new(4, 1200, 10.0, measured_c_n()).unwrap();
    let region = RegionSpec::from_params(&p, 12, 9, 5);
    let field = tabulate_barrier(model, &p, &region, &JacobiField::mean_curvature(4), 0.0).unwrap();
    for e in &field.entries {
        // u = ⟨e_axis, ν⟩ = H on the unit-speed translator.
        assert!((e.log_u_h - 2.0 * e.h.ln()).abs() < 1e-9);
        let direct = -p.phi(e.z) + p.lambda * (e.t + 1.0) + (e.h / (e.h - p.mu)).ln();
        assert!((e.log_f - direct).abs() <= 1e-9 * direct.abs().max(1.0), "{e:?} direct {direct}");
    }
    let rep = max_principle_check(&field, 1e-10);
    assert!(rep.pass, "{rep:?}");
    assert!(rep.interior <= rep.boundary);
}

#[test]
fn step3_examples() {
    for j in 1..2000 {
        let (l, c) = step3_constants(j);
        assert!((l - 2.0 * c * c + l).abs() <= 4.0 * f64::EPSILON * l);
        assert!(l - 2.0 * c * c < 0.0);
    }
    let cfg = Step3Config { rings: 12, t_points: 6, sphere_res: 2, ..Default::default() };
    let js = [700usize, 800, 900, 1000];
    let model = BowlModel::bowl(4, 2f64.powf(10.0) * cfg.lambda, 2).unwrap();
    let th = step3_validity_threshold(&cfg, &model, 1000).unwrap().unwrap();
    assert!(th <= 700, "validity threshold {th}");
    assert!(matches!(translator_step3_barrier(1, &cfg, &model), Err(Error::RegionValidity(_))));
    let mut slab_ok = Vec::new();
    for j in js {
        let row = translator_step3_barrier(j, &cfg, &model).unwrap();
        assert!(row.identity < 0.0);
        assert!(row.validity_ratio > 1.0);
        assert!(row.coefficient_max < 0.0, "j = {j}: {}", row.coefficient_max);
        assert!(row.aggregate <= row.aggregate_bound, "j = {j}: {} > {}", row.aggregate, row.aggregate_bound);
        assert!(row.max_principle);
        slab_ok.push(row.slab_weight_ok);
    }
    // Once the fixed-weight slab bound holds it keeps holding.
    let first = slab_ok.iter().position(|&b| b).unwrap_or(slab_ok.len());
    assert!(slab_ok[first..].iter().all(|&b| b));
    let cross = BowlModel::cross_r(4, 10.0, 2).unwrap();
    assert!(matches!(translator_step3_barrier(800, &cfg, &cross), Err(Error::Domain(_))));
}

#[test]
fn reduced_sweep_decays_at_the_expected_rates() {
    let cfg = BarrierSweepConfig { rings: 10, z_points: 9, t_points: 5, sphere_res: 2, sweep_len: 4, ..Default::default() };
    let s = barrier_sweep(&cfg).unwrap();
    assert!(s.rows.iter().all(|r| r.coefficient_max < 0.0 && r.report.pass));
    // Decay at least 80% as fast as each exponent.
    assert_eq!(s.rates_ok(), [true; 3], "rates {:?}", s.rates);
    assert!(s.log2_final_constant.is_finite());
}

fn random_antisym(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<f64> {
    let r: DMatrix<f64> = random_rotation(dim, rng);
    let a = &r - r.transpose();
    let norm = a.norm();
    a / norm
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn phi_scan_is_monotone(lambda1 in 5.0f64..20.0, c_n in 0.1f64..0.9) {
        let rep = phi_profile(4, lambda1, c_n, 1, 4000).unwrap();
        prop_assert!(rep.monotone);
        let j1 = rep.j1.unwrap();
        for j in [j1, j1 + 7, j1 + 100] {
            let p = BarrierParams::new(4, j, lambda1, c_n).unwrap();
            prop_assert!(solsym::barrier::phi_conditions(&p).all());
        }
    }

    #[test]
    fn coefficient_is_rigid_motion_invariant(seed in any::<u64>(), shift in prop::collection::vec(-10.0f64..10.0, 5), z in -50.0f64..50.0) {
        let model = wide_model();
        let p = BarrierParams::new(4, 600, 10.0, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rot: DMatrix<f64> = random_rotation(5, &mut rng);
        let shift = DVector::from_vec(shift);
        let mut omega = DVector::zeros(5);
        omega[4] = 1.0;
        let origin = DVector::zeros(5);
        let samples: Vec<_> = [0.0, 3.0, 40.0].iter().map(|&rho| model.sample(rho, 1, z, -1.0).unwrap()).collect();
        let set = SurfaceSampleSet::from_samples(samples, vec![Vec::new(); 3]).unwrap();
        let moved = set.transformed(&rot, &shift);
        for (a, b) in set.samples.iter().zip(&moved.samples) {
            let ca = CoefficientSample::from_surface(a, &omega, &origin, &p).coefficient(&p);
            let cb = CoefficientSample::from_surface(b, &(&rot * &omega), &(&rot * &origin + &shift), &p).coefficient(&p);
            prop_assert!((ca - cb).abs() <= 1e-10 * ca.abs().max(1.0));
        }
    }

    #[test]
    fn rigid_motion_jacobi_fields_obey_the_maximum_principle(seed in any::<u64>()) {
        let model = wide_model();
        let p = BarrierParams::new(4, 1200, 10.0, measured_c_n()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: DVector<f64> = solsym::linalg::random_unit_vector(5, &mut rng);
        let field = JacobiField { translation: a, rotation: random_antisym(&mut rng, 5) / p.w };
        let region = RegionSpec::from_params(&p, 8, 7, 4);
        let tab = tabulate_barrier(model, &p, &region, &field, 0.0).unwrap();
        let rep = max_principle_check(&tab, 1e-9);
        prop_assert!(rep.pass, "{:?}", rep);
    }
}
