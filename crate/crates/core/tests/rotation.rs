use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use solsym::geometry::{
    elliptic_cylinder, sample_flow, sample_model, GridSpec, ModelTag, SurfaceSample, SurfaceSampleSet,
};
use solsym::linalg::{elementary_antisym, random_orthogonal, random_rotation};
use solsym::rotation::{
    align_field_sets, alignment_residual, eps_symmetric_verdict, fit_rotation_fields, is_eps_symmetric,
    random_eps_field_set, standard_so_basis, symmetry_defect, EpsSymmetryOptions, FitOptions, RotationFieldSet, SoBasis,
};
use solsym::Error;

fn cylinder() -> SurfaceSampleSet {
    sample_model(ModelTag::Cylinder { n: 4, t: -1.0 }, &GridSpec::default(), 0.0).unwrap()
}

/// Fields S = exp(θ·E) with E the unit rotation mixing sphere coord 0 and axis coord 3.
fn tilted(n: usize, theta: f64) -> RotationFieldSet {
    let e = elementary_antisym(n + 1, 0, n - 1, theta);
    RotationFieldSet::new(e.exp(), DVector::zeros(n + 1), standard_so_basis(n).unwrap())
}

fn random_tilt(n: usize, angle: f64, rng: &mut ChaCha8Rng) -> RotationFieldSet {
    let mut xi = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n - 1 {
        for c in n - 1..n + 1 {
            xi += elementary_antisym(n + 1, i, c, rng.gen_range(-1.0..1.0));
        }
    }
    xi *= angle / (xi.norm() / 2f64.sqrt());
    let mut q = DVector::zeros(n + 1);
    for i in 0..n - 1 {
        q[i] = rng.gen_range(-0.2..0.2);
    }
    RotationFieldSet::new(xi.exp(), q, standard_so_basis(n).unwrap())
}

#[test]
fn basis_examples() {
    assert_eq!(standard_so_basis(4).unwrap().len(), 3);
    let b = standard_so_basis(3).unwrap();
    assert_eq!(b.len(), 1);
    assert_eq!(b.mats[0][(0, 1)], std::f64::consts::FRAC_1_SQRT_2);
    assert_eq!(b.mats[0][(1, 0)], -std::f64::consts::FRAC_1_SQRT_2);
    assert!(matches!(standard_so_basis(2), Err(Error::Domain(_))));
    for n in 3..8 {
        let b = standard_so_basis(n).unwrap();
        assert_eq!(b.len(), (n - 1) * (n - 2) / 2);
        assert!((b.gram() - DMatrix::identity(b.len(), b.len())).norm() < 1e-12);
        for m in &b.mats {
            for k in 0..n + 1 {
                for c in [n - 1, n] {
                    assert_eq!(m[(c, k)], 0.0);
                    assert_eq!(m[(k, c)], 0.0);
                }
            }
        }
    }
}

#[test]
fn axis_aligned_fields_are_exact_on_the_cylinder() {
    for n in 3..=5 {
        let s = sample_model(ModelTag::Cylinder { n, t: -1.0 }, &GridSpec::default(), 0.0).unwrap();
        let rep = symmetry_defect(&RotationFieldSet::standard(n).unwrap(), &s);
        assert!(rep.defect <= 1e-12);
        assert!(rep.magnitude >= 0.0);
        assert_eq!(rep.samples, s.len());
    }
}

#[test]
fn unit_rotation_times_h_is_below_2n_on_the_bowl() {
    for n in 3..=5 {
        let g = GridSpec { r_max: 40.0, r_points: 30, ..Default::default() };
        let s = sample_model(ModelTag::Bowl { n, kappa: 1.0 }, &g, 0.0).unwrap();
        let f = RotationFieldSet::standard(n).unwrap();
        for p in &s.samples {
            for a in 0..f.basis.len() {
                // Unit Frobenius J: |J x| = |x_plane|/√2 ≤ |x|.
                let jx = f.field(a, &p.x).norm() * 2f64.sqrt();
                assert!(jx * p.h < 2.0 * n as f64, "n = {n}: |J|H = {}", jx * p.h);
            }
        }
    }
}

#[test]
fn tilt_defect_scales_linearly() {
    let s = cylinder();
    assert!(s.samples.iter().all(|p| p.x.norm() <= 10.0));
    let d = |th: f64| {
        let f = tilted(4, th);
        // Brute-force oracle over samples and basis elements.
        let mut worst = 0.0f64;
        for p in &s.samples {
            for a in 0..f.basis.len() {
                worst = worst.max((f.field(a, &p.x).dot(&p.normal) * p.h).abs());
            }
        }
        assert_eq!(worst, symmetry_defect(&f, &s).defect);
        worst
    };
    let (d1, d2) = (d(0.05), d(0.025));
    assert!(d1 > 0.0 && d2 > 0.0);
    let ratio = (d1 / 0.05) / (d2 / 0.025);
    assert!((ratio - 1.0).abs() < 0.05, "defect/θ ratio {ratio}");
}

#[test]
fn fit_recovers_the_cylinder_axis_from_tilted_starts() {
    let s = cylinder();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let start = std::time::Instant::now();
    for k in 0..20 {
        let init = if k == 0 { tilted(4, 0.2) } else { random_tilt(4, 0.2, &mut rng) };
        let (fit, rep) = fit_rotation_fields(&s, &init, FitOptions::default()).unwrap();
        assert!(fit.q.norm() <= 1e-6, "q = {}", fit.q.norm());
        assert!(fit.split_violation() <= 1e-6, "split {}", fit.split_violation());
        assert!(rep.defect <= 1e-8, "defect {}", rep.defect);
        assert!(fit.gauge_residual() <= 1e-10);
        assert!((fit.s.transpose() * &fit.s - DMatrix::identity(5, 5)).norm() <= 1e-10);
    }
    assert!(start.elapsed().as_secs_f64() < 30.0);
}

#[test]
fn fit_recovers_the_bowl_cross_line_axis() {
    let g = GridSpec { r_max: 4.0, ..Default::default() };
    let s = sample_model(ModelTag::BowlCrossR { n: 4, kappa: 1.0 }, &g, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let init = random_tilt(4, 0.15, &mut rng);
        let (fit, rep) = fit_rotation_fields(&s, &init, FitOptions::default()).unwrap();
        assert!(rep.defect <= 1e-8);
        let ker = fit.common_kernel();
        assert_eq!(ker.len(), 2);
        for axis in [3, 4] {
            let captured: f64 = ker.iter().map(|v| v[axis] * v[axis]).sum::<f64>().sqrt();
            assert!((captured - 1.0).abs() <= 1e-6, "axis {axis}: {captured}");
        }
        assert!(fit.q.norm() <= 1e-6);
    }
}

#[test]
fn hyperplane_is_not_identifiable() {
    let mut samples = Vec::new();
    for i in -3..=3 {
        for j in -3..=3 {
            let x = DVector::from_vec(vec![i as f64, j as f64, 0.3 * i as f64, 0.0, 0.5]);
            let nu = DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0, 0.0]);
            samples.push(SurfaceSample::new(x, nu, vec![0.0; 4], DVector::zeros(5)));
        }
    }
    let adj = vec![Vec::new(); samples.len()];
    let set = SurfaceSampleSet::from_samples(samples, adj).unwrap();
    let r = fit_rotation_fields(&set, &RotationFieldSet::standard(4).unwrap(), FitOptions::default());
    assert!(matches!(r, Err(Error::Identifiability { .. })));
}

#[test]
fn nonconvergence_carries_the_best_iterate() {
    let s = elliptic_cylinder(4, -1.0, 0.3, &GridSpec::default()).unwrap();
    let init = tilted(4, 0.3);
    match fit_rotation_fields(&s, &init, FitOptions { max_iter: 1, tol: 1e-30 }) {
        Err(Error::NonConvergence { iterations, best_defect, best }) => {
            assert_eq!(iterations, 1);
            assert!(best_defect > 0.0);
            assert!(symmetry_defect(&best, &s).defect == best_defect);
        }
        other => panic!("expected nonconvergence, got {other:?}"),
    }
}

#[test]
fn alignment_examples() {
    let s = cylinder();
    let pts: Vec<DVector<f64>> = s.samples.iter().map(|p| p.x.clone()).collect();
    let k1 = tilted(4, 0.1);
    let (w, r) = align_field_sets(&k1, &k1, &pts, 1.0);
    assert!((w - DMatrix::identity(3, 3)).norm() < 1e-12);
    assert!(r < 1e-12);

    let perm = [2usize, 0, 1];
    let basis = SoBasis { n: 4, mats: perm.iter().map(|&p| k1.basis.mats[p].clone()).collect() };
    let k2 = RotationFieldSet::new(k1.s.clone(), k1.q.clone(), basis);
    let (w, r) = align_field_sets(&k1, &k2, &pts, 1.0);
    assert!(r <= 1e-12);
    for (b, &a) in perm.iter().enumerate() {
        assert!((w[(a, b)] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn alignment_residual_is_linear_in_radius_and_defect() {
    let g = GridSpec { z_half_width: 10.0, z_points: 21, ..Default::default() };
    let s = sample_model(ModelTag::Cylinder { n: 4, t: -1.0 }, &g, 0.0).unwrap();
    let h = 1.0;
    let center = s.samples.iter().min_by(|a, b| a.x.norm().partial_cmp(&b.x.norm()).unwrap()).unwrap().x.clone();
    let ball = |l: f64| -> Vec<usize> {
        (0..s.len()).filter(|&i| (&s.samples[i].x - &center).norm() <= l / h + 1e-9).collect()
    };
    let unit = s.subset(&ball(2.0));
    let eps = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut c_max = 0.0f64;
    for _ in 0..30 {
        let (k1, r1) = random_eps_field_set(4, &unit, eps, &mut rng).unwrap();
        let (k2, r2) = random_eps_field_set(4, &unit, eps, &mut rng).unwrap();
        assert!(r1.defect <= eps && r2.defect <= eps);
        for l in [1.0, 5.0, 10.0] {
            let pts: Vec<DVector<f64>> = ball(l).iter().map(|&i| s.samples[i].x.clone()).collect();
            let (w, r) = align_field_sets(&k1, &k2, &pts, h);
            assert!(r <= alignment_residual(&k1, &k2, &pts, h, &DMatrix::identity(3, 3)) + 1e-12);
            c_max = c_max.max(r / (l * eps));
            assert!((w.transpose() * &w - DMatrix::identity(3, 3)).norm() < 1e-10);
        }
    }
    assert!(c_max.is_finite() && c_max < 100.0, "C = {c_max}");
}

#[test]
fn eps_symmetry_cases() {
    let g = GridSpec { sphere_res: 4, z_points: 5, ..Default::default() };
    let flow = sample_flow(ModelTag::ShrinkingCylinderFamily { n: 4 }, &g, &[-3.0, -2.0, -1.0]).unwrap();
    let opts = EpsSymmetryOptions { l: 3.0, t: 1.0, fit: FitOptions::default() };
    let last_slice = &flow.slices[2];
    let center = (0..last_slice.len())
        .min_by(|&a, &b| last_slice.samples[a].x.norm().partial_cmp(&last_slice.samples[b].x.norm()).unwrap())
        .unwrap();
    for eps in [1e-9, 1e-3, 1.0] {
        let (ok, fit, rep) = is_eps_symmetric(&flow, center, -1.0, eps, &tilted(4, 0.1), opts).unwrap();
        assert!(ok, "ε = {eps}: defect {}", rep.defect);
        assert!(symmetry_defect(&fit, &flow.slices[2]).defect <= 1e-8);
    }

    // l = 2 deformations: the verdict flips exactly at the fitted defect.
    let mut last = 0.0;
    for a in [0.01, 0.02, 0.05, 0.1] {
        let s = elliptic_cylinder(4, -1.0, a, &g).unwrap();
        let (_, rep) = fit_rotation_fields(&s, &RotationFieldSet::standard(4).unwrap(), FitOptions::default()).unwrap();
        assert!(rep.defect > last, "defect not increasing at a = {a}");
        last = rep.defect;
        assert!(eps_symmetric_verdict(&rep, rep.defect, 4));
        assert!(!eps_symmetric_verdict(&rep, rep.defect * 0.99, 4));
    }

    // Oversized fields: zero defect but magnitude above 5n.
    let s = cylinder();
    let mut f = RotationFieldSet::standard(4).unwrap();
    for m in &mut f.basis.mats {
        *m *= 50.0;
    }
    let rep = symmetry_defect(&f, &s);
    assert!(rep.defect <= 1e-10 && rep.magnitude > 20.0);
    assert!(!eps_symmetric_verdict(&rep, 1.0, 4));
}

#[test]
fn fit_rigidity_defect_is_bounded_below_by_the_perturbation() {
    let s = cylinder();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let mut a = DMatrix::zeros(5, 5);
        for i in 0..3 {
            for c in 3..5 {
                a += elementary_antisym(5, i, c, rng.gen_range(-1.0..1.0));
            }
        }
        a *= 1e-3 / a.norm();
        let f = RotationFieldSet { s: DMatrix::identity(5, 5), q: DVector::zeros(5), basis: standard_so_basis(4).unwrap() };
        // K_α = [A, J_α]x, the linearization of exp(A)·J_α·exp(−A).
        let mut d = 0.0f64;
        for p in &s.samples {
            for j in &f.basis.mats {
                let k = (&a * j - j * &a) * &p.x;
                d = d.max((k.dot(&p.normal) * p.h).abs());
            }
        }
        worst = worst.min(d / 1e-3);
    }
    assert!(worst > 0.05, "defect/|A| lower bound {worst}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn defect_is_rigid_motion_equivariant(seed in any::<u64>(), theta in -0.3f64..0.3) {
        let g = GridSpec { sphere_res: 3, z_points: 3, ..Default::default() };
        let s = sample_model(ModelTag::Cylinder { n: 4, t: -1.0 }, &g, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rot = random_rotation(5, &mut rng);
        let shift = DVector::from_fn(5, |_, _| rng.gen_range(-3.0..3.0));
        let f = tilted(4, theta);
        let a = symmetry_defect(&f, &s);
        let b = symmetry_defect(&f.transformed(&rot, &shift), &s.transformed(&rot, &shift));
        prop_assert!((a.defect - b.defect).abs() <= 1e-10);
        prop_assert!((a.magnitude - b.magnitude).abs() <= 1e-10);
    }

    #[test]
    fn defect_is_invariant_under_basis_rotation(seed in any::<u64>(), theta in -0.3f64..0.3) {
        let g = GridSpec { sphere_res: 3, z_points: 3, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Zero-defect sets stay zero for every ω ∈ O(N).
        let s4 = sample_model(ModelTag::Cylinder { n: 4, t: -1.0 }, &g, 0.0).unwrap();
        let f = RotationFieldSet::standard(4).unwrap();
        let w = random_orthogonal(3, &mut rng);
        let r = RotationFieldSet { basis: f.basis.rotated(&w), ..f.clone() };
        prop_assert!((symmetry_defect(&f, &s4).defect - symmetry_defect(&r, &s4).defect).abs() <= 1e-12);
        // With N = 1 the group is {±1} and tilted sets are covered too.
        let s3 = sample_model(ModelTag::Cylinder { n: 3, t: -1.0 }, &g, 0.0).unwrap();
        let f = tilted(3, theta);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let r = RotationFieldSet { basis: f.basis.rotated(&DMatrix::from_element(1, 1, sign)), ..f.clone() };
        prop_assert!((symmetry_defect(&f, &s3).defect - symmetry_defect(&r, &s3).defect).abs() <= 1e-12);
    }

    #[test]
    fn procrustes_beats_random_orthogonal(seed in any::<u64>()) {
        let g = GridSpec { sphere_res: 3, z_points: 3, ..Default::default() };
        let s = sample_model(ModelTag::Cylinder { n: 4, t: -1.0 }, &g, 0.0).unwrap();
        let pts: Vec<DVector<f64>> = s.samples.iter().map(|p| p.x.clone()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k1 = random_tilt(4, 0.05, &mut rng);
        let k2 = random_tilt(4, 0.05, &mut rng);
        let (w, r) = align_field_sets(&k1, &k2, &pts, 1.0);
        prop_assert!((alignment_residual(&k1, &k2, &pts, 1.0, &w) - r).abs() <= 1e-12);
        // The Procrustes ω minimizes the L² misfit; the sup residual is compared
        // against competitors through that same objective.
        let l2 = |om: &DMatrix<f64>| -> f64 {
            let g1 = k1.generators();
            let g2 = k2.generators();
            pts.iter().map(|x| {
                (0..3).map(|a| {
                    let mut v = &g1[a] * (x - &k1.q);
                    for b in 0..3 { v -= &g2[b] * (x - &k2.q) * om[(a, b)]; }
                    v.norm_squared()
                }).sum::<f64>()
            }).sum()
        };
        let best = l2(&w);
        prop_assert!(best <= l2(&DMatrix::identity(3, 3)) + 1e-12);
        for _ in 0..100 {
            prop_assert!(best <= l2(&random_orthogonal(3, &mut rng)) + 1e-12);
        }
    }

    #[test]
    fn json_round_trip_preserves_fields(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_tilt(4, 0.3, &mut rng);
        let text = serde_json::to_string(&f.to_json()).unwrap();
        let back = RotationFieldSet::from_json(&serde_json::from_str(&text).unwrap());
        prop_assert_eq!(back, f);
    }
}
