//! Normalized rotation vector fields K_α(x) = S·J_α·Sᵀ(x − q), symmetry
//! defects, Gauss–Newton fitting and Procrustes alignment.

use crate::error::{Error, Result};
use crate::geometry::{parabolic_neighborhood, FlowSamples, SurfaceSampleSet};
use crate::linalg::{elementary_antisym, polar_orthonormalize, random_orthogonal};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Orthonormal basis of so(n−1) embedded in the leading block of so(n+1).
#[derive(Debug, Clone, PartialEq)]
pub struct SoBasis {
    pub n: usize,
    pub mats: Vec<DMatrix<f64>>,
}

pub fn standard_so_basis(n: usize) -> Result<SoBasis> {
    if n < 3 {
        return Err(Error::Domain(format!("rotation fields need n ≥ 3, got {n}")));
    }
    let mut mats = Vec::new();
    let v = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n - 1 {
        for j in i + 1..n - 1 {
            mats.push(elementary_antisym(n + 1, i, j, v));
        }
    }
    Ok(SoBasis { n, mats })
}

impl SoBasis {
    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    /// Gram matrix under Tr(A·Bᵀ).
    pub fn gram(&self) -> DMatrix<f64> {
        let m = self.len();
        DMatrix::from_fn(m, m, |a, b| self.mats[a].component_mul(&self.mats[b]).sum())
    }

    /// Basis J'_α = Σ_β ω_{αβ} J_β.
    pub fn rotated(&self, omega: &DMatrix<f64>) -> SoBasis {
        let dim = self.n + 1;
        let mats = (0..self.len())
            .map(|a| {
                let mut m = DMatrix::zeros(dim, dim);
                for b in 0..self.len() {
                    m += &self.mats[b] * omega[(a, b)];
                }
                m
            })
            .collect();
        SoBasis { n: self.n, mats }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationFieldSet {
    pub s: DMatrix<f64>,
    pub q: DVector<f64>,
    pub basis: SoBasis,
}

/// JSON mirror with S in row-major order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RotationFieldSetJson {
    pub n: usize,
    pub s: Vec<Vec<f64>>,
    pub q: Vec<f64>,
    pub basis: Vec<Vec<Vec<f64>>>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(r: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(r.len(), r.first().map(|x| x.len()).unwrap_or(0), |i, j| r[i][j])
}

impl RotationFieldSet {
    /// Axis-aligned set: S = I, q = 0.
    pub fn standard(n: usize) -> Result<Self> {
        Ok(Self { s: DMatrix::identity(n + 1, n + 1), q: DVector::zeros(n + 1), basis: standard_so_basis(n)? })
    }

    /// Build a set and impose the gauge on q.
    pub fn new(s: DMatrix<f64>, q: DVector<f64>, basis: SoBasis) -> Self {
        let mut f = Self { s, q, basis };
        f.gauge_project();
        f
    }

    pub fn n(&self) -> usize {
        self.basis.n
    }

    /// Generators S·J_α·Sᵀ.
    pub fn generators(&self) -> Vec<DMatrix<f64>> {
        self.basis.mats.iter().map(|j| &self.s * j * self.s.transpose()).collect()
    }

    pub fn field(&self, alpha: usize, x: &DVector<f64>) -> DVector<f64> {
        &self.s * (&self.basis.mats[alpha] * (self.s.transpose() * (x - &self.q)))
    }

    /// Orthonormal basis of ∩_α ker(J_α·Sᵀ) (SVD, cutoff 1e−10 relative).
    pub fn common_kernel(&self) -> Vec<DVector<f64>> {
        let dim = self.n() + 1;
        let nb = self.basis.len();
        let mut stack = DMatrix::zeros(nb * dim, dim);
        let st = self.s.transpose();
        for (a, j) in self.basis.mats.iter().enumerate() {
            let m = j * &st;
            stack.view_mut((a * dim, 0), (dim, dim)).copy_from(&m);
        }
        let svd = stack.svd(false, true);
        let vt = svd.v_t.expect("v_t");
        let smax = svd.singular_values.max();
        let mut out = Vec::new();
        for (k, &sv) in svd.singular_values.iter().enumerate() {
            if sv <= 1e-10 * smax.max(1e-300) {
                out.push(vt.row(k).transpose());
            }
        }
        out
    }

    /// Project q onto the orthogonal complement of the common kernel.
    pub fn gauge_project(&mut self) {
        for v in self.common_kernel() {
            let c = v.dot(&self.q);
            self.q -= v * c;
        }
    }

    /// Residual of the gauge condition: largest |⟨q, v⟩| over kernel vectors.
    pub fn gauge_residual(&self) -> f64 {
        self.common_kernel().iter().fold(0.0, |a, v| a.max(v.dot(&self.q).abs()))
    }

    /// Apply a rigid motion x ↦ R·x + c to the fields.
    pub fn transformed(&self, rot: &DMatrix<f64>, shift: &DVector<f64>) -> Self {
        Self { s: rot * &self.s, q: rot * &self.q + shift, basis: self.basis.clone() }
    }

    pub fn to_json(&self) -> RotationFieldSetJson {
        RotationFieldSetJson {
            n: self.n(),
            s: rows(&self.s),
            q: self.q.iter().copied().collect(),
            basis: self.basis.mats.iter().map(rows).collect(),
        }
    }

    pub fn from_json(j: &RotationFieldSetJson) -> Self {
        Self {
            s: from_rows(&j.s),
            q: DVector::from_vec(j.q.clone()),
            basis: SoBasis { n: j.n, mats: j.basis.iter().map(|m| from_rows(m)).collect() },
        }
    }

    /// Largest |S_{ic}| with i in the sphere block and c in the flat block.
    pub fn split_violation(&self) -> f64 {
        let n = self.n();
        let mut m = 0.0f64;
        for i in 0..n - 1 {
            for c in n - 1..n + 1 {
                m = m.max(self.s[(i, c)].abs()).max(self.s[(c, i)].abs());
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub defect: f64,
    pub magnitude: f64,
    /// Number of samples the sup was taken over.
    pub samples: usize,
}

/// Per-sample max over α of (|⟨K_α,ν⟩|·H, |K_α|·H).
fn sample_defect(gens: &[DMatrix<f64>], q: &DVector<f64>, x: &DVector<f64>, nu: &DVector<f64>, h: f64) -> (f64, f64) {
    let d = x - q;
    let mut def = 0.0f64;
    let mut mag = 0.0f64;
    for g in gens {
        let k = g * &d;
        def = def.max((k.dot(nu) * h).abs());
        mag = mag.max(k.norm() * h.abs());
    }
    (def, mag)
}

pub fn symmetry_defect(fields: &RotationFieldSet, samples: &SurfaceSampleSet) -> SymmetryReport {
    let gens = fields.generators();
    let (defect, magnitude) = samples
        .samples
        .par_iter()
        .map(|s| sample_defect(&gens, &fields.q, &s.x, &s.normal, s.h))
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    SymmetryReport { defect, magnitude, samples: samples.len() }
}

/// Options for [`fit_rotation_fields`].
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iter: 50, tol: 1e-13 }
    }
}

/// Generators of the complement of so(n−1) ⊕ so(2): pairs (i, c) with i in
/// the sphere block and c in the flat block.
fn complement_generators(n: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::new();
    for i in 0..n - 1 {
        for c in n - 1..n + 1 {
            out.push(elementary_antisym(n + 1, i, c, 1.0));
        }
    }
    out
}

fn residual_vector(fields: &RotationFieldSet, samples: &SurfaceSampleSet) -> DVector<f64> {
    let gens = fields.generators();
    let nb = gens.len();
    let mut r = DVector::zeros(samples.len() * nb);
    for (si, s) in samples.samples.iter().enumerate() {
        let d = &s.x - &fields.q;
        for (a, g) in gens.iter().enumerate() {
            r[si * nb + a] = (g * &d).dot(&s.normal) * s.h;
        }
    }
    r
}

/// Gauss–Newton fit of (S, q) minimizing Σ_samples Σ_α (⟨K_α,ν⟩H)².
///
/// S is updated as S₀·exp(Ξ) with Ξ restricted to the complement of the
/// stabilizer so(n−1) ⊕ so(2), and q moves inside S₀·ℝ^{n−1}; the remaining
/// directions leave the field span unchanged.
pub fn fit_rotation_fields(
    samples: &SurfaceSampleSet,
    init: &RotationFieldSet,
    opts: FitOptions,
) -> Result<(RotationFieldSet, SymmetryReport)> {
    let n = init.n();
    let dim = n + 1;
    let comp = complement_generators(n);
    let np = comp.len() + (n - 1);
    let mut cur = init.clone();
    cur.gauge_project();
    let mut r = residual_vector(&cur, samples);
    let mut cost = r.norm_squared();
    let nb = cur.basis.len();
    for _iter in 0..opts.max_iter {
        let st = cur.s.transpose();
        let gens = cur.generators();
        // Jacobian columns.
        let mut jac = DMatrix::zeros(samples.len() * nb, np);
        let dgens: Vec<Vec<DMatrix<f64>>> = comp
            .iter()
            .map(|g| {
                cur.basis
                    .mats
                    .iter()
                    .map(|j| &cur.s * (g * j - j * g) * &st)
                    .collect()
            })
            .collect();
        for (si, s) in samples.samples.iter().enumerate() {
            let d = &s.x - &cur.q;
            for a in 0..nb {
                let row = si * nb + a;
                for (p, dg) in dgens.iter().enumerate() {
                    jac[(row, p)] = (&dg[a] * &d).dot(&s.normal) * s.h;
                }
                for j in 0..n - 1 {
                    let dq = cur.s.column(j);
                    jac[(row, comp.len() + j)] = -(&gens[a] * dq).dot(&s.normal) * s.h;
                }
            }
        }
        let svd = jac.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smax == 0.0 || smin < 1e-8 * smax {
            return Err(Error::Identifiability { ratio: if smax == 0.0 { 0.0 } else { smin / smax } });
        }
        let step = svd.solve(&(-&r), 0.0).map_err(|e| Error::Fit(e.to_string()))?;
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut xi = DMatrix::zeros(dim, dim);
            for (p, g) in comp.iter().enumerate() {
                xi += g * (alpha * step[p]);
            }
            let s_new = polar_orthonormalize(&(&cur.s * xi.exp()));
            let mut dq = DVector::zeros(dim);
            for j in 0..n - 1 {
                dq += cur.s.column(j) * (alpha * step[comp.len() + j]);
            }
            let cand = RotationFieldSet::new(s_new, &cur.q + dq, cur.basis.clone());
            let r_new = residual_vector(&cand, samples);
            let c_new = r_new.norm_squared();
            if c_new < cost {
                accepted = Some((cand, r_new, c_new));
                break;
            }
            alpha *= 0.5;
        }
        let step_norm = step.norm() * alpha;
        match accepted {
            Some((cand, r_new, c_new)) => {
                let rel = (cost - c_new) / cost.max(1e-300);
                cur = cand;
                r = r_new;
                cost = c_new;
                if step_norm < opts.tol || cost.sqrt() < opts.tol || rel < 1e-14 {
                    let rep = symmetry_defect(&cur, samples);
                    return Ok((cur, rep));
                }
            }
            None => {
                // No descent direction left at working precision.
                let rep = symmetry_defect(&cur, samples);
                return Ok((cur, rep));
            }
        }
    }
    let rep = symmetry_defect(&cur, samples);
    if rep.defect <= opts.tol.sqrt() {
        return Ok((cur, rep));
    }
    Err(Error::NonConvergence { iterations: opts.max_iter, best_defect: rep.defect, best: Box::new(cur) })
}

/// Random perturbation of the axis-aligned set with defect at most ε on
/// `samples`: S = exp(s·Ξ) for a unit Ξ off the stabilizer, q a sphere-block
/// shift of size s, and a Haar-random basis rotation. The scale s starts at
/// the linearized value ε·u/defect(1) with u uniform in [0.1, 1] and is
/// halved until the defect bound holds.
pub fn random_eps_field_set<R: Rng + ?Sized>(
    n: usize,
    samples: &SurfaceSampleSet,
    eps: f64,
    rng: &mut R,
) -> Result<(RotationFieldSet, SymmetryReport)> {
    if !(eps > 0.0) {
        return Err(Error::Domain("ε must be positive".into()));
    }
    let basis = standard_so_basis(n)?;
    let comp = complement_generators(n);
    let mut xi = DMatrix::zeros(n + 1, n + 1);
    for g in &comp {
        xi += g * rng.sample::<f64, _>(StandardNormal);
    }
    let mut dq = DVector::zeros(n + 1);
    for i in 0..n - 1 {
        dq[i] = rng.sample::<f64, _>(StandardNormal);
    }
    let norm = (xi.norm_squared() + dq.norm_squared()).sqrt();
    xi /= norm;
    dq /= norm;
    let omega = random_orthogonal(basis.len(), rng);
    let basis = basis.rotated(&omega);
    let build = |s: f64| RotationFieldSet::new((&xi * s).exp(), &dq * s, basis.clone());
    let unit = symmetry_defect(&build(1e-6), samples).defect / 1e-6;
    let mut s = if unit > 0.0 { eps * rng.gen_range(0.1..=1.0) / unit } else { eps };
    for _ in 0..60 {
        let f = build(s);
        let rep = symmetry_defect(&f, samples);
        if rep.defect <= eps {
            return Ok((f, rep));
        }
        s *= 0.5;
    }
    Err(Error::Domain("could not meet the defect bound".into()))
}

/// Orthogonal Procrustes alignment of two field sets over sample points.
///
/// Returns ω ∈ O(N) minimizing Σ_points |K1_α − Σ_β ω_{αβ}K2_β|² and the
/// achieved sup of max_α |K1_α − (ωK2)_α|·H(center).
pub fn align_field_sets(
    k1: &RotationFieldSet,
    k2: &RotationFieldSet,
    points: &[DVector<f64>],
    h_center: f64,
) -> (DMatrix<f64>, f64) {
    let (a, b) = stacked(k1, k2, points);
    let m = &a * b.transpose();
    let svd = m.svd(true, true);
    let omega = svd.u.unwrap() * svd.v_t.unwrap();
    let res = alignment_residual_stacked(&a, &b, &omega, k1.n() + 1) * h_center;
    (omega, res)
}

fn stacked(k1: &RotationFieldSet, k2: &RotationFieldSet, points: &[DVector<f64>]) -> (DMatrix<f64>, DMatrix<f64>) {
    let nb = k1.basis.len();
    let dim = k1.n() + 1;
    let mut a = DMatrix::zeros(nb, points.len() * dim);
    let mut b = DMatrix::zeros(nb, points.len() * dim);
    let g1 = k1.generators();
    let g2 = k2.generators();
    for (p, x) in points.iter().enumerate() {
        let d1 = x - &k1.q;
        let d2 = x - &k2.q;
        for al in 0..nb {
            let v1 = &g1[al] * &d1;
            let v2 = &g2[al] * &d2;
            for c in 0..dim {
                a[(al, p * dim + c)] = v1[c];
                b[(al, p * dim + c)] = v2[c];
            }
        }
    }
    (a, b)
}

fn alignment_residual_stacked(a: &DMatrix<f64>, b: &DMatrix<f64>, omega: &DMatrix<f64>, dim: usize) -> f64 {
    let diff = a - omega * b;
    let npts = a.ncols() / dim;
    let mut worst = 0.0f64;
    for al in 0..a.nrows() {
        for p in 0..npts {
            let mut s = 0.0;
            for c in 0..dim {
                s += diff[(al, p * dim + c)].powi(2);
            }
            worst = worst.max(s.sqrt());
        }
    }
    worst
}

/// sup residual for a given ω (used to check Procrustes optimality).
pub fn alignment_residual(
    k1: &RotationFieldSet,
    k2: &RotationFieldSet,
    points: &[DVector<f64>],
    h_center: f64,
    omega: &DMatrix<f64>,
) -> f64 {
    let (a, b) = stacked(k1, k2, points);
    alignment_residual_stacked(&a, &b, omega, k1.n() + 1) * h_center
}

/// Neighbourhood scales for the ε-symmetry test.
#[derive(Debug, Clone, Copy)]
pub struct EpsSymmetryOptions {
    pub l: f64,
    pub t: f64,
    pub fit: FitOptions,
}

impl EpsSymmetryOptions {
    /// Radius 100·n^{5/2} and depth 100²·n⁵.
    pub fn standard(n: usize) -> Self {
        let n52 = (n as f64).powf(2.5);
        Self { l: 100.0 * n52, t: 1e4 * n52 * n52, fit: FitOptions::default() }
    }
}

/// Verdict for a measured report: defect ≤ ε and magnitude ≤ 5n.
pub fn eps_symmetric_verdict(rep: &SymmetryReport, eps: f64, n: usize) -> bool {
    rep.defect <= eps && rep.magnitude <= 5.0 * n as f64
}

/// Fit fields on P̂(x̄, t̄, L, T) and decide ε-symmetry.
pub fn is_eps_symmetric(
    flow: &FlowSamples,
    center: usize,
    t_bar: f64,
    eps: f64,
    init: &RotationFieldSet,
    opts: EpsSymmetryOptions,
) -> Result<(bool, RotationFieldSet, SymmetryReport)> {
    let nb = parabolic_neighborhood(flow, center, t_bar, opts.l, opts.t)?;
    let all = nb.all_samples();
    let (fit, rep) = fit_rotation_fields(&all, init, opts.fit)?;
    Ok((eps_symmetric_verdict(&rep, eps, init.n()), fit, rep))
}
