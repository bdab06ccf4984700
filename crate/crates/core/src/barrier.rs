//! Weighted-ratio barriers f = e^{−Φ+λ(t−t̄)}·u/(H−μ) on Bowl×ℝ, their
//! zeroth-order coefficient, maximum-principle checks over the regions Ω_j,
//! and the final-step barrier on the Bowl translator.
//!
//! Coordinates are 0-based in ℝ^{n+1}: the Bowl slice uses radial
//! coordinates 0..n−2 and axis n−1; the splitting direction is n. All
//! models have unit speed (κ = 1).

use crate::error::{Error, Result};
use crate::geometry::model::bowl_point;
use crate::geometry::{solve_bowl_profile_with_spacing, BowlProfile, SurfaceSample};
use crate::linalg::{elementary_antisym, fit_line};
use crate::sphere::SphereGrid;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const LN2: f64 = std::f64::consts::LN_2;

/// log cosh without overflow.
pub fn log_cosh(s: f64) -> f64 {
    let a = s.abs();
    a + (-2.0 * a).exp().ln_1p() - LN2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierParams {
    pub n: usize,
    pub j: usize,
    pub lambda1: f64,
    pub c_n: f64,
    /// D_j = 2^{j/100}Λ₁.
    pub d: f64,
    /// W_j = T_j = 2^{j/50}Λ₁².
    pub w: f64,
    pub t_depth: f64,
    /// λ = (c_n²/n)D_j^{−1}.
    pub lambda: f64,
    /// μ = c_n·D_j^{−1/2}.
    pub mu: f64,
    /// φ(s) = phi_scale·log cosh(s); the default is (c_n²/n)D_j^{−1}.
    pub phi_scale: f64,
}

impl BarrierParams {
    pub fn new(n: usize, j: usize, lambda1: f64, c_n: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::Domain(format!("barrier needs n ≥ 3, got {n}")));
        }
        if !(c_n > 0.0 && c_n < 1.0) || !(lambda1 > 0.0) {
            return Err(Error::Domain(format!("need c_n ∈ (0,1) and Λ₁ > 0, got {c_n}, {lambda1}")));
        }
        let jf = j as f64;
        let d = 2f64.powf(jf / 100.0) * lambda1;
        let w = 2f64.powf(jf / 50.0) * lambda1 * lambda1;
        let lambda = c_n * c_n / n as f64 / d;
        Ok(Self { n, j, lambda1, c_n, d, w, t_depth: w, lambda, mu: c_n / d.sqrt(), phi_scale: lambda })
    }

    pub fn phi(&self, s: f64) -> f64 {
        self.phi_scale * log_cosh(s)
    }

    pub fn dphi(&self, s: f64) -> f64 {
        self.phi_scale * s.tanh()
    }

    pub fn ddphi(&self, s: f64) -> f64 {
        let c = s.cosh();
        if c.is_infinite() {
            0.0
        } else {
            self.phi_scale / (c * c)
        }
    }

    /// W_j + D_j + T_j.
    pub fn scale_sum(&self) -> f64 {
        self.w + self.d + self.t_depth
    }

    /// 200·n^{5/2}, the half-size of the central neighbourhood.
    pub fn center_radius(&self) -> f64 {
        200.0 * (self.n as f64).powf(2.5)
    }
}

/// The five conditions on φ evaluated on a sample of s ∈ [−W_j, W_j].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhiConditions {
    /// |φ'| ≤ (c_n/n)D_j^{−1/2}.
    pub slope: bool,
    /// |φ''| ≤ (c_n²/n)D_j^{−1}.
    pub curvature: bool,
    /// φ(W_j) ≥ 20·log(W_j + D_j + T_j).
    pub far_growth: bool,
    /// φ(200n^{5/2}) ≤ log(W_j + D_j + T_j).
    pub near_bound: bool,
    /// φ(0) = 0, φ even and φ' > 0 for s > 0.
    pub normalized: bool,
    pub max_slope: f64,
    pub max_curvature: f64,
    pub phi_at_w: f64,
    pub phi_at_center: f64,
    pub log_scale: f64,
}

impl PhiConditions {
    pub fn all(&self) -> bool {
        self.slope && self.curvature && self.far_growth && self.near_bound && self.normalized
    }

    pub fn as_array(&self) -> [bool; 5] {
        [self.slope, self.curvature, self.far_growth, self.near_bound, self.normalized]
    }
}

fn phi_sample_points(w: f64) -> Vec<f64> {
    let mut s = vec![0.0];
    let k = 400;
    let lo = (1e-3f64).ln();
    let hi = w.max(1e-2).ln();
    for i in 0..=k {
        let v = (lo + (hi - lo) * i as f64 / k as f64).exp();
        s.push(v);
        s.push(-v);
    }
    s.push(w);
    s.push(-w);
    s
}

pub fn phi_conditions(p: &BarrierParams) -> PhiConditions {
    let n = p.n as f64;
    let slope_bound = p.c_n / n / p.d.sqrt();
    let curv_bound = p.c_n * p.c_n / n / p.d;
    let pts = phi_sample_points(p.w);
    let max_slope = pts.iter().fold(0.0f64, |a, &s| a.max(p.dphi(s).abs()));
    let max_curvature = pts.iter().fold(0.0f64, |a, &s| a.max(p.ddphi(s).abs()));
    let normalized = p.phi(0.0) == 0.0
        && pts.iter().all(|&s| (p.phi(s) - p.phi(-s)).abs() <= 1e-12 * p.phi(s).abs().max(1e-300))
        && pts.iter().filter(|&&s| s > 0.0).all(|&s| p.dphi(s) > 0.0);
    let log_scale = p.scale_sum().ln();
    let phi_at_w = p.phi(p.w);
    let phi_at_center = p.phi(p.center_radius());
    let rel = 1.0 + 1e-12;
    PhiConditions {
        slope: max_slope <= slope_bound * rel,
        curvature: max_curvature <= curv_bound * rel,
        far_growth: phi_at_w >= 20.0 * log_scale,
        near_bound: phi_at_center <= log_scale,
        normalized,
        max_slope,
        max_curvature,
        phi_at_w,
        phi_at_center,
        log_scale,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiReport {
    pub params: BarrierParams,
    pub conditions: PhiConditions,
    /// Per condition, the least j from which it holds for every scanned j
    /// up to `j_max`; `None` if it fails at `j_max`.
    pub thresholds: [Option<usize>; 5],
    /// Least j from which all five hold.
    pub j1: Option<usize>,
    /// The slope condition holds iff c_n ≤ D_j^{1/2}, i.e.
    /// j ≥ 100·log₂(c_n²/Λ₁).
    pub analytic_slope_threshold: f64,
    /// Every condition switches from failing to holding at most once.
    pub monotone: bool,
    pub j_max: usize,
}

pub fn phi_profile(n: usize, lambda1: f64, c_n: f64, j: usize, j_max: usize) -> Result<PhiReport> {
    if j < 1 {
        return Err(Error::Domain("φ profile needs j ≥ 1".into()));
    }
    let params = BarrierParams::new(n, j, lambda1, c_n)?;
    let scan: Vec<[bool; 5]> = (1..=j_max.max(j))
        .into_par_iter()
        .map(|jj| BarrierParams::new(n, jj, lambda1, c_n).map(|p| phi_conditions(&p).as_array()))
        .collect::<Result<_>>()?;
    let mut thresholds = [None; 5];
    let mut monotone = true;
    for (c, th) in thresholds.iter_mut().enumerate() {
        let flips = scan.windows(2).filter(|w| w[0][c] != w[1][c]).count();
        let starts_true = scan[0][c];
        monotone &= flips == 0 || (flips == 1 && !starts_true);
        if scan.last().map(|l| l[c]).unwrap_or(false) {
            let last_false = scan.iter().rposition(|v| !v[c]);
            *th = Some(last_false.map(|i| i + 2).unwrap_or(1));
        }
    }
    let j1 = if thresholds.iter().all(|t| t.is_some()) { thresholds.iter().map(|t| t.unwrap()).max() } else { None };
    Ok(PhiReport {
        params,
        conditions: phi_conditions(&params),
        thresholds,
        j1,
        analytic_slope_threshold: 100.0 * (c_n * c_n / lambda1).log2(),
        monotone,
        j_max: j_max.max(j),
    })
}

/// Per-sample ingredients of the zeroth-order coefficient.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CoefficientSample {
    pub h: f64,
    pub a_norm_sq: f64,
    pub dt_phi: f64,
    pub lap_phi: f64,
    pub grad_phi_sq: f64,
    pub grad_phi_dot_grad_h: f64,
}

impl CoefficientSample {
    /// Φ = φ(⟨x − origin, ω⟩) on a flow with velocity H·ν: ∂_tΦ = φ'H⟨ν,ω⟩,
    /// ΔΦ = φ'H⟨ν,ω⟩ + φ''|ω^T|², ⟨∇Φ,∇H⟩ = φ'⟨ω^T,∇H⟩, |∇Φ|² = φ'²|ω^T|².
    pub fn from_surface(sample: &SurfaceSample, omega: &DVector<f64>, origin: &DVector<f64>, p: &BarrierParams) -> Self {
        let s = (&sample.x - origin).dot(omega);
        let nu_w = sample.normal.dot(omega);
        let tangential = omega - &sample.normal * nu_w;
        let t2 = tangential.norm_squared();
        let (d1, d2) = (p.dphi(s), p.ddphi(s));
        let hw = sample.h * nu_w;
        Self {
            h: sample.h,
            a_norm_sq: sample.a_norm_sq,
            dt_phi: d1 * hw,
            lap_phi: d1 * hw + d2 * t2,
            grad_phi_sq: d1 * d1 * t2,
            grad_phi_dot_grad_h: d1 * tangential.dot(&sample.grad_h),
        }
    }

    pub fn coefficient(&self, p: &BarrierParams) -> f64 {
        let hm = self.h - p.mu;
        p.lambda - p.mu * self.a_norm_sq / hm - self.dt_phi + self.lap_phi + self.grad_phi_sq + 2.0 * self.grad_phi_dot_grad_h / hm
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CoefficientReport {
    pub max: f64,
    pub min: f64,
    pub samples: usize,
    pub negative: bool,
}

/// λ − μ|A|²/(H−μ) − ∂_tΦ + ΔΦ + |∇Φ|² + 2⟨∇Φ,∇H⟩/(H−μ) over the samples.
pub fn barrier_coefficient(samples: &[CoefficientSample], p: &BarrierParams) -> Result<CoefficientReport> {
    if samples.is_empty() {
        return Err(Error::Domain("no coefficient samples".into()));
    }
    if let Some(s) = samples.iter().find(|s| !(s.h > 2.0 * p.mu)) {
        return Err(Error::RegionValidity(format!("H = {} ≤ 2μ = {}", s.h, 2.0 * p.mu)));
    }
    let (max, min) = samples
        .iter()
        .map(|s| s.coefficient(p))
        .fold((f64::NEG_INFINITY, f64::INFINITY), |(a, b), v| (a.max(v), b.min(v)));
    Ok(CoefficientReport { max, min, samples: samples.len(), negative: max < 0.0 })
}

/// Exact unit-speed Bowl^k, optionally times ℝ, with its sphere directions.
#[derive(Debug, Clone)]
pub struct BowlModel {
    pub n: usize,
    pub cross_r: bool,
    pub profile: BowlProfile,
    pub sphere: SphereGrid,
}

impl BowlModel {
    /// Bowl^{n−1}×ℝ ⊂ ℝ^{n+1} covering distances up to `d_max` from the
    /// tip line.
    pub fn cross_r(n: usize, d_max: f64, sphere_res: usize) -> Result<Self> {
        Self::build(n, true, d_max, sphere_res)
    }

    /// Bowl^n ⊂ ℝ^{n+1} covering heights up to `h_max`.
    pub fn bowl(n: usize, h_max: f64, sphere_res: usize) -> Result<Self> {
        Self::build(n, false, h_max, sphere_res)
    }

    fn build(n: usize, cross_r: bool, reach: f64, sphere_res: usize) -> Result<Self> {
        let k = if cross_r { n - 1 } else { n };
        if k < 2 {
            return Err(Error::Domain(format!("bowl dimension must be at least 2, got {k}")));
        }
        let mut r_max = (2.0 * (k as f64 - 1.0) * reach.max(1.0)).sqrt() * 1.2 + 5.0;
        loop {
            let spacing = (r_max / 20_000.0).max(0.005);
            let profile = solve_bowl_profile_with_spacing(k, r_max, 1e-10, spacing)?;
            let last = profile.phi.last().copied().unwrap_or(0.0);
            if last >= reach {
                let sphere = SphereGrid::with_resolution(k - 1, sphere_res);
                return Ok(Self { n, cross_r, profile, sphere });
            }
            r_max *= 1.5;
        }
    }

    fn layout(&self) -> (Vec<usize>, usize, usize) {
        let n = self.n;
        if self.cross_r {
            ((0..n - 1).collect(), n - 1, n + 1)
        } else {
            ((0..n - 1).chain(std::iter::once(n)).collect(), n - 1, n + 1)
        }
    }

    /// Distance from the tip line (tip point for Bowl^n) at profile radius ρ.
    pub fn distance(&self, rho: f64) -> Result<f64> {
        let (phi, _, _) = self.profile.eval(rho)?;
        Ok((rho * rho + phi * phi).sqrt())
    }

    /// Height above the tip at profile radius ρ.
    pub fn height(&self, rho: f64) -> Result<f64> {
        Ok(self.profile.eval(rho)?.0)
    }

    pub fn radius_at_distance(&self, d: f64) -> Result<f64> {
        self.profile.radius_at_distance(d)
    }

    pub fn radius_at_height(&self, h: f64) -> Result<f64> {
        let (mut lo, mut hi) = (0.0, self.profile.r_max());
        if self.height(hi)? < h {
            return Err(Error::Range(format!("height {h} beyond profile range")));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.height(mid)? < h {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 * hi.max(1.0) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Mean curvature at profile radius ρ.
    pub fn mean_curvature(&self, rho: f64) -> Result<f64> {
        let (_, d, _) = self.profile.eval(rho)?;
        Ok(1.0 / (1.0 + d * d).sqrt())
    }

    /// Surface sample at profile radius ρ, sphere direction `dir`, split
    /// coordinate z (ignored without the ℝ factor) and time t.
    pub fn sample(&self, rho: f64, dir: usize, z: f64, t: f64) -> Result<SurfaceSample> {
        let (radial, axis, dim) = self.layout();
        let theta = &self.sphere.points[dir];
        let (mut x, nu, mut kappas, grad_h) = bowl_point(&self.profile, 1.0, rho, theta, &radial, axis, dim)?;
        x[axis] += t;
        if self.cross_r {
            x[self.n] = z;
            kappas.push(0.0);
        }
        Ok(SurfaceSample::new(x, nu, kappas, grad_h))
    }

    pub fn axis(&self) -> usize {
        self.n - 1
    }
}

/// c_n: half of inf (H·√d)/2 over the profile points with d ∈ [d_min, d_max].
pub fn measure_c_n(model: &BowlModel, d_min: f64, d_max: f64) -> Result<f64> {
    let mut best = f64::INFINITY;
    for (i, &rho) in model.profile.r.iter().enumerate() {
        let d = (rho * rho + model.profile.phi[i].powi(2)).sqrt();
        if d < d_min || d > d_max {
            continue;
        }
        let h = 1.0 / (1.0 + model.profile.dphi[i].powi(2)).sqrt();
        best = best.min(h * d.sqrt() / 2.0);
    }
    if !best.is_finite() {
        return Err(Error::Range(format!("no profile points with d in [{d_min}, {d_max}]")));
    }
    Ok(0.5 * best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryPiece {
    Interior,
    /// d(y, l_t) = D_j.
    Lateral,
    /// |y_split| = W_j.
    Split,
    /// t = −1 − T_j.
    Initial,
}

/// Grid over Ω_j = {|y_split| ≤ W_j, d(y,l_t) ≤ D_j, t ∈ [−1−T_j, −1]}.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegionSpec {
    pub d: f64,
    pub w: f64,
    pub t_depth: f64,
    /// Rings strictly inside plus the lateral ring.
    pub rings: usize,
    /// Odd number of split-coordinate nodes including ±W_j.
    pub z_points: usize,
    pub t_points: usize,
}

impl RegionSpec {
    pub fn from_params(p: &BarrierParams, rings: usize, z_points: usize, t_points: usize) -> Self {
        Self { d: p.d, w: p.w, t_depth: p.t_depth, rings: rings.max(2), z_points: z_points.max(3), t_points: t_points.max(2) }
    }

    /// Priority ∂¹ > ∂² > initial slab; the top slice t = −1 is interior.
    pub fn classify(&self, ring: usize, zi: usize, ti: usize) -> BoundaryPiece {
        if ring == self.rings {
            BoundaryPiece::Lateral
        } else if zi == 0 || zi + 1 == self.z_points {
            BoundaryPiece::Split
        } else if ti == 0 {
            BoundaryPiece::Initial
        } else {
            BoundaryPiece::Interior
        }
    }

    pub fn z_nodes(&self) -> Vec<f64> {
        let m = self.z_points;
        (0..m).map(|i| -self.w + 2.0 * self.w * i as f64 / (m - 1) as f64).collect()
    }

    pub fn t_nodes(&self) -> Vec<f64> {
        let m = self.t_points;
        (0..m).map(|i| -1.0 - self.t_depth + self.t_depth * i as f64 / (m - 1) as f64).collect()
    }

    /// Ring radii from the tip to the lateral boundary, uniform in distance.
    pub fn ring_radii(&self, model: &BowlModel) -> Result<Vec<f64>> {
        (0..=self.rings)
            .map(|i| if i == 0 { Ok(0.0) } else { model.radius_at_distance(self.d * i as f64 / self.rings as f64) })
            .collect()
    }
}

/// u = ⟨B·x + a, ν⟩, an exact Jacobi field on any translating flow
/// (x is the position at time t).
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiField {
    pub translation: DVector<f64>,
    pub rotation: DMatrix<f64>,
}

impl JacobiField {
    pub fn value(&self, x: &DVector<f64>, nu: &DVector<f64>) -> f64 {
        (&self.rotation * x + &self.translation).dot(nu)
    }

    /// H itself: translation along the axis for a unit-speed Bowl.
    pub fn mean_curvature(n: usize) -> Self {
        let mut a = DVector::zeros(n + 1);
        a[n - 1] = 1.0;
        Self { translation: a, rotation: DMatrix::zeros(n + 1, n + 1) }
    }

    /// Radial translation plus a rotation of angle 1/scale in the plane of
    /// radial coordinate 0 and the splitting direction.
    pub fn synthesized(n: usize, scale: f64) -> Self {
        let mut a = DVector::zeros(n + 1);
        a[0] = 1.0;
        Self { translation: a, rotation: elementary_antisym(n + 1, 0, n, 1.0 / scale) }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FieldEntry {
    pub piece: BoundaryPiece,
    pub ring: usize,
    pub z: f64,
    pub t: f64,
    /// ln|f| (−∞ where u = 0).
    pub log_f: f64,
    /// ln(|u|·H).
    pub log_u_h: f64,
    pub h: f64,
}

/// f = e^{−Φ+λ(t−t̄)}·u/(H−μ) on the region grid, t̄ = −1, with u the
/// field scaled by e^{log_amplitude}.
#[derive(Debug, Clone)]
pub struct BarrierField {
    pub params: BarrierParams,
    pub entries: Vec<FieldEntry>,
}

pub fn tabulate_barrier(model: &BowlModel, p: &BarrierParams, region: &RegionSpec, field: &JacobiField, log_amplitude: f64) -> Result<BarrierField> {
    if !model.cross_r {
        return Err(Error::Domain("Ω_j regions live on Bowl×ℝ".into()));
    }
    let radii = region.ring_radii(model)?;
    let zs = region.z_nodes();
    let ts = region.t_nodes();
    let ndir = model.sphere.len();
    let jobs: Vec<(usize, usize)> = (0..radii.len()).flat_map(|r| (0..ndir).map(move |d| (r, d))).collect();
    let chunks = jobs
        .par_iter()
        .map(|&(ring, dir)| {
            let rho = radii[ring];
            if ring == 0 && dir > 0 {
                return Ok(Vec::new());
            }
            let mut out = Vec::with_capacity(zs.len() * ts.len());
            for (zi, &z) in zs.iter().enumerate() {
                for (ti, &t) in ts.iter().enumerate() {
                    let s = model.sample(rho, dir, z, t)?;
                    if !(s.h > p.mu) {
                        return Err(Error::RegionValidity(format!("H = {} ≤ μ = {}", s.h, p.mu)));
                    }
                    let log_u = log_amplitude + field.value(&s.x, &s.normal).abs().ln();
                    let log_f = -p.phi(z) + p.lambda * (t + 1.0) + log_u - (s.h - p.mu).ln();
                    out.push(FieldEntry { piece: region.classify(ring, zi, ti), ring, z, t, log_f, log_u_h: log_u + s.h.ln(), h: s.h });
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BarrierField { params: *p, entries: chunks.into_iter().flatten().collect() })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MaxPrincipleReport {
    /// Natural logarithms of the sups (−∞ for empty or zero pieces).
    pub log_interior: f64,
    pub log_lateral: f64,
    pub log_split: f64,
    pub log_initial: f64,
    pub interior: f64,
    pub boundary: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl MaxPrincipleReport {
    pub fn log_boundary(&self) -> f64 {
        self.log_lateral.max(self.log_split).max(self.log_initial)
    }
}

/// Interior sup against the boundary sups; passes iff
/// interior ≤ boundary·(1 + tol) + tol.
pub fn max_principle_check(field: &BarrierField, tolerance: f64) -> MaxPrincipleReport {
    let mut sup = [f64::NEG_INFINITY; 4];
    for e in &field.entries {
        let k = match e.piece {
            BoundaryPiece::Interior => 0,
            BoundaryPiece::Lateral => 1,
            BoundaryPiece::Split => 2,
            BoundaryPiece::Initial => 3,
        };
        sup[k] = sup[k].max(e.log_f);
    }
    let interior = sup[0].exp();
    let lb = sup[1].max(sup[2]).max(sup[3]);
    let boundary = lb.exp();
    let pass = interior <= boundary * (1.0 + tolerance) + tolerance;
    MaxPrincipleReport {
        log_interior: sup[0],
        log_lateral: sup[1],
        log_split: sup[2],
        log_initial: sup[3],
        interior,
        boundary,
        tolerance,
        pass,
    }
}

/// Coefficient samples over ring × split grid (time plays no role on the
/// exact model), Φ along the splitting direction.
pub fn region_coefficient_samples(model: &BowlModel, p: &BarrierParams, region: &RegionSpec) -> Result<Vec<CoefficientSample>> {
    let n = model.n;
    let mut omega = DVector::zeros(n + 1);
    omega[n] = 1.0;
    let origin = DVector::zeros(n + 1);
    let radii = region.ring_radii(model)?;
    let mut zs = region.z_nodes();
    // φ'' + φ'² peaks at the origin of the split coordinate.
    zs.extend([0.0, 0.5, 1.0, 2.0]);
    let mut out = Vec::new();
    for &rho in &radii {
        for &z in &zs {
            let s = model.sample(rho, 0, z, -1.0)?;
            out.push(CoefficientSample::from_surface(&s, &omega, &origin, p));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierSweepConfig {
    pub n: usize,
    pub lambda1: f64,
    /// Fixed c_n; measured from the model when absent.
    pub c_n: Option<f64>,
    pub eps: f64,
    /// Constant C in the assumed defect bounds C(W+D+T)²2^{−j}ε on ∂¹ and
    /// C(W+D+T)²ε on Ω_j.
    pub constant: f64,
    pub rings: usize,
    pub z_points: usize,
    pub t_points: usize,
    pub sphere_res: usize,
    pub j_max: usize,
    /// Sweep j = j₁, j₁ + step, …
    pub sweep_len: usize,
    pub sweep_step: usize,
}

impl Default for BarrierSweepConfig {
    fn default() -> Self {
        Self {
            n: 4,
            lambda1: 10.0,
            c_n: None,
            eps: 1e-3,
            constant: 1.0,
            rings: 24,
            z_points: 21,
            t_points: 11,
            sphere_res: 3,
            j_max: 4000,
            sweep_len: 7,
            sweep_step: 50,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierRow {
    pub j: usize,
    pub params: BarrierParams,
    pub coefficient_max: f64,
    /// ln of the scale applied to the synthesized field.
    pub log_amplitude: f64,
    pub report: MaxPrincipleReport,
    /// log₂ sups of |f| per boundary piece.
    pub log2_lateral: f64,
    pub log2_split: f64,
    pub log2_initial: f64,
    /// log₂ sup |u|·H over the central neighbourhood.
    pub log2_center_defect: f64,
    /// log₂ of e^{φ(200n^{5/2}) + 2·10⁴n⁵λ}·sup_∂|f|·sup (H−μ)H over the
    /// same set.
    pub log2_chain_bound: f64,
    /// log₂ of the target 2^{−j/10}ε.
    pub log2_target: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierSweep {
    pub c_n: f64,
    pub phi: PhiReport,
    /// Least j from which the coefficient max is negative on every scanned j.
    pub coefficient_threshold: Option<usize>,
    pub j1: usize,
    pub rows: Vec<BarrierRow>,
    /// Fitted −d log₂ sup / dj for ∂¹, ∂², initial slab.
    pub rates: [f64; 3],
    pub expected_rates: [f64; 3],
    /// log₂ of sup over rows of center defect/(2^{−j/10}ε).
    pub log2_final_constant: f64,
    pub max_principle_tolerance: f64,
}

impl BarrierSweep {
    /// Each fitted rate is at least 80% of its exponent.
    pub fn rates_ok(&self) -> [bool; 3] {
        let mut ok = [false; 3];
        for k in 0..3 {
            ok[k] = self.rates[k] >= 0.8 * self.expected_rates[k];
        }
        ok
    }
}

fn coefficient_max_at(model: &BowlModel, n: usize, j: usize, cfg: &BarrierSweepConfig, c_n: f64) -> Result<f64> {
    let p = BarrierParams::new(n, j, cfg.lambda1, c_n)?;
    let region = RegionSpec::from_params(&p, cfg.rings, cfg.z_points, cfg.t_points);
    let samples = region_coefficient_samples(model, &p, &region)?;
    Ok(barrier_coefficient(&samples, &p)?.max)
}

/// Scan φ and coefficient thresholds, then sweep j from j₁ measuring the
/// barrier on Ω_j for a synthesized Jacobi field.
pub fn barrier_sweep(cfg: &BarrierSweepConfig) -> Result<BarrierSweep> {
    let n = cfg.n;
    let probe = BowlModel::cross_r(n, 1e3, cfg.sphere_res)?;
    let c_n = match cfg.c_n {
        Some(c) => c,
        None => measure_c_n(&probe, 1.0, 1e3)?,
    };
    let phi = phi_profile(n, cfg.lambda1, c_n, 1, cfg.j_max)?;
    let phi_j1 = phi.j1.ok_or_else(|| Error::Range(format!("φ conditions fail at j_max = {}", cfg.j_max)))?;
    let j_last = phi_j1 + cfg.sweep_step * cfg.sweep_len.saturating_sub(1);
    let far = BarrierParams::new(n, j_last, cfg.lambda1, c_n)?;
    let model = BowlModel::cross_r(n, far.d, cfg.sphere_res)?;
    let scan_js: Vec<usize> = (1..=j_last).step_by(cfg.sweep_step.clamp(1, 10)).chain(std::iter::once(j_last)).collect();
    let coeffs: Vec<f64> = scan_js.par_iter().map(|&j| coefficient_max_at(&model, n, j, cfg, c_n)).collect::<Result<_>>()?;
    let coefficient_threshold = if coeffs.last().map(|c| *c < 0.0).unwrap_or(false) {
        let last_bad = coeffs.iter().rposition(|c| *c >= 0.0);
        Some(last_bad.map(|i| scan_js[i + 1]).unwrap_or(1))
    } else {
        None
    };
    let j1 = phi_j1.max(coefficient_threshold.unwrap_or(phi_j1));
    let tol = 10.0 * model.profile.tolerance.max(1e-12);
    let rows = (0..cfg.sweep_len)
        .map(|k| sweep_row(&model, cfg, c_n, j1 + k * cfg.sweep_step, tol))
        .collect::<Result<Vec<_>>>()?;
    let js: Vec<f64> = rows.iter().map(|r| r.j as f64).collect();
    let rate = |f: &dyn Fn(&BarrierRow) -> f64| -> f64 {
        let ys: Vec<f64> = rows.iter().map(f).collect();
        if ys.iter().any(|y| !y.is_finite()) || rows.len() < 2 {
            return f64::NAN;
        }
        -fit_line(&js, &ys).0
    };
    let rates = [rate(&|r| r.log2_lateral), rate(&|r| r.log2_split), rate(&|r| r.log2_initial)];
    let log2_final_constant = rows.iter().fold(f64::NEG_INFINITY, |a, r| a.max(r.log2_center_defect - r.log2_target));
    Ok(BarrierSweep {
        c_n,
        phi,
        coefficient_threshold,
        j1,
        rows,
        rates,
        expected_rates: [0.5, 0.2, 1.0],
        log2_final_constant,
        max_principle_tolerance: tol,
    })
}

fn sweep_row(model: &BowlModel, cfg: &BarrierSweepConfig, c_n: f64, j: usize, tol: f64) -> Result<BarrierRow> {
    let n = cfg.n;
    let p = BarrierParams::new(n, j, cfg.lambda1, c_n)?;
    let region = RegionSpec::from_params(&p, cfg.rings, cfg.z_points, cfg.t_points);
    let coefficient_max = barrier_coefficient(&region_coefficient_samples(model, &p, &region)?, &p)?.max;
    let field = JacobiField::synthesized(n, p.w);
    let unit = tabulate_barrier(model, &p, &region, &field, 0.0)?;
    let sup = |it: &mut dyn Iterator<Item = &FieldEntry>| it.fold(f64::NEG_INFINITY, |a, e| a.max(e.log_u_h));
    let lateral_uh = sup(&mut unit.entries.iter().filter(|e| e.piece == BoundaryPiece::Lateral));
    let all_uh = sup(&mut unit.entries.iter());
    let log_budget = (cfg.constant * cfg.eps).ln() + 2.0 * p.scale_sum().ln();
    let log_amplitude = (log_budget - j as f64 * LN2 - lateral_uh).min(log_budget - all_uh);
    let field_tab = BarrierField {
        params: p,
        entries: unit
            .entries
            .iter()
            .map(|e| FieldEntry { log_f: e.log_f + log_amplitude, log_u_h: e.log_u_h + log_amplitude, ..*e })
            .collect(),
    };
    let report = max_principle_check(&field_tab, tol);
    let center = p.center_radius();
    let depth = 2e4 * (n as f64).powi(5);
    let (center_defect, hh) = central_sups(model, &p, &field, log_amplitude, cfg.rings)?;
    let l2 = std::f64::consts::LOG2_E;
    let chain_bound = p.phi(center) + depth * p.lambda + report.log_boundary() + hh.ln();
    Ok(BarrierRow {
        j,
        params: p,
        coefficient_max,
        log_amplitude,
        report,
        log2_lateral: report.log_lateral * l2,
        log2_split: report.log_split * l2,
        log2_initial: report.log_initial * l2,
        log2_center_defect: center_defect * l2,
        log2_chain_bound: chain_bound * l2,
        log2_target: (cfg.eps.ln() - j as f64 * LN2 / 10.0) * l2,
    })
}

/// ln sup |u|·H and sup (H−μ)·H over the central neighbourhood
/// {d ≤ 200n^{5/2}, |z| ≤ 200n^{5/2}, t ∈ [−1−2·10⁴n⁵, −1]}.
fn central_sups(model: &BowlModel, p: &BarrierParams, field: &JacobiField, log_amplitude: f64, rings: usize) -> Result<(f64, f64)> {
    let center = p.center_radius();
    let depth = 2e4 * (p.n as f64).powi(5);
    let mut log_uh = f64::NEG_INFINITY;
    let mut hh = 0.0f64;
    for i in 0..=rings {
        let rho = model.radius_at_distance(center * i as f64 / rings as f64)?;
        for dir in 0..model.sphere.len() {
            for k in 0..5 {
                let z = center * (k as f64 / 2.0 - 1.0);
                for m in 0..5 {
                    let t = -1.0 - depth * m as f64 / 4.0;
                    let s = model.sample(rho, dir, z, t)?;
                    log_uh = log_uh.max(log_amplitude + field.value(&s.x, &s.normal).abs().ln() + s.h.ln());
                    hh = hh.max((s.h - p.mu) * s.h);
                }
            }
        }
    }
    Ok((log_uh, hh))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Step3Config {
    pub n: usize,
    /// Height scale Λ of Ω_j = {h ≤ 2^{j/100}Λ}.
    pub lambda: f64,
    pub eps1: f64,
    pub constant: f64,
    pub rings: usize,
    pub t_points: usize,
    pub sphere_res: usize,
}

impl Default for Step3Config {
    fn default() -> Self {
        Self { n: 4, lambda: 10.0, eps1: 1e-3, constant: 1.0, rings: 24, t_points: 11, sphere_res: 3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Step3Row {
    pub j: usize,
    pub lambda_j: f64,
    pub c_j: f64,
    /// λ_j − 2c_j², identically −2^{−j/50}.
    pub identity: f64,
    /// max of λ_j − c_j|A|²/(H − c_j) over the region samples.
    pub coefficient_max: f64,
    /// min H/(n·c_j) over the region.
    pub validity_ratio: f64,
    pub lateral: f64,
    pub initial: f64,
    pub interior: f64,
    pub aggregate: f64,
    pub aggregate_bound: f64,
    /// log₂ of exp(−2^{j/50})·sup|u|/c_j: the initial-slab bound under the
    /// fixed weight exp(−2^{j/50}), compared against −j.
    pub log2_slab_weight: f64,
    pub slab_weight_ok: bool,
    pub max_principle: bool,
}

/// λ_j = 2^{−j/50}, c_j = 2^{−j/100}.
pub fn step3_constants(j: usize) -> (f64, f64) {
    let jf = j as f64;
    (2f64.powf(-jf / 50.0), 2f64.powf(-jf / 100.0))
}

/// Barrier f = e^{λ_j t}·u/(H − c_j) on {h ≤ 2^{j/100}Λ, t ∈ [−2^{j/100}, 0]}
/// of the unit-speed Bowl^n, with u a radial translation field scaled to
/// |u|H = 2^{−j/2}Cε₁ on ∂¹.
pub fn translator_step3_barrier(j: usize, cfg: &Step3Config, model: &BowlModel) -> Result<Step3Row> {
    if model.cross_r {
        return Err(Error::Domain("the final-step barrier uses Bowl^n".into()));
    }
    let n = cfg.n;
    let (lambda_j, c_j) = step3_constants(j);
    let h_top = 2f64.powf(j as f64 / 100.0) * cfg.lambda;
    let t_depth = 2f64.powf(j as f64 / 100.0);
    let rho_top = model.radius_at_height(h_top)?;
    let h_min = model.mean_curvature(rho_top)?;
    let validity_ratio = h_min / (n as f64 * c_j);
    if validity_ratio <= 1.0 {
        return Err(Error::RegionValidity(format!("H = {h_min} ≤ n·c_j = {} at j = {j}", n as f64 * c_j)));
    }
    let mut a = DVector::zeros(n + 1);
    a[0] = 1.0;
    let field = JacobiField { translation: a, rotation: DMatrix::zeros(n + 1, n + 1) };
    let rings = cfg.rings.max(2);
    let radii: Vec<f64> =
        (0..=rings).map(|i| if i == 0 { Ok(0.0) } else { model.radius_at_height(h_top * i as f64 / rings as f64) }).collect::<Result<_>>()?;
    let ts: Vec<f64> = (0..cfg.t_points.max(2)).map(|i| -t_depth + t_depth * i as f64 / (cfg.t_points.max(2) - 1) as f64).collect();
    let mut coefficient_max = f64::NEG_INFINITY;
    let mut lateral_uh = 0.0f64;
    let mut sup_u = 0.0f64;
    let mut points = Vec::new();
    for (ri, &rho) in radii.iter().enumerate() {
        for dir in 0..model.sphere.len() {
            if ri == 0 && dir > 0 {
                continue;
            }
            let s = model.sample(rho, dir, 0.0, 0.0)?;
            coefficient_max = coefficient_max.max(lambda_j - c_j * s.a_norm_sq / (s.h - c_j));
            let u = field.value(&s.x, &s.normal);
            if ri == rings {
                lateral_uh = lateral_uh.max(u.abs() * s.h);
            }
            sup_u = sup_u.max(u.abs());
            points.push((ri, u, s.h));
        }
    }
    let amplitude = 2f64.powf(-(j as f64) / 2.0) * cfg.constant * cfg.eps1 / lateral_uh;
    let (mut lateral, mut initial, mut interior) = (0.0f64, 0.0f64, 0.0f64);
    for &(ri, u, h) in &points {
        for (ti, &t) in ts.iter().enumerate() {
            let f = (lambda_j * t).exp() * amplitude * u.abs() / (h - c_j);
            if ri == rings {
                lateral = lateral.max(f);
            } else if ti == 0 {
                initial = initial.max(f);
            } else {
                interior = interior.max(f);
            }
        }
    }
    let aggregate = lateral.max(initial).max(interior);
    let aggregate_bound = 2f64.powf(-(j as f64) / 4.0);
    let log2_slab_weight = -(2f64.powf(j as f64 / 50.0)) * std::f64::consts::LOG2_E + (amplitude * sup_u / c_j).log2();
    Ok(Step3Row {
        j,
        lambda_j,
        c_j,
        identity: lambda_j - 2.0 * c_j * c_j,
        coefficient_max,
        validity_ratio,
        lateral,
        initial,
        interior,
        aggregate,
        aggregate_bound,
        log2_slab_weight,
        slab_weight_ok: log2_slab_weight <= -(j as f64),
        max_principle: interior <= lateral.max(initial) * (1.0 + 1e-9),
    })
}

/// Least j ≥ 1 at which the Step-3 region is valid (H > n·c_j throughout).
pub fn step3_validity_threshold(cfg: &Step3Config, model: &BowlModel, j_max: usize) -> Result<Option<usize>> {
    for j in 1..=j_max {
        let h_top = 2f64.powf(j as f64 / 100.0) * cfg.lambda;
        let rho = model.radius_at_height(h_top)?;
        if model.mean_curvature(rho)? > cfg.n as f64 * step3_constants(j).1 {
            return Ok(Some(j));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_cosh_is_stable() {
        assert!((log_cosh(0.5) - 0.5f64.cosh().ln()).abs() < 1e-15);
        assert!((log_cosh(1e4) - (1e4 - LN2)).abs() < 1e-9);
    }

    #[test]
    fn only_lambda_survives_without_mu_and_phi() {
        let mut p = BarrierParams::new(4, 10, 10.0, 0.5).unwrap();
        p.mu = 0.0;
        p.phi_scale = 0.0;
        let s = CoefficientSample { h: 0.7, a_norm_sq: 0.3, dt_phi: 0.0, lap_phi: 0.0, grad_phi_sq: 0.0, grad_phi_dot_grad_h: 0.0 };
        let r = barrier_coefficient(&[s], &p).unwrap();
        assert_eq!(r.max, p.lambda);
        assert!(!r.negative);
    }

    #[test]
    fn small_h_is_a_validity_error() {
        let p = BarrierParams::new(4, 10, 10.0, 0.5).unwrap();
        let s = CoefficientSample { h: p.mu, a_norm_sq: 0.3, dt_phi: 0.0, lap_phi: 0.0, grad_phi_sq: 0.0, grad_phi_dot_grad_h: 0.0 };
        assert!(matches!(barrier_coefficient(&[s], &p), Err(Error::RegionValidity(_))));
    }

    #[test]
    fn step3_identity() {
        for j in 1..200 {
            let (l, c) = step3_constants(j);
            let v = l - 2.0 * c * c;
            assert!(v < 0.0);
            assert!((v + 2f64.powf(-(j as f64) / 50.0)).abs() < 1e-15);
        }
    }
}
