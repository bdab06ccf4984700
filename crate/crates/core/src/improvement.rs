//! Retuning a rotation field set from the level-one content of a radial
//! graph, and the desk-scale defect-improvement experiment.

use crate::error::{Error, Result};
use crate::geometry::cylinder_radius;
use crate::rotation::{symmetry_defect, RotationFieldSet, SymmetryReport};
use crate::spectral::{eigenvalue, evolve_mode, project_field, EvolutionPath, EvolveOptions, ModeRecord, RadialGraph, SphereSpectrum, ZGrid};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// z-positions at which F_i is read: (0,0), (1,0), (−1,0), (0,1), (0,−1).
pub const STENCIL: [(f64, f64); 5] = [(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)];

/// Translation b and infinitesimal rotation P read off a radial graph.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningData {
    pub n: usize,
    /// `stencil[i]` holds F_{i+1} at the five stencil points, for sphere
    /// coordinate i.
    pub stencil: Vec<[f64; 5]>,
    pub coordinate_norm: f64,
    pub b: DVector<f64>,
    pub p: DMatrix<f64>,
}

impl TuningData {
    /// b_i = F_i(0,0)/‖Θ_i‖, P_{n−1,i} = −(F_i(1,0) − F_i(−1,0))/(2‖Θ_i‖) and
    /// P_{n,i} likewise in z₂; P is antisymmetric. Indices are 0-based with
    /// the flat directions at n−1 and n.
    pub fn from_stencil(n: usize, stencil: Vec<[f64; 5]>, coordinate_norm: f64) -> Result<Self> {
        if stencil.len() != n - 1 {
            return Err(Error::Domain(format!("need {} stencil rows, got {}", n - 1, stencil.len())));
        }
        let dim = n + 1;
        let mut b = DVector::zeros(dim);
        let mut p = DMatrix::zeros(dim, dim);
        for (i, f) in stencil.iter().enumerate() {
            b[i] = f[0] / coordinate_norm;
            let d1 = -(f[1] - f[2]) / (2.0 * coordinate_norm);
            let d2 = -(f[3] - f[4]) / (2.0 * coordinate_norm);
            p[(n - 1, i)] = d1;
            p[(i, n - 1)] = -d1;
            p[(n, i)] = d2;
            p[(i, n)] = -d2;
        }
        Ok(Self { n, stencil, coordinate_norm, b, p })
    }

    pub fn from_graph(graph: &RadialGraph, spec: &SphereSpectrum) -> Result<Self> {
        let n = graph.n;
        let stencil = (1..n)
            .map(|mode| {
                let mut row = [0.0; 5];
                for (k, &(z1, z2)) in STENCIL.iter().enumerate() {
                    row[k] = graph.f_coefficient(mode, z1, z2);
                }
                row
            })
            .collect();
        Self::from_stencil(n, stencil, spec.coordinate_norm())
    }

    /// S = exp(P).
    pub fn rotation(&self) -> DMatrix<f64> {
        self.p.clone().exp()
    }

    /// Largest entry of P outside the (sphere, flat) pairing plus the
    /// largest entry of b outside the sphere block.
    pub fn support_violation(&self) -> f64 {
        let n = self.n;
        let mut m = 0.0f64;
        for r in 0..=n {
            for c in 0..=n {
                let sphere_flat = (r < n - 1) != (c < n - 1);
                if !sphere_flat {
                    m = m.max(self.p[(r, c)].abs());
                }
            }
        }
        for c in n - 1..=n {
            m = m.max(self.b[c].abs());
        }
        m
    }
}

/// K̃_α = S·(S₀J_αS₀ᵀ)·Sᵀ(x − q₀ − b) with S = exp(P), then gauge-projected.
pub fn retune_with(fields: &RotationFieldSet, tuning: &TuningData) -> Result<RotationFieldSet> {
    if tuning.n != fields.n() {
        return Err(Error::Domain("tuning data and field set disagree on n".into()));
    }
    let s = tuning.rotation() * &fields.s;
    Ok(RotationFieldSet::new(s, &fields.q + &tuning.b, fields.basis.clone()))
}

pub fn retune_fields(fields: &RotationFieldSet, graph: &RadialGraph, spec: &SphereSpectrum) -> Result<(RotationFieldSet, TuningData)> {
    let tuning = TuningData::from_graph(graph, spec)?;
    Ok((retune_with(fields, &tuning)?, tuning))
}

/// ⟨K_α, ν⟩ at every node and sphere point of the graph, indexed
/// `[α][i][j][point]`.
pub fn normal_components(fields: &RotationFieldSet, graph: &RadialGraph, spec: &SphereSpectrum) -> Vec<Vec<Vec<Vec<f64>>>> {
    let set = graph.node_samples(spec);
    let s = graph.grid.size();
    let np = spec.grid.len();
    (0..fields.basis.len())
        .map(|a| {
            (0..s)
                .map(|i| {
                    (0..s)
                        .map(|j| {
                            (0..np)
                                .map(|p| {
                                    let smp = &set.samples[(i * s + j) * np + p];
                                    fields.field(a, &smp.x).dot(&smp.normal)
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Per-α affine fits ⟨u_α, Y_i⟩(z) ≈ A_{α,i} + B_{α,i}z₁ + C_{α,i}z₂ for the
/// level-one modes i = 1..n−1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AffineCoeffs {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    /// Largest pointwise misfit over the nodes used.
    pub residual: f64,
}

/// `values[α][i][j]` holds u_α on the sphere grid at node (z_i, z_j); only
/// nodes with max-norm ≤ `radius` enter the fit.
pub fn extract_linear_coeffs(spec: &SphereSpectrum, grid: &ZGrid, values: &[Vec<Vec<Vec<f64>>>], radius: f64) -> Result<AffineCoeffs> {
    let n = spec.n;
    let nodes = grid.nodes_within(radius);
    let mut normal = Matrix3::zeros();
    for &(i, j) in &nodes {
        let v = Vector3::new(1.0, grid.node(i), grid.node(j));
        normal += v * v.transpose();
    }
    let eig = normal.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(hi > 0.0) || lo <= 1e-12 * hi {
        return Err(Error::Fit(format!("affine fit is rank deficient over {} nodes", nodes.len())));
    }
    let inv = normal.try_inverse().ok_or_else(|| Error::Fit("singular normal matrix".into()))?;
    let mut out = AffineCoeffs { a: Vec::new(), b: Vec::new(), c: Vec::new(), residual: 0.0 };
    for per_alpha in values {
        let modes = project_field(spec, grid, per_alpha)?;
        let (mut ra, mut rb, mut rc) = (Vec::new(), Vec::new(), Vec::new());
        for m in &modes[1..n] {
            let mut rhs = Vector3::zeros();
            for &(i, j) in &nodes {
                rhs += Vector3::new(1.0, grid.node(i), grid.node(j)) * m[(i, j)];
            }
            let sol = inv * rhs;
            for &(i, j) in &nodes {
                let fit = sol[0] + sol[1] * grid.node(i) + sol[2] * grid.node(j);
                out.residual = out.residual.max((fit - m[(i, j)]).abs());
            }
            ra.push(sol[0]);
            rb.push(sol[1]);
            rc.push(sol[2]);
        }
        out.a.push(ra);
        out.b.push(rb);
        out.c.push(rc);
    }
    Ok(out)
}

/// Exact radius of the cylinder of radius ρ translated by δ along sphere
/// coordinate 0.
pub fn translated_cylinder_radius(rho: f64, delta: f64, theta0: f64) -> f64 {
    delta * theta0 + (rho * rho - delta * delta * (1.0 - theta0 * theta0)).sqrt()
}

/// Exact radius of the cylinder of radius ρ whose first flat axis is tilted
/// by `angle` towards sphere coordinate 0.
pub fn tilted_cylinder_radius(rho: f64, angle: f64, theta0: f64, z1: f64) -> f64 {
    let (s, c) = angle.sin_cos();
    let a = 1.0 - theta0 * theta0 * s * s;
    let b = -2.0 * theta0 * s * c * z1;
    let cc = z1 * z1 * s * s - rho * rho;
    (-b + (b * b - 4.0 * a * cc).sqrt()) / (2.0 * a)
}

/// Mode content of an improvement perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PerturbationKind {
    /// Level one along sphere coordinate 0 with profile 1 + (z₁ + z₂)/R on
    /// Ω_R: a translation plus a tilt, constant in time.
    Level1,
    /// First level-two harmonic with envelope data (−t)^{1/2} on the
    /// initial slab and the lateral boundary.
    Level2,
}

impl PerturbationKind {
    pub fn level(self) -> usize {
        match self {
            PerturbationKind::Level1 => 1,
            PerturbationKind::Level2 => 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImprovementConfig {
    pub n: usize,
    pub l_max: usize,
    pub interior: usize,
    pub step_ratio: f64,
    /// After-defect region: |z|_∞ ≤ eval_radius, t ∈ [−1 − eval_depth, −1].
    pub eval_radius: f64,
    pub eval_depth: f64,
    /// Points per axis of the after-defect z lattice.
    pub eval_points: usize,
    /// Time slices per region used for the sup.
    pub eval_times: usize,
    pub normalization_times: usize,
    /// Relative tolerance of the amplitude bisection.
    pub amplitude_tol: f64,
}

impl Default for ImprovementConfig {
    fn default() -> Self {
        Self {
            n: 4,
            l_max: 4,
            interior: 63,
            step_ratio: 0.05,
            eval_radius: 8.0,
            eval_depth: 64.0,
            eval_points: 17,
            eval_times: 9,
            normalization_times: 12,
            amplitude_tol: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImprovementResult {
    pub l0: f64,
    pub level: usize,
    pub eps: f64,
    pub amplitude: f64,
    /// Measured defect over the simulated region after normalization.
    pub defect_before: f64,
    pub defect_after: f64,
    /// defect_after / defect_before; undefined when ε = 0.
    pub factor: Option<f64>,
    pub b_norm: f64,
    pub p_norm: f64,
    /// sup |K̃_α|·H over the after-defect region.
    pub magnitude_after: f64,
}

fn geometric_times(from: f64, to: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count)
        .map(|k| {
            if k == 0 {
                from
            } else if k == count - 1 {
                to
            } else {
                -((-from).ln() + ((-to).ln() - (-from).ln()) * k as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

/// Unit-amplitude evolution of a perturbation on Ω_{L₀/4}×[−L₀²/16, −1].
struct Evolved {
    mode: usize,
    record: ModeRecord,
}

impl Evolved {
    fn run(kind: PerturbationKind, l0: f64, spec: &SphereSpectrum, cfg: &ImprovementConfig, record: Vec<f64>) -> Result<Self> {
        let n = cfg.n;
        let half = l0 / 4.0;
        let grid = ZGrid::new(half, cfg.interior)?;
        let t0 = -l0 * l0 / 16.0;
        let opts = EvolveOptions { step_ratio: cfg.step_ratio, record, path: EvolutionPath::Direct, ..Default::default() };
        let mode = spec.level_start(kind.level());
        let lambda = eigenvalue(n, kind.level());
        let record = match kind {
            PerturbationKind::Level1 => {
                let data = |z1: f64, z2: f64, _: f64| 1.0 + (z1 + z2) / half;
                evolve_mode(n, lambda, grid, &grid.tabulate(|a, b| data(a, b, t0)), t0, -1.0, &data, &opts)?
            }
            PerturbationKind::Level2 => {
                let data = |_: f64, _: f64, t: f64| (-t).sqrt();
                evolve_mode(n, lambda, grid, &grid.tabulate(|a, b| data(a, b, t0)), t0, -1.0, &data, &opts)?
            }
        };
        Ok(Self { mode, record })
    }

    fn graph(&self, spec: &SphereSpectrum, k: usize, amplitude: f64) -> Result<RadialGraph> {
        let t = self.record.times[k];
        let s = self.record.grid.size();
        let mut w = vec![DMatrix::zeros(s, s); spec.num_modes()];
        w[self.mode] = &self.record.values[k] * amplitude;
        RadialGraph::perturbed_cylinder(spec, self.record.grid, t, cylinder_radius(spec.n, t), &w)
    }

    fn index_of(&self, t: f64) -> Result<usize> {
        self.record
            .times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
            .ok_or_else(|| Error::Domain(format!("time {t} was not recorded")))
    }

    /// Sup over all nodes at the given recorded times.
    fn defect_over_domain(&self, spec: &SphereSpectrum, fields: &RotationFieldSet, times: &[f64], amplitude: f64) -> Result<SymmetryReport> {
        let mut worst = SymmetryReport { defect: 0.0, magnitude: 0.0, samples: 0 };
        for &t in times {
            let g = self.graph(spec, self.index_of(t)?, amplitude)?;
            let r = symmetry_defect(fields, &g.node_samples(spec));
            worst = merge(worst, r);
        }
        Ok(worst)
    }

    fn defect_on_lattice(&self, spec: &SphereSpectrum, fields: &RotationFieldSet, times: &[f64], zs: &[(f64, f64)], amplitude: f64) -> Result<SymmetryReport> {
        let mut worst = SymmetryReport { defect: 0.0, magnitude: 0.0, samples: 0 };
        for &t in times {
            let g = self.graph(spec, self.index_of(t)?, amplitude)?;
            worst = merge(worst, symmetry_defect(fields, &g.samples(spec, zs)));
        }
        Ok(worst)
    }
}

fn merge(a: SymmetryReport, b: SymmetryReport) -> SymmetryReport {
    SymmetryReport { defect: a.defect.max(b.defect), magnitude: a.magnitude.max(b.magnitude), samples: a.samples + b.samples }
}

/// Amplitude at which `defect(amplitude)` equals ε within the relative
/// tolerance: a linear estimate, then bisection on [0.5, 2]× that estimate.
pub fn normalize_amplitude<F: Fn(f64) -> Result<f64>>(defect: F, eps: f64, rel_tol: f64) -> Result<(f64, f64)> {
    let probe = eps;
    let d = defect(probe)?;
    if !(d > 0.0) {
        return Err(Error::Precondition("perturbation produces no defect".into()));
    }
    let est = probe * eps / d;
    let de = defect(est)?;
    if (de / eps - 1.0).abs() <= rel_tol {
        return Ok((est, de));
    }
    let (mut lo, mut hi) = (0.5 * est, 2.0 * est);
    for _ in 0..20 {
        if defect(lo)? < eps {
            break;
        }
        lo *= 0.5;
    }
    for _ in 0..20 {
        if defect(hi)? > eps {
            break;
        }
        hi *= 2.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let dm = defect(mid)?;
        if (dm / eps - 1.0).abs() <= rel_tol {
            return Ok((mid, dm));
        }
        if dm < eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Precision { estimate: lo, tolerance: rel_tol })
}

/// Normalize a perturbation to defect ε over the simulated region, retune
/// at t = −1 from the stencil values, and measure the retuned defect over
/// the after-defect region.
pub fn improvement_experiment(l0: f64, eps: f64, kind: PerturbationKind, cfg: &ImprovementConfig) -> Result<ImprovementResult> {
    let n = cfg.n;
    if !(l0 > 4.0) {
        return Err(Error::Domain(format!("L0 must exceed 4, got {l0}")));
    }
    if eps < 0.0 {
        return Err(Error::Domain(format!("ε must be nonnegative, got {eps}")));
    }
    let spec = SphereSpectrum::new(n, cfg.l_max.max(kind.level()))?;
    let t0 = -l0 * l0 / 16.0;
    let norm_times = geometric_times(t0, -1.0, cfg.normalization_times);
    let eval_times = geometric_times(-1.0 - cfg.eval_depth, -1.0, cfg.eval_times);
    let record: Vec<f64> = norm_times.iter().chain(eval_times.iter()).copied().collect();
    let standard = RotationFieldSet::standard(n)?;
    let zs: Vec<(f64, f64)> = {
        let m = cfg.eval_points.max(2);
        let h = 2.0 * cfg.eval_radius / (m - 1) as f64;
        (0..m).flat_map(|i| (0..m).map(move |j| (-cfg.eval_radius + h * i as f64, -cfg.eval_radius + h * j as f64))).collect()
    };
    if eps == 0.0 {
        return Ok(ImprovementResult {
            l0,
            level: kind.level(),
            eps,
            amplitude: 0.0,
            defect_before: 0.0,
            defect_after: 0.0,
            factor: None,
            b_norm: 0.0,
            p_norm: 0.0,
            magnitude_after: 0.0,
        });
    }
    let evolved = Evolved::run(kind, l0, &spec, cfg, record)?;
    let (amplitude, before) = normalize_amplitude(
        |a| Ok(evolved.defect_over_domain(&spec, &standard, &norm_times, a)?.defect),
        eps,
        cfg.amplitude_tol,
    )?;
    let final_graph = evolved.graph(&spec, evolved.index_of(-1.0)?, amplitude)?;
    let (tuned, tuning) = retune_fields(&standard, &final_graph, &spec)?;
    let after = evolved.defect_on_lattice(&spec, &tuned, &eval_times, &zs, amplitude)?;
    Ok(ImprovementResult {
        l0,
        level: kind.level(),
        eps,
        amplitude,
        defect_before: before,
        defect_after: after.defect,
        factor: Some(after.defect / before),
        b_norm: tuning.b.norm(),
        p_norm: tuning.p.norm(),
        magnitude_after: after.magnitude,
    })
}

pub fn improvement_sweep(l0s: &[f64], eps: f64, kinds: &[PerturbationKind], cfg: &ImprovementConfig) -> Result<Vec<ImprovementResult>> {
    let jobs: Vec<(PerturbationKind, f64)> = kinds.iter().flat_map(|&k| l0s.iter().map(move |&l| (k, l))).collect();
    jobs.par_iter().map(|&(k, l)| improvement_experiment(l, eps, k, cfg)).collect()
}
