//! Jacobi-field evolution on the shrinking cylinder by mode reduction, and
//! the per-mode decay measurements.

use super::harmonics::{eigenvalue, multiplicity, SphereSpectrum};
use super::heat::{envelope_exponent, evolve_mode, EvolutionPath, EvolveOptions, ModeRecord, ZGrid};
use crate::error::{Error, Result};
use crate::linalg::fit_power_law;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Project sphere values at every z-node onto the modes:
/// `values[i][j]` holds u(·, z_i, z_j) on the sphere grid.
pub fn project_field(spec: &SphereSpectrum, grid: &ZGrid, values: &[Vec<Vec<f64>>]) -> Result<Vec<DMatrix<f64>>> {
    let s = grid.size();
    let nm = spec.num_modes();
    let mut out = vec![DMatrix::zeros(s, s); nm];
    for i in 0..s {
        for j in 0..s {
            let c = spec.transform(&values[i][j])?;
            for m in 0..nm {
                out[m][(i, j)] = c[m];
            }
        }
    }
    Ok(out)
}

/// Values on the sphere grid at node (i, j) from per-mode node matrices.
pub fn synthesize_at(spec: &SphereSpectrum, coeffs: &[DMatrix<f64>], i: usize, j: usize) -> Vec<f64> {
    let c: Vec<f64> = coeffs.iter().map(|m| m[(i, j)]).collect();
    spec.inverse(&c)
}

/// Solve ∂_t u = Δ_z u + Δ_S u/(−2(n−2)t) + u/(−2t) on S^{n−2}×Ω from t₀
/// to t₁ by evolving every mode independently.
///
/// `initial[m]` is the node matrix of mode m at t₀; `boundary(m, z₁, z₂, t)`
/// is the Dirichlet data of mode m.
pub fn evolve_jacobi_cylinder<B>(
    spec: &SphereSpectrum,
    grid: ZGrid,
    initial: &[DMatrix<f64>],
    t0: f64,
    t1: f64,
    boundary: &B,
    opts: &EvolveOptions,
) -> Result<Vec<ModeRecord>>
where
    B: Fn(usize, f64, f64, f64) -> f64 + Sync,
{
    if initial.len() != spec.num_modes() {
        return Err(Error::Domain(format!("expected {} modes, got {}", spec.num_modes(), initial.len())));
    }
    (0..spec.num_modes())
        .into_par_iter()
        .map(|m| {
            let bd = |z1: f64, z2: f64, t: f64| boundary(m, z1, z2, t);
            evolve_mode(spec.n, spec.mode_eigenvalue(m), grid, &initial[m], t0, t1, &bd, opts)
        })
        .collect()
}

/// Decay of one level from envelope data, swept over the start time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayExponentReport {
    pub n: usize,
    pub l: usize,
    pub start_times: Vec<f64>,
    /// v(−1) at the centre for each start time.
    pub final_values: Vec<f64>,
    pub fitted_exponent: f64,
    pub expected_exponent: f64,
}

/// Start from v = ε(−t₀)^{1/2} (constant in z, the size allowed by a
/// defect bound ε) with the same envelope on ∂Ω, evolve to t = −1 and fit
/// v(0, −1) against −t₀. The expected exponent is 1 − λ/(2(n−2)).
pub fn decay_exponent_sweep(
    n: usize,
    l: usize,
    start_times: &[f64],
    eps: f64,
    grid: ZGrid,
    step_ratio: f64,
) -> Result<DecayExponentReport> {
    if start_times.len() < 2 {
        return Err(Error::Fit("need at least two start times".into()));
    }
    let lambda = eigenvalue(n, l);
    let finals = start_times
        .par_iter()
        .map(|&t0| {
            let env = |_: f64, _: f64, t: f64| eps * (-t).sqrt();
            let init = DMatrix::from_element(grid.size(), grid.size(), env(0.0, 0.0, t0));
            let opts = EvolveOptions { step_ratio, path: EvolutionPath::Direct, ..Default::default() };
            let rec = evolve_mode(n, lambda, grid, &init, t0, -1.0, &env, &opts)?;
            Ok(rec.center_value(rec.times.len() - 1))
        })
        .collect::<Result<Vec<f64>>>()?;
    let x: Vec<f64> = start_times.iter().map(|t| -t).collect();
    let (p, _) = fit_power_law(&x, &finals);
    Ok(DecayExponentReport {
        n,
        l,
        start_times: start_times.to_vec(),
        final_values: finals,
        fitted_exponent: p,
        expected_exponent: envelope_exponent(n, lambda),
    })
}

/// Configuration of the aggregate decay experiment over levels m ≥ n.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayConfig {
    pub n: usize,
    /// Highest level included in the aggregate.
    pub l_max: usize,
    pub eps: f64,
    pub eps0: f64,
    /// Interior nodes per axis of Ω_{L₀/4}.
    pub interior: usize,
    pub step_ratio: f64,
    /// Half-width of the evaluation square.
    pub eval_radius: f64,
    /// Evaluation time window.
    pub eval_window: (f64, f64),
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self { n: 4, l_max: 8, eps: 1.0, eps0: 0.0, interior: 63, step_ratio: 0.05, eval_radius: 4.0, eval_window: (-16.0, -1.0) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSup {
    pub l: usize,
    pub multiplicity: usize,
    pub sup: f64,
    /// sup / (L₀/4)^{2−λ/(n−2)}.
    pub envelope_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayRow {
    pub l0: f64,
    pub levels: Vec<LevelSup>,
    /// Σ_{l≥2} N_l·sup_l (every mode of a level evolves identically).
    pub aggregate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecaySweepReport {
    pub config: DecayConfig,
    pub rows: Vec<DecayRow>,
    pub fitted_power: f64,
}

/// Per-level sups for one L₀: v̂ solves the heat equation on Ω_{L₀/4} over
/// [−L₀²/16, −1] with initial and lateral data equal to the decay envelope
/// ε(1+ε₀)(−t)^{1−λ/(2(n−2))}.
pub fn mode_decay_bound(l0: f64, cfg: &DecayConfig) -> Result<DecayRow> {
    let n = cfg.n;
    let w = l0 / 4.0;
    let grid = ZGrid::new(w, cfg.interior)?;
    let t0 = -w * w;
    let record: Vec<f64> = {
        let mut r = Vec::new();
        let mut t = cfg.eval_window.0;
        while t < cfg.eval_window.1 {
            r.push(t);
            t *= 0.5;
        }
        r
    };
    let levels = (2..=cfg.l_max)
        .into_par_iter()
        .map(|l| {
            let lambda = eigenvalue(n, l);
            let e = envelope_exponent(n, lambda);
            let a = super::heat::gauge_exponent(n, lambda);
            let amp = cfg.eps * (1.0 + cfg.eps0);
            // Envelope for v̂, expressed as data for v.
            let bd = move |_: f64, _: f64, t: f64| amp * (-t).powf(e) / (-t).powf(a);
            let init = DMatrix::from_element(grid.size(), grid.size(), bd(0.0, 0.0, t0));
            let opts = EvolveOptions { step_ratio: cfg.step_ratio, record: record.clone(), path: EvolutionPath::Gauged, ..Default::default() };
            let rec = evolve_mode(n, lambda, grid, &init, t0, -1.0, &bd, &opts)?;
            let sup = rec.sup_over(cfg.eval_radius, cfg.eval_window);
            let envelope = w.powf(2.0 - lambda / (n - 2) as f64);
            Ok(LevelSup { l, multiplicity: multiplicity(n, l), sup, envelope_ratio: sup / envelope })
        })
        .collect::<Result<Vec<_>>>()?;
    let aggregate = levels.iter().map(|s| s.multiplicity as f64 * s.sup).sum();
    Ok(DecayRow { l0, levels, aggregate })
}

/// Sweep L₀ and fit the aggregate's power of L₀.
pub fn mode_decay_sweep(l0s: &[f64], cfg: &DecayConfig) -> Result<DecaySweepReport> {
    let mut distinct = l0s.to_vec();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Fit("an L0 sweep needs at least two distinct values".into()));
    }
    let rows = l0s.iter().map(|&l0| mode_decay_bound(l0, cfg)).collect::<Result<Vec<_>>>()?;
    let agg: Vec<f64> = rows.iter().map(|r| r.aggregate).collect();
    let fitted_power = if agg.iter().all(|a| *a > 0.0) { fit_power_law(l0s, &agg).0 } else { f64::NEG_INFINITY };
    Ok(DecaySweepReport { config: cfg.clone(), rows, fitted_power })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AffineReport {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// sup |v − (A + B z₁ + C z₂)| over the region.
    pub residual: f64,
    /// sup of the discrete second differences ∂²v/∂z_i∂z_j.
    pub second_difference: f64,
}

/// Least-squares affine fit of a mode record over {max|z_i| ≤ radius} ×
/// window, with the sup of discrete second differences there.
pub fn affine_extract(rec: &ModeRecord, radius: f64, window: (f64, f64)) -> Result<AffineReport> {
    let g = rec.grid;
    let nodes = g.nodes_within(radius);
    let in_window: Vec<usize> =
        (0..rec.times.len()).filter(|&k| rec.times[k] >= window.0 - 1e-12 && rec.times[k] <= window.1 + 1e-12).collect();
    if nodes.is_empty() || in_window.is_empty() {
        return Err(Error::Range("empty evaluation region".into()));
    }
    let rows = nodes.len() * in_window.len();
    let mut design = DMatrix::zeros(rows, 3);
    let mut rhs = DVector::zeros(rows);
    let mut r = 0;
    for &k in &in_window {
        for &(i, j) in &nodes {
            design[(r, 0)] = 1.0;
            design[(r, 1)] = g.node(i);
            design[(r, 2)] = g.node(j);
            rhs[r] = rec.values[k][(i, j)];
            r += 1;
        }
    }
    let svd = design.clone().svd(true, true);
    let coef = svd.solve(&rhs, 1e-12).map_err(|e| Error::Fit(e.to_string()))?;
    let residual = (&design * &coef - &rhs).amax();
    let h2 = g.spacing().powi(2);
    let last = g.interior + 1;
    let mut sd = 0.0f64;
    for &k in &in_window {
        let v = &rec.values[k];
        for &(i, j) in &nodes {
            if i == 0 || j == 0 || i == last || j == last {
                continue;
            }
            let d11 = (v[(i + 1, j)] - 2.0 * v[(i, j)] + v[(i - 1, j)]) / h2;
            let d22 = (v[(i, j + 1)] - 2.0 * v[(i, j)] + v[(i, j - 1)]) / h2;
            let d12 = (v[(i + 1, j + 1)] - v[(i + 1, j - 1)] - v[(i - 1, j + 1)] + v[(i - 1, j - 1)]) / (4.0 * h2);
            sd = sd.max(d11.abs()).max(d22.abs()).max(d12.abs());
        }
    }
    Ok(AffineReport { a: coef[0], b: coef[1], c: coef[2], residual, second_difference: sd })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelOneRow {
    pub l0: f64,
    pub report: AffineReport,
    /// residual·L₀/ε.
    pub constant: f64,
}

/// Level-one mode with affine data plus a noise envelope ε(−t)^{1/2} on
/// the parabolic boundary of Ω_{L₀/4}×[−L₀²/16, −1].
pub fn level_one_sweep(
    n: usize,
    l0s: &[f64],
    affine: (f64, f64, f64),
    eps: f64,
    interior: usize,
    step_ratio: f64,
) -> Result<Vec<LevelOneRow>> {
    let lambda = eigenvalue(n, 1);
    l0s.par_iter()
        .map(|&l0| {
            let w = l0 / 4.0;
            let grid = ZGrid::new(w, interior)?;
            let (a, b, c) = affine;
            let bd = move |z1: f64, z2: f64, t: f64| a + b * z1 + c * z2 + eps * (-t).sqrt();
            let t0 = -w * w;
            let init = grid.tabulate(|z1, z2| bd(z1, z2, t0));
            let record = vec![-16.0, -8.0, -4.0, -2.0];
            let opts = EvolveOptions { step_ratio, record, ..Default::default() };
            let rec = evolve_mode(n, lambda, grid, &init, t0, -1.0, &bd, &opts)?;
            let report = affine_extract(&rec, 4.0, (-16.0, -1.0))?;
            let constant = report.residual * l0 / eps;
            Ok(LevelOneRow { l0, report, constant })
        })
        .collect()
}
