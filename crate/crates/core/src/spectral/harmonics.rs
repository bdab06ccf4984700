//! Eigenfunctions of the Laplacian on S^{n−2} for n ∈ {3, 4}: Fourier modes
//! on S¹ and real spherical harmonics on S².

use crate::error::{Error, Result};
use crate::linalg::binomial;
use crate::sphere::{sphere_area, PolarRule, SphereGrid};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// λ_l = l(l+n−3).
pub fn eigenvalue(n: usize, l: usize) -> f64 {
    (l * (l + n - 3)) as f64
}

/// N_l = C(n+l−2, n−2) − C(n+l−4, n−2).
pub fn multiplicity(n: usize, l: usize) -> usize {
    let (n, l) = (n as i64, l as i64);
    (binomial(n + l - 2, n - 2) - binomial(n + l - 4, n - 2)).round() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereLevel {
    pub l: usize,
    pub eigenvalue: f64,
    pub multiplicity: usize,
}

/// Eigenvalues and multiplicities for any n ≥ 3.
pub fn sphere_levels(n: usize, l_max: usize) -> Result<Vec<SphereLevel>> {
    if n < 3 {
        return Err(Error::Domain(format!("need n ≥ 3, got {n}")));
    }
    Ok((0..=l_max)
        .map(|l| SphereLevel { l, eigenvalue: eigenvalue(n, l), multiplicity: multiplicity(n, l) })
        .collect())
}

/// Orthonormal eigenbasis tabulated on a quadrature grid of S^{n−2}.
///
/// Mode order within a level: cos-type m = 1..l, sin-type m = 1..l, then
/// m = 0. On S² this puts the level-one modes in the order (x, y, z), so
/// mode i (1 ≤ i ≤ n−1) is proportional to the coordinate Θ_i.
#[derive(Debug, Clone)]
pub struct SphereSpectrum {
    pub n: usize,
    pub l_max: usize,
    pub levels: Vec<SphereLevel>,
    pub grid: SphereGrid,
    /// Level of each mode.
    pub mode_level: Vec<usize>,
    /// values[mode][point].
    pub values: Vec<Vec<f64>>,
    /// gradients[mode][point]: tangent gradient in ℝ^{n−1}.
    pub gradients: Vec<Vec<Vec<f64>>>,
}

impl SphereSpectrum {
    /// Spectrum on a default grid that integrates products of modes exactly.
    pub fn new(n: usize, l_max: usize) -> Result<Self> {
        let grid = match n {
            3 => SphereGrid::new(1, 1, (2 * l_max + 4).max(8), PolarRule::Midpoint),
            4 => SphereGrid::new(2, l_max + 2, (2 * l_max + 4).max(8), PolarRule::GaussLegendre),
            _ => return Err(Error::Capability(format!("tabulated harmonics need n ∈ {{3,4}}, got {n}"))),
        };
        Self::with_grid(n, l_max, grid)
    }

    pub fn with_grid(n: usize, l_max: usize, grid: SphereGrid) -> Result<Self> {
        if n != 3 && n != 4 {
            return Err(Error::Capability(format!("tabulated harmonics need n ∈ {{3,4}}, got {n}")));
        }
        if grid.k != n - 2 {
            return Err(Error::Domain(format!("grid is on S^{} but n = {n} needs S^{}", grid.k, n - 2)));
        }
        let az = grid.azimuth.len();
        if az <= 2 * l_max || (n == 4 && grid.polar.len() < l_max + 1) {
            return Err(Error::Resolution(format!(
                "grid ({} polar × {az} azimuth) aliases degree-{l_max} products",
                grid.polar.len()
            )));
        }
        let levels = sphere_levels(n, l_max)?;
        let mut mode_level = Vec::new();
        for lv in &levels {
            mode_level.extend(std::iter::repeat(lv.l).take(lv.multiplicity));
        }
        let nm = mode_level.len();
        let mut values = vec![vec![0.0; grid.len()]; nm];
        let mut gradients = vec![vec![Vec::new(); grid.len()]; nm];
        for (p, pt) in grid.points.iter().enumerate() {
            let (vals, grads) = if n == 3 { fourier_at(pt, l_max) } else { harmonics_at(pt, l_max) };
            for m in 0..nm {
                values[m][p] = vals[m];
                gradients[m][p] = grads[m].clone();
            }
        }
        Ok(Self { n, l_max, levels, grid, mode_level, values, gradients })
    }

    pub fn num_modes(&self) -> usize {
        self.mode_level.len()
    }

    pub fn mode_eigenvalue(&self, m: usize) -> f64 {
        eigenvalue(self.n, self.mode_level[m])
    }

    /// First mode index of level l.
    pub fn level_start(&self, l: usize) -> usize {
        self.mode_level.iter().position(|&x| x == l).unwrap_or(self.num_modes())
    }

    /// Discrete Gram matrix Σ_p w_p Y_a(p) Y_b(p).
    pub fn gram(&self) -> DMatrix<f64> {
        let nm = self.num_modes();
        DMatrix::from_fn(nm, nm, |a, b| {
            self.grid.weights.iter().enumerate().map(|(p, w)| w * self.values[a][p] * self.values[b][p]).sum()
        })
    }

    /// Coefficients ⟨f, Y_m⟩ by quadrature.
    pub fn transform(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.grid.len() {
            return Err(Error::Domain(format!("expected {} values, got {}", self.grid.len(), f.len())));
        }
        Ok(self
            .values
            .iter()
            .map(|y| y.iter().zip(f).zip(&self.grid.weights).map(|((a, b), w)| a * b * w).sum())
            .collect())
    }

    /// Values Σ_m c_m Y_m at the grid points.
    pub fn inverse(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (cm, y) in c.iter().zip(&self.values) {
            if *cm != 0.0 {
                out.iter_mut().zip(y).for_each(|(o, v)| *o += cm * v);
            }
        }
        out
    }

    /// Tangent gradients of Σ_m c_m Y_m at the grid points.
    pub fn gradient(&self, c: &[f64]) -> Vec<Vec<f64>> {
        let dim = self.n - 1;
        let mut out = vec![vec![0.0; dim]; self.grid.len()];
        for (cm, g) in c.iter().zip(&self.gradients) {
            if *cm != 0.0 {
                for (o, gp) in out.iter_mut().zip(g) {
                    for d in 0..dim {
                        o[d] += cm * gp[d];
                    }
                }
            }
        }
        out
    }

    /// Values of the sphere Laplacian of Σ_m c_m Y_m.
    pub fn laplacian(&self, c: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = c.iter().enumerate().map(|(m, v)| -self.mode_eigenvalue(m) * v).collect();
        self.inverse(&scaled)
    }

    /// L² norm of the coordinate function Θ_i, √(|S^{n−2}|/(n−1)).
    pub fn coordinate_norm(&self) -> f64 {
        (sphere_area(self.n - 2) / (self.n - 1) as f64).sqrt()
    }
}

fn fourier_at(pt: &[f64], l_max: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let phi = pt[1].atan2(pt[0]);
    let e_phi = [-phi.sin(), phi.cos()];
    let mut vals = vec![1.0 / (2.0 * PI).sqrt()];
    let mut grads = vec![vec![0.0, 0.0]];
    let c = 1.0 / PI.sqrt();
    for l in 1..=l_max {
        let lf = l as f64;
        let (s, co) = (lf * phi).sin_cos();
        vals.push(c * co);
        grads.push(vec![-c * lf * s * e_phi[0], -c * lf * s * e_phi[1]]);
        vals.push(c * s);
        grads.push(vec![c * lf * co * e_phi[0], c * lf * co * e_phi[1]]);
    }
    (vals, grads)
}

/// Associated Legendre P_l^m(x) without the Condon–Shortley phase,
/// indexed [l][m].
fn legendre_table(x: f64, l_max: usize) -> Vec<Vec<f64>> {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut p = vec![vec![0.0; l_max + 1]; l_max + 1];
    let mut pmm = 1.0;
    for m in 0..=l_max {
        if m > 0 {
            pmm *= (2 * m - 1) as f64 * s;
        }
        p[m][m] = pmm;
        if m < l_max {
            p[m + 1][m] = x * (2 * m + 1) as f64 * pmm;
        }
        for l in m + 2..=l_max {
            p[l][m] = ((2 * l - 1) as f64 * x * p[l - 1][m] - (l + m - 1) as f64 * p[l - 2][m]) / (l - m) as f64;
        }
    }
    p
}

fn factorial_ratio(l: usize, m: usize) -> f64 {
    // (l−m)!/(l+m)!
    let mut r = 1.0;
    for k in (l - m + 1)..=(l + m) {
        r /= k as f64;
    }
    r
}

fn harmonics_at(pt: &[f64], l_max: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let x = pt[2].clamp(-1.0, 1.0);
    let theta = x.acos();
    let phi = pt[1].atan2(pt[0]);
    let s = theta.sin();
    let (sp, cp) = phi.sin_cos();
    let e_theta = [x * cp, x * sp, -s];
    let e_phi = [-sp, cp, 0.0];
    let p = legendre_table(x, l_max);
    let mut vals = Vec::new();
    let mut grads = Vec::new();
    let grad = |d_theta: f64, d_phi: f64| -> Vec<f64> {
        let inv = if s > 0.0 { d_phi / s } else { 0.0 };
        (0..3).map(|k| d_theta * e_theta[k] + inv * e_phi[k]).collect()
    };
    for l in 0..=l_max {
        let lf = l as f64;
        let dp = |m: usize| -> f64 {
            let prev = if l >= 1 && l - 1 >= m { p[l - 1][m] } else { 0.0 };
            if s > 0.0 {
                (lf * x * p[l][m] - (l + m) as f64 * prev) / s
            } else {
                0.0
            }
        };
        let norm = |m: usize| ((2.0 * lf + 1.0) / (4.0 * PI) * factorial_ratio(l, m)).sqrt();
        let mut cos_part = Vec::new();
        let mut sin_part = Vec::new();
        for m in 1..=l {
            let c = 2f64.sqrt() * norm(m);
            let mf = m as f64;
            let (sm, cm) = (mf * phi).sin_cos();
            cos_part.push((c * p[l][m] * cm, grad(c * dp(m) * cm, -c * mf * p[l][m] * sm)));
            sin_part.push((c * p[l][m] * sm, grad(c * dp(m) * sm, c * mf * p[l][m] * cm)));
        }
        for (v, g) in cos_part.into_iter().chain(sin_part) {
            vals.push(v);
            grads.push(g);
        }
        let c0 = norm(0);
        vals.push(c0 * p[l][0]);
        grads.push(grad(c0 * dp(0), 0.0));
    }
    (vals, grads)
}
