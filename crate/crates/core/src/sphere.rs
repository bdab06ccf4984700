//! Point grids and quadrature weights on round spheres S^k ⊂ ℝ^{k+1}.
//!
//! Points use the recursive embedding x = (sin θ·x', cos θ) with x' ∈ S^{k−1}
//! and S¹ = (cos φ, sin φ), so on S² the last coordinate is cos θ.

use crate::quadrature::gauss_legendre;
use std::f64::consts::PI;

/// Rule used for the polar angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PolarRule {
    /// Gauss–Legendre nodes in cos θ (exact for polynomials on S²).
    GaussLegendre,
    /// Uniform midpoints in θ.
    Midpoint,
}

#[derive(Debug, Clone)]
pub struct SphereGrid {
    /// Intrinsic dimension k of S^k.
    pub k: usize,
    /// Points, each of length k+1.
    pub points: Vec<Vec<f64>>,
    /// Quadrature weights (sum to the area of the unit S^k).
    pub weights: Vec<f64>,
    /// Index-grid shape: polar angles (outermost first) then azimuth.
    pub shape: Vec<usize>,
    /// Polar angles θ per polar axis (same nodes on every polar axis).
    pub polar: Vec<f64>,
    /// Azimuthal angles.
    pub azimuth: Vec<f64>,
}

/// Area of the unit sphere S^k.
pub fn sphere_area(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_area(k - 2),
    }
}

impl SphereGrid {
    /// Grid with `polar` nodes on each polar axis and `azimuth` uniform nodes.
    pub fn new(k: usize, polar: usize, azimuth: usize, rule: PolarRule) -> Self {
        assert!(k >= 1 && azimuth >= 1);
        let az: Vec<f64> = (0..azimuth).map(|j| 2.0 * PI * j as f64 / azimuth as f64).collect();
        let (theta, theta_w): (Vec<f64>, Vec<f64>) = if k == 1 {
            (vec![], vec![])
        } else {
            match rule {
                PolarRule::GaussLegendre => {
                    // Descending cos θ so θ ascends.
                    let (x, w) = gauss_legendre(polar);
                    let t: Vec<f64> = x.iter().rev().map(|c| c.acos()).collect();
                    let w: Vec<f64> = w.iter().rev().copied().collect();
                    (t, w)
                }
                PolarRule::Midpoint => {
                    let dt = PI / polar as f64;
                    let t: Vec<f64> = (0..polar).map(|i| (i as f64 + 0.5) * dt).collect();
                    let w = t.iter().map(|th| th.sin() * dt).collect();
                    (t, w)
                }
            }
        };
        let npolar = k - 1;
        let mut shape = vec![theta.len(); npolar];
        shape.push(azimuth);
        let total: usize = shape.iter().product();
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..total {
            let phi = az[idx[npolar]];
            let mut p = vec![phi.cos(), phi.sin()];
            let mut w = 2.0 * PI / azimuth as f64;
            // Build inner-most sphere first: polar axis npolar-1 is S², etc.
            for a in (0..npolar).rev() {
                let th = theta[idx[a]];
                let s = th.sin();
                p.iter_mut().for_each(|c| *c *= s);
                p.push(th.cos());
                // dS^m = sin^{m-1}θ dθ dS^{m-1}; the base weight already
                // carries one power of sin θ (or its cos-θ equivalent).
                let m = k - a;
                w *= theta_w[idx[a]] * s.powi(m as i32 - 2);
            }
            points.push(p);
            weights.push(w);
            for d in (0..shape.len()).rev() {
                idx[d] += 1;
                if idx[d] < shape[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        if k >= 3 {
            // Non-polynomial Jacobians: normalize to the exact area.
            let s: f64 = weights.iter().sum();
            let target = sphere_area(k);
            weights.iter_mut().for_each(|w| *w *= target / s);
        }
        Self { k, points, weights, shape, polar: theta, azimuth: az }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Uniform-ish default grid at a resolution level (points per π).
    pub fn with_resolution(k: usize, res: usize) -> Self {
        let rule = if k == 2 { PolarRule::GaussLegendre } else { PolarRule::Midpoint };
        Self::new(k, res.max(1), (2 * res).max(3), rule)
    }
}
