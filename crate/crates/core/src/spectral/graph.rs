//! Radial graphs {(rΘ, z₁, z₂)} over S^{n−2}×Ω and the mode-zero
//! divergence identity.

use super::harmonics::SphereSpectrum;
use super::heat::ZGrid;
use crate::error::{Error, Result};
use crate::geometry::{ModelTag, SurfaceSample, SurfaceSampleSet};
use crate::rotation::RotationFieldSet;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Radius function r(Θ, z₁, z₂) stored as per-mode node matrices of its
/// spherical coefficients. Mode i (1 ≤ i ≤ n−1) carries
/// F_i(z) = ∫ r·Y_i dΘ.
#[derive(Debug, Clone)]
pub struct RadialGraph {
    pub n: usize,
    pub t: f64,
    pub grid: ZGrid,
    pub coeffs: Vec<DMatrix<f64>>,
}

impl RadialGraph {
    /// Tabulate r(Θ, z₁, z₂) and project onto the modes at each node.
    pub fn from_fn<F: Fn(&[f64], f64, f64) -> f64 + Sync>(spec: &SphereSpectrum, grid: ZGrid, t: f64, r: F) -> Result<Self> {
        let s = grid.size();
        let nm = spec.num_modes();
        let per_node: Vec<Vec<f64>> = (0..s * s)
            .into_par_iter()
            .map(|k| {
                let (z1, z2) = (grid.node(k / s), grid.node(k % s));
                let vals: Vec<f64> = spec.grid.points.iter().map(|p| r(p, z1, z2)).collect();
                spec.transform(&vals)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut coeffs = vec![DMatrix::zeros(s, s); nm];
        for (k, c) in per_node.iter().enumerate() {
            for m in 0..nm {
                coeffs[m][(k / s, k % s)] = c[m];
            }
        }
        let g = Self { n: spec.n, t, grid, coeffs };
        g.check_positive(spec)?;
        Ok(g)
    }

    /// Round cylinder of radius ρ plus a perturbation w given by its mode
    /// coefficients.
    pub fn perturbed_cylinder(spec: &SphereSpectrum, grid: ZGrid, t: f64, rho: f64, w: &[DMatrix<f64>]) -> Result<Self> {
        if w.len() != spec.num_modes() {
            return Err(Error::Domain("perturbation has the wrong number of modes".into()));
        }
        let mut coeffs = w.to_vec();
        let y0 = spec.values[0][0];
        coeffs[0] = coeffs[0].add_scalar(rho / y0);
        let g = Self { n: spec.n, t, grid, coeffs };
        g.check_positive(spec)?;
        Ok(g)
    }

    fn check_positive(&self, spec: &SphereSpectrum) -> Result<()> {
        let s = self.grid.size();
        for i in 0..s {
            for j in 0..s {
                let c: Vec<f64> = self.coeffs.iter().map(|m| m[(i, j)]).collect();
                if spec.inverse(&c).iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::Domain("radius function must stay positive".into()));
                }
            }
        }
        Ok(())
    }

    /// F_i at an arbitrary (z₁, z₂) (bilinear in the node values).
    pub fn f_coefficient(&self, i: usize, z1: f64, z2: f64) -> f64 {
        self.grid.interpolate(&self.coeffs[i], z1, z2).0
    }

    /// Coefficients with their z-derivatives and z-Laplacians at (z₁, z₂).
    fn local(&self, z1: f64, z2: f64, lap: &[DMatrix<f64>]) -> [Vec<f64>; 4] {
        let mut c = Vec::new();
        let mut d1 = Vec::new();
        let mut d2 = Vec::new();
        let mut lz = Vec::new();
        for (m, l) in self.coeffs.iter().zip(lap) {
            let (v, a, b) = self.grid.interpolate(m, z1, z2);
            c.push(v);
            d1.push(a);
            d2.push(b);
            lz.push(self.grid.interpolate(l, z1, z2).0);
        }
        [c, d1, d2, lz]
    }

    /// Surface samples over the given z positions at every sphere node.
    ///
    /// Normals are exact for the interpolated radius; mean curvature is the
    /// first-order expression (n−2)/r − Δ_S r/r² − Δ_z r, and the principal
    /// curvatures are split evenly over the sphere directions.
    pub fn samples(&self, spec: &SphereSpectrum, zs: &[(f64, f64)]) -> SurfaceSampleSet {
        let lap: Vec<DMatrix<f64>> = self.coeffs.iter().map(|m| self.grid.laplacian(m)).collect();
        let n = self.n;
        let k = (n - 2) as f64;
        let samples: Vec<SurfaceSample> = zs
            .par_iter()
            .flat_map_iter(|&(z1, z2)| {
                let [c, d1, d2, lz] = self.local(z1, z2, &lap);
                let r = spec.inverse(&c);
                let grad = spec.gradient(&c);
                let r1 = spec.inverse(&d1);
                let r2 = spec.inverse(&d2);
                let lap_s = spec.laplacian(&c);
                let lap_z = spec.inverse(&lz);
                (0..spec.grid.len())
                    .map(|p| {
                        let th = &spec.grid.points[p];
                        let mut x = DVector::zeros(n + 1);
                        let mut out = DVector::zeros(n + 1);
                        for d in 0..n - 1 {
                            x[d] = r[p] * th[d];
                            out[d] = th[d] - grad[p][d] / r[p];
                        }
                        x[n - 1] = z1;
                        x[n] = z2;
                        out[n - 1] = -r1[p];
                        out[n] = -r2[p];
                        let nu = -&out / out.norm();
                        let h = k / r[p] - lap_s[p] / (r[p] * r[p]) - lap_z[p];
                        let mut kappas = vec![0.0, 0.0];
                        kappas.extend(std::iter::repeat(h / k).take(n - 2));
                        SurfaceSample::new(x, nu, kappas, DVector::zeros(n + 1))
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let adjacency = vec![Vec::new(); samples.len()];
        SurfaceSampleSet { samples, tag: ModelTag::UserMesh, adjacency }
    }

    /// Samples at every grid node.
    pub fn node_samples(&self, spec: &SphereSpectrum) -> SurfaceSampleSet {
        let zs: Vec<(f64, f64)> = self
            .grid
            .nodes()
            .iter()
            .flat_map(|&a| self.grid.nodes().into_iter().map(move |b| (a, b)))
            .collect();
        self.samples(spec, &zs)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Mode0Report {
    /// ∫ div_S(r·JΘ) dΘ, evaluated as ∫ ⟨∇r, JΘ⟩ + r·div_S(JΘ).
    pub divergence_integral: f64,
    /// ∫ u·√(1+|∇r|²/r²+|∂_z r|²) dΘ with u measured against the outward
    /// normal; equals −∫⟨∇r, JΘ⟩ for untilted fields.
    pub weighted_mean: f64,
    /// |∫ u dΘ|.
    pub plain_mean: f64,
}

/// Mode-zero check at node (i, j) for field α of `fields`. The divergence
/// identity uses the leading block of the basis matrix J_α.
pub fn mode0_check(
    graph: &RadialGraph,
    spec: &SphereSpectrum,
    node: (usize, usize),
    fields: &RotationFieldSet,
    alpha: usize,
) -> Result<Mode0Report> {
    let n = graph.n;
    if fields.n() != n || alpha >= fields.basis.len() {
        return Err(Error::Domain("field set does not match the graph".into()));
    }
    let (i, j) = node;
    let g = graph.grid;
    let (z1, z2) = (g.node(i), g.node(j));
    let c: Vec<f64> = graph.coeffs.iter().map(|m| m[(i, j)]).collect();
    let dz = |m: &DMatrix<f64>, axis: usize| -> f64 {
        let h = g.spacing();
        let last = g.interior + 1;
        let (a, b) = if axis == 0 { (i, j) } else { (j, i) };
        let get = |p: usize| if axis == 0 { m[(p, b)] } else { m[(b, p)] };
        if a == 0 {
            (get(1) - get(0)) / h
        } else if a == last {
            (get(last) - get(last - 1)) / h
        } else {
            (get(a + 1) - get(a - 1)) / (2.0 * h)
        }
    };
    let c1: Vec<f64> = graph.coeffs.iter().map(|m| dz(m, 0)).collect();
    let c2: Vec<f64> = graph.coeffs.iter().map(|m| dz(m, 1)).collect();
    let r = spec.inverse(&c);
    let grad = spec.gradient(&c);
    let r1 = spec.inverse(&c1);
    let r2 = spec.inverse(&c2);
    let jm = fields.basis.mats[alpha].view((0, 0), (n - 1, n - 1)).into_owned();
    let trace_j = jm.trace();
    let mut div = 0.0;
    let mut weighted = 0.0;
    let mut plain = 0.0;
    for (p, th) in spec.grid.points.iter().enumerate() {
        let w = spec.grid.weights[p];
        let theta = DVector::from_column_slice(th);
        let jt = &jm * &theta;
        let gr = DVector::from_column_slice(&grad[p]);
        let div_jt = trace_j - theta.dot(&jt);
        div += w * (gr.dot(&jt) + r[p] * div_jt);
        let mut x = DVector::zeros(n + 1);
        let mut out = DVector::zeros(n + 1);
        for d in 0..n - 1 {
            x[d] = r[p] * th[d];
            out[d] = th[d] - grad[p][d] / r[p];
        }
        x[n - 1] = z1;
        x[n] = z2;
        out[n - 1] = -r1[p];
        out[n] = -r2[p];
        let k = fields.field(alpha, &x);
        let norm = out.norm();
        let u = k.dot(&out) / norm;
        weighted += w * u * norm;
        plain += w * u;
    }
    Ok(Mode0Report { divergence_integral: div, weighted_mean: weighted, plain_mean: plain.abs() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_one_is_the_first_coordinate_moment() {
        let spec = SphereSpectrum::new(4, 3).unwrap();
        let g = ZGrid::new(2.0, 3).unwrap();
        let delta = 0.01;
        let graph = RadialGraph::from_fn(&spec, g, -1.0, |th, _, _| 2.0 + delta * th[0]).unwrap();
        let f1 = graph.f_coefficient(1, 0.0, 0.0);
        assert!((f1 - delta * spec.coordinate_norm()).abs() < 1e-14);
    }

    #[test]
    fn constant_radius_has_zero_means() {
        let spec = SphereSpectrum::new(4, 4).unwrap();
        let g = ZGrid::new(2.0, 3).unwrap();
        let graph = RadialGraph::from_fn(&spec, g, -1.0, |_, _, _| 2.0).unwrap();
        let f = RotationFieldSet::standard(4).unwrap();
        for a in 0..3 {
            let rep = mode0_check(&graph, &spec, (2, 2), &f, a).unwrap();
            assert!(rep.divergence_integral.abs() < 1e-14);
            assert!(rep.plain_mean < 1e-14);
        }
    }

    #[test]
    fn cylinder_samples_have_exact_curvature() {
        let spec = SphereSpectrum::new(4, 2).unwrap();
        let g = ZGrid::new(2.0, 3).unwrap();
        let graph = RadialGraph::from_fn(&spec, g, -1.0, |_, _, _| 2.0).unwrap();
        let s = graph.node_samples(&spec);
        for x in &s.samples {
            assert!((x.h - 1.0).abs() < 1e-12);
            assert!((x.normal.norm() - 1.0).abs() < 1e-12);
        }
    }
}
