//! Sampled model hypersurfaces in ℝ^{n+1} with exact geometric data.
//!
//! Coordinates are 0-based. Cylinders S^{n−2}×ℝ² put the sphere factor in
//! coordinates 0..n−2 and the flat factor in n−1, n. The Bowl (dimension n)
//! translates along coordinate n−1; its radial coordinates are the rest.
//! Bowl×ℝ uses a Bowl of dimension n−1 in coordinates 0..n−1 (axis n−1) and
//! splits off coordinate n. Normals point inward so H > 0.

use super::bowl::{solve_bowl_profile_with_spacing, BowlProfile};
use super::graph::{add_edge, structured_edges, Adjacency};
use crate::error::{Error, Result};
use crate::sphere::SphereGrid;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceSample {
    pub x: DVector<f64>,
    pub normal: DVector<f64>,
    pub h: f64,
    pub a_norm_sq: f64,
    /// Principal curvatures, ascending.
    pub kappas: Vec<f64>,
    /// Tangential gradient of the mean curvature.
    pub grad_h: DVector<f64>,
}

impl SurfaceSample {
    pub fn new(x: DVector<f64>, normal: DVector<f64>, mut kappas: Vec<f64>, grad_h: DVector<f64>) -> Self {
        kappas.sort_by(|a, b| a.total_cmp(b));
        let h = kappas.iter().sum();
        let a_norm_sq = kappas.iter().map(|k| k * k).sum();
        Self { x, normal, h, a_norm_sq, kappas, grad_h }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelTag {
    Cylinder { n: usize, t: f64 },
    ShrinkingCylinderFamily { n: usize },
    Bowl { n: usize, kappa: f64 },
    BowlCrossR { n: usize, kappa: f64 },
    UserMesh,
}

/// Sampling resolution for the model generators.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    /// Polar nodes per polar angle on the orbit sphere (azimuth gets twice as many).
    pub sphere_res: usize,
    /// Half-width of the flat coordinate grid.
    pub z_half_width: f64,
    /// Nodes per flat coordinate.
    pub z_points: usize,
    /// Largest geometric radius |x̄| sampled on Bowl models.
    pub r_max: f64,
    /// Radial rings on Bowl models (tip excluded).
    pub r_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { sphere_res: 6, z_half_width: 4.0, z_points: 9, r_max: 6.0, r_points: 12 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceSampleSet {
    pub samples: Vec<SurfaceSample>,
    pub tag: ModelTag,
    pub adjacency: Adjacency,
}

/// Cylinder radius √(−2(n−2)t).
pub fn cylinder_radius(n: usize, t: f64) -> f64 {
    (-2.0 * (n as f64 - 2.0) * t).sqrt()
}

/// Cylinder mean curvature √((n−2)/2)/√(−t).
pub fn cylinder_mean_curvature(n: usize, t: f64) -> f64 {
    ((n as f64 - 2.0) / 2.0).sqrt() / (-t).sqrt()
}

fn z_grid(spec: &GridSpec) -> Vec<f64> {
    let m = spec.z_points.max(1);
    if m == 1 {
        return vec![0.0];
    }
    (0..m)
        .map(|i| -spec.z_half_width + 2.0 * spec.z_half_width * i as f64 / (m - 1) as f64)
        .collect()
}

fn chord(samples: &[SurfaceSample], a: usize, b: usize) -> f64 {
    (&samples[a].x - &samples[b].x).norm()
}

/// Sample a model at time `t` (ignored for the static Bowl models; they are
/// translated by κ·t along their axis).
pub fn sample_model(tag: ModelTag, grid: &GridSpec, t: f64) -> Result<SurfaceSampleSet> {
    if grid.sphere_res == 0 || grid.z_points == 0 {
        return Err(Error::Domain("grid resolution must be positive".into()));
    }
    match tag {
        ModelTag::Cylinder { n, t: tc } => sample_cylinder(n, tc, grid, tag),
        ModelTag::ShrinkingCylinderFamily { n } => sample_cylinder(n, t, grid, tag),
        ModelTag::Bowl { n, kappa } => {
            let prof = profile_for(n, kappa, grid)?;
            sample_bowl(&prof, kappa, grid, t, false)
        }
        ModelTag::BowlCrossR { n, kappa } => {
            let prof = profile_for(n - 1, kappa, grid)?;
            sample_bowl(&prof, kappa, grid, t, true)
        }
        ModelTag::UserMesh => {
            Err(Error::Capability("user meshes are built with SurfaceSampleSet::from_samples".into()))
        }
    }
}

fn profile_for(k: usize, kappa: f64, grid: &GridSpec) -> Result<BowlProfile> {
    if k < 2 || !(kappa > 0.0) {
        return Err(Error::Domain(format!("bowl needs dimension ≥ 2 and κ > 0 (k={k}, κ={kappa})")));
    }
    let rmax = (grid.r_max * kappa).max(1e-2) * 1.001;
    solve_bowl_profile_with_spacing(k, rmax, 1e-12, 0.005)
}

fn sample_cylinder(n: usize, t: f64, grid: &GridSpec, tag: ModelTag) -> Result<SurfaceSampleSet> {
    if n < 3 {
        return Err(Error::Domain(format!("cylinder needs n ≥ 3, got {n}")));
    }
    if !(t < 0.0) {
        return Err(Error::Domain(format!("shrinking cylinders need t < 0, got {t}")));
    }
    let rho = cylinder_radius(n, t);
    let sph = SphereGrid::with_resolution(n - 2, grid.sphere_res);
    let zs = z_grid(grid);
    let dim = n + 1;
    let mut samples = Vec::with_capacity(sph.len() * zs.len() * zs.len());
    let mut kappas = vec![0.0, 0.0];
    kappas.extend(std::iter::repeat(1.0 / rho).take(n - 2));
    for p in &sph.points {
        for &z1 in &zs {
            for &z2 in &zs {
                let mut x = DVector::zeros(dim);
                let mut nu = DVector::zeros(dim);
                for i in 0..n - 1 {
                    x[i] = rho * p[i];
                    nu[i] = -p[i];
                }
                x[n - 1] = z1;
                x[n] = z2;
                samples.push(SurfaceSample::new(x, nu, kappas.clone(), DVector::zeros(dim)));
            }
        }
    }
    let mut shape = sph.shape.clone();
    shape.push(zs.len());
    shape.push(zs.len());
    let mut periodic = vec![false; shape.len()];
    periodic[sph.shape.len() - 1] = true;
    let mut adj: Adjacency = vec![Vec::new(); samples.len()];
    structured_edges(&mut adj, 0, &shape, &periodic, |a, b| chord(&samples, a, b));
    Ok(SurfaceSampleSet { samples, tag, adjacency: adj })
}

/// Exact Bowl data at profile radius `rho` (profile units) and orbit
/// direction `theta` (unit vector in the radial coordinates).
pub(crate) fn bowl_point(
    prof: &BowlProfile,
    kappa: f64,
    rho: f64,
    theta: &[f64],
    radial: &[usize],
    axis: usize,
    dim: usize,
) -> Result<(DVector<f64>, DVector<f64>, Vec<f64>, DVector<f64>)> {
    let k = prof.n;
    let (phi, dphi, ddphi) = prof.eval(rho)?;
    let w = (1.0 + dphi * dphi).sqrt();
    let mut x = DVector::zeros(dim);
    let mut nu = DVector::zeros(dim);
    let mut tangent = DVector::zeros(dim);
    for (c, &i) in radial.iter().enumerate() {
        x[i] = rho * theta[c] / kappa;
        nu[i] = -dphi * theta[c] / w;
        tangent[i] = theta[c] / w;
    }
    x[axis] = phi / kappa;
    nu[axis] = 1.0 / w;
    tangent[axis] = dphi / w;
    let profile_curv = kappa * ddphi / (w * w * w);
    let orbit_curv = if rho == 0.0 { kappa / k as f64 } else { kappa * dphi / (rho * w) };
    let mut kappas = vec![profile_curv];
    kappas.extend(std::iter::repeat(orbit_curv).take(k - 1));
    // dH/ds along the profile: H = κ(1+φ'²)^{-1/2}, ds = w dρ/κ.
    let dh_ds = -kappa * kappa * dphi * ddphi / (w * w * w) / w;
    let grad_h = tangent * dh_ds;
    Ok((x, nu, kappas, grad_h))
}

fn sample_bowl(
    prof: &BowlProfile,
    kappa: f64,
    grid: &GridSpec,
    t: f64,
    cross_r: bool,
) -> Result<SurfaceSampleSet> {
    let k = prof.n;
    let n = if cross_r { k + 1 } else { k };
    let dim = n + 1;
    let axis = n - 1;
    let radial: Vec<usize> = if cross_r {
        (0..n - 1).collect()
    } else {
        (0..n - 1).chain(std::iter::once(n)).collect()
    };
    let sph = SphereGrid::with_resolution(k - 1, grid.sphere_res);
    let zs = if cross_r { z_grid(grid) } else { vec![0.0] };
    let rings: Vec<f64> =
        (1..=grid.r_points.max(1)).map(|i| grid.r_max * kappa * i as f64 / grid.r_points.max(1) as f64).collect();
    let tag = if cross_r { ModelTag::BowlCrossR { n, kappa } } else { ModelTag::Bowl { n, kappa } };
    let shift = kappa * t;
    let mut samples = Vec::new();
    // Tips first (one per z value), then the structured block [z, ring, sphere...].
    let tip_theta = vec![0.0; radial.len()];
    for &z in &zs {
        let (mut x, nu, kap, gh) = bowl_point(prof, kappa, 0.0, &tip_theta, &radial, axis, dim)?;
        x[axis] += shift;
        if cross_r {
            x[n] = z;
        }
        samples.push(SurfaceSample::new(x, nu, kap_with_flat(kap, cross_r), gh));
    }
    let ntip = samples.len();
    for &z in &zs {
        for &rho in &rings {
            for p in &sph.points {
                let (mut x, nu, kap, gh) = bowl_point(prof, kappa, rho, p, &radial, axis, dim)?;
                x[axis] += shift;
                if cross_r {
                    x[n] = z;
                }
                samples.push(SurfaceSample::new(x, nu, kap_with_flat(kap, cross_r), gh));
            }
        }
    }
    let mut adj: Adjacency = vec![Vec::new(); samples.len()];
    let mut shape = vec![zs.len(), rings.len()];
    shape.extend(sph.shape.iter().copied());
    let mut periodic = vec![false; shape.len()];
    *periodic.last_mut().unwrap() = true;
    structured_edges(&mut adj, ntip, &shape, &periodic, |a, b| chord(&samples, a, b));
    let per_z = rings.len() * sph.len();
    for zi in 0..zs.len() {
        for s in 0..sph.len() {
            let b = ntip + zi * per_z + s;
            let len = chord(&samples, zi, b);
            add_edge(&mut adj, zi, b, len);
        }
        if zi + 1 < zs.len() {
            let len = chord(&samples, zi, zi + 1);
            add_edge(&mut adj, zi, zi + 1, len);
        }
    }
    Ok(SurfaceSampleSet { samples, tag, adjacency: adj })
}

fn kap_with_flat(mut kap: Vec<f64>, cross_r: bool) -> Vec<f64> {
    if cross_r {
        kap.push(0.0);
    }
    kap
}

/// Cylinder over an ellipsoidal cross-section with semi-axes
/// ρ(1+a), ρ(1−a), ρ, …, ρ: a degree-two (l = 2) deformation of the
/// round cylinder at time t.
pub fn elliptic_cylinder(n: usize, t: f64, amplitude: f64, grid: &GridSpec) -> Result<SurfaceSampleSet> {
    if n < 3 || !(t < 0.0) || amplitude.abs() >= 1.0 {
        return Err(Error::Domain("elliptic cylinder needs n ≥ 3, t < 0, |a| < 1".into()));
    }
    let rho = cylinder_radius(n, t);
    let m = n - 1;
    let mut axes = vec![rho; m];
    axes[0] = rho * (1.0 + amplitude);
    if m > 1 {
        axes[1] = rho * (1.0 - amplitude);
    }
    let sph = SphereGrid::with_resolution(n - 2, grid.sphere_res);
    let zs = z_grid(grid);
    let dim = n + 1;
    let mut samples = Vec::new();
    for p in &sph.points {
        let y: Vec<f64> = (0..m).map(|i| axes[i] * p[i]).collect();
        let g: DVector<f64> = DVector::from_fn(m, |i, _| y[i] / (axes[i] * axes[i]));
        let gn = g.norm();
        let nhat = &g / gn;
        let proj = DMatrix::identity(m, m) - &nhat * nhat.transpose();
        let hess = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 / (axes[i] * axes[i]) } else { 0.0 });
        let shape_op = &proj * hess * &proj / gn;
        let eig = shape_op.symmetric_eigen();
        let mut curv = Vec::new();
        let mut drop = 0usize;
        let mut best = -1.0;
        for c in 0..m {
            let al = eig.eigenvectors.column(c).dot(&nhat).abs();
            if al > best {
                best = al;
                drop = c;
            }
        }
        for c in 0..m {
            if c != drop {
                curv.push(eig.eigenvalues[c]);
            }
        }
        curv.push(0.0);
        curv.push(0.0);
        for &z1 in &zs {
            for &z2 in &zs {
                let mut x = DVector::zeros(dim);
                let mut nu = DVector::zeros(dim);
                for i in 0..m {
                    x[i] = y[i];
                    nu[i] = -nhat[i];
                }
                x[n - 1] = z1;
                x[n] = z2;
                samples.push(SurfaceSample::new(x, nu, curv.clone(), DVector::zeros(dim)));
            }
        }
    }
    let mut shape = sph.shape.clone();
    shape.push(zs.len());
    shape.push(zs.len());
    let mut periodic = vec![false; shape.len()];
    periodic[sph.shape.len() - 1] = true;
    let mut adj: Adjacency = vec![Vec::new(); samples.len()];
    structured_edges(&mut adj, 0, &shape, &periodic, |a, b| chord(&samples, a, b));
    Ok(SurfaceSampleSet { samples, tag: ModelTag::UserMesh, adjacency: adj })
}

/// sup over samples of |H − ⟨ω,ν⟩|.
pub fn translator_residual(set: &SurfaceSampleSet, omega: &DVector<f64>) -> f64 {
    set.samples.iter().fold(0.0, |acc, s| acc.max((s.h - omega.dot(&s.normal)).abs()))
}

impl SurfaceSampleSet {
    pub fn from_samples(samples: Vec<SurfaceSample>, adjacency: Adjacency) -> Result<Self> {
        if adjacency.len() != samples.len() {
            return Err(Error::Domain("adjacency size must match the sample count".into()));
        }
        Ok(Self { samples, tag: ModelTag::UserMesh, adjacency })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.samples.first().map(|s| s.x.len()).unwrap_or(0)
    }

    /// Apply x ↦ R·x + s to positions and R to normals and gradients.
    pub fn transformed(&self, rot: &DMatrix<f64>, shift: &DVector<f64>) -> Self {
        let samples = self
            .samples
            .iter()
            .map(|s| SurfaceSample {
                x: rot * &s.x + shift,
                normal: rot * &s.normal,
                h: s.h,
                a_norm_sq: s.a_norm_sq,
                kappas: s.kappas.clone(),
                grad_h: rot * &s.grad_h,
            })
            .collect();
        Self { samples, tag: self.tag, adjacency: self.adjacency.clone() }
    }

    /// Subset of samples (adjacency restricted to the subset).
    pub fn subset(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.samples.len()];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let samples = keep.iter().map(|&i| self.samples[i].clone()).collect();
        let adjacency = keep
            .iter()
            .map(|&i| {
                self.adjacency[i]
                    .iter()
                    .filter(|(j, _)| map[*j] != usize::MAX)
                    .map(|&(j, l)| (map[j], l))
                    .collect()
            })
            .collect();
        Self { samples, tag: self.tag, adjacency }
    }

    /// Column-oriented CSV: x_i, nu_i, H, A2, k_i.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let dim = self.ambient_dim();
        let nk = self.samples.first().map(|s| s.kappas.len()).unwrap_or(0);
        let mut head: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
        head.extend((0..dim).map(|i| format!("nu{i}")));
        head.push("H".into());
        head.push("A2".into());
        head.extend((0..nk).map(|i| format!("k{i}")));
        wr.write_record(&head).map_err(super::bowl::csv_err)?;
        for s in &self.samples {
            let mut row: Vec<String> = s.x.iter().map(|v| format!("{v:.17e}")).collect();
            row.extend(s.normal.iter().map(|v| format!("{v:.17e}")));
            row.push(format!("{:.17e}", s.h));
            row.push(format!("{:.17e}", s.a_norm_sq));
            row.extend(s.kappas.iter().map(|v| format!("{v:.17e}")));
            wr.write_record(&row).map_err(super::bowl::csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cylinder_at_minus_one_has_unit_curvature_and_radius_two() {
        let s = sample_model(ModelTag::Cylinder { n: 4, t: -1.0 }, &GridSpec::default(), 0.0).unwrap();
        for p in &s.samples {
            assert!((p.h - 1.0).abs() < 1e-12);
            let r: f64 = (0..3).map(|i| p.x[i] * p.x[i]).sum::<f64>().sqrt();
            assert!((r - 2.0).abs() < 1e-12);
            assert!((p.normal.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bowl_tip_has_unit_curvature_and_axis_normal() {
        let s = sample_model(ModelTag::Bowl { n: 4, kappa: 1.0 }, &GridSpec::default(), 0.0).unwrap();
        let tip = &s.samples[0];
        assert!((tip.h - 1.0).abs() < 1e-12);
        let mut omega = DVector::zeros(5);
        omega[3] = 1.0;
        assert!((&tip.normal - &omega).norm() < 1e-14);
    }

    #[test]
    fn bowl_mean_curvature_below_n_over_r() {
        let s = sample_model(ModelTag::Bowl { n: 4, kappa: 1.0 }, &GridSpec::default(), 0.0).unwrap();
        for p in &s.samples[1..] {
            let r = (0..5).filter(|&i| i != 3).map(|i| p.x[i] * p.x[i]).sum::<f64>().sqrt();
            assert!(p.h < 4.0 / r);
        }
    }

    #[test]
    fn unsupported_tag_for_sampler() {
        assert!(matches!(
            sample_model(ModelTag::UserMesh, &GridSpec::default(), 0.0),
            Err(Error::Capability(_))
        ));
        assert!(sample_model(ModelTag::Cylinder { n: 4, t: 1.0 }, &GridSpec::default(), 0.0).is_err());
    }

    #[test]
    fn elliptic_cylinder_reduces_to_round() {
        let s = elliptic_cylinder(4, -1.0, 0.0, &GridSpec::default()).unwrap();
        for p in &s.samples {
            assert!((p.h - 1.0).abs() < 1e-12);
        }
    }
}
