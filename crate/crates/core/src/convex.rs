//! Measurements on convex hypersurfaces: intrinsic and extrinsic diameters
//! of triangle meshes, eccentricity, cone containment, Gaussian density and
//! height monotonicity along translator trajectories.

use crate::error::{Error, Result};
use crate::geometry::graph::{add_edge, shortest_paths, Adjacency};
use crate::geometry::{translator_residual, BowlProfile, SurfaceSampleSet};
use crate::linalg::random_rotation;
use crate::ode::{Dopri5, Stepper};
use crate::sphere::{sphere_area, SphereGrid};
use nalgebra::{DVector, Matrix3, Vector3};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

/// Closed triangle mesh in ℝ³.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
}

fn v3(p: &[f64; 3]) -> Vector3<f64> {
    Vector3::new(p[0], p[1], p[2])
}

impl TriMesh {
    /// Unit icosphere after `level` rounds of 1-to-4 subdivision.
    pub fn icosphere(level: usize) -> Self {
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        let raw = [
            [-1.0, g, 0.0],
            [1.0, g, 0.0],
            [-1.0, -g, 0.0],
            [1.0, -g, 0.0],
            [0.0, -1.0, g],
            [0.0, 1.0, g],
            [0.0, -1.0, -g],
            [0.0, 1.0, -g],
            [g, 0.0, -1.0],
            [g, 0.0, 1.0],
            [-g, 0.0, -1.0],
            [-g, 0.0, 1.0],
        ];
        let faces = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        let mut mesh = TriMesh { vertices: raw.iter().map(|p| normalized(*p)).collect(), faces };
        for _ in 0..level {
            mesh = mesh.subdivided();
            for v in mesh.vertices.iter_mut() {
                *v = normalized(*v);
            }
        }
        mesh
    }

    /// 1-to-4 midpoint subdivision (midpoints stay on the flat faces).
    pub fn subdivided(&self) -> Self {
        let mut vertices = self.vertices.clone();
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vs: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            *mids.entry(key).or_insert_with(|| {
                let (p, q) = (vs[a], vs[b]);
                vs.push([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, (p[2] + q[2]) / 2.0]);
                vs.len() - 1
            })
        };
        let mut faces = Vec::with_capacity(4 * self.faces.len());
        for &[a, b, c] in &self.faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            faces.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        TriMesh { vertices, faces }
    }

    pub fn mapped<F: Fn(Vector3<f64>) -> Vector3<f64>>(&self, f: F) -> Self {
        let vertices = self.vertices.iter().map(|p| {
            let q = f(v3(p));
            [q[0], q[1], q[2]]
        });
        TriMesh { vertices: vertices.collect(), faces: self.faces.clone() }
    }

    /// Ellipsoid with semi-axes `axes`, rotated by `rot`.
    pub fn ellipsoid(axes: [f64; 3], rot: &Matrix3<f64>, level: usize) -> Self {
        let d = Matrix3::from_diagonal(&Vector3::from(axes));
        let m = rot * d;
        Self::icosphere(level).mapped(|p| m * p)
    }

    /// Randomly rotated ellipsoid with semi-axes in [1, max_aspect].
    pub fn random_ellipsoid<R: Rng + ?Sized>(rng: &mut R, max_aspect: f64, level: usize) -> Self {
        let axes = [1.0, rng.gen_range(1.0..=max_aspect), rng.gen_range(1.0..=max_aspect)];
        let r = random_rotation(3, rng);
        let rot = Matrix3::from_fn(|i, j| r[(i, j)]);
        Self::ellipsoid(axes, &rot, level)
    }

    /// Largest edge length.
    pub fn mesh_size(&self) -> f64 {
        self.faces
            .iter()
            .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
            .map(|(a, b)| (v3(&self.vertices[a]) - v3(&self.vertices[b])).norm())
            .fold(0.0, f64::max)
    }

    /// Once-subdivided mesh whose graph joins every pair of points on a
    /// common original face by the straight segment inside that face.
    pub fn face_complete_graph(&self) -> (TriMesh, Adjacency) {
        let fine = self.subdivided();
        let mut adj: Adjacency = vec![Vec::new(); fine.vertices.len()];
        let mut seen = std::collections::HashSet::new();
        for (fi, _) in self.faces.iter().enumerate() {
            let mut pts: Vec<usize> = fine.faces[4 * fi..4 * fi + 4].iter().flatten().copied().collect();
            pts.sort_unstable();
            pts.dedup();
            for (i, &a) in pts.iter().enumerate() {
                for &b in &pts[i + 1..] {
                    if seen.insert((a, b)) {
                        add_edge(&mut adj, a, b, (v3(&fine.vertices[a]) - v3(&fine.vertices[b])).norm());
                    }
                }
            }
        }
        (fine, adj)
    }
}

fn normalized(p: [f64; 3]) -> [f64; 3] {
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    [p[0] / n, p[1] / n, p[2] / n]
}

/// Rejects flat and nonconvex meshes: every face plane must leave all
/// vertices on one side within 1e−8 of the extrinsic diameter.
pub fn check_convex(mesh: &TriMesh) -> Result<()> {
    if mesh.vertices.len() < 4 || mesh.faces.is_empty() {
        return Err(Error::Precondition("mesh has fewer than 4 vertices".into()));
    }
    let pts: Vec<Vector3<f64>> = mesh.vertices.iter().map(v3).collect();
    let mean = pts.iter().sum::<Vector3<f64>>() / pts.len() as f64;
    let cov = pts.iter().map(|p| (p - mean) * (p - mean).transpose()).sum::<Matrix3<f64>>();
    let eig = cov.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(hi > 0.0) || lo <= 1e-16 * hi {
        return Err(Error::Precondition("mesh is flat".into()));
    }
    let scale = hi.sqrt().max(1e-300);
    let tol = 1e-8 * scale;
    let bad = mesh.faces.par_iter().find_any(|f| {
        let (a, b, c) = (pts[f[0]], pts[f[1]], pts[f[2]]);
        let nrm = (b - a).cross(&(c - a));
        let len = nrm.norm();
        if len == 0.0 {
            return false;
        }
        let nrm = nrm / len;
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for p in &pts {
            let s = nrm.dot(&(p - a));
            lo = lo.min(s);
            hi = hi.max(s);
        }
        lo < -tol && hi > tol
    });
    match bad {
        Some(f) => Err(Error::Precondition(format!("mesh is not convex at face {f:?}"))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiameterReport {
    /// Intrinsic diameter: largest shortest-path distance on the edge graph
    /// of the once-subdivided mesh. Overestimates the polyhedral geodesic
    /// diameter by O(h).
    pub d1: f64,
    /// Extrinsic diameter: farthest vertex pair.
    pub d2: f64,
    pub ratio: f64,
    /// Largest edge of the subdivided graph.
    pub h: f64,
}

pub fn extrinsic_diameter(points: &[Vector3<f64>]) -> f64 {
    (0..points.len())
        .into_par_iter()
        .map(|i| points[i + 1..].iter().fold(0.0f64, |a, q| a.max((points[i] - q).norm())))
        .reduce(|| 0.0, f64::max)
}

pub fn diameters(mesh: &TriMesh) -> Result<DiameterReport> {
    check_convex(mesh)?;
    let pts: Vec<Vector3<f64>> = mesh.vertices.iter().map(v3).collect();
    let d2 = extrinsic_diameter(&pts);
    let (fine, adj) = mesh.face_complete_graph();
    let d1 = (0..fine.vertices.len())
        .into_par_iter()
        .map(|s| shortest_paths(&adj, s, f64::INFINITY).into_iter().fold(0.0f64, f64::max))
        .reduce(|| 0.0, f64::max);
    if !d1.is_finite() {
        return Err(Error::Precondition("mesh edge graph is disconnected".into()));
    }
    Ok(DiameterReport { d1, d2, ratio: d1 / d2, h: fine.mesh_size() })
}

/// Extrinsic diameter times sup H over a cross-section sample.
pub fn eccentricity(points: &[DVector<f64>], mean_curvature: &[f64]) -> Result<f64> {
    if points.len() != mean_curvature.len() || points.is_empty() {
        return Err(Error::Domain("need one mean curvature per point".into()));
    }
    let diam = (0..points.len())
        .into_par_iter()
        .map(|i| points[i + 1..].iter().fold(0.0f64, |a, q| a.max((&points[i] - q).norm())))
        .reduce(|| 0.0, f64::max);
    Ok(diam * mean_curvature.iter().fold(f64::NEG_INFINITY, |a, &h| a.max(h)))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConeReport {
    pub contained: bool,
    /// min over points outside B₁(apex) of ⟨x−p,ω⟩ − η|x−p−⟨x−p,ω⟩ω|
    /// (+∞ when there are none).
    pub margin: f64,
    pub considered: usize,
}

/// Whether the points outside the unit ball at `apex` lie in the cone
/// {⟨x−p,ω⟩ ≥ η·|orthogonal part|}.
pub fn cone_containment(points: &[DVector<f64>], eta: f64, apex: &DVector<f64>, axis: &DVector<f64>) -> Result<ConeReport> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain(format!("η must lie in (0,1), got {eta}")));
    }
    let omega = axis.normalize();
    let mut margin = f64::INFINITY;
    let mut considered = 0;
    for x in points {
        let v = x - apex;
        if v.norm() <= 1.0 {
            continue;
        }
        considered += 1;
        let a = v.dot(&omega);
        let orth = (&v - &omega * a).norm();
        margin = margin.min(a - eta * orth);
    }
    Ok(ConeReport { contained: margin >= 0.0, margin, considered })
}

/// Weighted sample of an n-dimensional submanifold: points with area
/// elements.
#[derive(Debug, Clone)]
pub struct WeightedCloud {
    pub dim: usize,
    pub points: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
}

impl WeightedCloud {
    pub fn transformed(&self, rot: &nalgebra::DMatrix<f64>, shift: &DVector<f64>) -> Self {
        Self { dim: self.dim, points: self.points.iter().map(|p| rot * p + shift).collect(), weights: self.weights.clone() }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let w = c.powi(self.dim as i32);
        Self { dim: self.dim, points: self.points.iter().map(|p| p * c).collect(), weights: self.weights.iter().map(|x| x * w).collect() }
    }

    /// S^k_{radius} × ℝ^{n−k} ⊂ ℝ^{n+1}, the flat factor sampled by the
    /// trapezoid rule on [−half_width, half_width] with `flat_points` nodes
    /// per axis.
    pub fn sphere_cross_flat(k: usize, n: usize, radius: f64, sphere_res: usize, half_width: f64, flat_points: usize) -> Result<Self> {
        if k > n || n == 0 {
            return Err(Error::Domain(format!("need k ≤ n, got k = {k}, n = {n}")));
        }
        let m = n - k;
        let (sphere_pts, sphere_w): (Vec<Vec<f64>>, Vec<f64>) = if k == 0 {
            (vec![vec![-radius], vec![radius]], vec![1.0, 1.0])
        } else {
            let g = SphereGrid::with_resolution(k, sphere_res);
            let rk = radius.powi(k as i32);
            (g.points.iter().map(|p| p.iter().map(|x| x * radius).collect()).collect(), g.weights.iter().map(|w| w * rk).collect())
        };
        let fp = if m == 0 { 1 } else { flat_points.max(2) };
        let step = if m == 0 { 1.0 } else { 2.0 * half_width / (fp - 1) as f64 };
        let node = |i: usize| -half_width + step * i as f64;
        let edge = |i: usize| if i == 0 || i + 1 == fp { 0.5 } else { 1.0 };
        let total = fp.pow(m as u32);
        let mut points = Vec::with_capacity(total * sphere_pts.len());
        let mut weights = Vec::with_capacity(points.capacity());
        for idx in 0..total {
            let mut flat = Vec::with_capacity(m);
            let mut w = 1.0;
            let mut r = idx;
            for _ in 0..m {
                let i = r % fp;
                r /= fp;
                flat.push(node(i));
                w *= step * edge(i);
            }
            for (sp, sw) in sphere_pts.iter().zip(&sphere_w) {
                let mut x = sp.clone();
                x.extend(&flat);
                points.push(DVector::from_vec(x));
                weights.push(sw * w);
            }
        }
        Ok(Self { dim: n, points, weights })
    }

    /// Self-shrinking S^k_{√(2k)} × ℝ^{n−k}.
    pub fn shrinker(k: usize, n: usize, sphere_res: usize, half_width: f64, flat_points: usize) -> Result<Self> {
        Self::sphere_cross_flat(k, n, (2.0 * k as f64).sqrt(), sphere_res, half_width, flat_points)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityQuery {
    pub center: DVector<f64>,
    pub t0: f64,
    /// Truncation radius; samples with |x − x₀| > R are discarded.
    pub radius: f64,
    /// Euclidean volume growth constant: Vol(M ∩ B_r(x₀)) ≤ C·r^n.
    pub volume_constant: f64,
}

impl DensityQuery {
    /// R = 12√t₀ and the unit-ball volume growth constant of a plane
    /// multiplied by 10.
    pub fn new(center: DVector<f64>, t0: f64, n: usize) -> Self {
        let ball = sphere_area(n.max(1) - 1) / n.max(1) as f64;
        Self { center, t0, radius: 12.0 * t0.sqrt(), volume_constant: 10.0 * ball }
    }

    /// Bound on the discarded Gaussian mass beyond R, summing shell volumes
    /// C·r^n against the Gaussian at the inner shell radius.
    pub fn tail_bound(&self, n: usize) -> f64 {
        let s = self.t0.sqrt();
        let norm = (4.0 * PI * self.t0).powf(-(n as f64) / 2.0);
        let mut sum = 0.0;
        for m in 0..10_000 {
            let inner = self.radius + m as f64 * s;
            let term = self.volume_constant * (inner + s).powi(n as i32) * (-inner * inner / (4.0 * self.t0)).exp();
            sum += term;
            if term < 1e-30 * sum.max(1e-300) {
                break;
            }
        }
        norm * sum
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Density {
    pub value: f64,
    /// Truncation tail bound.
    pub tail: f64,
}

/// Θ_{x₀,t₀} = Σ w·(4πt₀)^{−n/2}·e^{−|x−x₀|²/(4t₀)} over samples within R.
pub fn gaussian_density(cloud: &WeightedCloud, query: &DensityQuery, tol: f64) -> Result<Density> {
    if !(query.t0 > 0.0) {
        return Err(Error::Domain(format!("t₀ must be positive, got {}", query.t0)));
    }
    let n = cloud.dim;
    let tail = query.tail_bound(n);
    if tail > tol {
        return Err(Error::Precision { estimate: tail, tolerance: tol });
    }
    let norm = (4.0 * PI * query.t0).powf(-(n as f64) / 2.0);
    let r2 = query.radius * query.radius;
    // Collect before summing so the reduction order is fixed.
    let terms: Vec<f64> = cloud
        .points
        .par_iter()
        .zip(&cloud.weights)
        .map(|(x, w)| {
            let d2 = (x - &query.center).norm_squared();
            if d2 > r2 {
                0.0
            } else {
                w * (-d2 / (4.0 * query.t0)).exp()
            }
        })
        .collect();
    let value = terms.iter().sum::<f64>() * norm;
    Ok(Density { value, tail })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DensityRow {
    pub k: usize,
    pub n: usize,
    pub value: f64,
    /// |coarse − fine| plus the truncation tail.
    pub error: f64,
}

/// Θ_{0,1}(S^k_{√(2k)} × ℝ^{n−k}) for the given k, estimating the
/// quadrature error from a run at half the flat resolution.
pub fn shrinker_density(k: usize, n: usize, sphere_res: usize, flat_points: usize) -> Result<DensityRow> {
    let query = DensityQuery::new(DVector::zeros(n + 1), 1.0, n);
    let half_width = query.radius;
    let fine = gaussian_density(&WeightedCloud::shrinker(k, n, sphere_res, half_width, flat_points)?, &query, 1e-10)?;
    let coarse = gaussian_density(&WeightedCloud::shrinker(k, n, sphere_res, half_width, flat_points / 2 + 1)?, &query, 1e-10)?;
    Ok(DensityRow { k, n, value: fine.value, error: (fine.value - coarse.value).abs() + fine.tail })
}

/// Closed form (k/(2πe))^{k/2}·|S^k| of Θ_{0,1}(S^k_{√(2k)} × ℝ^{n−k}).
pub fn shrinker_density_exact(k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let kf = k as f64;
    (kf / (2.0 * PI * std::f64::consts::E)).powf(kf / 2.0) * sphere_area(k)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub heights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MonotonicityReport {
    /// The sample passes as a translator in direction ω.
    pub applicable: bool,
    pub translator_residual: f64,
    /// max over trajectories of the positive part of Δh/Δt (0 when not
    /// applicable).
    pub max_violation: f64,
    pub trajectories: usize,
}

/// Largest increase rate of the height along trajectories of a translator.
/// `samples` certify the translator identity H = ⟨ω,ν⟩ within `tol`.
pub fn height_monotonicity(samples: &SurfaceSampleSet, omega: &DVector<f64>, trajectories: &[Trajectory], tol: f64) -> MonotonicityReport {
    let residual = translator_residual(samples, omega);
    if !(residual <= tol) {
        return MonotonicityReport { applicable: false, translator_residual: residual, max_violation: 0.0, trajectories: trajectories.len() };
    }
    let mut worst = 0.0f64;
    for tr in trajectories {
        for i in 1..tr.times.len() {
            let dt = tr.times[i] - tr.times[i - 1];
            if dt > 0.0 {
                worst = worst.max((tr.heights[i] - tr.heights[i - 1]) / dt);
            }
        }
    }
    MonotonicityReport { applicable: true, translator_residual: residual, max_violation: worst, trajectories: trajectories.len() }
}

/// Normal-motion trajectories on the unit-speed Bowl, heights measured from
/// the moving tip: dρ/dt = −φ'/(1+φ'²), h = φ(ρ).
pub fn bowl_trajectories(profile: &BowlProfile, starts: &[f64], duration: f64, steps: usize) -> Result<Vec<Trajectory>> {
    let solver = Dopri5 { h_max: profile.spacing(), ..Dopri5::default() };
    starts
        .iter()
        .map(|&rho0| {
            if !(0.0..=profile.r_max()).contains(&rho0) {
                return Err(Error::Range(format!("start radius {rho0} outside the profile")));
            }
            let rhs = |_: f64, y: &[f64; 1]| -> [f64; 1] {
                let d = profile.eval(y[0].clamp(0.0, profile.r_max())).map(|e| e.1).unwrap_or(0.0);
                [-d / (1.0 + d * d)]
            };
            let mut st = Stepper { t: 0.0, y: [rho0], h: 1e-3, steps: 0 };
            let mut times = vec![0.0];
            let mut heights = vec![profile.eval(rho0)?.0];
            for i in 1..=steps {
                let t = duration * i as f64 / steps as f64;
                solver.advance(&rhs, &mut st, t)?;
                times.push(t);
                heights.push(profile.eval(st.y[0].max(0.0))?.0);
            }
            Ok(Trajectory { times, heights })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn icosphere_is_convex() {
        let m = TriMesh::icosphere(2);
        assert_eq!(m.vertices.len(), 162);
        check_convex(&m).unwrap();
    }

    #[test]
    fn dented_sphere_is_rejected() {
        let mut m = TriMesh::icosphere(2);
        m.vertices[0] = [m.vertices[0][0] * 0.5, m.vertices[0][1] * 0.5, m.vertices[0][2] * 0.5];
        assert!(matches!(diameters(&m), Err(Error::Precondition(_))));
    }

    #[test]
    fn flat_mesh_is_rejected() {
        let m = TriMesh::icosphere(1).mapped(|p| Vector3::new(p[0], p[1], 0.0));
        assert!(matches!(diameters(&m), Err(Error::Precondition(_))));
    }

    #[test]
    fn random_ellipsoid_aspect() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let m = TriMesh::random_ellipsoid(&mut rng, 20.0, 1);
        check_convex(&m).unwrap();
    }

    #[test]
    fn exact_densities() {
        assert!((shrinker_density_exact(2) - 4.0 / std::f64::consts::E).abs() < 1e-14);
        assert!((shrinker_density_exact(1) - (2.0 * PI / std::f64::consts::E).sqrt()).abs() < 1e-14);
    }
}
