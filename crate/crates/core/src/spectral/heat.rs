//! Crank–Nicolson solver for ∂_t v = Δ_z v + c(t)·v on a square with
//! Dirichlet data, diagonalized by the discrete sine transform.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Uniform node grid on [−W, W]² with `interior` unknowns per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZGrid {
    pub half_width: f64,
    pub interior: usize,
}

impl ZGrid {
    pub fn new(half_width: f64, interior: usize) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::Domain(format!("half width must be positive, got {half_width}")));
        }
        if interior < 3 {
            return Err(Error::Resolution(format!("need at least 3 interior nodes per axis, got {interior}")));
        }
        Ok(Self { half_width, interior })
    }

    /// Nodes per axis including both boundary nodes.
    pub fn size(&self) -> usize {
        self.interior + 2
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.interior + 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.size()).map(|i| self.node(i)).collect()
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.interior + 1 || j == self.interior + 1
    }

    /// Index pairs of nodes with max(|z₁|,|z₂|) ≤ radius.
    pub fn nodes_within(&self, radius: f64) -> Vec<(usize, usize)> {
        let tol = 1e-9 * self.spacing();
        let mut out = Vec::new();
        for i in 0..self.size() {
            for j in 0..self.size() {
                if self.node(i).abs() <= radius + tol && self.node(j).abs() <= radius + tol {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Tabulate f on all nodes.
    pub fn tabulate<F: Fn(f64, f64) -> f64>(&self, f: F) -> DMatrix<f64> {
        DMatrix::from_fn(self.size(), self.size(), |i, j| f(self.node(i), self.node(j)))
    }

    /// Bilinear interpolation of node values, with the two partial
    /// derivatives of the interpolant.
    pub fn interpolate(&self, v: &DMatrix<f64>, z1: f64, z2: f64) -> (f64, f64, f64) {
        let h = self.spacing();
        let locate = |z: f64| -> (usize, f64) {
            let s = ((z + self.half_width) / h).clamp(0.0, (self.interior + 1) as f64);
            let i = (s.floor() as usize).min(self.interior);
            (i, s - i as f64)
        };
        let (i, a) = locate(z1);
        let (j, b) = locate(z2);
        let (v00, v10, v01, v11) = (v[(i, j)], v[(i + 1, j)], v[(i, j + 1)], v[(i + 1, j + 1)]);
        let val = v00 * (1.0 - a) * (1.0 - b) + v10 * a * (1.0 - b) + v01 * (1.0 - a) * b + v11 * a * b;
        let d1 = ((v10 - v00) * (1.0 - b) + (v11 - v01) * b) / h;
        let d2 = ((v01 - v00) * (1.0 - a) + (v11 - v10) * a) / h;
        (val, d1, d2)
    }

    /// Five-point Laplacian at interior nodes; boundary nodes copy the
    /// nearest interior value.
    pub fn laplacian(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        let s = self.size();
        let h2 = self.spacing().powi(2);
        let mut out = DMatrix::zeros(s, s);
        for i in 1..s - 1 {
            for j in 1..s - 1 {
                out[(i, j)] = (v[(i + 1, j)] + v[(i - 1, j)] + v[(i, j + 1)] + v[(i, j - 1)] - 4.0 * v[(i, j)]) / h2;
            }
        }
        for i in 0..s {
            for j in 0..s {
                if self.is_boundary(i, j) {
                    out[(i, j)] = out[(i.clamp(1, s - 2), j.clamp(1, s - 2))];
                }
            }
        }
        out
    }
}

/// Gauge exponent (n−2−λ)/(2(n−2)): v̂ = v·(−t)^{exponent} solves the plain
/// heat equation.
pub fn gauge_exponent(n: usize, lambda: f64) -> f64 {
    let k = (n - 2) as f64;
    (k - lambda) / (2.0 * k)
}

/// Exponent of the decay envelope (−t)^{1 − λ/(2(n−2))}.
pub fn envelope_exponent(n: usize, lambda: f64) -> f64 {
    1.0 - lambda / (2.0 * (n - 2) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvolutionPath {
    /// Crank–Nicolson on the mode equation with the reaction coefficient
    /// frozen at the step midpoint.
    Direct,
    /// Crank–Nicolson on the heat equation for v̂, converted back to v.
    Gauged,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Step size as a fraction of |t|.
    pub step_ratio: f64,
    /// Absolute cap on the step size.
    pub max_step: f64,
    /// Times at which the state is recorded (t₀ and t₁ are always kept).
    pub record: Vec<f64>,
    pub path: EvolutionPath,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { step_ratio: 0.02, max_step: f64::INFINITY, record: Vec::new(), path: EvolutionPath::Gauged }
    }
}

/// Recorded evolution of one mode coefficient v_m on the z-grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeRecord {
    pub n: usize,
    pub lambda: f64,
    pub grid: ZGrid,
    pub times: Vec<f64>,
    pub values: Vec<DMatrix<f64>>,
    pub steps: usize,
}

impl ModeRecord {
    /// Largest |v| over nodes with max-norm ≤ radius and times in window.
    pub fn sup_over(&self, radius: f64, window: (f64, f64)) -> f64 {
        let nodes = self.grid.nodes_within(radius);
        let mut s = 0.0f64;
        for (t, v) in self.times.iter().zip(&self.values) {
            if *t >= window.0 - 1e-12 && *t <= window.1 + 1e-12 {
                for &(i, j) in &nodes {
                    s = s.max(v[(i, j)].abs());
                }
            }
        }
        s
    }

    pub fn last(&self) -> &DMatrix<f64> {
        self.values.last().unwrap()
    }

    pub fn center_value(&self, k: usize) -> f64 {
        let (v, _, _) = self.grid.interpolate(&self.values[k], 0.0, 0.0);
        v
    }
}

/// Snapshot of one mode with its heat gauge.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeState {
    pub mode: usize,
    pub lambda: f64,
    pub n: usize,
    pub t: f64,
    pub grid: ZGrid,
    pub v: DMatrix<f64>,
    pub v_hat: DMatrix<f64>,
}

impl ModeState {
    pub fn new(mode: usize, n: usize, lambda: f64, t: f64, grid: ZGrid, v: DMatrix<f64>) -> Result<Self> {
        if !(t < 0.0) {
            return Err(Error::Domain(format!("mode states live at t < 0, got {t}")));
        }
        let factor = (-t).powf(gauge_exponent(n, lambda));
        let v_hat = &v * factor;
        Ok(Self { mode, lambda, n, t, grid, v, v_hat })
    }

    pub fn from_record(rec: &ModeRecord, mode: usize, k: usize) -> Result<Self> {
        Self::new(mode, rec.n, rec.lambda, rec.times[k], rec.grid, rec.values[k].clone())
    }

    /// Largest |v̂/v − (−t)^{exponent}| over nodes with v ≠ 0.
    pub fn gauge_ratio_error(&self) -> f64 {
        let expect = (-self.t).powf(gauge_exponent(self.n, self.lambda));
        self.v
            .iter()
            .zip(self.v_hat.iter())
            .filter(|(v, _)| **v != 0.0)
            .fold(0.0, |a, (v, w)| a.max((w / v - expect).abs()))
    }
}

/// Time nodes from t₀ to t₁ with geometric steps, hitting every record time.
pub fn time_nodes(t0: f64, t1: f64, ratio: f64, max_step: f64, record: &[f64]) -> Vec<f64> {
    let mut marks: Vec<f64> = record.iter().copied().filter(|&r| r > t0 && r < t1).collect();
    marks.push(t1);
    marks.sort_by(|a, b| a.total_cmp(b));
    marks.dedup();
    let mut out = vec![t0];
    let mut t = t0;
    for m in marks {
        while t < m {
            let dt = (ratio * t.abs()).min(max_step);
            let mut next = t + dt;
            // Avoid a sliver step right before a mark.
            if next > m - 0.25 * dt {
                next = m;
            }
            t = next;
            out.push(t);
        }
    }
    out
}

/// Dense DST-I diagonalization of the 1D Dirichlet Laplacian.
#[derive(Debug, Clone)]
pub struct HeatSolver {
    pub grid: ZGrid,
    sine: DMatrix<f64>,
    eig: Vec<f64>,
}

impl HeatSolver {
    pub fn new(grid: ZGrid) -> Self {
        let m = grid.interior;
        let scale = (2.0 / (m + 1) as f64).sqrt();
        let sine = DMatrix::from_fn(m, m, |j, k| scale * (((j + 1) * (k + 1)) as f64 * PI / (m + 1) as f64).sin());
        let h2 = grid.spacing().powi(2);
        let eig = (1..=m)
            .map(|k| -4.0 * (k as f64 * PI / (2.0 * (m + 1) as f64)).sin().powi(2) / h2)
            .collect();
        Self { grid, sine, eig }
    }

    fn set_boundary<B: Fn(f64, f64, f64) -> f64>(&self, u: &mut DMatrix<f64>, t: f64, boundary: &B) {
        let s = self.grid.size();
        for i in 0..s {
            for j in 0..s {
                if self.grid.is_boundary(i, j) {
                    u[(i, j)] = boundary(self.grid.node(i), self.grid.node(j), t);
                }
            }
        }
    }

    /// One Crank–Nicolson step of ∂_t u = Δu + c·u from t_old to t_new.
    pub fn step<B: Fn(f64, f64, f64) -> f64>(&self, u: &mut DMatrix<f64>, t_new: f64, dt: f64, c: f64, boundary: &B) {
        let m = self.grid.interior;
        let h2 = self.grid.spacing().powi(2);
        let lap = self.grid.laplacian(u);
        let mut rhs = DMatrix::from_fn(m, m, |i, j| {
            let v = u[(i + 1, j + 1)];
            v + 0.5 * dt * (lap[(i + 1, j + 1)] + c * v)
        });
        self.set_boundary(u, t_new, boundary);
        for k in 0..m {
            rhs[(0, k)] += 0.5 * dt * u[(0, k + 1)] / h2;
            rhs[(m - 1, k)] += 0.5 * dt * u[(m + 1, k + 1)] / h2;
            rhs[(k, 0)] += 0.5 * dt * u[(k + 1, 0)] / h2;
            rhs[(k, m - 1)] += 0.5 * dt * u[(k + 1, m + 1)] / h2;
        }
        let mut spec = &self.sine * rhs * &self.sine;
        for i in 0..m {
            for j in 0..m {
                spec[(i, j)] /= 1.0 - 0.5 * dt * (self.eig[i] + self.eig[j] + c);
            }
        }
        let sol = &self.sine * spec * &self.sine;
        u.view_mut((1, 1), (m, m)).copy_from(&sol);
    }
}

/// Evolve one mode coefficient v_m from t₀ to t₁ < 0.
///
/// `initial` holds node values at t₀ (boundary nodes are overwritten by the
/// boundary data); `boundary(z₁, z₂, t)` gives v_m on ∂Ω.
pub fn evolve_mode<B: Fn(f64, f64, f64) -> f64>(
    n: usize,
    lambda: f64,
    grid: ZGrid,
    initial: &DMatrix<f64>,
    t0: f64,
    t1: f64,
    boundary: &B,
    opts: &EvolveOptions,
) -> Result<ModeRecord> {
    if !(t0 < t1 && t1 < 0.0) {
        return Err(Error::Domain(format!("need t0 < t1 < 0, got {t0}, {t1}")));
    }
    if !(opts.step_ratio > 0.0 && opts.step_ratio < 1.0) || !(opts.max_step > 0.0) {
        return Err(Error::Resolution(format!("step ratio {} must lie in (0,1)", opts.step_ratio)));
    }
    if initial.nrows() != grid.size() || initial.ncols() != grid.size() {
        return Err(Error::Domain("initial data does not match the grid".into()));
    }
    let a = gauge_exponent(n, lambda);
    let solver = HeatSolver::new(grid);
    let nodes = time_nodes(t0, t1, opts.step_ratio, opts.max_step, &opts.record);
    let keep = |t: f64| t == t0 || t == t1 || opts.record.iter().any(|r| (r - t).abs() <= 1e-12 * t.abs().max(1.0));
    let mut times = Vec::new();
    let mut values = Vec::new();
    match opts.path {
        EvolutionPath::Direct => {
            let mut u = initial.clone();
            solver.set_boundary(&mut u, t0, boundary);
            times.push(t0);
            values.push(u.clone());
            for w in nodes.windows(2) {
                let (ta, tb) = (w[0], w[1]);
                let c = a / (-0.5 * (ta + tb));
                solver.step(&mut u, tb, tb - ta, c, boundary);
                if keep(tb) {
                    times.push(tb);
                    values.push(u.clone());
                }
            }
        }
        EvolutionPath::Gauged => {
            let gauge = |t: f64| (-t).powf(a);
            let hat_boundary = |z1: f64, z2: f64, t: f64| boundary(z1, z2, t) * gauge(t);
            let mut u = initial * gauge(t0);
            solver.set_boundary(&mut u, t0, &hat_boundary);
            times.push(t0);
            values.push(&u / gauge(t0));
            for w in nodes.windows(2) {
                let (ta, tb) = (w[0], w[1]);
                solver.step(&mut u, tb, tb - ta, 0.0, &hat_boundary);
                if keep(tb) {
                    times.push(tb);
                    values.push(&u / gauge(tb));
                }
            }
        }
    }
    Ok(ModeRecord { n, lambda, grid, times, values, steps: nodes.len() - 1 })
}
