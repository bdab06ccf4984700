//! Radial profile of the rotationally symmetric translator (the Bowl).
//!
//! The profile φ solves φ''/(1+φ'²) + (k−1)φ'/r = 1 with φ(0)=φ'(0)=0,
//! where k is the dimension of the Bowl. Near r = 0 we start from the
//! series φ = r²/(2k) + b r⁴/4 + O(r⁶), b = 1/(k³(k+2)).

use crate::error::{Error, Result};
use crate::ode::{Dopri5, Stepper};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Series start radius.
pub const SERIES_RADIUS: f64 = 1e-3;
/// Default output grid spacing.
pub const DEFAULT_SPACING: f64 = 0.005;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BowlProfile {
    pub n: usize,
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    /// Largest ODE residual measured on the grid (φ'' from divided
    /// differences of φ').
    pub tolerance: f64,
}

/// φ'' from the ODE; at r = 0 the limit 1/k.
pub fn second_derivative(k: usize, r: f64, dphi: f64) -> f64 {
    if r == 0.0 {
        return 1.0 / k as f64;
    }
    (1.0 + dphi * dphi) * (1.0 - (k as f64 - 1.0) * dphi / r)
}

fn series(k: usize, r: f64) -> (f64, f64) {
    let kf = k as f64;
    let b = 1.0 / (kf * kf * kf * (kf + 2.0));
    (r * r / (2.0 * kf) + b * r.powi(4) / 4.0, r / kf + b * r.powi(3))
}

/// Solve the profile on a uniform grid of spacing [`DEFAULT_SPACING`].
pub fn solve_bowl_profile(n: usize, r_max: f64, tol: f64) -> Result<BowlProfile> {
    solve_bowl_profile_with_spacing(n, r_max, tol, DEFAULT_SPACING)
}

pub fn solve_bowl_profile_with_spacing(
    n: usize,
    r_max: f64,
    tol: f64,
    spacing: f64,
) -> Result<BowlProfile> {
    if n < 2 {
        return Err(Error::Domain(format!("bowl dimension must be at least 2, got {n}")));
    }
    if !(r_max > 0.0) || !(tol > 0.0) || !(spacing > 0.0) {
        return Err(Error::Domain("r_max, tol and spacing must be positive".into()));
    }
    let cells = (r_max / spacing).ceil() as usize;
    let h = r_max / cells as f64;
    let rhs = move |r: f64, y: &[f64; 2]| [y[1], second_derivative(n, r, y[1])];
    // The finite-difference residual tracks the global error, so the
    // integrator runs well below the requested residual bound.
    let ode_tol = (tol * 1e-3).max(1e-14);
    let solver = Dopri5 { rtol: ode_tol, atol: ode_tol, h_min: 1e-12, h_max: h };
    let mut r = Vec::with_capacity(cells + 1);
    let mut phi = Vec::with_capacity(cells + 1);
    let mut dphi = Vec::with_capacity(cells + 1);
    r.push(0.0);
    phi.push(0.0);
    dphi.push(0.0);
    let r0 = SERIES_RADIUS.min(0.5 * h);
    let (p0, d0) = series(n, r0);
    let mut st = Stepper { t: r0, y: [p0, d0], h: r0, steps: 0 };
    for i in 1..=cells {
        let ri = i as f64 * h;
        solver.advance(&rhs, &mut st, ri)?;
        r.push(ri);
        phi.push(st.y[0]);
        dphi.push(st.y[1]);
    }
    let mut prof = BowlProfile { n, r, phi, dphi, tolerance: 0.0 };
    prof.tolerance = prof.max_residual();
    Ok(prof)
}

impl BowlProfile {
    pub fn spacing(&self) -> f64 {
        self.r[1] - self.r[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// ODE residual at each interior grid point, with φ'' from fourth-order
    /// divided differences of φ' (one-sided next to the ends).
    pub fn residuals(&self) -> Vec<(f64, f64)> {
        let m = self.r.len();
        let h = self.spacing();
        let k = self.n as f64;
        let d = &self.dphi;
        let mut out = Vec::new();
        if m < 6 {
            return out;
        }
        for i in 1..m - 1 {
            let dd = if i >= 2 && i + 2 < m {
                (-d[i + 2] + 8.0 * d[i + 1] - 8.0 * d[i - 1] + d[i - 2]) / (12.0 * h)
            } else if i < 2 {
                (-3.0 * d[i - 1] - 10.0 * d[i] + 18.0 * d[i + 1] - 6.0 * d[i + 2] + d[i + 3])
                    / (12.0 * h)
            } else {
                (3.0 * d[i + 1] + 10.0 * d[i] - 18.0 * d[i - 1] + 6.0 * d[i - 2] - d[i - 3])
                    / (12.0 * h)
            };
            let ri = self.r[i];
            let res = dd / (1.0 + d[i] * d[i]) + (k - 1.0) * d[i] / ri - 1.0;
            out.push((ri, res));
        }
        out
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals().iter().fold(0.0, |a, &(_, v)| a.max(v.abs()))
    }

    /// (φ, φ', φ'') at arbitrary r ∈ [0, r_max] by quintic Hermite
    /// interpolation; φ'' from the ODE at the interpolated slope.
    pub fn eval(&self, r: f64) -> Result<(f64, f64, f64)> {
        let rmax = self.r_max();
        if !(0.0..=rmax * (1.0 + 1e-12)).contains(&r) {
            return Err(Error::Range(format!("radius {r} outside profile range [0, {rmax}]")));
        }
        let h = self.spacing();
        let i = ((r / h).floor() as usize).min(self.r.len() - 2);
        let t = ((r - self.r[i]) / h).clamp(0.0, 1.0);
        let k = self.n;
        let (p0, p1) = (self.phi[i], self.phi[i + 1]);
        let (m0, m1) = (self.dphi[i] * h, self.dphi[i + 1] * h);
        let a0 = second_derivative(k, self.r[i], self.dphi[i]) * h * h;
        let a1 = second_derivative(k, self.r[i + 1], self.dphi[i + 1]) * h * h;
        let (t2, t3, t4, t5) = (t * t, t * t * t, t.powi(4), t.powi(5));
        let hb = [
            1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
            t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
            0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5,
            0.5 * t3 - t4 + 0.5 * t5,
            -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
            10.0 * t3 - 15.0 * t4 + 6.0 * t5,
        ];
        let db = [
            -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
            1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
            t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4,
            1.5 * t2 - 4.0 * t3 + 2.5 * t4,
            -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
            30.0 * t2 - 60.0 * t3 + 30.0 * t4,
        ];
        let c = [p0, m0, a0, a1, m1, p1];
        let phi: f64 = hb.iter().zip(&c).map(|(b, v)| b * v).sum();
        let dphi: f64 = db.iter().zip(&c).map(|(b, v)| b * v).sum::<f64>() / h;
        Ok((phi, dphi, second_derivative(k, r, dphi)))
    }

    /// Radius at which r² + φ(r)² = d², by bisection on the grid interpolant.
    pub fn radius_at_distance(&self, d: f64) -> Result<f64> {
        let f = |r: f64| -> Result<f64> {
            let (p, _, _) = self.eval(r)?;
            Ok((r * r + p * p).sqrt() - d)
        };
        if f(self.r_max())? < 0.0 {
            return Err(Error::Range(format!("distance {d} beyond profile range")));
        }
        let (mut lo, mut hi) = (0.0, self.r_max());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 * hi.max(1.0) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// CSV with columns r, phi, dphi, slope_bound_holds, height_bound_holds.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["r", "phi", "dphi", "dphi_ge_r_over_n", "phi_ge_r2_over_2n"])
            .map_err(csv_err)?;
        let k = self.n as f64;
        for i in 0..self.r.len() {
            let (r, p, d) = (self.r[i], self.phi[i], self.dphi[i]);
            wr.write_record([
                format!("{r:.6}"),
                format!("{p:.17e}"),
                format!("{d:.17e}"),
                (d >= r / k).to_string(),
                (p >= r * r / (2.0 * k)).to_string(),
            ])
            .map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}
