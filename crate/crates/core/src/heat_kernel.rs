//! Dirichlet heat kernel on the square Ω_L = [−L, L]² by the method of
//! images, with certified truncation tails.
//!
//! The signed image sum factors as K_t(x, y) = G(x₁, y₁)·G(x₂, y₂) with the
//! interval kernel G(x, y) = Σ_k [g(x − y + 4kL) − g(x + y − 2L + 4kL)] and
//! g(d) = e^{−d²/4t}/√(4πt). Truncating |k| ≤ K discards terms whose shifts
//! are at least 4(|k|−1)L, which gives a geometric tail bound.

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Integral};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const MAX_IMAGES: usize = 10_000;

fn gauss(d: f64, t: f64) -> f64 {
    (-d * d / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

fn gauss_deriv(d: f64, t: f64) -> f64 {
    -d / (2.0 * t) * gauss(d, t)
}

/// Value with a certified bound on the discarded image terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: f64,
    pub error: f64,
    pub k_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageKernel {
    pub l: f64,
    /// Target bound on the truncation error of each query.
    pub tol: f64,
}

/// Which side of the square: (axis, sign).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Side {
    pub axis: usize,
    pub positive: bool,
}

pub const SIDES: [Side; 4] = [
    Side { axis: 0, positive: true },
    Side { axis: 0, positive: false },
    Side { axis: 1, positive: true },
    Side { axis: 1, positive: false },
];

impl ImageKernel {
    pub fn new(l: f64, tol: f64) -> Result<Self> {
        if !(l > 0.0) || !(tol > 0.0) {
            return Err(Error::Domain(format!("need L > 0 and tol > 0, got {l}, {tol}")));
        }
        Ok(Self { l, tol })
    }

    /// Interval kernel truncated at |k| ≤ k_max.
    pub fn interval(&self, x: f64, y: f64, t: f64, k_max: usize) -> f64 {
        let l = self.l;
        let mut s = 0.0;
        for k in -(k_max as i64)..=(k_max as i64) {
            let shift = 4.0 * k as f64 * l;
            s += gauss(x - y + shift, t) - gauss(x + y - 2.0 * l + shift, t);
        }
        s
    }

    /// ∂G/∂y truncated at |k| ≤ k_max.
    pub fn interval_dy(&self, x: f64, y: f64, t: f64, k_max: usize) -> f64 {
        let l = self.l;
        let mut s = 0.0;
        for k in -(k_max as i64)..=(k_max as i64) {
            let shift = 4.0 * k as f64 * l;
            s += -gauss_deriv(x - y + shift, t) - gauss_deriv(x + y - 2.0 * l + shift, t);
        }
        s
    }

    /// Bound on Σ_{|k|>K} of the interval terms: four terms per |k| with
    /// shift at least 4(|k|−1)L, dominated by a geometric series.
    pub fn interval_tail(&self, t: f64, k_max: usize) -> f64 {
        let l = self.l;
        let d = 4.0 * k_max as f64 * l;
        let first = 4.0 * gauss(d, t);
        let q = (-4.0 * (2 * k_max + 1) as f64 * l * l / t).exp();
        if q >= 1.0 {
            return f64::INFINITY;
        }
        first / (1.0 - q)
    }

    /// Tail bound for ∂G/∂y. Uses that d·e^{−d²/4t} decreases once
    /// d ≥ √(2t), so it needs 4K·L ≥ √(2t).
    pub fn interval_dy_tail(&self, t: f64, k_max: usize) -> f64 {
        let l = self.l;
        let d = 4.0 * k_max as f64 * l;
        if k_max == 0 || d < (2.0 * t).sqrt() {
            return f64::INFINITY;
        }
        let first = 4.0 * gauss_deriv(d, t).abs();
        // Ratio of consecutive bounds: (j/(j−1))·e^{−4(2j−1)L²/t} ≤ 2q.
        let q = 2.0 * (-4.0 * (2 * k_max + 1) as f64 * l * l / t).exp();
        if q >= 1.0 {
            return f64::INFINITY;
        }
        first / (1.0 - q)
    }

    fn check_time(t: f64) -> Result<()> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("kernel time must be positive, got {t}")));
        }
        Ok(())
    }

    /// Smallest K ≥ 1 meeting `target` for the interval kernel.
    fn interval_order(&self, t: f64, target: f64) -> usize {
        let mut k = 1;
        while self.interval_tail(t, k) > target && k < MAX_IMAGES {
            k += 1;
        }
        k
    }

    fn interval_dy_order(&self, t: f64, target: f64) -> usize {
        let mut k = 1;
        while self.interval_dy_tail(t, k) > target && k < MAX_IMAGES {
            k += 1;
        }
        k
    }

    /// Interval kernel with adaptive truncation.
    pub fn interval_value(&self, x: f64, y: f64, t: f64) -> Result<KernelValue> {
        Self::check_time(t)?;
        let k = self.interval_order(t, self.tol);
        Ok(KernelValue { value: self.interval(x, y, t, k), error: self.interval_tail(t, k), k_max: k })
    }

    pub fn interval_dy_value(&self, x: f64, y: f64, t: f64) -> Result<KernelValue> {
        Self::check_time(t)?;
        let k = self.interval_dy_order(t, self.tol);
        Ok(KernelValue { value: self.interval_dy(x, y, t, k), error: self.interval_dy_tail(t, k), k_max: k })
    }

    /// K_t(x, y) truncated at |k₁|, |k₂| ≤ k_max.
    pub fn eval_truncated(&self, x: [f64; 2], y: [f64; 2], t: f64, k_max: usize) -> Result<KernelValue> {
        Self::check_time(t)?;
        let a = self.interval(x[0], y[0], t, k_max);
        let b = self.interval(x[1], y[1], t, k_max);
        let ta = self.interval_tail(t, k_max);
        Ok(KernelValue { value: a * b, error: ta * b.abs() + a.abs() * ta + ta * ta, k_max })
    }

    /// K_t(x, y) with K chosen so the certified error is below `tol`.
    pub fn eval(&self, x: [f64; 2], y: [f64; 2], t: f64) -> Result<KernelValue> {
        Self::check_time(t)?;
        let mut k = 1;
        loop {
            let v = self.eval_truncated(x, y, t, k)?;
            if v.error <= self.tol || k >= MAX_IMAGES {
                return Ok(v);
            }
            k += 1;
        }
    }

    /// The single image with k = 0 and no reflection: the free Gaussian.
    pub fn free_gaussian(x: [f64; 2], y: [f64; 2], t: f64) -> f64 {
        let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
        (-d2 / (4.0 * t)).exp() / (4.0 * PI * t)
    }

    /// Outward normal derivative ∂_{ν_y}K_t(x, y) at the point of `side`
    /// with tangential coordinate `s`.
    pub fn normal_derivative(&self, x: [f64; 2], side: Side, s: f64, t: f64) -> Result<KernelValue> {
        let l = self.l;
        let edge = if side.positive { l } else { -l };
        let sign = if side.positive { 1.0 } else { -1.0 };
        let (xn, xt) = (x[side.axis], x[1 - side.axis]);
        let d = self.interval_dy_value(xn, edge, t)?;
        let g = self.interval_value(xt, s, t)?;
        let value = sign * d.value * g.value;
        let error = d.error * g.value.abs() + d.value.abs() * g.error + d.error * g.error;
        Ok(KernelValue { value, error, k_max: d.k_max.max(g.k_max) })
    }
}

/// Sine-eigenfunction series for the interval and square Dirichlet kernels.
pub mod eigen {
    use std::f64::consts::PI;

    /// (1/L) Σ_m sin(mπ(x+L)/2L) sin(mπ(y+L)/2L) e^{−(mπ/2L)²t}, summed
    /// until the remaining terms are below 1e−18 in total.
    pub fn interval(l: f64, x: f64, y: f64, t: f64) -> f64 {
        let mut s = 0.0;
        let mut m = 1usize;
        loop {
            let k = m as f64 * PI / (2.0 * l);
            let decay = (-k * k * t).exp();
            s += (k * (x + l)).sin() * (k * (y + l)).sin() * decay;
            // Remaining terms are bounded by Σ_{j>m} e^{−k_j² t} ≤ decay·tail.
            let ratio = (-((2 * m + 1) as f64) * (PI / (2.0 * l)).powi(2) * t).exp();
            if decay * ratio / (1.0 - ratio).max(1e-300) < 1e-18 * l && m > 2 {
                break;
            }
            m += 1;
            if m > 1_000_000 {
                break;
            }
        }
        s / l
    }

    pub fn square(l: f64, x: [f64; 2], y: [f64; 2], t: f64) -> f64 {
        interval(l, x[0], y[0], t) * interval(l, x[1], y[1], t)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MassBound {
    pub value: f64,
    /// Quadrature error plus the certified kernel error integrated over Ω_L.
    pub error: f64,
}

fn interval_abs_integral(k: &ImageKernel, x: f64, t: f64, tol: f64) -> Result<Integral> {
    let order = k.interval_order(t, k.tol);
    let tail = k.interval_tail(t, order);
    let w = (4.0 * t).sqrt();
    let breaks = [x - 6.0 * w, x - w, x, x + w, x + 6.0 * w];
    let r = integrate(|y| k.interval(x, y, t, order).abs(), -k.l, k.l, &breaks, tol)?;
    Ok(Integral { value: r.value, error: r.error + 2.0 * k.l * tail })
}

/// ∫_{Ω_L} |K_t(x, y)| dy as the product of two interval integrals.
pub fn mass_bound(kernel: &ImageKernel, x: [f64; 2], t: f64) -> Result<MassBound> {
    ImageKernel::check_time(t)?;
    let a = interval_abs_integral(kernel, x[0], t, 1e-12)?;
    let b = interval_abs_integral(kernel, x[1], t, 1e-12)?;
    Ok(MassBound { value: a.value * b.value, error: a.error * b.value + a.value * b.error + a.error * b.error })
}

/// ∫ K_t(x, y) f(y) dy by tensor quadrature, for the delta property.
pub fn apply_kernel<F: Fn(f64, f64) -> f64>(kernel: &ImageKernel, x: [f64; 2], t: f64, f: F, tol: f64) -> Result<Integral> {
    ImageKernel::check_time(t)?;
    let order = kernel.interval_order(t, kernel.tol);
    let w = (4.0 * t).sqrt();
    let b1 = [x[0] - 8.0 * w, x[0] - w, x[0], x[0] + w, x[0] + 8.0 * w];
    let b2 = [x[1] - 8.0 * w, x[1] - w, x[1], x[1] + w, x[1] + 8.0 * w];
    let l = kernel.l;
    crate::quadrature::integrate_2d(
        |y1, y2| kernel.interval(x[0], y1, t, order) * kernel.interval(x[1], y2, t, order) * f(y1, y2),
        (-l, l),
        (-l, l),
        &b1,
        &b2,
        tol,
    )
}

/// Boundary flux ∫_{∂Ω_L} |∂_{ν_y}K_s(x, y)| dy.
pub fn boundary_flux(kernel: &ImageKernel, x: [f64; 2], s: f64) -> Result<Integral> {
    let l = kernel.l;
    if x[0].abs() > l / 25.0 + 1e-15 || x[1].abs() > l / 25.0 + 1e-15 {
        return Err(Error::Domain(format!("flux bound needs x in Ω_(L/25), got {x:?}")));
    }
    if !(s > 0.0 && s < l * l) {
        return Err(Error::Domain(format!("flux bound needs 0 < s < L², got {s}")));
    }
    let mut value = 0.0;
    let mut error = 0.0;
    for side in SIDES {
        let xn = x[side.axis];
        let xt = x[1 - side.axis];
        let edge = if side.positive { l } else { -l };
        let d = kernel.interval_dy_value(xn, edge, s)?;
        let g = interval_abs_integral(kernel, xt, s, 1e-14)?;
        value += d.value.abs() * g.value;
        error += d.error * g.value + d.value.abs() * g.error + d.error * g.error;
    }
    Ok(Integral { value, error })
}

/// Envelope L²/s²·e^{−L²/(50s)} with the domain half-side L.
pub fn envelope_50(l: f64, s: f64) -> f64 {
    l * l / (s * s) * (-l * l / (50.0 * s)).exp()
}

/// Envelope L₀²/s²·e^{−L₀²/(1000s)} with L₀ = 4L.
pub fn envelope_1000(l: f64, s: f64) -> f64 {
    let l0 = 4.0 * l;
    l0 * l0 / (s * s) * (-l0 * l0 / (1000.0 * s)).exp()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FluxRow {
    pub l: f64,
    pub x1: f64,
    pub x2: f64,
    pub s: f64,
    pub flux: f64,
    pub envelope_50: f64,
    pub envelope_1000: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluxSweep {
    pub rows: Vec<FluxRow>,
    /// Smallest C with flux ≤ C·envelope on every row.
    pub constant_50: f64,
    pub constant_1000: f64,
}

pub fn flux_sweep(kernel: &ImageKernel, xs: &[[f64; 2]], ss: &[f64]) -> Result<FluxSweep> {
    let mut rows = Vec::new();
    for &x in xs {
        for &s in ss {
            let f = boundary_flux(kernel, x, s)?;
            rows.push(FluxRow {
                l: kernel.l,
                x1: x[0],
                x2: x[1],
                s,
                flux: f.value + f.error,
                envelope_50: envelope_50(kernel.l, s),
                envelope_1000: envelope_1000(kernel.l, s),
            });
        }
    }
    let constant_50 = rows.iter().fold(0.0f64, |a, r| a.max(r.flux / r.envelope_50));
    let constant_1000 = rows.iter().fold(0.0f64, |a, r| a.max(r.flux / r.envelope_1000));
    Ok(FluxSweep { rows, constant_50, constant_1000 })
}

/// u(x, t) = ∫K_{t−t₀}(x, y)u₀(y)dy − ∫_{t₀}^{t}∫_{∂Ω}∂_{ν_y}K_{t−τ}(x, y)u_b(y, τ)dy dτ.
pub fn solve_via_kernel<F, B>(kernel: &ImageKernel, initial: F, boundary: B, x: [f64; 2], t0: f64, t: f64, tol: f64) -> Result<Integral>
where
    F: Fn(f64, f64) -> f64,
    B: Fn(f64, f64, f64) -> f64,
{
    if !(t > t0) {
        return Err(Error::Domain(format!("need t > t0, got {t0}, {t}")));
    }
    let l = kernel.l;
    let first = apply_kernel(kernel, x, t - t0, &initial, 0.5 * tol)?;
    let mut failure: Option<Error> = None;
    let side_tol = 0.1 * tol / (t - t0);
    let flux_at = |tau: f64| -> Result<f64> {
        let s = t - tau;
        if s <= 0.0 {
            return Ok(0.0);
        }
        let mut acc = 0.0;
        for side in SIDES {
            let edge = if side.positive { l } else { -l };
            let sign = if side.positive { 1.0 } else { -1.0 };
            let d = kernel.interval_dy_value(x[side.axis], edge, s)?;
            if d.value == 0.0 {
                continue;
            }
            let order = kernel.interval_order(s, kernel.tol);
            let xt = x[1 - side.axis];
            let w = (4.0 * s).sqrt();
            let breaks = [xt - 6.0 * w, xt, xt + 6.0 * w];
            let inner = integrate(
                |y| {
                    let g = kernel.interval(xt, y, s, order);
                    let pt = if side.axis == 0 { (edge, y) } else { (y, edge) };
                    g * boundary(pt.0, pt.1, tau)
                },
                -l,
                l,
                &breaks,
                side_tol / (d.value.abs() + 1e-300),
            )?;
            acc += sign * d.value * inner.value;
        }
        Ok(acc)
    };
    let second = integrate(
        |tau| match flux_at(tau) {
            Ok(v) => v,
            Err(e) => {
                if failure.is_none() {
                    failure = Some(e);
                }
                0.0
            }
        },
        t0,
        t,
        &[t - 1e-3 * (t - t0), t - 1e-2 * (t - t0), t - 0.1 * (t - t0)],
        0.4 * tol,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(Integral { value: first.value - second.value, error: first.error + second.error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_positive_time_is_a_domain_error() {
        let k = ImageKernel::new(4.0, 1e-12).unwrap();
        assert!(matches!(k.eval([0.0, 0.0], [0.0, 0.0], 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn vanishes_on_the_boundary() {
        let k = ImageKernel::new(4.0, 1e-12).unwrap();
        for t in [0.1, 1.0, 10.0] {
            let v = k.eval([0.3, -0.5], [4.0, 1.2], t).unwrap();
            assert!(v.value.abs() <= v.error.max(1e-15));
        }
    }

    #[test]
    fn central_image_is_the_free_gaussian() {
        let k = ImageKernel::new(4.0, 1e-12).unwrap();
        let (x, y, t) = ([0.2, 0.1], [-0.4, 0.7], 0.5);
        // k = 0, δ = (1,1) term of the truncated sum
        let direct = gauss(x[0] - y[0], t) * gauss(x[1] - y[1], t);
        assert!((direct - ImageKernel::free_gaussian(x, y, t)).abs() < 1e-15);
        assert!(k.eval(x, y, t).unwrap().value < direct);
    }

    #[test]
    fn matches_eigen_series() {
        let k = ImageKernel::new(4.0, 1e-13).unwrap();
        for &(x, y, t) in &[([0.5, -1.0], [1.5, 2.0], 0.3), ([3.9, 0.0], [-3.9, 1.0], 16.0), ([0.0, 0.0], [0.1, 0.0], 0.01)] {
            let a = k.eval(x, y, t).unwrap().value;
            let b = eigen::square(4.0, x, y, t);
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn tail_bound_covers_extra_images() {
        let k = ImageKernel::new(1.0, 1e-12).unwrap();
        for t in [0.5, 2.0, 8.0] {
            for km in 1..4 {
                let a = k.interval(0.3, -0.2, t, km);
                let b = k.interval(0.3, -0.2, t, km + 4);
                assert!((a - b).abs() <= k.interval_tail(t, km));
            }
        }
    }

    #[test]
    fn flux_requires_inner_region() {
        let k = ImageKernel::new(4.0, 1e-12).unwrap();
        assert!(matches!(boundary_flux(&k, [1.0, 0.0], 1.0), Err(Error::Domain(_))));
    }
}
