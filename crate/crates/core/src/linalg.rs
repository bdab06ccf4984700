//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Nearest orthogonal matrix in Frobenius norm (polar factor U·Vᵀ).
pub fn polar_orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    u * vt
}

/// Haar-random orthogonal matrix from QR of a Gaussian matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            for i in 0..dim {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Random rotation (determinant +1).
pub fn random_rotation<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let mut q = random_orthogonal(dim, rng);
    if q.determinant() < 0.0 {
        for i in 0..dim {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    q
}

/// Unit Gaussian random vector.
pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<f64> {
    let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let n = v.norm();
    v / n
}

/// Elementary antisymmetric matrix with `val` at (i, j) and `-val` at (j, i).
pub fn elementary_antisym(dim: usize, i: usize, j: usize, val: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    m[(i, j)] = val;
    m[(j, i)] = -val;
    m
}

/// Least-squares line through (x, y): returns (slope, intercept).
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fit y ≈ c·x^p in log-log space; returns (p, c).
pub fn fit_power_law(x: &[f64], y: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (p, b) = fit_line(&lx, &ly);
    (p, b.exp())
}

/// Binomial coefficient as f64, zero when k > n or n < 0.
pub fn binomial(n: i64, k: i64) -> f64 {
    if k < 0 || n < 0 || k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r.round()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_orthogonal_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = random_orthogonal(5, &mut rng);
        let e = &q.transpose() * &q - DMatrix::identity(5, 5);
        assert!(e.norm() < 1e-12);
        assert!((random_rotation(5, &mut rng).determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polar_of_perturbed_rotation_is_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = random_rotation(4, &mut rng);
        let p = polar_orthonormalize(&(&q * 1.001));
        assert!((p - q).norm() < 1e-12);
    }

    #[test]
    fn power_law_recovers_exponent() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        let (p, c) = fit_power_law(&x, &y);
        assert!((p + 0.5).abs() < 1e-12 && (c - 3.0).abs() < 1e-12);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(1, 2), 0.0);
        assert_eq!(binomial(-1, 1), 0.0);
    }
}
