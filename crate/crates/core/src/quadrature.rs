//! Gauss–Legendre rules and adaptive Gauss–Kronrod integration.

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [-1, 1], ascending nodes.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_36,
    0.295_524_224_714_752_87,
];

/// One 21-point Kronrod panel: (kronrod estimate, |kronrod - gauss|).
fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[10] * fc;
    let mut g = 0.0;
    for j in 0..10 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Global adaptive Gauss–Kronrod integration to an absolute tolerance.
///
/// `breaks` are optional interior points where the integrand is known to be
/// sharp; they seed the initial partition.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
) -> Result<Integral> {
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0 });
    }
    let mut pts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&p| p > a && p < b).collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.extend(inner);
    pts.push(b);
    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::new();
    for w in pts.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk21(&mut f, w[0], w[1]);
            panels.push((w[0], w[1], v, e));
        }
    }
    const MAX_PANELS: usize = 4000;
    loop {
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= abs_tol {
            break;
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::Precision { estimate: err, tolerance: abs_tol });
        }
        let (imax, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (pa, pb, _, _) = panels[imax];
        let m = 0.5 * (pa + pb);
        if m <= pa || m >= pb {
            return Err(Error::Precision { estimate: err, tolerance: abs_tol });
        }
        let (v1, e1) = gk21(&mut f, pa, m);
        let (v2, e2) = gk21(&mut f, m, pb);
        panels[imax] = (pa, m, v1, e1);
        panels.push((m, pb, v2, e2));
    }
    panels.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let value = panels.iter().map(|p| p.2).sum();
    let error = panels.iter().map(|p| p.3).sum();
    Ok(Integral { value, error })
}

/// Tensorized 2D adaptive integration over a rectangle: an outer adaptive
/// rule whose integrand is itself an adaptive rule in the second variable.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    (a1, b1): (f64, f64),
    (a2, b2): (f64, f64),
    breaks1: &[f64],
    breaks2: &[f64],
    abs_tol: f64,
) -> Result<Integral> {
    let width = (b1 - a1).abs().max(1e-300);
    let inner_tol = 0.25 * abs_tol / width;
    let mut inner_err = 0.0f64;
    let mut failure: Option<Error> = None;
    let outer = integrate(
        |y1| match integrate(|y2| f(y1, y2), a2, b2, breaks2, inner_tol) {
            Ok(r) => {
                inner_err = inner_err.max(r.error);
                r.value
            }
            Err(e) => {
                if failure.is_none() {
                    failure = Some(e);
                }
                0.0
            }
        },
        a1,
        b1,
        breaks1,
        0.5 * abs_tol,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(Integral { value: outer.value, error: outer.error + inner_err * width })
}
