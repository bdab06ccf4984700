use super::{max_of, min_of, Experiment, Outcome};
use crate::error::Result;
use crate::row;
use crate::svg::{Chart, Mark, Series};
use crate::table::{Assertion, Table};
use serde::{Deserialize, Serialize};
use solsym::geometry::solve_bowl_profile;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub ns: Vec<usize>,
    pub r_max: f64,
    pub tol: f64,
    /// H < n/r is checked for r at least this large.
    pub h_check_r_min: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self { ns: vec![3, 4, 5], r_max: 50.0, tol: 1e-10, h_check_r_min: 0.1 }
    }
}

pub struct BowlProfileExp;

impl Experiment for BowlProfileExp {
    const NAME: &'static str = "bowl-profile";
    const BUDGET_S: f64 = 1.0;
    type Config = Config;

    fn run(cfg: &Config) -> Result<Outcome> {
        let mut out = Outcome::default();
        let mut phi_chart = Chart::new("Bowl profiles", "r", "phi(r)");
        let mut h_chart = Chart::new("Mean curvature against n/r", "r", "H r / n").log_y();
        for &n in &cfg.ns {
            let p = solve_bowl_profile(n, cfg.r_max, cfg.tol)?;
            let k = n as f64;
            let residuals = p.residuals();
            let mut t = Table::new(
                &format!("profile_n{n}.csv"),
                &["r", "phi", "dphi", "residual", "mean_curvature", "dphi_ge_r_over_n", "phi_ge_r2_over_2n", "h_lt_n_over_r"],
            );
            let mut slope_gap = Vec::new();
            let mut height_gap = Vec::new();
            let mut h_ratio = Vec::new();
            for i in 0..p.r.len() {
                let (r, phi, d) = (p.r[i], p.phi[i], p.dphi[i]);
                // residuals() covers the interior points 1..m−1.
                let res = (i >= 1 && i <= residuals.len()).then(|| residuals[i - 1].1);
                let h = 1.0 / (1.0 + d * d).sqrt();
                let checked = r >= cfg.h_check_r_min;
                slope_gap.push(d - r / k);
                height_gap.push(phi - r * r / (2.0 * k));
                if checked {
                    h_ratio.push(h * r / k);
                }
                t.push(row![r, phi, d, res, h, d >= r / k, phi >= r * r / (2.0 * k), checked.then_some(h < k / r)]);
            }
            out.tables.push(t);
            out.assertions.push(Assertion::le(format!("n{n}_max_residual"), p.max_residual(), cfg.tol));
            out.assertions.push(Assertion::ge(format!("n{n}_min_dphi_minus_r_over_n"), min_of(slope_gap), 0.0));
            out.assertions.push(Assertion::ge(format!("n{n}_min_phi_minus_r2_over_2n"), min_of(height_gap), 0.0));
            out.assertions.push(Assertion::lt(format!("n{n}_max_h_r_over_n"), max_of(h_ratio.iter().copied()), 1.0));
            let stride = (p.r.len() / 400).max(1);
            let pts = |f: &dyn Fn(usize) -> f64| -> Vec<(f64, f64)> {
                (0..p.r.len()).step_by(stride).map(|i| (p.r[i], f(i))).collect()
            };
            phi_chart.series.push(Series::new(format!("phi, n = {n}"), pts(&|i| p.phi[i]), Mark::Line));
            phi_chart.series.push(Series::new(format!("r^2/(2n), n = {n}"), pts(&|i| p.r[i] * p.r[i] / (2.0 * k)), Mark::Dashed));
            let hr: Vec<(f64, f64)> = pts(&|i| p.r[i] / (k * (1.0 + p.dphi[i].powi(2)).sqrt()))
                .into_iter()
                .filter(|(r, _)| *r >= cfg.h_check_r_min)
                .collect();
            h_chart.series.push(Series::new(format!("n = {n}"), hr, Mark::Line));
        }
        out.plots.push(phi_chart.plot("profiles.svg"));
        out.plots.push(h_chart.plot("mean_curvature.svg"));
        Ok(out)
    }
}
