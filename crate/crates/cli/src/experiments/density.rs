use super::{max_of, min_of, Experiment, Outcome};
use crate::error::Result;
use crate::row;
use crate::svg::{Chart, Mark, Series};
use crate::table::{Assertion, Table};
use serde::{Deserialize, Serialize};
use solsym::convex::{shrinker_density, shrinker_density_exact};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub n: usize,
    pub ks: Vec<usize>,
    pub sphere_res: usize,
    pub flat_points: usize,
    /// Pairwise gaps must exceed this multiple of the largest error estimate.
    pub gap_factor: f64,
    /// Allowed deviation from the closed form.
    pub exact_tol: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self { n: 4, ks: vec![2, 3, 4], sphere_res: 24, flat_points: 61, gap_factor: 10.0, exact_tol: 1e-6 }
    }
}

pub struct DensityTable;

impl Experiment for DensityTable {
    const NAME: &'static str = "density-table";
    const BUDGET_S: f64 = 30.0;
    type Config = Config;

    fn run(cfg: &Config) -> Result<Outcome> {
        let rows = cfg
            .ks
            .iter()
            .map(|&k| shrinker_density(k, cfg.n, cfg.sphere_res, cfg.flat_points))
            .collect::<solsym::Result<Vec<_>>>()?;
        let mut t = Table::new("densities.csv", &["k", "n", "value", "error", "closed_form", "deviation"]);
        for r in &rows {
            let exact = shrinker_density_exact(r.k);
            t.push(row![r.k, r.n, r.value, r.error, exact, (r.value - exact).abs()]);
        }
        let mut gaps = Table::new("gaps.csv", &["k_a", "k_b", "gap", "error_a", "error_b", "gap_over_error_sum"]);
        let mut min_ratio = f64::INFINITY;
        for (i, a) in rows.iter().enumerate() {
            for b in &rows[i + 1..] {
                let gap = (a.value - b.value).abs();
                let ratio = gap / (a.error + b.error);
                min_ratio = min_of([min_ratio, ratio]);
                gaps.push(row![a.k, b.k, gap, a.error, b.error, ratio]);
            }
        }
        let mut out = Outcome::default();
        out.tables.push(t);
        out.tables.push(gaps);
        out.assertions.push(Assertion::gt("min_gap_over_error_sum", min_ratio, cfg.gap_factor));
        out.assertions.push(Assertion::le(
            "max_deviation_from_closed_form",
            max_of(rows.iter().map(|r| (r.value - shrinker_density_exact(r.k)).abs())),
            cfg.exact_tol,
        ));
        out.plots.push(
            Chart::new("Gaussian densities of generalized cylinders", "k", "Theta")
                .with(Series::new("quadrature", rows.iter().map(|r| (r.k as f64, r.value)).collect(), Mark::Points))
                .with(Series::new(
                    "closed form",
                    rows.iter().map(|r| (r.k as f64, shrinker_density_exact(r.k))).collect(),
                    Mark::Dashed,
                ))
                .plot("densities.svg"),
        );
        Ok(out)
    }
}
