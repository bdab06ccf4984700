use super::{max_of, Experiment, Outcome};
use crate::error::Result;
use crate::row;
use crate::svg::{Chart, Mark, Series};
use crate::table::{Assertion, Table};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use solsym::heat_kernel::{eigen, ImageKernel};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub l: f64,
    pub queries: usize,
    /// Times are log-uniform in [t_min, t_max].
    pub t_min: f64,
    pub t_max: f64,
    pub kernel_tol: f64,
    pub max_deviation: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self { l: 4.0, queries: 1000, t_min: 0.01, t_max: 16.0, kernel_tol: 1e-12, max_deviation: 1e-8, seed: 2024 }
    }
}

pub struct KernelOracle;

impl Experiment for KernelOracle {
    const NAME: &'static str = "kernel-oracle";
    const BUDGET_S: f64 = 60.0;
    type Config = Config;

    fn run(cfg: &Config) -> Result<Outcome> {
        let k = ImageKernel::new(cfg.l, cfg.kernel_tol)?;
        if !(cfg.t_min > 0.0 && cfg.t_max >= cfg.t_min) {
            return Err(crate::CliError::Config("need 0 < t_min <= t_max".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let l = cfg.l;
        let mut t = Table::new("queries.csv", &["x1", "x2", "y1", "y2", "t", "images", "eigen_series", "abs_difference", "image_error_bound"]);
        let mut worst = 0.0f64;
        let mut worst_bound = 0.0f64;
        let mut pts = Vec::new();
        for _ in 0..cfg.queries {
            let x = [rng.gen_range(-l..l), rng.gen_range(-l..l)];
            let y = [rng.gen_range(-l..l), rng.gen_range(-l..l)];
            let time = cfg.t_min * (cfg.t_max / cfg.t_min).powf(rng.gen_range(0.0..1.0));
            let a = k.eval(x, y, time)?;
            let b = eigen::square(l, x, y, time);
            let d = (a.value - b).abs();
            worst = max_of([worst, d]);
            worst_bound = max_of([worst_bound, a.error]);
            pts.push((time, d.max(1e-18)));
            t.push(row![x[0], x[1], y[0], y[1], time, a.value, b, d, a.error]);
        }
        let mut out = Outcome::default();
        out.tables.push(t);
        out.assertions.push(Assertion::le("max_abs_difference", worst, cfg.max_deviation));
        out.assertions.push(Assertion::le("max_image_error_bound", worst_bound, cfg.kernel_tol));
        out.plots.push(
            Chart::new("Image sum against eigenfunction series", "t", "|difference| (floored at 1e-18)")
                .log_x()
                .log_y()
                .with(Series::new("queries", pts, Mark::Points))
                .with(Series::new("tolerance", vec![(cfg.t_min, cfg.max_deviation), (cfg.t_max, cfg.max_deviation)], Mark::Dashed))
                .plot("oracle.svg"),
        );
        Ok(out)
    }
}
