use super::{max_of, Experiment, Outcome};
use crate::error::{CliError, Result};
use crate::row;
use crate::svg::{Chart, Mark, Series};
use crate::table::{Assertion, Table};
use serde::{Deserialize, Serialize};
use solsym::improvement::{improvement_sweep, ImprovementConfig, PerturbationKind};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub n: usize,
    /// L₀ = 2^k·n^{5/2} for each k.
    pub l0_exponents: Vec<i32>,
    pub eps: f64,
    /// Perturbed harmonic levels (1 or 2).
    pub levels: Vec<usize>,
    pub l_max: usize,
    pub interior: usize,
    pub step_ratio: f64,
    pub eval_radius: f64,
    pub eval_depth: f64,
    pub eval_points: usize,
    pub eval_times: usize,
    pub normalization_times: usize,
    pub amplitude_tol: f64,
    /// Relative increase between consecutive L₀ still counted as nonincreasing.
    pub monotone_noise: f64,
    pub target_factor: f64,
}

impl Default for Config {
    fn default() -> Self {
        let c = ImprovementConfig::default();
        Self {
            n: c.n,
            l0_exponents: vec![4, 5, 6, 7],
            eps: 1e-3,
            levels: vec![1, 2],
            l_max: c.l_max,
            interior: c.interior,
            step_ratio: c.step_ratio,
            eval_radius: c.eval_radius,
            eval_depth: c.eval_depth,
            eval_points: c.eval_points,
            eval_times: c.eval_times,
            normalization_times: c.normalization_times,
            amplitude_tol: c.amplitude_tol,
            monotone_noise: 0.05,
            target_factor: 0.5,
        }
    }
}

pub struct ImprovementSweep;

impl Experiment for ImprovementSweep {
    const NAME: &'static str = "improvement-sweep";
    const BUDGET_S: f64 = 600.0;
    type Config = Config;

    fn run(cfg: &Config) -> Result<Outcome> {
        let kinds = cfg
            .levels
            .iter()
            .map(|l| match l {
                1 => Ok(PerturbationKind::Level1),
                2 => Ok(PerturbationKind::Level2),
                other => Err(CliError::Config(format!("level {other} is not 1 or 2"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let ic = ImprovementConfig {
            n: cfg.n,
            l_max: cfg.l_max,
            interior: cfg.interior,
            step_ratio: cfg.step_ratio,
            eval_radius: cfg.eval_radius,
            eval_depth: cfg.eval_depth,
            eval_points: cfg.eval_points,
            eval_times: cfg.eval_times,
            normalization_times: cfg.normalization_times,
            amplitude_tol: cfg.amplitude_tol,
        };
        let mut l0s: Vec<f64> = cfg.l0_exponents.iter().map(|&k| 2f64.powi(k) * (cfg.n as f64).powf(2.5)).collect();
        l0s.sort_by(f64::total_cmp);
        let results = improvement_sweep(&l0s, cfg.eps, &kinds, &ic)?;
        let mut t = Table::new(
            "sweep.csv",
            &["level", "l0", "eps", "amplitude", "defect_before", "defect_after", "factor", "b_norm", "p_norm", "magnitude_after"],
        );
        for r in &results {
            t.push(row![r.level, r.l0, r.eps, r.amplitude, r.defect_before, r.defect_after, r.factor, r.b_norm, r.p_norm, r.magnitude_after]);
        }
        let mut out = Outcome::default();
        out.tables.push(t);
        let mut chart = Chart::new("Improvement factor against L0", "L0", "defect after / before").log_x().log_y();
        for &level in &cfg.levels {
            let rows: Vec<_> = results.iter().filter(|r| r.level == level).collect();
            let factors: Vec<f64> = rows.iter().map(|r| r.factor.unwrap_or(f64::NAN)).collect();
            let growth = max_of(factors.windows(2).map(|w| w[1] / w[0] - 1.0));
            if factors.len() >= 2 {
                out.assertions.push(Assertion::le(format!("level{level}_max_factor_increase"), growth, cfg.monotone_noise));
            }
            out.assertions.push(Assertion::le(
                format!("level{level}_factor_at_largest_l0"),
                factors.last().copied().unwrap_or(f64::NAN),
                cfg.target_factor,
            ));
            out.assertions.push(Assertion::le(
                format!("level{level}_max_magnitude_after"),
                max_of(rows.iter().map(|r| r.magnitude_after)),
                5.0 * cfg.n as f64,
            ));
            chart.series.push(Series::new(
                format!("level {level}"),
                rows.iter().map(|r| (r.l0, r.factor.unwrap_or(f64::NAN))).collect(),
                Mark::Line,
            ));
        }
        if let (Some(a), Some(b)) = (l0s.first(), l0s.last()) {
            chart.series.push(Series::new("1/2", vec![(*a, cfg.target_factor), (*b, cfg.target_factor)], Mark::Dashed));
        }
        out.plots.push(chart.plot("factor.svg"));
        Ok(out)
    }
}
