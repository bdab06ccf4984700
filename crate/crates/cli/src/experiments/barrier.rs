use super::{max_of, Experiment, Outcome};
use crate::error::Result;
use crate::row;
use crate::svg::{Chart, Mark, Series};
use crate::table::{Assertion, Table};
use serde::{Deserialize, Serialize};
use solsym::barrier::{barrier_sweep, BarrierSweepConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub n: usize,
    pub lambda1: f64,
    /// Measured on Bowl×ℝ when null.
    pub c_n: Option<f64>,
    pub eps: f64,
    pub constant: f64,
    pub rings: usize,
    pub z_points: usize,
    pub t_points: usize,
    pub sphere_res: usize,
    pub j_max: usize,
    pub sweep_len: usize,
    pub sweep_step: usize,
    /// Two-sided tolerance on fitted/expected decay rate.
    pub rate_tol: f64,
    /// One-sided check: fitted rate at least this fraction of the expected one.
    pub rate_floor: f64,
}

impl Default for Config {
    fn default() -> Self {
        let c = BarrierSweepConfig::default();
        Self {
            n: c.n,
            lambda1: c.lambda1,
            c_n: c.c_n,
            eps: c.eps,
            constant: c.constant,
            rings: c.rings,
            z_points: c.z_points,
            t_points: c.t_points,
            sphere_res: c.sphere_res,
            j_max: c.j_max,
            sweep_len: c.sweep_len,
            sweep_step: c.sweep_step,
            rate_tol: 0.2,
            rate_floor: 0.8,
        }
    }
}

pub struct BarrierSweepExp;

const PIECES: [&str; 3] = ["lateral", "split", "initial"];

impl Experiment for BarrierSweepExp {
    const NAME: &'static str = "barrier-sweep";
    const BUDGET_S: f64 = 300.0;
    type Config = Config;

    fn run(cfg: &Config) -> Result<Outcome> {
        let bc = BarrierSweepConfig {
            n: cfg.n,
            lambda1: cfg.lambda1,
            c_n: cfg.c_n,
            eps: cfg.eps,
            constant: cfg.constant,
            rings: cfg.rings,
            z_points: cfg.z_points,
            t_points: cfg.t_points,
            sphere_res: cfg.sphere_res,
            j_max: cfg.j_max,
            sweep_len: cfg.sweep_len,
            sweep_step: cfg.sweep_step,
        };
        let s = barrier_sweep(&bc)?;
        let mut out = Outcome::default();

        let mut th = Table::new("thresholds.csv", &["quantity", "value"]);
        th.push(row!["c_n", s.c_n]);
        for (k, v) in s.phi.thresholds.iter().enumerate() {
            th.push(row![format!("phi_condition_{}_threshold", k + 1), *v]);
        }
        th.push(row!["phi_analytic_slope_threshold", s.phi.analytic_slope_threshold]);
        th.push(row!["phi_j1", s.phi.j1]);
        th.push(row!["coefficient_threshold", s.coefficient_threshold]);
        th.push(row!["j1", s.j1]);
        th.push(row!["log2_final_constant", s.log2_final_constant]);
        th.push(row!["max_principle_tolerance", s.max_principle_tolerance]);
        out.tables.push(th);

        let mut rows = Table::new(
            "rows.csv",
            &[
                "j",
                "coefficient_max",
                "log_amplitude",
                "log_interior",
                "log_boundary",
                "max_principle",
                "log2_lateral",
                "log2_split",
                "log2_initial",
                "log2_center_defect",
                "log2_chain_bound",
                "log2_target",
            ],
        );
        for r in &s.rows {
            rows.push(row![
                r.j,
                r.coefficient_max,
                r.log_amplitude,
                r.report.log_interior,
                r.report.log_boundary(),
                r.report.pass,
                r.log2_lateral,
                r.log2_split,
                r.log2_initial,
                r.log2_center_defect,
                r.log2_chain_bound,
                r.log2_target
            ]);
        }
        out.tables.push(rows);

        let mut rt = Table::new("rates.csv", &["piece", "fitted_rate", "expected_rate", "relative_deviation", "ratio"]);
        for k in 0..3 {
            let (got, want) = (s.rates[k], s.expected_rates[k]);
            rt.push(row![PIECES[k], got, want, (got / want - 1.0).abs(), got / want]);
        }
        out.tables.push(rt);

        out.assertions.push(Assertion::lt("max_coefficient_over_sweep", max_of(s.rows.iter().map(|r| r.coefficient_max)), 0.0));
        out.assertions.push(Assertion::le(
            "coefficient_threshold_minus_j1",
            s.coefficient_threshold.map(|c| c as f64 - s.j1 as f64).unwrap_or(f64::NAN),
            0.0,
        ));
        out.assertions.push(Assertion::le(
            "max_principle_failures",
            s.rows.iter().filter(|r| !r.report.pass).count() as f64,
            0.0,
        ));
        for k in 0..3 {
            let ratio = s.rates[k] / s.expected_rates[k];
            out.assertions.push(Assertion::le(format!("{}_rate_relative_deviation", PIECES[k]), (ratio - 1.0).abs(), cfg.rate_tol));
            out.assertions.push(Assertion::ge(format!("{}_rate_over_expected", PIECES[k]), ratio, cfg.rate_floor));
        }
        out.assertions.push(Assertion::lt("log2_final_constant", s.log2_final_constant, f64::INFINITY));

        let js: Vec<f64> = s.rows.iter().map(|r| r.j as f64).collect();
        let pieces: Vec<Vec<f64>> = vec![
            s.rows.iter().map(|r| r.log2_lateral).collect(),
            s.rows.iter().map(|r| r.log2_split).collect(),
            s.rows.iter().map(|r| r.log2_initial).collect(),
        ];
        let mut chart = Chart::new("Barrier sups on the boundary pieces", "j", "log2 sup |f|");
        for k in 0..3 {
            let measured: Vec<(f64, f64)> = js.iter().copied().zip(pieces[k].iter().copied()).collect();
            chart.series.push(Series::new(PIECES[k], measured, Mark::Line));
        }
        if let Some(&j0) = js.first() {
            // Reference slopes anchored at the first row of each piece.
            for k in 0..3 {
                let (y0, rate) = (pieces[k][0], s.expected_rates[k]);
                let line: Vec<(f64, f64)> = js.iter().map(|&j| (j, y0 - rate * (j - j0))).collect();
                chart.series.push(Series::new(format!("{} slope -{rate}", PIECES[k]), line, Mark::Dashed));
            }
        }
        out.plots.push(chart.plot("boundary_decay.svg"));
        Ok(out)
    }
}
