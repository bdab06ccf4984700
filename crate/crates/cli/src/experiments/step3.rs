use super::{max_of, min_of, Experiment, Outcome};
use crate::error::{CliError, Result};
use crate::row;
use crate::svg::{Chart, Mark, Series};
use crate::table::{Assertion, Table};
use serde::{Deserialize, Serialize};
use solsym::barrier::{step3_constants, step3_validity_threshold, translator_step3_barrier, BowlModel, Step3Config};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub n: usize,
    pub lambda: f64,
    pub eps1: f64,
    pub constant: f64,
    pub rings: usize,
    pub t_points: usize,
    pub sphere_res: usize,
    pub js: Vec<usize>,
    /// λ_j − 2c_j² is tabulated for j = 1..=identity_j_max.
    pub identity_j_max: usize,
}

impl Default for Config {
    fn default() -> Self {
        let c = Step3Config::default();
        Self {
            n: c.n,
            lambda: c.lambda,
            eps1: c.eps1,
            constant: c.constant,
            rings: c.rings,
            t_points: c.t_points,
            sphere_res: c.sphere_res,
            js: vec![700, 750, 800, 850, 900, 950, 1000],
            identity_j_max: 4000,
        }
    }
}

pub struct TranslatorStep3;

impl Experiment for TranslatorStep3 {
    const NAME: &'static str = "translator-step3";
    const BUDGET_S: f64 = 300.0;
    type Config = Config;

    fn run(cfg: &Config) -> Result<Outcome> {
        let sc = Step3Config {
            n: cfg.n,
            lambda: cfg.lambda,
            eps1: cfg.eps1,
            constant: cfg.constant,
            rings: cfg.rings,
            t_points: cfg.t_points,
            sphere_res: cfg.sphere_res,
        };
        let j_top = *cfg.js.iter().max().ok_or_else(|| CliError::Config("js is empty".into()))?;
        let model = BowlModel::bowl(cfg.n, 2f64.powf(j_top as f64 / 100.0) * cfg.lambda, cfg.sphere_res)?;
        let mut out = Outcome::default();

        let mut id = Table::new("identity.csv", &["j", "lambda_j", "c_j", "lambda_j_minus_2c_j2"]);
        let mut worst = f64::NEG_INFINITY;
        for j in 1..=cfg.identity_j_max {
            let (l, c) = step3_constants(j);
            let v = l - 2.0 * c * c;
            worst = max_of([worst, v]);
            id.push(row![j, l, c, v]);
        }
        out.tables.push(id);
        out.assertions.push(Assertion::lt("max_lambda_j_minus_2c_j2", worst, 0.0));

        let validity = step3_validity_threshold(&sc, &model, j_top)?;
        let mut js = cfg.js.clone();
        js.sort_unstable();
        out.assertions.push(Assertion::le(
            "validity_threshold_minus_first_j",
            validity.map(|v| v as f64 - js[0] as f64).unwrap_or(f64::NAN),
            0.0,
        ));
        let rows = js.iter().map(|&j| translator_step3_barrier(j, &sc, &model)).collect::<solsym::Result<Vec<_>>>()?;
        let mut t = Table::new(
            "rows.csv",
            &[
                "j",
                "lambda_j",
                "c_j",
                "identity",
                "coefficient_max",
                "validity_ratio",
                "lateral",
                "initial",
                "interior",
                "aggregate",
                "aggregate_bound",
                "log2_slab_weight",
                "slab_weight_ok",
                "max_principle",
            ],
        );
        for r in &rows {
            t.push(row![
                r.j,
                r.lambda_j,
                r.c_j,
                r.identity,
                r.coefficient_max,
                r.validity_ratio,
                r.lateral,
                r.initial,
                r.interior,
                r.aggregate,
                r.aggregate_bound,
                r.log2_slab_weight,
                r.slab_weight_ok,
                r.max_principle
            ]);
        }
        out.tables.push(t);
        out.assertions.push(Assertion::lt("max_row_identity", max_of(rows.iter().map(|r| r.identity)), 0.0));
        out.assertions.push(Assertion::lt("max_coefficient", max_of(rows.iter().map(|r| r.coefficient_max)), 0.0));
        out.assertions.push(Assertion::gt("min_validity_ratio", min_of(rows.iter().map(|r| r.validity_ratio)), 1.0));
        out.assertions.push(Assertion::le(
            "max_aggregate_over_bound",
            max_of(rows.iter().map(|r| r.aggregate / r.aggregate_bound)),
            1.0,
        ));
        out.assertions.push(Assertion::le(
            "max_principle_failures",
            rows.iter().filter(|r| !r.max_principle).count() as f64,
            0.0,
        ));
        out.plots.push(
            Chart::new("Final-step barrier aggregate", "j", "sup |f|")
                .log_y()
                .with(Series::new("aggregate", rows.iter().map(|r| (r.j as f64, r.aggregate)).collect(), Mark::Line))
                .with(Series::new("2^(-j/4)", rows.iter().map(|r| (r.j as f64, r.aggregate_bound)).collect(), Mark::Dashed))
                .plot("aggregate.svg"),
        );
        Ok(out)
    }
}
