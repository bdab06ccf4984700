use super::{max_of, Experiment, Outcome};
use crate::error::Result;
use crate::row;
use crate::svg::{Chart, Mark, Series};
use crate::table::{Assertion, Table};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use solsym::rotation::RotationFieldSet;
use solsym::spectral::{
    level_one_sweep, decay_exponent_sweep, mode0_check, mode_decay_sweep, DecayConfig, RadialGraph, SphereSpectrum, ZGrid,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub n: usize,
    /// Level whose time decay is fitted.
    pub l: usize,
    pub exponent_eps: f64,
    /// Start times are log-spaced from `t_first` to `t_last`; all runs end at t = −1.
    pub t_first: f64,
    pub t_last: f64,
    pub start_times: usize,
    pub exponent_half_width: f64,
    pub exponent_interior: usize,
    pub exponent_step_ratio: f64,
    /// Allowed relative error of the fitted time exponent.
    pub exponent_tol: f64,
    /// L₀ = 2^k·n^{5/2} for each k.
    pub l0_exponents: Vec<i32>,
    pub l_max: usize,
    pub interior: usize,
    pub step_ratio: f64,
    pub eval_radius: f64,
    pub eval_t_first: f64,
    pub eval_t_last: f64,
    /// The aggregate's L₀ power must be at most −1/(n−2) + power_slack.
    pub power_slack: f64,
    pub level_one_l0_exponents: Vec<i32>,
    /// Affine part A + B z₁ + C z₂ of the level-one boundary data.
    pub level_one_affine: Vec<f64>,
    pub level_one_eps: f64,
    pub mode0_radii: usize,
    pub mode0_l_max: usize,
    pub mode0_amplitude: f64,
    pub mode0_tol: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            n: 4,
            l: 2,
            exponent_eps: 1.0,
            t_first: -100.0,
            t_last: -2.0,
            start_times: 12,
            exponent_half_width: 80.0,
            exponent_interior: 31,
            exponent_step_ratio: 0.01,
            exponent_tol: 0.05,
            l0_exponents: vec![4, 5, 6, 7],
            l_max: 8,
            interior: 63,
            step_ratio: 0.05,
            eval_radius: 4.0,
            eval_t_first: -16.0,
            eval_t_last: -1.0,
            power_slack: 0.1,
            level_one_l0_exponents: vec![5, 6, 7],
            level_one_affine: vec![0.1, 0.01, -0.02],
            level_one_eps: 1e-3,
            mode0_radii: 100,
            mode0_l_max: 4,
            mode0_amplitude: 0.05,
            mode0_tol: 1e-10,
            seed: 9,
        }
    }
}

pub struct ModeDecay;

fn l0s(n: usize, ks: &[i32]) -> Vec<f64> {
    ks.iter().map(|&k| 2f64.powi(k) * (n as f64).powf(2.5)).collect()
}

/// Round cylinder radius in [1, 3] plus small z-modulated harmonics.
fn random_radius(sp: &SphereSpectrum, g: ZGrid, amplitude: f64, rng: &mut ChaCha8Rng) -> Result<RadialGraph> {
    let nm = sp.num_modes();
    let amp: Vec<f64> = (0..nm).map(|_| rng.gen_range(-amplitude..=amplitude)).collect();
    let kz: Vec<(f64, f64)> = (0..nm).map(|_| (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))).collect();
    let base = rng.gen_range(1.0..3.0);
    let sp2 = sp.clone();
    Ok(RadialGraph::from_fn(sp, g, -1.0, move |th, z1, z2| {
        let c: Vec<f64> = (0..nm).map(|m| amp[m] * (kz[m].0 * z1 + kz[m].1 * z2).cos()).collect();
        let p = sp2.grid.points.iter().position(|q| q == th).expect("node on the quadrature grid");
        base + sp2.inverse(&c)[p]
    })?)
}

impl Experiment for ModeDecay {
    const NAME: &'static str = "mode-decay";
    const BUDGET_S: f64 = 130.0;
    type Config = Config;

    fn run(cfg: &Config) -> Result<Outcome> {
        let mut out = Outcome::default();
        let n = cfg.n;

        // Time exponent of a single level.
        let m = cfg.start_times.max(2);
        let ts: Vec<f64> =
            (0..m).map(|k| cfg.t_first * (cfg.t_last / cfg.t_first).powf(k as f64 / (m - 1) as f64)).collect();
        let grid = ZGrid::new(cfg.exponent_half_width, cfg.exponent_interior)?;
        let ex = decay_exponent_sweep(n, cfg.l, &ts, cfg.exponent_eps, grid, cfg.exponent_step_ratio)?;
        let mut t = Table::new("time_decay.csv", &["start_time", "center_value_at_minus_one"]);
        for (t0, v) in ex.start_times.iter().zip(&ex.final_values) {
            t.push(row![*t0, *v]);
        }
        out.tables.push(t);
        let rel = (ex.fitted_exponent - ex.expected_exponent).abs() / ex.expected_exponent.abs();
        let mut fit = Table::new("time_exponent.csv", &["n", "l", "fitted_exponent", "expected_exponent", "relative_error"]);
        fit.push(row![n, cfg.l, ex.fitted_exponent, ex.expected_exponent, rel]);
        out.tables.push(fit);
        out.assertions.push(Assertion::le("time_exponent_relative_error", rel, cfg.exponent_tol));
        out.plots.push(
            Chart::new(&format!("Level {} decay from start time t0 to t = -1", cfg.l), "-t0", "v(0, -1)")
                .log_x()
                .log_y()
                .with(Series::new(
                    "measured",
                    ex.start_times.iter().map(|t| -t).zip(ex.final_values.iter().copied()).collect(),
                    Mark::Points,
                ))
                .with(Series::new(
                    format!("(-t0)^{}", ex.expected_exponent),
                    ex.start_times
                        .iter()
                        .map(|t| (-t, ex.final_values[0] * (t / ex.start_times[0]).powf(ex.expected_exponent)))
                        .collect(),
                    Mark::Dashed,
                ))
                .plot("time_decay.svg"),
        );

        // Aggregate over levels m ≥ n against L₀.
        let dc = DecayConfig {
            n,
            l_max: cfg.l_max,
            interior: cfg.interior,
            step_ratio: cfg.step_ratio,
            eval_radius: cfg.eval_radius,
            eval_window: (cfg.eval_t_first, cfg.eval_t_last),
            ..Default::default()
        };
        let sweep = mode_decay_sweep(&l0s(n, &cfg.l0_exponents), &dc)?;
        let mut levels = Table::new("level_sups.csv", &["l0", "l", "multiplicity", "sup", "envelope_ratio"]);
        let mut agg = Table::new("aggregate.csv", &["l0", "aggregate"]);
        for r in &sweep.rows {
            for lv in &r.levels {
                levels.push(row![r.l0, lv.l, lv.multiplicity, lv.sup, lv.envelope_ratio]);
            }
            agg.push(row![r.l0, r.aggregate]);
        }
        out.tables.push(levels);
        out.tables.push(agg);
        let bound = -1.0 / (n as f64 - 2.0) + cfg.power_slack;
        let mut pw = Table::new("aggregate_power.csv", &["fitted_power", "bound"]);
        pw.push(row![sweep.fitted_power, bound]);
        out.tables.push(pw);
        out.assertions.push(Assertion::le("aggregate_l0_power", sweep.fitted_power, bound));
        out.plots.push(
            Chart::new("Aggregate of levels m >= n", "L0", "sup sum |v_m|")
                .log_x()
                .log_y()
                .with(Series::new("aggregate", sweep.rows.iter().map(|r| (r.l0, r.aggregate)).collect(), Mark::Line))
                .plot("aggregate.svg"),
        );

        // Level one: affine part plus O(1/L₀) remainder.
        let affine = match cfg.level_one_affine.as_slice() {
            [a, b, c] => (*a, *b, *c),
            _ => return Err(crate::CliError::Config("level_one_affine needs three entries".into())),
        };
        let c2 = level_one_sweep(n, &l0s(n, &cfg.level_one_l0_exponents), affine, cfg.level_one_eps, cfg.interior, cfg.step_ratio)?;
        let mut t2 = Table::new("level_one.csv", &["l0", "a", "b", "c", "residual", "second_difference", "constant"]);
        for r in &c2 {
            t2.push(row![r.l0, r.report.a, r.report.b, r.report.c, r.report.residual, r.report.second_difference, r.constant]);
        }
        out.tables.push(t2);
        out.assertions.push(Assertion::lt("level_one_constant", max_of(c2.iter().map(|r| r.constant)), f64::INFINITY));

        // Mode-0 divergence identity on random radius functions.
        let sp = SphereSpectrum::new(n, cfg.mode0_l_max)?;
        let g = ZGrid::new(2.0, 3)?;
        let fields = RotationFieldSet::standard(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut t0 = Table::new("mode0.csv", &["radius", "node1", "node2", "alpha", "divergence_integral", "weighted_mean", "plain_mean"]);
        let mut worst = 0.0f64;
        for k in 0..cfg.mode0_radii {
            let graph = random_radius(&sp, g, cfg.mode0_amplitude, &mut rng)?;
            let node = (rng.gen_range(0..g.size()), rng.gen_range(0..g.size()));
            for alpha in 0..fields.basis.len() {
                let r = mode0_check(&graph, &sp, node, &fields, alpha)?;
                worst = max_of([worst, r.divergence_integral.abs()]);
                t0.push(row![k, node.0, node.1, alpha, r.divergence_integral, r.weighted_mean, r.plain_mean]);
            }
        }
        out.tables.push(t0);
        out.assertions.push(Assertion::le("mode0_max_divergence_integral", worst, cfg.mode0_tol));
        Ok(out)
    }
}
