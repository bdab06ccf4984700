use super::{max_of, Experiment, Outcome};
use crate::error::Result;
use crate::row;
use crate::svg::{Chart, Mark, Series};
use crate::table::{Assertion, Table};
use serde::{Deserialize, Serialize};
use solsym::heat_kernel::{boundary_flux, flux_sweep, mass_bound, ImageKernel};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub l: f64,
    /// Points per axis of the x lattice over Ω_{L/25}.
    pub x_points: usize,
    pub ss: Vec<f64>,
    pub kernel_tol: f64,
    pub mass_times: Vec<f64>,
    pub mass_slack: f64,
    /// Ratios s/L² at which L and 2L are compared.
    pub scaling_ratios: Vec<f64>,
    pub scaling_l: f64,
    pub scaling_tol: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            l: 4.0,
            x_points: 5,
            ss: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            kernel_tol: 1e-12,
            mass_times: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            mass_slack: 1e-6,
            scaling_ratios: vec![1.0 / 32.0, 1.0 / 16.0, 1.0 / 4.0],
            scaling_l: 2.0,
            scaling_tol: 0.2,
        }
    }
}

pub struct FluxBound;

impl Experiment for FluxBound {
    const NAME: &'static str = "flux-bound";
    const BUDGET_S: f64 = 60.0;
    type Config = Config;

    fn run(cfg: &Config) -> Result<Outcome> {
        let k = ImageKernel::new(cfg.l, cfg.kernel_tol)?;
        let r = cfg.l / 25.0;
        let m = cfg.x_points.max(1);
        let axis: Vec<f64> =
            (0..m).map(|i| if m == 1 { 0.0 } else { -r + 2.0 * r * i as f64 / (m - 1) as f64 }).collect();
        let xs: Vec<[f64; 2]> = axis.iter().flat_map(|&a| axis.iter().map(move |&b| [a, b])).collect();
        let sweep = flux_sweep(&k, &xs, &cfg.ss)?;
        let mut out = Outcome::default();

        let mut t = Table::new(
            "flux.csv",
            &["l", "x1", "x2", "s", "flux", "envelope_50", "envelope_1000", "flux_over_envelope_50", "flux_over_envelope_1000"],
        );
        for row in &sweep.rows {
            t.push(row![
                row.l,
                row.x1,
                row.x2,
                row.s,
                row.flux,
                row.envelope_50,
                row.envelope_1000,
                row.flux / row.envelope_50,
                row.flux / row.envelope_1000
            ]);
        }
        out.tables.push(t);
        let mut c = Table::new("constants.csv", &["envelope", "exponent_constant", "empirical_c"]);
        c.push(row!["envelope_50", 50.0, sweep.constant_50]);
        c.push(row!["envelope_1000", 1000.0, sweep.constant_1000]);
        out.tables.push(c);
        out.assertions.push(Assertion::lt("envelope_50_constant", sweep.constant_50, f64::INFINITY));
        out.assertions.push(Assertion::gt("envelope_50_constant_positive", sweep.constant_50, 0.0));
        out.assertions.push(Assertion::lt("envelope_1000_constant", sweep.constant_1000, f64::INFINITY));

        let mut mt = Table::new("mass.csv", &["x1", "x2", "t", "mass", "error"]);
        let mut worst_mass = f64::NEG_INFINITY;
        for x in &xs {
            for &time in &cfg.mass_times {
                let mb = mass_bound(&k, *x, time)?;
                worst_mass = max_of([worst_mass, mb.value + mb.error]);
                mt.push(row![x[0], x[1], time, mb.value, mb.error]);
            }
        }
        out.tables.push(mt);
        out.assertions.push(Assertion::le("max_mass_plus_error", worst_mass, 1.0 + cfg.mass_slack));

        // flux·s²/L² at fixed s/L² should not depend on L.
        let normalized = |l: f64, s: f64| -> Result<f64> {
            let kl = ImageKernel::new(l, cfg.kernel_tol)?;
            Ok(boundary_flux(&kl, [0.0, 0.0], s)?.value * s * s / (l * l))
        };
        let (la, lb) = (cfg.scaling_l, 2.0 * cfg.scaling_l);
        let mut st = Table::new("scaling.csv", &["s_over_l2", "l_small", "normalized_small", "l_large", "normalized_large", "relative_gap"]);
        let mut worst_gap = f64::NEG_INFINITY;
        for &q in &cfg.scaling_ratios {
            let a = normalized(la, q * la * la)?;
            let b = normalized(lb, q * lb * lb)?;
            let gap = (a / b - 1.0).abs();
            worst_gap = max_of([worst_gap, gap]);
            st.push(row![q, la, a, lb, b, gap]);
        }
        out.tables.push(st);
        out.assertions.push(Assertion::le("max_scaling_gap", worst_gap, cfg.scaling_tol));

        let at_origin: Vec<_> = sweep.rows.iter().filter(|r| r.x1 == axis[m / 2] && r.x2 == axis[m / 2]).collect();
        out.plots.push(
            Chart::new("Boundary flux against the envelope", "s", "flux")
                .log_x()
                .log_y()
                .with(Series::new("flux, all x", sweep.rows.iter().map(|r| (r.s, r.flux)).collect(), Mark::Points))
                .with(Series::new(
                    "C * envelope (50)",
                    at_origin.iter().map(|r| (r.s, sweep.constant_50 * r.envelope_50)).collect(),
                    Mark::Dashed,
                ))
                .plot("flux.svg"),
        );
        Ok(out)
    }
}
