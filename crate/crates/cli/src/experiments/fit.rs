use super::{max_of, Experiment, Outcome};
use crate::error::Result;
use crate::row;
use crate::svg::{Chart, Mark, Series};
use crate::table::{Assertion, Table};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use solsym::geometry::{sample_model, GridSpec, ModelTag};
use solsym::linalg::elementary_antisym;
use solsym::rotation::{fit_rotation_fields, standard_so_basis, symmetry_defect, FitOptions, RotationFieldSet};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub n: usize,
    pub t: f64,
    pub starts: usize,
    /// Rotation angle of each initial frame away from the true axis.
    pub tilt: f64,
    /// Initial centers are uniform in [−q_spread, q_spread] on the sphere block.
    pub q_spread: f64,
    pub seed: u64,
    pub max_iter: usize,
    pub fit_tol: f64,
    pub q_tol: f64,
    pub split_tol: f64,
    pub defect_tol: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            n: 4,
            t: -1.0,
            starts: 20,
            tilt: 0.2,
            q_spread: 0.2,
            seed: 7,
            max_iter: 50,
            fit_tol: 1e-13,
            q_tol: 1e-6,
            split_tol: 1e-6,
            defect_tol: 1e-8,
        }
    }
}

/// Axis-aligned fields rotated by `angle` within the complement of the
/// stabilizer and recentered within the sphere block.
fn random_tilt(n: usize, angle: f64, spread: f64, rng: &mut ChaCha8Rng) -> RotationFieldSet {
    let mut xi = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n - 1 {
        for c in n - 1..n + 1 {
            xi += elementary_antisym(n + 1, i, c, rng.gen_range(-1.0..1.0));
        }
    }
    xi *= angle / (xi.norm() / 2f64.sqrt());
    let mut q = DVector::zeros(n + 1);
    for i in 0..n - 1 {
        q[i] = if spread > 0.0 { rng.gen_range(-spread..spread) } else { 0.0 };
    }
    RotationFieldSet::new(xi.exp(), q, standard_so_basis(n).expect("n ≥ 3"))
}

pub struct FitRigidity;

impl Experiment for FitRigidity {
    const NAME: &'static str = "fit-rigidity";
    const BUDGET_S: f64 = 30.0;
    type Config = Config;

    fn run(cfg: &Config) -> Result<Outcome> {
        let samples = sample_model(ModelTag::Cylinder { n: cfg.n, t: cfg.t }, &GridSpec::default(), 0.0)?;
        standard_so_basis(cfg.n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let opts = FitOptions { max_iter: cfg.max_iter, tol: cfg.fit_tol };
        let mut t = Table::new(
            "fits.csv",
            &["start", "initial_defect", "initial_q_norm", "q_norm", "split_violation", "defect", "gauge_residual", "orthogonality_error"],
        );
        let mut rows = Vec::new();
        for k in 0..cfg.starts {
            let init = random_tilt(cfg.n, cfg.tilt, cfg.q_spread, &mut rng);
            let init_defect = symmetry_defect(&init, &samples).defect;
            let (fit, rep) = fit_rotation_fields(&samples, &init, opts)?;
            let ortho = (fit.s.transpose() * &fit.s - DMatrix::identity(cfg.n + 1, cfg.n + 1)).norm();
            let r = (fit.q.norm(), fit.split_violation(), rep.defect);
            rows.push((init_defect, r));
            t.push(row![k, init_defect, init.q.norm(), r.0, r.1, r.2, fit.gauge_residual(), ortho]);
        }
        let mut out = Outcome::default();
        out.tables.push(t);
        out.assertions.push(Assertion::le("max_q_norm", max_of(rows.iter().map(|r| r.1 .0)), cfg.q_tol));
        out.assertions.push(Assertion::le("max_split_violation", max_of(rows.iter().map(|r| r.1 .1)), cfg.split_tol));
        out.assertions.push(Assertion::le("max_fitted_defect", max_of(rows.iter().map(|r| r.1 .2)), cfg.defect_tol));
        let chart = Chart::new("Rotation-field fits from tilted starts", "initial defect", "fitted defect")
            .log_x()
            .log_y()
            .with(Series::new("fits", rows.iter().map(|r| (r.0, r.1 .2.max(1e-300))).collect(), Mark::Points))
            .with(Series::new(
                "defect tolerance",
                vec![(min_init(&rows), cfg.defect_tol), (max_of(rows.iter().map(|r| r.0)), cfg.defect_tol)],
                Mark::Dashed,
            ));
        out.plots.push(chart.plot("fits.svg"));
        Ok(out)
    }
}

fn min_init(rows: &[(f64, (f64, f64, f64))]) -> f64 {
    super::min_of(rows.iter().map(|r| r.0))
}
