use super::{max_of, Experiment, Outcome};
use crate::error::Result;
use crate::row;
use crate::svg::{Chart, Mark, Series};
use crate::table::{Assertion, Table};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use solsym::geometry::{cylinder_mean_curvature, sample_model, GridSpec, ModelTag};
use solsym::rotation::{align_field_sets, alignment_residual, random_eps_field_set};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub n: usize,
    pub t: f64,
    pub pairs: usize,
    pub eps: f64,
    /// Neighbourhood radii, in units of 1/H.
    pub ls: Vec<f64>,
    /// Radius of the ball on which each field set is ε-symmetric.
    pub defect_radius: f64,
    pub z_half_width: f64,
    pub z_points: usize,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            n: 4,
            t: -1.0,
            pairs: 100,
            eps: 1e-3,
            ls: vec![1.0, 5.0, 10.0],
            defect_radius: 2.0,
            z_half_width: 10.0,
            z_points: 21,
            seed: 3,
        }
    }
}

pub struct AlignConstant;

impl Experiment for AlignConstant {
    const NAME: &'static str = "align-constant";
    const BUDGET_S: f64 = 120.0;
    type Config = Config;

    fn run(cfg: &Config) -> Result<Outcome> {
        let grid = GridSpec { z_half_width: cfg.z_half_width, z_points: cfg.z_points, ..Default::default() };
        let s = sample_model(ModelTag::Cylinder { n: cfg.n, t: cfg.t }, &grid, 0.0)?;
        let h = cylinder_mean_curvature(cfg.n, cfg.t);
        let center = s
            .samples
            .iter()
            .min_by(|a, b| a.x.norm().total_cmp(&b.x.norm()))
            .map(|c| c.x.clone())
            .unwrap_or_else(|| DVector::zeros(cfg.n + 1));
        let ball = |l: f64| -> Vec<usize> {
            (0..s.len()).filter(|&i| (&s.samples[i].x - &center).norm() <= l / h + 1e-9).collect()
        };
        let unit = s.subset(&ball(cfg.defect_radius));
        let balls: Vec<Vec<DVector<f64>>> =
            cfg.ls.iter().map(|&l| ball(l).iter().map(|&i| s.samples[i].x.clone()).collect()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut t = Table::new(
            "pairs.csv",
            &["pair", "l", "points", "defect1", "defect2", "residual", "identity_residual", "constant"],
        );
        let mut per_l = vec![f64::NEG_INFINITY; cfg.ls.len()];
        let mut worst_defect = 0.0f64;
        let mut scatter = Vec::new();
        for pair in 0..cfg.pairs {
            let (k1, r1) = random_eps_field_set(cfg.n, &unit, cfg.eps, &mut rng)?;
            let (k2, r2) = random_eps_field_set(cfg.n, &unit, cfg.eps, &mut rng)?;
            worst_defect = worst_defect.max(r1.defect).max(r2.defect);
            let nb = k1.basis.len();
            for (li, &l) in cfg.ls.iter().enumerate() {
                let (_, res) = align_field_sets(&k1, &k2, &balls[li], h);
                let ident = alignment_residual(&k1, &k2, &balls[li], h, &DMatrix::identity(nb, nb));
                let c = res / (l * cfg.eps);
                per_l[li] = max_of([per_l[li], c]);
                scatter.push((l, c));
                t.push(row![pair, l, balls[li].len(), r1.defect, r2.defect, res, ident, c]);
            }
        }
        let mut consts = Table::new("constants.csv", &["l", "constant"]);
        for (l, c) in cfg.ls.iter().zip(&per_l) {
            consts.push(row![*l, *c]);
        }
        let c = max_of(per_l.iter().copied());
        let mut out = Outcome::default();
        out.tables.push(t);
        out.tables.push(consts);
        out.assertions.push(Assertion::le("max_pair_defect", worst_defect, cfg.eps));
        out.assertions.push(Assertion::lt("alignment_constant", c, f64::INFINITY));
        let chart = Chart::new("Aligned residual over L·ε", "L", "residual / (L ε)")
            .with(Series::new("pairs", scatter, Mark::Points))
            .with(Series::new("C", cfg.ls.iter().map(|&l| (l, c)).collect(), Mark::Dashed));
        out.plots.push(chart.plot("constant.svg"));
        Ok(out)
    }
}
