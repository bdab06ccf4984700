use super::{max_of, Experiment, Outcome};
use crate::error::Result;
use crate::row;
use crate::svg::{Chart, Mark, Series};
use crate::table::{Assertion, Table};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use solsym::convex::{diameters, TriMesh};
use std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub ellipsoids: usize,
    pub max_aspect: f64,
    /// Icosphere subdivision level of each random ellipsoid.
    pub ellipsoid_level: usize,
    pub sphere_level: usize,
    /// Relative tolerance of the sphere ratio against π/2.
    pub sphere_tol: f64,
    pub ratio_bound: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            ellipsoids: 1000,
            max_aspect: 20.0,
            ellipsoid_level: 1,
            sphere_level: 3,
            sphere_tol: 0.02,
            ratio_bound: 3.0,
            seed: 53,
        }
    }
}

pub struct Diameters;

impl Experiment for Diameters {
    const NAME: &'static str = "diameters";
    const BUDGET_S: f64 = 150.0;
    type Config = Config;

    fn run(cfg: &Config) -> Result<Outcome> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut t = Table::new("ellipsoids.csv", &["index", "d1", "d2", "ratio", "mesh_size"]);
        let mut pts = Vec::new();
        let mut worst = f64::NEG_INFINITY;
        for i in 0..cfg.ellipsoids {
            let m = TriMesh::random_ellipsoid(&mut rng, cfg.max_aspect, cfg.ellipsoid_level);
            let r = diameters(&m)?;
            worst = max_of([worst, r.ratio]);
            pts.push((r.d2, r.d1));
            t.push(row![i, r.d1, r.d2, r.ratio, r.h]);
        }
        let sphere = diameters(&TriMesh::icosphere(cfg.sphere_level))?;
        let mut st = Table::new("sphere.csv", &["level", "d1", "d2", "ratio", "ratio_over_half_pi", "mesh_size"]);
        st.push(row![cfg.sphere_level, sphere.d1, sphere.d2, sphere.ratio, sphere.ratio / FRAC_PI_2, sphere.h]);
        let mut out = Outcome::default();
        out.tables.push(t);
        out.tables.push(st);
        out.assertions.push(Assertion::le("max_ellipsoid_ratio", worst, cfg.ratio_bound));
        out.assertions.push(Assertion::le("sphere_ratio_relative_error", (sphere.ratio / FRAC_PI_2 - 1.0).abs(), cfg.sphere_tol));
        let d_max = max_of(pts.iter().map(|p| p.0));
        out.plots.push(
            Chart::new("Intrinsic against extrinsic diameter", "d2 (extrinsic)", "d1 (intrinsic)")
                .with(Series::new("ellipsoids", pts, Mark::Points))
                .with(Series::new("d1 = 3 d2", vec![(0.0, 0.0), (d_max, cfg.ratio_bound * d_max)], Mark::Dashed))
                .with(Series::new("d1 = d2", vec![(0.0, 0.0), (d_max, d_max)], Mark::Dashed))
                .plot("diameters.svg"),
        );
        Ok(out)
    }
}
