//! The registered experiments. Each one maps a flat parameter struct to
//! CSV tables, SVG plots and a list of assertions.

use crate::config;
use crate::error::Result;
use crate::svg::Plot;
use crate::table::{Assertion, Table};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

mod align;
mod barrier;
mod bowl;
mod density;
mod diameters;
mod fit;
mod flux;
mod improvement;
mod kernel;
mod modes;
mod step3;

pub use align::AlignConstant;
pub use barrier::BarrierSweepExp;
pub use bowl::BowlProfileExp;
pub use density::DensityTable;
pub use diameters::Diameters;
pub use fit::FitRigidity;
pub use flux::FluxBound;
pub use improvement::ImprovementSweep;
pub use kernel::KernelOracle;
pub use modes::ModeDecay;
pub use step3::TranslatorStep3;

#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub assertions: Vec<Assertion>,
    pub plots: Vec<Plot>,
}

pub trait Experiment {
    const NAME: &'static str;
    /// Wall-clock budget recorded in the manifest.
    const BUDGET_S: f64;
    type Config: Serialize + DeserializeOwned + Default;
    fn run(cfg: &Self::Config) -> Result<Outcome>;
}

pub type Execute = fn(&Map<String, Value>, Option<u64>) -> Result<(Map<String, Value>, Outcome)>;

#[derive(Clone, Copy)]
pub struct Entry {
    pub name: &'static str,
    pub budget_s: f64,
    pub execute: Execute,
}

fn execute<E: Experiment>(overrides: &Map<String, Value>, seed: Option<u64>) -> Result<(Map<String, Value>, Outcome)> {
    let (cfg, resolved) = config::resolve::<E::Config>(overrides, seed)?;
    Ok((resolved, E::run(&cfg)?))
}

fn entry<E: Experiment>() -> Entry {
    Entry { name: E::NAME, budget_s: E::BUDGET_S, execute: execute::<E> }
}

pub const NAMES: [&str; 11] = [
    BowlProfileExp::NAME,
    FitRigidity::NAME,
    AlignConstant::NAME,
    ModeDecay::NAME,
    KernelOracle::NAME,
    FluxBound::NAME,
    ImprovementSweep::NAME,
    BarrierSweepExp::NAME,
    TranslatorStep3::NAME,
    Diameters::NAME,
    DensityTable::NAME,
];

pub fn lookup(name: &str) -> Option<Entry> {
    let all = [
        entry::<BowlProfileExp>(),
        entry::<FitRigidity>(),
        entry::<AlignConstant>(),
        entry::<ModeDecay>(),
        entry::<KernelOracle>(),
        entry::<FluxBound>(),
        entry::<ImprovementSweep>(),
        entry::<BarrierSweepExp>(),
        entry::<TranslatorStep3>(),
        entry::<Diameters>(),
        entry::<DensityTable>(),
    ];
    all.into_iter().find(|e| e.name == name)
}

/// Default parameters of a registered experiment as flat JSON.
pub fn defaults(name: &str) -> Option<Map<String, Value>> {
    lookup(name)?;
    let empty = Map::new();
    // Resolving no overrides yields the defaults; failures here are bugs.
    macro_rules! d {
        ($($t:ty),*) => {
            $(if <$t>::NAME == name { return Some(config::resolve::<<$t as Experiment>::Config>(&empty, None).ok()?.1); })*
        };
    }
    d!(BowlProfileExp, FitRigidity, AlignConstant, ModeDecay, KernelOracle, FluxBound, ImprovementSweep, BarrierSweepExp, TranslatorStep3, Diameters, DensityTable);
    None
}

/// Largest element; NaN if any element is NaN, so it fails every assertion.
pub(crate) fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(f64::NEG_INFINITY, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

pub(crate) fn min_of(it: impl IntoIterator<Item = f64>) -> f64 {
    -max_of(it.into_iter().map(|v| -v))
}
