//! Time-sampled model flows, heights and parabolic neighbourhoods.

use super::graph::shortest_paths;
use super::model::{sample_model, GridSpec, ModelTag, SurfaceSampleSet};
use crate::error::{Error, Result};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// A flow sampled at increasing times. Every slice shares the same sample
/// indexing, so index i follows one surface point through time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowSamples {
    pub times: Vec<f64>,
    pub slices: Vec<SurfaceSampleSet>,
}

/// Translation data for translator flows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowContext {
    pub omega: DVector<f64>,
    pub tip: DVector<f64>,
    pub kappa: f64,
    pub t: f64,
}

impl FlowContext {
    /// Height h(x,t) = ⟨x,ω⟩ − t.
    pub fn height(&self, x: &DVector<f64>, t: f64) -> f64 {
        self.omega.dot(x) - t
    }
}

/// Sample a model at each of the given times.
pub fn sample_flow(tag: ModelTag, grid: &GridSpec, times: &[f64]) -> Result<FlowSamples> {
    let mut ts = times.to_vec();
    ts.sort_by(|a, b| a.total_cmp(b));
    let slices = ts
        .iter()
        .map(|&t| {
            let tag_t = match tag {
                ModelTag::Cylinder { n, .. } => ModelTag::ShrinkingCylinderFamily { n },
                other => other,
            };
            sample_model(tag_t, grid, t)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FlowSamples { times: ts, slices })
}

/// Neighbourhood samples: the kept sample indices and the slices restricted
/// to them within the time window.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    pub indices: Vec<usize>,
    pub radius: f64,
    pub window: (f64, f64),
    pub flow: FlowSamples,
}

impl Neighborhood {
    /// All samples of all kept slices, flattened.
    pub fn all_samples(&self) -> SurfaceSampleSet {
        let mut samples = Vec::new();
        for s in &self.flow.slices {
            samples.extend(s.samples.iter().cloned());
        }
        let adjacency = vec![Vec::new(); samples.len()];
        SurfaceSampleSet { samples, tag: self.flow.slices[0].tag, adjacency }
    }
}

/// Parabolic neighbourhood P̂(x̄, t̄, L, T): samples within graph distance
/// L/H(x̄,t̄) of sample `center` at time t̄, over times [t̄ − T/H², t̄].
pub fn parabolic_neighborhood(
    flow: &FlowSamples,
    center: usize,
    t_bar: f64,
    l: f64,
    big_t: f64,
) -> Result<Neighborhood> {
    let time_tol = 1e-12 * (1.0 + t_bar.abs());
    let slice = flow
        .times
        .iter()
        .position(|&t| (t - t_bar).abs() <= time_tol)
        .ok_or_else(|| Error::Range(format!("time {t_bar} is not a sampled slice")))?;
    let set = &flow.slices[slice];
    let h = set.samples[center].h;
    if !(h > 0.0) {
        return Err(Error::Domain("mean curvature at the centre must be positive".into()));
    }
    let radius = l / h;
    let t0 = t_bar - big_t / (h * h);
    if t0 < flow.times[0] - time_tol {
        return Err(Error::Range(format!(
            "window starts at {t0} but data starts at {}",
            flow.times[0]
        )));
    }
    let dist = shortest_paths(&set.adjacency, center, radius);
    let indices: Vec<usize> = (0..dist.len()).filter(|&i| dist[i] <= radius).collect();
    let mut times = Vec::new();
    let mut slices = Vec::new();
    for (t, s) in flow.times.iter().zip(&flow.slices) {
        if *t >= t0 - time_tol && *t <= t_bar + time_tol {
            times.push(*t);
            slices.push(s.subset(&indices));
        }
    }
    Ok(Neighborhood { indices, radius, window: (t0, t_bar), flow: FlowSamples { times, slices } })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyl_flow() -> FlowSamples {
        let g = GridSpec { sphere_res: 4, z_half_width: 3.0, z_points: 7, ..Default::default() };
        sample_flow(ModelTag::ShrinkingCylinderFamily { n: 4 }, &g, &[-5.0, -4.0, -3.0, -2.0, -1.0])
            .unwrap()
    }

    #[test]
    fn zero_radius_keeps_only_the_centre() {
        let f = cyl_flow();
        let nb = parabolic_neighborhood(&f, 10, -1.0, 0.0, 0.0).unwrap();
        assert_eq!(nb.indices, vec![10]);
    }

    #[test]
    fn window_depth_scales_with_inverse_curvature_squared() {
        let f = cyl_flow();
        let nb = parabolic_neighborhood(&f, 0, -1.0, 1.0, 2.0).unwrap();
        assert_eq!(nb.window, (-3.0, -1.0));
        assert_eq!(nb.flow.times, vec![-3.0, -2.0, -1.0]);
    }

    #[test]
    fn radius_at_minus_four_is_two() {
        let f = cyl_flow();
        let nb = parabolic_neighborhood(&f, 0, -4.0, 1.0, 0.0).unwrap();
        assert!((nb.radius - 2.0).abs() < 1e-12);
    }

    #[test]
    fn window_beyond_data_is_a_range_error() {
        let f = cyl_flow();
        assert!(matches!(parabolic_neighborhood(&f, 0, -1.0, 1.0, 10.0), Err(Error::Range(_))));
    }
}
