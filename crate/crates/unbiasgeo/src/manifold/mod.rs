//! Parametric models, observations, charts and the built-in model zoo.

mod chart;
mod efron_morris;
mod lme;
pub mod location_scale;
mod mvn;

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::linalg::Tensor3;

pub use chart::{reparametrize, Chart};
pub use efron_morris::EfronMorris;
pub use lme::NestedErrorLme;
pub use location_scale::LocationScaleNormal;
pub use mvn::MvnKnownCov;

/// One observation record.
#[derive(Debug, Clone, PartialEq)]
pub enum Obs {
    /// Fixed-length real vector.
    Vector(Vec<f64>),
    /// One unit of a nested-error model: unit index plus within-unit values.
    Unit { unit: usize, values: Vec<f64> },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub obs: Vec<Obs>,
    /// Optional per-observation multiplicities (used by sufficient-statistic
    /// compression; `None` means all ones).
    pub weights: Option<Vec<f64>>,
}

impl Dataset {
    pub fn from_obs(obs: Vec<Obs>) -> Self {
        Dataset { obs, weights: None }
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    /// CSV serialization with columns `unit,obs_index,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("unit,obs_index,value\n");
        for (u, o) in self.obs.iter().enumerate() {
            let values = match o {
                Obs::Vector(v) => v,
                Obs::Unit { values, .. } => values,
            };
            for (j, v) in values.iter().enumerate() {
                out.push_str(&format!("{u},{j},{v}\n"));
            }
        }
        out
    }

    /// Parses `unit,obs_index,value` CSV into vector observations (the model
    /// decides how to interpret units).
    pub fn from_csv(text: &str) -> Result<Dataset> {
        let mut units: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with("unit")) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::config(
                    "data",
                    format!("line {}: expected 3 columns, got {}", lineno + 1, fields.len()),
                ));
            }
            let unit: usize = fields[0].trim().parse().map_err(|_| {
                Error::config("data", format!("line {}: bad unit index", lineno + 1))
            })?;
            let value: f64 = fields[2].trim().parse().map_err(|_| {
                Error::config("data", format!("line {}: bad value", lineno + 1))
            })?;
            if units.len() <= unit {
                units.resize(unit + 1, Vec::new());
            }
            units[unit].push(value);
        }
        Ok(Dataset::from_obs(
            units.into_iter().map(Obs::Vector).collect(),
        ))
    }
}

/// Closed-form geometry at a point: metric, its coordinate derivatives and
/// the skewness tensor.
pub struct ClosedFrame {
    pub metric: DMatrix<f64>,
    /// metric_grad[k] = d g / d xi_k
    pub metric_grad: Vec<DMatrix<f64>>,
    pub skewness: Tensor3,
}

/// Nodes of a sample-space quadrature rule for one independent block of the
/// observation. Expectations of score products factor across blocks.
pub struct QuadratureBlock {
    pub nodes: Vec<(f64, Obs)>,
}

pub trait Model: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    /// Open-box parameter domain.
    fn domain(&self) -> Vec<(f64, f64)>;
    fn chart_name(&self) -> &str;
    /// A convenient interior point (integration anchor, default start).
    fn reference_point(&self) -> Vec<f64>;

    fn log_density(&self, xi: &[f64], obs: &Obs) -> Result<f64>;

    /// Analytic score, when available. `None` means callers fall back to
    /// central finite differences.
    fn log_density_grad(&self, _xi: &[f64], _obs: &Obs) -> Option<Vec<f64>> {
        None
    }

    fn sample_obs(&self, xi: &[f64], index: usize, rng: &mut dyn RngCore) -> Result<Obs>;

    fn sample(&self, xi: &[f64], count: usize, rng: &mut dyn RngCore) -> Result<Dataset> {
        self.check_domain(xi)?;
        let obs = (0..count)
            .map(|i| self.sample_obs(xi, i, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset::from_obs(obs))
    }

    /// Closed-form geometry, when available.
    fn closed_frame(&self, _xi: &[f64]) -> Option<ClosedFrame> {
        None
    }

    /// Sample-space quadrature for numeric geometry, when available.
    fn quadrature_blocks(&self, _xi: &[f64]) -> Option<Vec<QuadratureBlock>> {
        None
    }

    /// Observation count of one "replicate" for Monte Carlo geometry
    /// (models whose geometry sums over several independent blocks sample
    /// all of them per draw).
    fn geometry_sample_count(&self) -> usize {
        1
    }

    /// Chart alpha for which the coordinates are alpha-affine, if known.
    fn alpha_flat(&self) -> Option<f64> {
        None
    }

    /// Per-unit observation counts for models with grouped observations.
    fn unit_sizes(&self) -> Option<Vec<usize>> {
        None
    }

    /// Method-of-moments starting point for the optimizer.
    fn moment_seed(&self, data: &Dataset) -> Vec<f64>;

    /// Optional sufficient-statistic compression that preserves the
    /// likelihood shape up to an additive constant.
    fn compress(&self, _data: &Dataset) -> Option<Dataset> {
        None
    }

    fn check_domain(&self, xi: &[f64]) -> Result<()> {
        let dom = self.domain();
        if xi.len() != dom.len() {
            return Err(Error::InvalidParams(format!(
                "expected {} coordinates, got {}",
                dom.len(),
                xi.len()
            )));
        }
        for (i, (&x, &(lo, hi))) in xi.iter().zip(dom.iter()).enumerate() {
            if !(x > lo && x < hi) || !x.is_finite() {
                return Err(Error::Domain {
                    index: i,
                    value: x,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    fn log_likelihood(&self, xi: &[f64], data: &Dataset) -> Result<f64> {
        self.check_domain(xi)?;
        let mut total = 0.0;
        for (i, o) in data.obs.iter().enumerate() {
            total += data.weight(i) * self.log_density(xi, o)?;
        }
        Ok(total)
    }

    fn log_likelihood_grad(&self, xi: &[f64], data: &Dataset) -> Result<Option<Vec<f64>>> {
        let mut g = vec![0.0; self.dim()];
        for (i, o) in data.obs.iter().enumerate() {
            match self.log_density_grad(xi, o) {
                Some(gi) => {
                    let w = data.weight(i);
                    for (a, b) in g.iter_mut().zip(gi) {
                        *a += w * b;
                    }
                }
                None => return Ok(None),
            }
        }
        Ok(Some(g))
    }
}

/// Builds a built-in model from its registry name and JSON parameters.
pub fn make_builtin(name: &str, params: &serde_json::Value) -> Result<Arc<dyn Model>> {
    let get_usize = |key: &str| -> Option<usize> {
        params.get(key).and_then(|v| v.as_u64()).map(|v| v as usize)
    };
    match name {
        "efron_morris" => {
            let n = get_usize("n").ok_or_else(|| {
                Error::InvalidParams("efron_morris requires integer parameter `n`".into())
            })?;
            let model = EfronMorris::new(n)?;
            match params.get("chart").and_then(|v| v.as_str()) {
                None | Some("variance") => Ok(Arc::new(model)),
                Some("natural") => Ok(reparametrize(
                    Arc::new(model),
                    EfronMorris::natural_chart(),
                )),
                Some(other) => Err(Error::InvalidParams(format!(
                    "efron_morris has charts `variance` and `natural`, not `{other}`"
                ))),
            }
        }
        "mvn_known_cov" => {
            let d = get_usize("d").ok_or_else(|| {
                Error::InvalidParams("mvn_known_cov requires integer parameter `d`".into())
            })?;
            Ok(Arc::new(MvnKnownCov::new(d)?))
        }
        "location_scale_normal" => Ok(Arc::new(LocationScaleNormal::new())),
        "nested_error_lme" => {
            let m: Vec<usize> = params
                .get("m")
                .and_then(|v| v.as_array())
                .map(|a| {
                    a.iter()
                        .filter_map(|x| x.as_u64())
                        .map(|x| x as usize)
                        .collect()
                })
                .ok_or_else(|| {
                    Error::InvalidParams(
                        "nested_error_lme requires integer array parameter `m`".into(),
                    )
                })?;
            Ok(Arc::new(NestedErrorLme::new(m)?))
        }
        other => Err(Error::UnknownModel(other.into())),
    }
}
