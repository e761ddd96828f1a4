//! d-variate normal with known identity covariance and unknown mean.
//! Flat for every alpha; geodesics are straight lines.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::Tensor3;
use crate::numeric::gauss;

use super::{Chart, ClosedFrame, Dataset, Model, Obs, QuadratureBlock};

pub struct MvnKnownCov {
    d: usize,
}

impl MvnKnownCov {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParams("mvn_known_cov requires d >= 1".into()));
        }
        Ok(MvnKnownCov { d })
    }

    /// Polar chart for d = 2: (x, y) -> (r, phi).
    pub fn polar_chart() -> Chart {
        Chart {
            name: "polar".into(),
            forward: Arc::new(|xi: &[f64]| vec![xi[0].hypot(xi[1]), xi[1].atan2(xi[0])]),
            inverse: Arc::new(|p: &[f64]| vec![p[0] * p[1].cos(), p[0] * p[1].sin()]),
            jacobian: None,
            new_domain: vec![(0.0, f64::INFINITY), (-std::f64::consts::PI, std::f64::consts::PI)],
        }
    }

    fn vec_obs<'a>(obs: &'a Obs) -> Result<&'a [f64]> {
        match obs {
            Obs::Vector(x) => Ok(x),
            Obs::Unit { .. } => Err(Error::InvalidParams(
                "mvn_known_cov expects vector observations".into(),
            )),
        }
    }
}

impl Model for MvnKnownCov {
    fn name(&self) -> &str {
        "mvn_known_cov"
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(f64::NEG_INFINITY, f64::INFINITY); self.d]
    }

    fn chart_name(&self) -> &str {
        "cartesian"
    }

    fn reference_point(&self) -> Vec<f64> {
        vec![0.0; self.d]
    }

    fn log_density(&self, xi: &[f64], obs: &Obs) -> Result<f64> {
        self.check_domain(xi)?;
        let x = Self::vec_obs(obs)?;
        let q: f64 = x.iter().zip(xi).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(-0.5 * self.d as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * q)
    }

    fn log_density_grad(&self, xi: &[f64], obs: &Obs) -> Option<Vec<f64>> {
        let x = Self::vec_obs(obs).ok()?;
        Some(x.iter().zip(xi).map(|(a, b)| a - b).collect())
    }

    fn sample_obs(&self, xi: &[f64], _index: usize, rng: &mut dyn RngCore) -> Result<Obs> {
        Ok(Obs::Vector(
            xi.iter()
                .map(|&m| {
                    let z: f64 = StandardNormal.sample(rng);
                    m + z
                })
                .collect(),
        ))
    }

    fn closed_frame(&self, _xi: &[f64]) -> Option<ClosedFrame> {
        Some(ClosedFrame {
            metric: DMatrix::identity(self.d, self.d),
            metric_grad: vec![DMatrix::zeros(self.d, self.d); self.d],
            skewness: Tensor3::zeros(self.d),
        })
    }

    fn quadrature_blocks(&self, xi: &[f64]) -> Option<Vec<QuadratureBlock>> {
        // Product Gauss-Hermite; scores are polynomials of degree <= 3, so a
        // modest node count per axis is exact.
        let rule = gauss::gauss_hermite_standard_normal(8);
        let mut nodes: Vec<(f64, Obs)> = vec![(1.0, Obs::Vector(vec![]))];
        for &m in xi {
            let mut next = Vec::with_capacity(nodes.len() * rule.nodes.len());
            for (w, o) in &nodes {
                let base = match o {
                    Obs::Vector(v) => v.clone(),
                    _ => unreachable!(),
                };
                for (&z, &wz) in rule.nodes.iter().zip(&rule.weights) {
                    let mut v = base.clone();
                    v.push(m + z);
                    next.push((w * wz, Obs::Vector(v)));
                }
            }
            nodes = next;
        }
        Some(vec![QuadratureBlock { nodes }])
    }

    fn alpha_flat(&self) -> Option<f64> {
        // Flat for every alpha; report 0 so shortcuts treat it as 0-affine.
        Some(0.0)
    }

    fn moment_seed(&self, data: &Dataset) -> Vec<f64> {
        let mut mean = vec![0.0; self.d];
        let mut total = 0.0;
        for (i, o) in data.obs.iter().enumerate() {
            if let Obs::Vector(x) = o {
                let w = data.weight(i);
                total += w;
                for (m, v) in mean.iter_mut().zip(x) {
                    *m += w * v;
                }
            }
        }
        if total > 0.0 {
            for m in mean.iter_mut() {
                *m /= total;
            }
        }
        mean
    }

    fn compress(&self, data: &Dataset) -> Option<Dataset> {
        // The likelihood depends on the data only through the weighted mean,
        // up to an additive constant.
        let mut mean = vec![0.0; self.d];
        let mut total = 0.0;
        for (i, o) in data.obs.iter().enumerate() {
            let x = Self::vec_obs(o).ok()?;
            let w = data.weight(i);
            total += w;
            for (m, v) in mean.iter_mut().zip(x) {
                *m += w * v;
            }
        }
        if total == 0.0 {
            return None;
        }
        for m in mean.iter_mut() {
            *m /= total;
        }
        Some(Dataset {
            obs: vec![Obs::Vector(mean)],
            weights: Some(vec![total]),
        })
    }
}
