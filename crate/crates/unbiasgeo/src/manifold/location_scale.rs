//! Location-scale family generated by p(z) = exp(-z^2)/sqrt(pi).
//!
//! The Fisher metric is (R/sigma)^2 times the identity, the Poincare
//! upper-half-plane metric with curvature -1/R^2. For this generator the
//! skewness constants are c1 = 4, c2 = 8 and R^2 = 2.

use nalgebra::DMatrix;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::Tensor3;
use crate::numeric::gauss;

use super::{ClosedFrame, Dataset, Model, Obs, QuadratureBlock};

pub const C1: f64 = 4.0;
pub const C2: f64 = 8.0;
pub const C: f64 = C1 + C2;
pub const R_SQ: f64 = 2.0;

pub struct LocationScaleNormal;

impl LocationScaleNormal {
    #[allow(clippy::new_without_default)]
    pub fn new() -> Self {
        LocationScaleNormal
    }

    fn scalar_obs(obs: &Obs) -> Result<f64> {
        match obs {
            Obs::Vector(x) if x.len() == 1 => Ok(x[0]),
            _ => Err(Error::InvalidParams(
                "location_scale_normal expects scalar observations".into(),
            )),
        }
    }
}

impl Model for LocationScaleNormal {
    fn name(&self) -> &str {
        "location_scale_normal"
    }

    fn dim(&self) -> usize {
        2
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(f64::NEG_INFINITY, f64::INFINITY), (0.0, f64::INFINITY)]
    }

    fn chart_name(&self) -> &str {
        "mu_sigma"
    }

    fn reference_point(&self) -> Vec<f64> {
        vec![0.0, 1.0]
    }

    fn log_density(&self, xi: &[f64], obs: &Obs) -> Result<f64> {
        self.check_domain(xi)?;
        let (mu, sigma) = (xi[0], xi[1]);
        let z = (Self::scalar_obs(obs)? - mu) / sigma;
        Ok(-z * z - 0.5 * std::f64::consts::PI.ln() - sigma.ln())
    }

    fn log_density_grad(&self, xi: &[f64], obs: &Obs) -> Option<Vec<f64>> {
        let (mu, sigma) = (xi[0], xi[1]);
        let z = (Self::scalar_obs(obs).ok()? - mu) / sigma;
        Some(vec![2.0 * z / sigma, (2.0 * z * z - 1.0) / sigma])
    }

    fn sample_obs(&self, xi: &[f64], _index: usize, rng: &mut dyn RngCore) -> Result<Obs> {
        // p(z) is N(0, 1/2).
        let z: f64 = StandardNormal.sample(rng);
        Ok(Obs::Vector(vec![
            xi[0] + xi[1] * z / std::f64::consts::SQRT_2,
        ]))
    }

    fn closed_frame(&self, xi: &[f64]) -> Option<ClosedFrame> {
        let sigma = xi[1];
        let g = R_SQ / (sigma * sigma);
        let metric = DMatrix::from_diagonal_element(2, 2, g);
        let dg_dsigma = DMatrix::from_diagonal_element(2, 2, -2.0 * R_SQ / sigma.powi(3));
        let metric_grad = vec![DMatrix::zeros(2, 2), dg_dsigma];
        let mut skewness = Tensor3::zeros(2);
        let s3 = sigma.powi(3);
        // S_{mu mu sigma} and permutations = c1/sigma^3, S_{sigma^3} = c2/sigma^3.
        skewness.set(0, 0, 1, C1 / s3);
        skewness.set(0, 1, 0, C1 / s3);
        skewness.set(1, 0, 0, C1 / s3);
        skewness.set(1, 1, 1, C2 / s3);
        Some(ClosedFrame {
            metric,
            metric_grad,
            skewness,
        })
    }

    fn quadrature_blocks(&self, xi: &[f64]) -> Option<Vec<QuadratureBlock>> {
        let rule = gauss::gauss_hermite_standard_normal(24);
        let nodes = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&z, &w)| {
                (
                    w,
                    Obs::Vector(vec![xi[0] + xi[1] * z / std::f64::consts::SQRT_2]),
                )
            })
            .collect();
        Some(vec![QuadratureBlock { nodes }])
    }

    fn moment_seed(&self, data: &Dataset) -> Vec<f64> {
        let xs: Vec<f64> = data
            .obs
            .iter()
            .filter_map(|o| Self::scalar_obs(o).ok())
            .collect();
        if xs.is_empty() {
            return self.reference_point();
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        // Var(x) = sigma^2/2 under the generator.
        vec![mean, (2.0 * var).sqrt().max(1e-6)]
    }
}
