//! Marginal model of the Efron-Morris hierarchy: x ~ N_n(0, (1+s)I) with
//! s the prior variance of the means.
//!
//! The whole n-vector is one observation, so the displayed geometry already
//! carries the sample size. The parameter domain is the open interval
//! (-1, inf) on which the marginal covariance stays positive definite; this
//! keeps the stationary points |x|^2/n - 1 and |x|^2/(n-2) - 1 interior.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::Tensor3;
use crate::numeric::gauss;

use super::{Chart, ClosedFrame, Dataset, Model, Obs, QuadratureBlock};

pub struct EfronMorris {
    n: usize,
}

impl EfronMorris {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParams(
                "efron_morris requires n >= 3".into(),
            ));
        }
        Ok(EfronMorris { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// 1-affine chart xi = -1/(2(1+s)) of the exponential family.
    pub fn natural_chart() -> Chart {
        Chart {
            name: "natural".into(),
            forward: Arc::new(|u: &[f64]| vec![-1.0 / (2.0 * (1.0 + u[0]))]),
            inverse: Arc::new(|xi: &[f64]| vec![-1.0 / (2.0 * xi[0]) - 1.0]),
            jacobian: Some(Arc::new(|u: &[f64]| {
                DMatrix::from_element(1, 1, 1.0 / (2.0 * (1.0 + u[0]).powi(2)))
            })),
            new_domain: vec![(f64::NEG_INFINITY, 0.0)],
        }
    }

    fn sum_sq(obs: &Obs) -> Result<f64> {
        match obs {
            Obs::Vector(x) => Ok(x.iter().map(|v| v * v).sum()),
            Obs::Unit { .. } => Err(Error::InvalidParams(
                "efron_morris expects vector observations".into(),
            )),
        }
    }
}

impl Model for EfronMorris {
    fn name(&self) -> &str {
        "efron_morris"
    }

    fn dim(&self) -> usize {
        1
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(-1.0, f64::INFINITY)]
    }

    fn chart_name(&self) -> &str {
        "variance"
    }

    fn reference_point(&self) -> Vec<f64> {
        vec![1.0]
    }

    fn log_density(&self, xi: &[f64], obs: &Obs) -> Result<f64> {
        self.check_domain(xi)?;
        let v = 1.0 + xi[0];
        let n = self.n as f64;
        Ok(-0.5 * n * (2.0 * std::f64::consts::PI * v).ln() - Self::sum_sq(obs)? / (2.0 * v))
    }

    fn log_density_grad(&self, xi: &[f64], obs: &Obs) -> Option<Vec<f64>> {
        let v = 1.0 + xi[0];
        let t = Self::sum_sq(obs).ok()?;
        Some(vec![-(self.n as f64) / (2.0 * v) + t / (2.0 * v * v)])
    }

    fn sample_obs(&self, xi: &[f64], _index: usize, rng: &mut dyn RngCore) -> Result<Obs> {
        let sd = (1.0 + xi[0]).sqrt();
        let x = (0..self.n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                sd * z
            })
            .collect();
        Ok(Obs::Vector(x))
    }

    fn closed_frame(&self, xi: &[f64]) -> Option<ClosedFrame> {
        let v = 1.0 + xi[0];
        let n = self.n as f64;
        let metric = DMatrix::from_element(1, 1, n / (2.0 * v * v));
        let metric_grad = vec![DMatrix::from_element(1, 1, -n / (v * v * v))];
        let mut skewness = Tensor3::zeros(1);
        skewness.set(0, 0, 0, n / (v * v * v));
        Some(ClosedFrame {
            metric,
            metric_grad,
            skewness,
        })
    }

    fn quadrature_blocks(&self, xi: &[f64]) -> Option<Vec<QuadratureBlock>> {
        // |x|^2/(1+s) ~ chi2(n); only the sum of squares enters the density,
        // so emit single-component node vectors carrying the right |x|^2.
        let v = 1.0 + xi[0];
        let rule = gauss::gauss_chi2(self.n, 40);
        let nodes = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&t, &w)| (w, Obs::Vector(vec![(v * t).sqrt()])))
            .collect();
        Some(vec![QuadratureBlock { nodes }])
    }

    fn alpha_flat(&self) -> Option<f64> {
        // Variance coordinates are (-1)-affine: Gamma^(-1) vanishes.
        Some(-1.0)
    }

    fn moment_seed(&self, data: &Dataset) -> Vec<f64> {
        let mut t = 0.0;
        for (i, o) in data.obs.iter().enumerate() {
            t += data.weight(i) * Self::sum_sq(o).unwrap_or(0.0);
        }
        let seed = t / self.n as f64 - 1.0;
        vec![seed.max(-1.0 + 1e-6)]
    }

    fn compress(&self, data: &Dataset) -> Option<Dataset> {
        let mut t = 0.0;
        for (i, o) in data.obs.iter().enumerate() {
            t += data.weight(i) * Self::sum_sq(o).ok()?;
        }
        Some(Dataset::from_obs(vec![Obs::Vector(vec![t.sqrt()])]))
    }
}
