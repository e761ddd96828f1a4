//! Coordinate charts and model reparametrization.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::linalg::Tensor3;

use super::{ClosedFrame, Dataset, Model, Obs, QuadratureBlock};

type VecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type JacFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// A diffeomorphism from the model's current chart to a new one.
#[derive(Clone)]
pub struct Chart {
    pub name: String,
    /// old coordinates -> new coordinates
    pub forward: VecFn,
    /// new coordinates -> old coordinates
    pub inverse: VecFn,
    /// Jacobian of `forward` at an old-chart point; `None` falls back to
    /// finite differences.
    pub jacobian: Option<JacFn>,
    /// Open-box domain in the new chart.
    pub new_domain: Vec<(f64, f64)>,
}

impl Chart {
    /// d(old)/d(new) at a new-chart point, used to pull tensors back.
    fn inverse_jacobian(&self, xi_new: &[f64]) -> Result<DMatrix<f64>> {
        let old = (self.inverse)(xi_new);
        let jac_fwd = match &self.jacobian {
            Some(j) => j(&old),
            None => {
                let fwd = self.forward.clone();
                crate::numeric::fd::jacobian(&mut |x: &[f64]| Ok(fwd(x)), &old, 1e-7)?
            }
        };
        jac_fwd
            .try_inverse()
            .ok_or_else(|| Error::Numeric("chart Jacobian is singular".into()))
    }
}

pub struct Reparametrized {
    inner: Arc<dyn Model>,
    chart: Chart,
    name: String,
}

/// Expresses `model` in a new chart. Tensors transform tensorially through
/// the chart Jacobian; the sample space is untouched.
pub fn reparametrize(model: Arc<dyn Model>, chart: Chart) -> Arc<dyn Model> {
    let name = model.name().to_string();
    Arc::new(Reparametrized {
        inner: model,
        chart,
        name,
    })
}

impl Model for Reparametrized {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        self.chart.new_domain.clone()
    }

    fn chart_name(&self) -> &str {
        &self.chart.name
    }

    fn reference_point(&self) -> Vec<f64> {
        (self.chart.forward)(&self.inner.reference_point())
    }

    fn log_density(&self, xi: &[f64], obs: &Obs) -> Result<f64> {
        self.inner.log_density(&(self.chart.inverse)(xi), obs)
    }

    fn log_density_grad(&self, xi: &[f64], obs: &Obs) -> Option<Vec<f64>> {
        let old = (self.chart.inverse)(xi);
        let g_old = self.inner.log_density_grad(&old, obs)?;
        let jac = self.chart.inverse_jacobian(xi).ok()?;
        // Covector transform: g_new_i = sum_a g_old_a * d(old_a)/d(new_i)
        let d = self.dim();
        let mut g = vec![0.0; d];
        for i in 0..d {
            for a in 0..d {
                g[i] += g_old[a] * jac[(a, i)];
            }
        }
        Some(g)
    }

    fn sample_obs(&self, xi: &[f64], index: usize, rng: &mut dyn RngCore) -> Result<Obs> {
        self.inner
            .sample_obs(&(self.chart.inverse)(xi), index, rng)
    }

    fn closed_frame(&self, xi: &[f64]) -> Option<ClosedFrame> {
        let old = (self.chart.inverse)(xi);
        let frame_old = self.inner.closed_frame(&old)?;
        let jac = self.chart.inverse_jacobian(xi).ok()?;
        let d = self.dim();
        let metric = jac.transpose() * &frame_old.metric * &jac;
        let mut skew = Tensor3::zeros(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let mut v = 0.0;
                    for a in 0..d {
                        for b in 0..d {
                            for c in 0..d {
                                v += frame_old.skewness.get(a, b, c)
                                    * jac[(a, i)]
                                    * jac[(b, j)]
                                    * jac[(c, k)];
                            }
                        }
                    }
                    skew.set(i, j, k, v);
                }
            }
        }
        // Metric derivatives in the new chart by finite differences of the
        // transformed metric (the transform mixes in Jacobian derivatives,
        // so the analytic grads of the inner chart do not carry over).
        let mut metric_grad = Vec::with_capacity(d);
        for k in 0..d {
            let h = crate::numeric::fd::step(xi[k], 1e-6);
            let mut xp = xi.to_vec();
            xp[k] += h;
            let mut xm = xi.to_vec();
            xm[k] -= h;
            let gp = self.metric_in_new_chart(&xp)?;
            let gm = self.metric_in_new_chart(&xm)?;
            metric_grad.push((gp - gm) / (2.0 * h));
        }
        Some(ClosedFrame {
            metric,
            metric_grad,
            skewness: skew,
        })
    }

    fn quadrature_blocks(&self, xi: &[f64]) -> Option<Vec<QuadratureBlock>> {
        self.inner.quadrature_blocks(&(self.chart.inverse)(xi))
    }

    fn geometry_sample_count(&self) -> usize {
        self.inner.geometry_sample_count()
    }

    fn unit_sizes(&self) -> Option<Vec<usize>> {
        self.inner.unit_sizes()
    }

    fn moment_seed(&self, data: &Dataset) -> Vec<f64> {
        (self.chart.forward)(&self.inner.moment_seed(data))
    }

    fn compress(&self, data: &Dataset) -> Option<Dataset> {
        self.inner.compress(data)
    }
}

impl Reparametrized {
    fn metric_in_new_chart(&self, xi: &[f64]) -> Option<DMatrix<f64>> {
        let old = (self.chart.inverse)(xi);
        let frame_old = self.inner.closed_frame(&old)?;
        let jac = self.chart.inverse_jacobian(xi).ok()?;
        Some(jac.transpose() * &frame_old.metric * &jac)
    }
}
