//! Nested-error linear mixed model: x_ij | z_i ~ N(z_i, d), z_i ~ N(0, a),
//! unit i carrying m_i observations. Parameters (a, d) are the between- and
//! within-unit variances; these coordinates are (-1)-affine (the model is
//! dually flat), so Gamma^(-1) vanishes identically.

use nalgebra::DMatrix;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::Tensor3;
use crate::numeric::gauss;

use super::{ClosedFrame, Dataset, Model, Obs, QuadratureBlock};

pub struct NestedErrorLme {
    m: Vec<usize>,
}

impl NestedErrorLme {
    pub fn new(m: Vec<usize>) -> Result<Self> {
        if m.is_empty() || m.iter().any(|&mi| mi == 0) {
            return Err(Error::InvalidParams(
                "nested_error_lme requires a non-empty pattern of unit sizes >= 1".into(),
            ));
        }
        if m.iter().all(|&mi| mi == 1) {
            return Err(Error::InvalidParams(
                "nested_error_lme with all unit sizes equal to one is not identifiable".into(),
            ));
        }
        Ok(NestedErrorLme { m })
    }

    pub fn unit_sizes(&self) -> &[usize] {
        &self.m
    }

    pub fn num_units(&self) -> usize {
        self.m.len()
    }

    pub fn total_obs(&self) -> usize {
        self.m.iter().sum()
    }

    /// Shrinkage factor b^(i) = (d/m_i)/(d/m_i + a) of unit i.
    pub fn shrinkage(&self, i: usize, a: f64, d: f64) -> f64 {
        let t = d / self.m[i] as f64;
        t / (t + a)
    }

    fn unit_stats(&self, obs: &Obs) -> Result<(usize, f64, f64, usize)> {
        let (unit, values) = match obs {
            Obs::Unit { unit, values } => (*unit, values),
            Obs::Vector(values) => (usize::MAX, values),
        };
        let mi = if unit == usize::MAX {
            values.len()
        } else {
            *self.m.get(unit).ok_or_else(|| {
                Error::InvalidParams(format!("unit index {unit} out of range"))
            })?
        };
        if values.len() != mi {
            return Err(Error::InvalidParams(format!(
                "unit {unit} expects {mi} values, got {}",
                values.len()
            )));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        Ok((unit, mean, ss, mi))
    }
}

impl Model for NestedErrorLme {
    fn name(&self) -> &str {
        "nested_error_lme"
    }

    fn dim(&self) -> usize {
        2
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(0.0, f64::INFINITY), (0.0, f64::INFINITY)]
    }

    fn chart_name(&self) -> &str {
        "a_d"
    }

    fn reference_point(&self) -> Vec<f64> {
        vec![1.0, 1.0]
    }

    fn log_density(&self, xi: &[f64], obs: &Obs) -> Result<f64> {
        self.check_domain(xi)?;
        let (a, d) = (xi[0], xi[1]);
        let (_, mean, ss, mi) = self.unit_stats(obs)?;
        let mf = mi as f64;
        let v = d / mf + a;
        Ok(-0.5
            * (mf * (2.0 * std::f64::consts::PI).ln()
                + (mf - 1.0) * d.ln()
                + (mf * v).ln()
                + ss / d
                + mean * mean / v))
    }

    fn log_density_grad(&self, xi: &[f64], obs: &Obs) -> Option<Vec<f64>> {
        let (a, d) = (xi[0], xi[1]);
        let (_, mean, ss, mi) = self.unit_stats(obs).ok()?;
        let mf = mi as f64;
        let v = d / mf + a;
        let ga = -0.5 / v + mean * mean / (2.0 * v * v);
        let gd = -(mf - 1.0) / (2.0 * d) - 0.5 / (mf * v) + ss / (2.0 * d * d)
            + mean * mean / (2.0 * mf * v * v);
        Some(vec![ga, gd])
    }

    fn sample_obs(&self, xi: &[f64], index: usize, rng: &mut dyn RngCore) -> Result<Obs> {
        let (a, d) = (xi[0], xi[1]);
        let mi = self.m[index % self.m.len()];
        let z: f64 = StandardNormal.sample(rng);
        let zi = a.sqrt() * z;
        let values = (0..mi)
            .map(|_| {
                let e: f64 = StandardNormal.sample(rng);
                zi + d.sqrt() * e
            })
            .collect();
        Ok(Obs::Unit {
            unit: index % self.m.len(),
            values,
        })
    }

    fn closed_frame(&self, xi: &[f64]) -> Option<ClosedFrame> {
        let (a, d) = (xi[0], xi[1]);
        let (big_m, n) = (self.total_obs() as f64, self.num_units() as f64);
        let mut p = [0.0_f64; 3]; // sum of 1/(m^k v^2)
        let mut q = [0.0_f64; 4]; // sum of 1/(m^k v^3)
        for &mi in &self.m {
            let mf = mi as f64;
            let v = d / mf + a;
            let v2 = v * v;
            let v3 = v2 * v;
            let mut mk = 1.0;
            for k in 0..3 {
                p[k] += 1.0 / (mk * v2);
                q[k] += 1.0 / (mk * v3);
                mk *= mf;
            }
            q[3] += 1.0 / (mk * v3);
        }
        let metric = DMatrix::from_row_slice(
            2,
            2,
            &[
                0.5 * p[0],
                0.5 * p[1],
                0.5 * p[1],
                0.5 * (p[2] + (big_m - n) / (d * d)),
            ],
        );
        let metric_grad = vec![
            DMatrix::from_row_slice(2, 2, &[-q[0], -q[1], -q[1], -q[2]]),
            DMatrix::from_row_slice(
                2,
                2,
                &[
                    -q[1],
                    -q[2],
                    -q[2],
                    -q[3] - (big_m - n) / (d * d * d),
                ],
            ),
        ];
        let mut s = Tensor3::zeros(2);
        // Index 0 = a, 1 = d; S is totally symmetric.
        let vals = [
            (0, 0, 0, q[0]),
            (0, 0, 1, q[1]),
            (0, 1, 1, q[2]),
            (1, 1, 1, q[3] + (big_m - n) / (d * d * d)),
        ];
        for (i, j, k, v) in vals {
            for (a1, b1, c1) in [
                (i, j, k),
                (i, k, j),
                (j, i, k),
                (j, k, i),
                (k, i, j),
                (k, j, i),
            ] {
                s.set(a1, b1, c1, v);
            }
        }
        Some(ClosedFrame {
            metric,
            metric_grad,
            skewness: s,
        })
    }

    fn quadrature_blocks(&self, xi: &[f64]) -> Option<Vec<QuadratureBlock>> {
        let (a, d) = (xi[0], xi[1]);
        let mean_rule = gauss::gauss_hermite_standard_normal(10);
        let mut blocks = Vec::with_capacity(self.m.len());
        for (unit, &mi) in self.m.iter().enumerate() {
            let mf = mi as f64;
            let v = d / mf + a;
            let sd = v.sqrt();
            let mut nodes = Vec::new();
            if mi == 1 {
                for (&z, &w) in mean_rule.nodes.iter().zip(&mean_rule.weights) {
                    nodes.push((
                        w,
                        Obs::Unit {
                            unit,
                            values: vec![sd * z],
                        },
                    ));
                }
            } else {
                let ss_rule = gauss::gauss_chi2(mi - 1, 10);
                for (&z, &wz) in mean_rule.nodes.iter().zip(&mean_rule.weights) {
                    for (&t, &wt) in ss_rule.nodes.iter().zip(&ss_rule.weights) {
                        let mean = sd * z;
                        let ss = d * t;
                        // Any value vector with the right (mean, within-SS)
                        // is equivalent for the likelihood.
                        let dev = (ss / 2.0).sqrt();
                        let mut values = vec![mean; mi];
                        values[0] += dev;
                        values[1] -= dev;
                        nodes.push((wz * wt, Obs::Unit { unit, values }));
                    }
                }
            }
            blocks.push(QuadratureBlock { nodes });
        }
        Some(blocks)
    }

    fn geometry_sample_count(&self) -> usize {
        self.num_units()
    }

    fn alpha_flat(&self) -> Option<f64> {
        Some(-1.0)
    }

    fn unit_sizes(&self) -> Option<Vec<usize>> {
        Some(self.m.clone())
    }

    fn moment_seed(&self, data: &Dataset) -> Vec<f64> {
        let mut ss_total = 0.0;
        let mut dof = 0.0;
        let mut means = Vec::new();
        let mut inv_m = Vec::new();
        for o in &data.obs {
            if let Ok((_, mean, ss, mi)) = self.unit_stats(o) {
                ss_total += ss;
                dof += (mi - 1) as f64;
                means.push(mean);
                inv_m.push(1.0 / mi as f64);
            }
        }
        let d0 = if dof > 0.0 { (ss_total / dof).max(1e-6) } else { 1.0 };
        let k = means.len() as f64;
        let a0 = if k > 1.0 {
            let mb = means.iter().sum::<f64>() / k;
            let vb = means.iter().map(|m| (m - mb) * (m - mb)).sum::<f64>() / k;
            let correction = d0 * inv_m.iter().sum::<f64>() / k;
            (vb - correction).max(1e-3)
        } else {
            1.0
        };
        vec![a0, d0]
    }
}
