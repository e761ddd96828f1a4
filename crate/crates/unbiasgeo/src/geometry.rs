//! Geometry frames: Fisher metric, skewness, alpha-connections, the
//! alpha-Laplacian and curvature tensors.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::NumericConfig;
use crate::error::{Error, Result};
use crate::linalg::{invert_spd, Tensor3, Tensor4};
use crate::manifold::{Model, Obs};
use crate::numeric::fd;
use crate::prior::Estimand;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GeometrySource {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

/// Metric, skewness and 0-connection at a point. Alpha-connections are
/// derived on demand via Gamma^(alpha) = Gamma^(0) - (alpha/2) S.
pub struct GeometryFrame {
    pub point: Vec<f64>,
    pub metric: DMatrix<f64>,
    pub metric_inv: DMatrix<f64>,
    pub metric_det: f64,
    pub skewness: Tensor3,
    /// Contracted skewness S_i = g^{jk} S_{ijk} (a covector).
    pub contracted_skewness: Vec<f64>,
    /// Gamma^(0)_{ij,k}, all indices down.
    pub gamma0: Tensor3,
    pub source: GeometrySource,
}

impl GeometryFrame {
    pub fn dim(&self) -> usize {
        self.point.len()
    }

    /// Gamma^(alpha)_{ij,k} with all indices down.
    pub fn alpha_connection(&self, alpha: f64) -> Tensor3 {
        self.gamma0.sub(&self.skewness.scale(alpha / 2.0))
    }

    /// Gamma^(alpha)s_{ij} with the third index raised by the inverse metric.
    pub fn alpha_connection_upper(&self, alpha: f64) -> Tensor3 {
        let d = self.dim();
        let lower = self.alpha_connection(alpha);
        let mut upper = Tensor3::zeros(d);
        for i in 0..d {
            for j in 0..d {
                for s in 0..d {
                    let mut v = 0.0;
                    for k in 0..d {
                        v += self.metric_inv[(s, k)] * lower.get(i, j, k);
                    }
                    // Store as upper.get(s, i, j) = Gamma^s_{ij}.
                    upper.set(s, i, j, v);
                }
            }
        }
        upper
    }

    /// Contraction c_i = g^{kr} Gamma^(alpha)_{kr,i}.
    pub fn contracted_connection(&self, alpha: f64) -> Vec<f64> {
        let d = self.dim();
        let gamma = self.alpha_connection(alpha);
        (0..d)
            .map(|i| {
                let mut v = 0.0;
                for k in 0..d {
                    for r in 0..d {
                        v += self.metric_inv[(k, r)] * gamma.get(k, r, i);
                    }
                }
                v
            })
            .collect()
    }

    /// Trace-contraction Gamma^(alpha)j_{ij} = g^{jk} Gamma^(alpha)_{ij,k},
    /// the divergence term of parallel volume elements.
    pub fn trace_connection(&self, alpha: f64) -> Vec<f64> {
        let d = self.dim();
        let gamma = self.alpha_connection(alpha);
        (0..d)
            .map(|i| {
                let mut v = 0.0;
                for j in 0..d {
                    for k in 0..d {
                        v += self.metric_inv[(j, k)] * gamma.get(i, j, k);
                    }
                }
                v
            })
            .collect()
    }
}

fn contracted_skewness(metric_inv: &DMatrix<f64>, skew: &Tensor3) -> Vec<f64> {
    let d = skew.d;
    (0..d)
        .map(|i| {
            let mut v = 0.0;
            for j in 0..d {
                for k in 0..d {
                    v += metric_inv[(j, k)] * skew.get(i, j, k);
                }
            }
            v
        })
        .collect()
}

fn gamma0_from_metric_grad(metric_grad: &[DMatrix<f64>]) -> Tensor3 {
    let d = metric_grad.len();
    let mut gamma = Tensor3::zeros(d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                gamma.set(
                    i,
                    j,
                    k,
                    0.5 * (metric_grad[i][(j, k)] + metric_grad[j][(i, k)]
                        - metric_grad[k][(i, j)]),
                );
            }
        }
    }
    gamma
}

/// Computes the geometry frame at `xi`, preferring closed forms, then
/// sample-space quadrature, then Monte Carlo.
pub fn frame_at(model: &dyn Model, xi: &[f64], cfg: &NumericConfig) -> Result<GeometryFrame> {
    model.check_domain(xi)?;
    if let Some(closed) = model.closed_frame(xi) {
        let (metric_inv, metric_det) = invert_spd(&closed.metric)?;
        let contracted = contracted_skewness(&metric_inv, &closed.skewness);
        let gamma0 = gamma0_from_metric_grad(&closed.metric_grad);
        return Ok(GeometryFrame {
            point: xi.to_vec(),
            metric: closed.metric,
            metric_inv,
            metric_det,
            skewness: closed.skewness,
            contracted_skewness: contracted,
            gamma0,
            source: GeometrySource::ClosedForm,
        });
    }
    numeric_frame(model, xi, cfg)
}

/// Score and log-density Hessian of one observation, analytic when offered.
fn score_and_hess(
    model: &dyn Model,
    xi: &[f64],
    obs: &Obs,
    cfg: &NumericConfig,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let score = match model.log_density_grad(xi, obs) {
        Some(g) => g,
        None => fd::gradient(
            &mut |x: &[f64]| model.log_density(x, obs),
            xi,
            cfg.fd_step_grad,
        )?,
    };
    let hess = match model.log_density_grad(xi, obs) {
        Some(_) => {
            // Differentiate the analytic gradient once.
            let mut jac = fd::jacobian(
                &mut |x: &[f64]| {
                    model
                        .log_density_grad(x, obs)
                        .ok_or_else(|| Error::Numeric("gradient vanished mid-domain".into()))
                },
                xi,
                cfg.fd_step_grad,
            )?;
            // Symmetrize.
            let t = jac.transpose();
            jac += t;
            jac / 2.0
        }
        None => fd::hessian(
            &mut |x: &[f64]| model.log_density(x, obs),
            xi,
            cfg.fd_step_hess,
        )?,
    };
    Ok((score, hess))
}

fn numeric_frame(model: &dyn Model, xi: &[f64], cfg: &NumericConfig) -> Result<GeometryFrame> {
    let d = model.dim();
    let mut metric = DMatrix::<f64>::zeros(d, d);
    let mut skew = Tensor3::zeros(d);
    let mut e_hess_score = Tensor3::zeros(d); // E[(d_i d_j l)(d_k l)]
    let source;

    if let Some(blocks) = model.quadrature_blocks(xi) {
        source = GeometrySource::Quadrature;
        for block in &blocks {
            for (w, obs) in &block.nodes {
                let (s, h) = score_and_hess(model, xi, obs, cfg)?;
                for i in 0..d {
                    for j in 0..d {
                        metric[(i, j)] += w * s[i] * s[j];
                        for k in 0..d {
                            skew.add(i, j, k, w * s[i] * s[j] * s[k]);
                            e_hess_score.add(i, j, k, w * h[(i, j)] * s[k]);
                        }
                    }
                }
            }
        }
    } else {
        source = GeometrySource::MonteCarlo;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.expectation_seed);
        let draws = cfg.expectation_samples;
        let per_draw = model.geometry_sample_count();
        let mut scores = Vec::with_capacity(draws);
        let mut hesses = Vec::with_capacity(draws);
        let mut mean = vec![0.0; d];
        for _ in 0..draws {
            let data = model.sample(xi, per_draw, &mut rng)?;
            let mut s_tot = vec![0.0; d];
            let mut h_tot = DMatrix::<f64>::zeros(d, d);
            for obs in &data.obs {
                let (s, h) = score_and_hess(model, xi, obs, cfg)?;
                for i in 0..d {
                    s_tot[i] += s[i];
                }
                h_tot += h;
            }
            for i in 0..d {
                mean[i] += s_tot[i];
            }
            scores.push(s_tot);
            hesses.push(h_tot);
        }
        for m in mean.iter_mut() {
            *m /= draws as f64;
        }
        let w = 1.0 / draws as f64;
        for (s, h) in scores.iter().zip(&hesses) {
            let c: Vec<f64> = s.iter().zip(&mean).map(|(a, b)| a - b).collect();
            for i in 0..d {
                for j in 0..d {
                    metric[(i, j)] += w * c[i] * c[j];
                    for k in 0..d {
                        skew.add(i, j, k, w * c[i] * c[j] * c[k]);
                        e_hess_score.add(i, j, k, w * h[(i, j)] * c[k]);
                    }
                }
            }
        }
    }

    let (metric_inv, metric_det) = invert_spd(&metric)?;
    let contracted = contracted_skewness(&metric_inv, &skew);
    // Gamma^(1)_{ij,k} = E[(d_i d_j l)(d_k l)]; Gamma^(0) = Gamma^(1) + S/2.
    let gamma0 = e_hess_score.sub(&skew.scale(-0.5));
    Ok(GeometryFrame {
        point: xi.to_vec(),
        metric,
        metric_inv,
        metric_det,
        skewness: skew,
        contracted_skewness: contracted,
        gamma0,
        source,
    })
}

/// alpha-Laplacian of a scalar field with a precomputed frame.
pub fn alpha_laplacian_with_frame(
    frame: &GeometryFrame,
    f: &Estimand,
    alpha: f64,
    cfg: &NumericConfig,
) -> Result<f64> {
    let d = frame.dim();
    let grad = f.grad(&frame.point, cfg)?;
    let hess = f.hessian(&frame.point, cfg)?;
    let c = frame.contracted_connection(alpha);
    let mut lap = 0.0;
    for i in 0..d {
        for j in 0..d {
            lap += frame.metric_inv[(i, j)] * (hess[(i, j)] - c[i] * grad[j]);
        }
    }
    Ok(lap)
}

pub fn alpha_laplacian(
    model: &dyn Model,
    xi: &[f64],
    f: &Estimand,
    alpha: f64,
    cfg: &NumericConfig,
) -> Result<f64> {
    let frame = frame_at(model, xi, cfg)?;
    alpha_laplacian_with_frame(&frame, f, alpha, cfg)
}

/// Riemann curvature of the alpha-connection.
///
/// Sign convention: R(d_k, d_r) d_i = R^s_{ikr} d_s with
/// R^s_{ikr} = d_k Gamma^s_{ri} - d_r Gamma^s_{ki}
///           + Gamma^t_{ri} Gamma^s_{kt} - Gamma^t_{ki} Gamma^s_{rt},
/// and R_{jikr} = g_{sj} R^s_{ikr}.
pub struct CurvatureFrame {
    pub point: Vec<f64>,
    pub alpha: f64,
    /// R_{jikr}, all indices down, indexed get(j, i, k, r).
    pub riemann: Tensor4,
    /// Ricci contraction R_{jk} = R^i_{kij}.
    pub ricci: DMatrix<f64>,
}

pub fn riemann_curvature(
    model: &dyn Model,
    xi: &[f64],
    alpha: f64,
    cfg: &NumericConfig,
) -> Result<CurvatureFrame> {
    let d = model.dim();
    let frame = frame_at(model, xi, cfg)?;
    let gamma_up = frame.alpha_connection_upper(alpha);
    // d Gamma^s_{ij} / d xi_k by central differences of whole frames.
    let mut dgamma: Vec<Tensor3> = Vec::with_capacity(d);
    for k in 0..d {
        let h = fd::step(xi[k], cfg.fd_step_gamma);
        let mut xp = xi.to_vec();
        xp[k] += h;
        let mut xm = xi.to_vec();
        xm[k] -= h;
        let up = frame_at(model, &xp, cfg)?.alpha_connection_upper(alpha);
        let um = frame_at(model, &xm, cfg)?.alpha_connection_upper(alpha);
        dgamma.push(up.sub(&um).scale(1.0 / (2.0 * h)));
    }
    let mut upper = Tensor4::zeros(d); // R^s_{ikr} as get(s, i, k, r)
    for s in 0..d {
        for i in 0..d {
            for k in 0..d {
                for r in 0..d {
                    let mut v = dgamma[k].get(s, r, i) - dgamma[r].get(s, k, i);
                    for t in 0..d {
                        v += gamma_up.get(t, r, i) * gamma_up.get(s, k, t)
                            - gamma_up.get(t, k, i) * gamma_up.get(s, r, t);
                    }
                    upper.set(s, i, k, r, v);
                }
            }
        }
    }
    let mut riemann = Tensor4::zeros(d);
    for j in 0..d {
        for i in 0..d {
            for k in 0..d {
                for r in 0..d {
                    let mut v = 0.0;
                    for s in 0..d {
                        v += frame.metric[(s, j)] * upper.get(s, i, k, r);
                    }
                    riemann.set(j, i, k, r, v);
                }
            }
        }
    }
    let mut ricci = DMatrix::zeros(d, d);
    for j in 0..d {
        for k in 0..d {
            let mut v = 0.0;
            for i in 0..d {
                v += upper.get(i, k, i, j);
            }
            ricci[(j, k)] = v;
        }
    }
    Ok(CurvatureFrame {
        point: xi.to_vec(),
        alpha,
        riemann,
        ricci,
    })
}

/// Forces the numeric (quadrature or Monte Carlo) geometry path even when a
/// closed form exists; used for cross-validation.
pub fn numeric_frame_at(
    model: &dyn Model,
    xi: &[f64],
    cfg: &NumericConfig,
) -> Result<GeometryFrame> {
    model.check_domain(xi)?;
    numeric_frame(model, xi, cfg)
}

/// Sup-norm residuals of the structural tensor identities at a point:
/// duality  d_k g_ij = Gamma^(a)_{kj,i} + Gamma^(-a)_{ki,j}
/// and the covariant derivative of the metric
/// d_i g_jk - Gamma^(a)_{ik,j} - Gamma^(a)_{ij,k} = a S_ijk.
pub fn identity_residuals(
    model: &dyn Model,
    xi: &[f64],
    alpha: f64,
    cfg: &NumericConfig,
) -> Result<(f64, f64)> {
    let d = model.dim();
    let frame = frame_at(model, xi, cfg)?;
    // d_k g_ij: analytic when the model ships metric gradients, otherwise
    // central differences of the metric
    let mut dg = Tensor3::zeros(d);
    match model.closed_frame(xi) {
        Some(cf) => {
            for k in 0..d {
                for i in 0..d {
                    for j in 0..d {
                        dg.set(k, i, j, cf.metric_grad[k][(i, j)]);
                    }
                }
            }
        }
        None => {
            for k in 0..d {
                let h = crate::numeric::fd::step(xi[k], cfg.fd_step_gamma);
                let mut xp = xi.to_vec();
                xp[k] += h;
                let mut xm = xi.to_vec();
                xm[k] -= h;
                let gp = frame_at(model, &xp, cfg)?.metric;
                let gm = frame_at(model, &xm, cfg)?.metric;
                for i in 0..d {
                    for j in 0..d {
                        dg.set(k, i, j, (gp[(i, j)] - gm[(i, j)]) / (2.0 * h));
                    }
                }
            }
        }
    }
    let gamma_p = frame.alpha_connection(alpha);
    let gamma_m = frame.alpha_connection(-alpha);
    let mut duality = 0.0_f64;
    let mut covariant = 0.0_f64;
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                let r1 = dg.get(k, i, j) - gamma_p.get(k, j, i) - gamma_m.get(k, i, j);
                duality = duality.max(r1.abs());
                let r2 = dg.get(i, j, k)
                    - gamma_p.get(i, k, j)
                    - gamma_p.get(i, j, k)
                    - alpha * frame.skewness.get(i, j, k);
                covariant = covariant.max(r2.abs());
            }
        }
    }
    Ok((duality, covariant))
}
