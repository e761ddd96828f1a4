//! Maximum a posteriori and maximum likelihood estimation by damped Newton
//! ascent with deterministic multi-start.

use nalgebra::{DMatrix, DVector};

use crate::config::NumericConfig;
use crate::error::{Error, Result};
use crate::manifold::{Dataset, Model};
use crate::numeric::fd;
use crate::prior::LogPrior;

#[derive(Debug, Clone)]
pub struct EstimateResult {
    pub point: Vec<f64>,
    pub objective: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub starts_tried: usize,
}

pub fn mle(model: &dyn Model, data: &Dataset, cfg: &NumericConfig) -> Result<EstimateResult> {
    map(model, data, &LogPrior::uniform(), cfg)
}

/// Maximize log-likelihood(xi) + log-prior(xi) over the open parameter box.
pub fn map(
    model: &dyn Model,
    data: &Dataset,
    prior: &LogPrior,
    cfg: &NumericConfig,
) -> Result<EstimateResult> {
    let compressed = model.compress(data);
    let data = compressed.as_ref().unwrap_or(data);
    let domain = model.domain();

    let objective = |xi: &[f64]| -> Result<f64> {
        Ok(model.log_likelihood(xi, data)? + prior.eval(xi)?)
    };
    let gradient = |xi: &[f64]| -> Result<Vec<f64>> {
        let gl = match model.log_likelihood_grad(xi, data)? {
            Some(g) => g,
            None => fd::gradient(
                &mut |x: &[f64]| model.log_likelihood(x, data),
                xi,
                cfg.fd_step_grad,
            )?,
        };
        let gp = prior.grad(xi, cfg)?;
        Ok(gl.iter().zip(&gp).map(|(a, b)| a + b).collect())
    };

    let mut starts = vec![model.moment_seed(data)];
    for k in 1..=cfg.extra_starts {
        let base = &starts[0];
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let amp = 0.15 * ((k + 1) / 2) as f64;
        let mut s: Vec<f64> = base
            .iter()
            .map(|x| x + sign * amp * NumericConfig::scale(*x))
            .collect();
        clamp_interior(&mut s, &domain);
        starts.push(s);
    }
    for s in starts.iter_mut() {
        clamp_interior(s, &domain);
    }

    let mut best: Option<EstimateResult> = None;
    let mut last_err: Option<Error> = None;
    let starts_tried = starts.len();
    for start in starts {
        match newton_ascent(&objective, &gradient, start, &domain, cfg) {
            Ok(mut res) => {
                res.starts_tried = starts_tried;
                best = match best {
                    None => Some(res),
                    Some(prev) => {
                        let tol = 1e-8 * (1.0 + prev.objective.abs());
                        if res.objective > prev.objective + tol {
                            Some(res)
                        } else if (res.objective - prev.objective).abs() <= tol
                            && norm(&res.point) < norm(&prev.point)
                        {
                            Some(res)
                        } else {
                            Some(prev)
                        }
                    }
                };
            }
            Err(e) => last_err = Some(e),
        }
    }
    let res = best.ok_or_else(|| match last_err {
        Some(e) => e,
        None => Error::NoConvergence("no optimizer start succeeded".into()),
    })?;
    // An optimum pressed against the boundary of the open box is reported as
    // a failure rather than an estimate.
    for (i, (x, (lo, hi))) in res.point.iter().zip(&domain).enumerate() {
        let margin = 1e-7 * NumericConfig::scale(*x);
        if (x - lo).abs() < margin || (hi - x).abs() < margin {
            return Err(Error::Boundary { index: i });
        }
    }
    Ok(res)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn clamp_interior(x: &mut [f64], domain: &[(f64, f64)]) {
    for (xi, (lo, hi)) in x.iter_mut().zip(domain) {
        let margin = 1e-6 * NumericConfig::scale(*xi).max(1.0);
        if *xi <= *lo {
            *xi = lo + margin;
        }
        if *xi >= *hi {
            *xi = hi - margin;
        }
    }
}

fn newton_ascent(
    objective: &dyn Fn(&[f64]) -> Result<f64>,
    gradient: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    start: Vec<f64>,
    domain: &[(f64, f64)],
    cfg: &NumericConfig,
) -> Result<EstimateResult> {
    let d = start.len();
    let mut x = start;
    let mut fx = objective(&x)?;
    if !fx.is_finite() {
        return Err(Error::Numeric("objective not finite at start".into()));
    }
    for iter in 0..cfg.max_iters {
        let g = gradient(&x)?;
        let g_inf = g.iter().map(|v| v.abs()).fold(0.0_f64, f64::max);
        if g_inf <= cfg.grad_tol * (1.0 + fx.abs()) {
            return Ok(EstimateResult {
                point: x,
                objective: fx,
                grad_norm: g_inf,
                iterations: iter,
                starts_tried: 1,
            });
        }
        let hess = fd::jacobian(&mut |xx: &[f64]| gradient(xx), &x, cfg.fd_step_hess)?;
        let hess = (&hess + hess.transpose()) / 2.0;
        let gv = DVector::from_column_slice(&g);
        // Newton direction on -H; regularize until it is an ascent direction.
        let mut step: Option<DVector<f64>> = None;
        let mut tau = 0.0;
        let h_scale = (0..d).map(|i| hess[(i, i)].abs()).fold(1e-8_f64, f64::max);
        for _ in 0..30 {
            let m = DMatrix::from_fn(d, d, |i, j| {
                -hess[(i, j)] + if i == j { tau } else { 0.0 }
            });
            if let Some(chol) = m.cholesky() {
                let s = chol.solve(&gv);
                if s.dot(&gv) > 0.0 {
                    step = Some(s);
                    break;
                }
            }
            tau = if tau == 0.0 { 1e-6 * h_scale } else { tau * 10.0 };
        }
        let step = step.unwrap_or_else(|| gv.clone() / (1.0 + g_inf));
        // shorten into the open box, then backtrack on the objective
        let mut lambda: f64 = 1.0;
        loop {
            let trial: Vec<f64> = (0..d).map(|i| x[i] + lambda * step[i]).collect();
            let inside = trial
                .iter()
                .zip(domain)
                .all(|(v, (lo, hi))| *v > *lo && *v < *hi);
            if inside {
                if let Ok(ft) = objective(&trial) {
                    if ft.is_finite() && ft > fx - 1e-14 * (1.0 + fx.abs()) {
                        x = trial;
                        fx = ft;
                        break;
                    }
                }
            }
            lambda *= 0.5;
            if lambda < 1e-12 {
                return Err(Error::NoConvergence(
                    "line search could not improve the objective".into(),
                ));
            }
        }
    }
    Err(Error::NoConvergence(format!(
        "no convergence in {} Newton iterations",
        cfg.max_iters
    )))
}
