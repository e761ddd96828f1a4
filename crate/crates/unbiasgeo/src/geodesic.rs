//! Geodesics of the Levi-Civita connection: initial-value shooting, the
//! two-point distance problem, and the normal-chart quantities (pulled-back
//! metric determinant, contracted skewness) used by the pole-based prior.

use nalgebra::DMatrix;

use crate::config::NumericConfig;
use crate::error::{Error, Result};
use crate::geometry::frame_at;
use crate::manifold::Model;
use crate::numeric::{fd, ode};

/// A geodesic integrated from `base` with initial velocity `v0`
/// (coordinate components), covering affine parameter [0, r_max].
pub struct GeodesicPath {
    pub base: Vec<f64>,
    pub v0: Vec<f64>,
    pub r_max: f64,
    sol: ode::OdeSolution,
    dim: usize,
}

impl GeodesicPath {
    /// Point and velocity at affine parameter r.
    pub fn at(&self, r: f64) -> (Vec<f64>, Vec<f64>) {
        let y = self.sol.at(r);
        (y[..self.dim].to_vec(), y[self.dim..].to_vec())
    }

    pub fn endpoint(&self) -> Vec<f64> {
        self.at(self.r_max).0
    }
}

/// Integrate the geodesic equation xdd^k = -Gamma^k_{ij} xd^i xd^j
/// from xi0 with velocity v0 over affine parameter [0, len].
pub fn shoot(
    model: &dyn Model,
    xi0: &[f64],
    v0: &[f64],
    len: f64,
    cfg: &NumericConfig,
) -> Result<GeodesicPath> {
    model.check_domain(xi0)?;
    let d = model.dim();
    let mut y0 = xi0.to_vec();
    y0.extend_from_slice(v0);
    let cfg2 = cfg.clone();
    let rhs = |_t: f64, y: &[f64]| -> Result<Vec<f64>> {
        let (xi, v) = y.split_at(d);
        let frame = frame_at(model, xi, &cfg2)?;
        let gamma = frame.alpha_connection_upper(0.0);
        let mut dy = vec![0.0; 2 * d];
        dy[..d].copy_from_slice(v);
        for k in 0..d {
            let mut acc = 0.0;
            for i in 0..d {
                for j in 0..d {
                    acc += gamma.get(k, i, j) * v[i] * v[j];
                }
            }
            dy[d + k] = -acc;
        }
        Ok(dy)
    };
    let sol = ode::integrate(
        rhs,
        0.0,
        y0,
        len,
        cfg.ode_rel_tol,
        cfg.ode_abs_tol,
        |y| model.check_domain(&y[..d]).is_ok(),
    )?;
    Ok(GeodesicPath {
        base: xi0.to_vec(),
        v0: v0.to_vec(),
        r_max: len,
        sol,
        dim: d,
    })
}

/// Riemannian exponential map: the unit-affine-time endpoint of the geodesic
/// with initial velocity v (coordinate components).
pub fn exp_map(model: &dyn Model, xi0: &[f64], v: &[f64], cfg: &NumericConfig) -> Result<Vec<f64>> {
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-14 {
        return Ok(xi0.to_vec());
    }
    Ok(shoot(model, xi0, v, 1.0, cfg)?.endpoint())
}

fn residual(model: &dyn Model, xi0: &[f64], v: &[f64], xi1: &[f64], cfg: &NumericConfig) -> Result<Vec<f64>> {
    let end = exp_map(model, xi0, v, cfg)?;
    Ok(end.iter().zip(xi1).map(|(a, b)| a - b).collect())
}

/// Geodesic distance between xi0 and xi1, solved by Newton shooting on the
/// exponential map. Returns the distance together with the unit-speed
/// geodesic from xi0 to xi1.
pub fn distance(
    model: &dyn Model,
    xi0: &[f64],
    xi1: &[f64],
    cfg: &NumericConfig,
) -> Result<(f64, GeodesicPath)> {
    model.check_domain(xi0)?;
    model.check_domain(xi1)?;
    let d = model.dim();
    let chord: Vec<f64> = xi1.iter().zip(xi0).map(|(a, b)| a - b).collect();
    let chord_norm: f64 = chord.iter().map(|x| x * x).sum::<f64>().sqrt();
    if chord_norm < 1e-13 {
        return Err(Error::Precondition(
            "geodesic distance requested between identical points".into(),
        ));
    }
    let mut starts: Vec<Vec<f64>> = vec![chord.clone()];
    for k in 1..cfg.shooting_starts {
        // shrink or stretch the chord; curvature typically bends geodesics
        // so that the straight-line velocity over- or under-shoots
        let s = 0.5 + 1.5 * k as f64 / cfg.shooting_starts as f64;
        starts.push(chord.iter().map(|c| c * s).collect());
    }
    let mut last_err: Option<Error> = None;
    for v_start in starts {
        match newton_shoot(model, xi0, xi1, v_start, cfg) {
            Ok(v) => {
                let frame = frame_at(model, xi0, cfg)?;
                let mut g_norm2 = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        g_norm2 += frame.metric[(i, j)] * v[i] * v[j];
                    }
                }
                let r = g_norm2.sqrt();
                let unit: Vec<f64> = v.iter().map(|x| x / r).collect();
                let path = shoot(model, xi0, &unit, r, cfg)?;
                return Ok((r, path));
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(Error::Shooting {
        starts: cfg.shooting_starts,
        detail: last_err.map(|e| e.to_string()).unwrap_or_default(),
    })
}

fn newton_shoot(
    model: &dyn Model,
    xi0: &[f64],
    xi1: &[f64],
    mut v: Vec<f64>,
    cfg: &NumericConfig,
) -> Result<Vec<f64>> {
    let d = model.dim();
    let scale: f64 = xi1
        .iter()
        .map(|x| NumericConfig::scale(*x))
        .fold(1.0_f64, f64::max);
    let tol = 1e-10 * scale;
    let mut res = residual(model, xi0, &v, xi1, cfg)?;
    let mut res_norm: f64 = res.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..60 {
        if res_norm <= tol {
            return Ok(v);
        }
        let jac = fd::jacobian(
            &mut |vv: &[f64]| residual(model, xi0, vv, xi1, cfg),
            &v,
            1e-6,
        )?;
        let jm = DMatrix::from_fn(d, d, |i, j| jac[(i, j)]);
        let rhs = nalgebra::DVector::from_iterator(d, res.iter().map(|x| -x));
        let step = jm
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numeric("singular shooting Jacobian".into()))?;
        // backtracking line search on the residual norm
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = v
                .iter()
                .enumerate()
                .map(|(i, x)| x + lambda * step[i])
                .collect();
            match residual(model, xi0, &trial, xi1, cfg) {
                Ok(r) => {
                    let n: f64 = r.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if n < res_norm || lambda < 1e-4 {
                        v = trial;
                        res = r;
                        res_norm = n;
                        break;
                    }
                }
                Err(_) => {}
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(Error::NoConvergence(
                    "shooting line search stalled".into(),
                ));
            }
        }
    }
    if res_norm <= tol * 10.0 {
        return Ok(v);
    }
    Err(Error::NoConvergence(format!(
        "shooting residual {res_norm:.3e} above tolerance {tol:.3e}"
    )))
}

/// Normal coordinates of xi about the pole xi0: zeta = r v0, where v0 is the
/// coordinate-basis initial velocity of the unit-speed connecting geodesic.
pub fn normal_coords(
    model: &dyn Model,
    xi0: &[f64],
    xi: &[f64],
    cfg: &NumericConfig,
) -> Result<Vec<f64>> {
    let (r, path) = distance(model, xi0, xi, cfg)?;
    Ok(path.v0.iter().map(|v| v * r).collect())
}

/// Jacobian d exp(zeta) / d zeta of the exponential map at zeta,
/// by central differences of geodesic solves.
pub fn exp_jacobian(
    model: &dyn Model,
    xi0: &[f64],
    zeta: &[f64],
    cfg: &NumericConfig,
) -> Result<DMatrix<f64>> {
    let d = model.dim();
    let mut jac = DMatrix::zeros(d, d);
    for b in 0..d {
        // wide enough that the integrator's adaptive-step noise does not
        // dominate the difference quotient
        let h = 1e-3 * NumericConfig::scale(zeta[b]);
        let mut zp = zeta.to_vec();
        zp[b] += h;
        let mut zm = zeta.to_vec();
        zm[b] -= h;
        let xp = exp_map(model, xi0, &zp, cfg)?;
        let xm = exp_map(model, xi0, &zm, cfg)?;
        for a in 0..d {
            jac[(a, b)] = (xp[a] - xm[a]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Determinant of the metric pulled back to the normal chart:
/// g_bar(zeta) = J^T g(exp zeta) J with J the exponential-map Jacobian.
pub fn det_bar_g(model: &dyn Model, xi0: &[f64], zeta: &[f64], cfg: &NumericConfig) -> Result<f64> {
    let xi = exp_map(model, xi0, zeta, cfg)?;
    let frame = frame_at(model, &xi, cfg)?;
    let jac = exp_jacobian(model, xi0, zeta, cfg)?;
    let gbar = jac.transpose() * &frame.metric * &jac;
    Ok(gbar.determinant())
}

/// Contracted skewness covector in the normal chart:
/// S_bar_i(zeta) = S_j(exp zeta) J^j_i.
pub fn skew_bar(
    model: &dyn Model,
    xi0: &[f64],
    zeta: &[f64],
    cfg: &NumericConfig,
) -> Result<Vec<f64>> {
    let d = model.dim();
    let xi = exp_map(model, xi0, zeta, cfg)?;
    let frame = frame_at(model, &xi, cfg)?;
    let jac = exp_jacobian(model, xi0, zeta, cfg)?;
    let mut out = vec![0.0; d];
    for i in 0..d {
        for j in 0..d {
            out[i] += frame.contracted_skewness[j] * jac[(j, i)];
        }
    }
    Ok(out)
}

/// Residuals of the three radial identities used by the pole-based prior
/// constructions, evaluated at `xi` with pole `xi0`:
///
/// (i)   (1/2) d(r^2)/dxi^i = r g_ij dxi^j/dr along the connecting geodesic,
/// (ii)  Lap(f o r^2) = f'·Lap(r^2) + 4 r^2 f''  for the probe f(t) = exp(t/4),
/// (iii) Lap(r^2) = 2 d + r · d/dr log det(g_bar),
///
/// where Lap is the Levi-Civita (alpha = 0) Laplacian.
#[derive(Debug, Clone)]
pub struct RieszResiduals {
    pub r: f64,
    pub gradient: f64,
    pub chain_rule: f64,
    pub radial_laplacian: f64,
}

pub fn riesz_check(
    model: &dyn Model,
    xi0: &[f64],
    xi: &[f64],
    cfg: &NumericConfig,
) -> Result<RieszResiduals> {
    let d = model.dim();
    let (r, path) = distance(model, xi0, xi, cfg)?;
    let frame = frame_at(model, xi, cfg)?;

    // Laplacian of a scalar field given by a closure, from finite differences
    // of the field plus the contracted Levi-Civita connection.
    let laplacian = |f: &mut dyn FnMut(&[f64]) -> Result<f64>| -> Result<(f64, Vec<f64>)> {
        let grad = fd::gradient(&mut |x: &[f64]| f(x), xi, 1e-4)?;
        let hess = fd::hessian(&mut |x: &[f64]| f(x), xi, 1e-3)?;
        let c = frame.contracted_connection(0.0);
        let mut lap = 0.0;
        for i in 0..d {
            for j in 0..d {
                lap += frame.metric_inv[(i, j)] * (hess[(i, j)] - c[i] * grad[j]);
            }
        }
        Ok((lap, grad))
    };

    let mut rsq = |x: &[f64]| -> Result<f64> {
        let (rr, _) = distance(model, xi0, x, cfg)?;
        Ok(rr * rr)
    };
    let (lap_rsq, grad_rsq) = laplacian(&mut rsq)?;

    // (i) gradient identity
    let (_, vel) = path.at(r);
    let mut res_grad: f64 = 0.0;
    for i in 0..d {
        let mut gv = 0.0;
        for j in 0..d {
            gv += frame.metric[(i, j)] * vel[j];
        }
        res_grad = res_grad.max((0.5 * grad_rsq[i] - r * gv).abs());
    }

    // (ii) chain rule with the probe f(t) = exp(t/4)
    let mut composed = |x: &[f64]| -> Result<f64> {
        let (rr, _) = distance(model, xi0, x, cfg)?;
        Ok((rr * rr / 4.0).exp())
    };
    let (lap_f, _) = laplacian(&mut composed)?;
    let fv = (r * r / 4.0).exp();
    let res_chain = lap_f - (fv / 4.0 * lap_rsq + 4.0 * r * r * fv / 16.0);

    // (iii) radial form of the Laplacian of r^2
    let h = 1e-3 * r.max(0.1);
    let ln_det = |rr: f64| -> Result<f64> {
        let zeta: Vec<f64> = path.v0.iter().map(|v| v * rr).collect();
        Ok(det_bar_g(model, xi0, &zeta, cfg)?.ln())
    };
    let dlog = (ln_det(r + h)? - ln_det(r - h)?) / (2.0 * h);
    let res_radial = lap_rsq - (2.0 * d as f64 + r * dlog);

    Ok(RieszResiduals {
        r,
        gradient: res_grad,
        chain_rule: res_chain,
        radial_laplacian: res_radial,
    })
}
