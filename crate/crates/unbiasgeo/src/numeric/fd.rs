//! Central finite differences with coordinate-relative steps.

use nalgebra::DMatrix;

use crate::config::NumericConfig;
use crate::error::Result;

pub fn step(xi: f64, rel: f64) -> f64 {
    rel * NumericConfig::scale(xi)
}

pub fn gradient<F>(f: &mut F, xi: &[f64], rel: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut g = vec![0.0; xi.len()];
    let mut x = xi.to_vec();
    for i in 0..xi.len() {
        let h = step(xi[i], rel);
        x[i] = xi[i] + h;
        let fp = f(&x)?;
        x[i] = xi[i] - h;
        let fm = f(&x)?;
        x[i] = xi[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

pub fn hessian<F>(f: &mut F, xi: &[f64], rel: f64) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let d = xi.len();
    let mut h = DMatrix::zeros(d, d);
    let f0 = f(xi)?;
    let mut x = xi.to_vec();
    for i in 0..d {
        let hi = step(xi[i], rel);
        x[i] = xi[i] + hi;
        let fp = f(&x)?;
        x[i] = xi[i] - hi;
        let fm = f(&x)?;
        x[i] = xi[i];
        h[(i, i)] = (fp - 2.0 * f0 + fm) / (hi * hi);
        for j in (i + 1)..d {
            let hj = step(xi[j], rel);
            let mut val = 0.0;
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                x[i] = xi[i] + si * hi;
                x[j] = xi[j] + sj * hj;
                val += si * sj * f(&x)?;
            }
            x[i] = xi[i];
            x[j] = xi[j];
            let v = val / (4.0 * hi * hj);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Ok(h)
}

/// Jacobian of a vector-valued map by central differences.
pub fn jacobian<F>(f: &mut F, xi: &[f64], rel: f64) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let d = xi.len();
    let f0 = f(xi)?;
    let m = f0.len();
    let mut jac = DMatrix::zeros(m, d);
    let mut x = xi.to_vec();
    for j in 0..d {
        let h = step(xi[j], rel);
        x[j] = xi[j] + h;
        let fp = f(&x)?;
        x[j] = xi[j] - h;
        let fm = f(&x)?;
        x[j] = xi[j];
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}
