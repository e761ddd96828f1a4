//! Small dense-tensor helpers on top of nalgebra.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Rank-3 tensor with all indices of dimension `d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub d: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(d: usize) -> Self {
        Tensor3 {
            d,
            data: vec![0.0; d * d * d],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.d + j) * self.d + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.d + j) * self.d + k] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.d + j) * self.d + k] += v;
    }

    pub fn scale(&self, c: f64) -> Tensor3 {
        Tensor3 {
            d: self.d,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn sub(&self, other: &Tensor3) -> Tensor3 {
        Tensor3 {
            d: self.d,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Rank-4 tensor with all indices of dimension `d`.
#[derive(Debug, Clone)]
pub struct Tensor4 {
    pub d: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(d: usize) -> Self {
        Tensor4 {
            d,
            data: vec![0.0; d * d * d * d],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, r: usize) -> f64 {
        self.data[((i * self.d + j) * self.d + k) * self.d + r]
    }

    #[inline]
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, r: usize, v: f64) {
        self.data[((i * self.d + j) * self.d + k) * self.d + r] = v;
    }
}

/// Inverts a symmetric positive-definite matrix, reporting the smallest
/// eigenvalue if the matrix is not numerically PD. The metric is never
/// "repaired"; callers must treat this as a hard failure.
pub fn invert_spd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let eig = m.clone().symmetric_eigen();
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_eig > 0.0) {
        return Err(Error::MetricNotPd(min_eig));
    }
    let det = eig.eigenvalues.iter().product();
    let inv = m
        .clone()
        .try_inverse()
        .ok_or(Error::MetricNotPd(min_eig))?;
    Ok((inv, det))
}

/// Neumaier compensated summation.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}
