//! Adaptive Dormand-Prince RK45 with dense (Hermite) output.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    pub dys: Vec<Vec<f64>>,
}

impl OdeSolution {
    pub fn t_end(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    pub fn y_end(&self) -> &[f64] {
        self.ys.last().unwrap()
    }

    fn locate(&self, t: f64) -> usize {
        let n = self.ts.len();
        match self
            .ts
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i.clamp(1, n - 1) - 1,
        }
    }

    /// Cubic Hermite interpolation of the state at `t` within the solved span.
    pub fn at(&self, t: f64) -> Vec<f64> {
        if self.ts.len() == 1 {
            return self.ys[0].clone();
        }
        let i = self.locate(t);
        let (t0, t1) = (self.ts[i], self.ts[i + 1]);
        let h = t1 - t0;
        if h == 0.0 {
            return self.ys[i].clone();
        }
        let s = (t - t0) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        (0..self.ys[i].len())
            .map(|k| {
                h00 * self.ys[i][k]
                    + h10 * h * self.dys[i][k]
                    + h01 * self.ys[i + 1][k]
                    + h11 * h * self.dys[i + 1][k]
            })
            .collect()
    }

    pub fn deriv_at(&self, t: f64) -> Vec<f64> {
        if self.ts.len() == 1 {
            return self.dys[0].clone();
        }
        let i = self.locate(t);
        let (t0, t1) = (self.ts[i], self.ts[i + 1]);
        let h = t1 - t0;
        if h == 0.0 {
            return self.dys[i].clone();
        }
        let s = (t - t0) / h;
        // Derivative of the cubic Hermite basis.
        let d00 = (6.0 * s * s - 6.0 * s) / h;
        let d10 = 3.0 * s * s - 4.0 * s + 1.0;
        let d01 = (6.0 * s - 6.0 * s * s) / h;
        let d11 = 3.0 * s * s - 2.0 * s;
        (0..self.ys[i].len())
            .map(|k| {
                d00 * self.ys[i][k]
                    + d10 * self.dys[i][k]
                    + d01 * self.ys[i + 1][k]
                    + d11 * self.dys[i + 1][k]
            })
            .collect()
    }
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates y' = f(t, y) from t0 to t1 (t1 > t0). `in_domain` is checked at
/// every accepted step; leaving the domain aborts with `TruncatedPath`
/// carrying the last valid t.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    y0: Vec<f64>,
    t1: f64,
    rel_tol: f64,
    abs_tol: f64,
    mut in_domain: impl FnMut(&[f64]) -> bool,
) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let n = y0.len();
    let mut t = t0;
    let mut y = y0;
    let mut dy = f(t, &y)?;
    let mut sol = OdeSolution {
        ts: vec![t],
        ys: vec![y.clone()],
        dys: vec![dy.clone()],
    };
    if t1 == t0 {
        return Ok(sol);
    }
    let mut h = ((t1 - t0) / 64.0).max(1e-12);
    let mut steps = 0usize;
    while t < t1 {
        steps += 1;
        if steps > 1_000_000 {
            return Err(Error::Numeric("ODE step limit exceeded".into()));
        }
        h = h.min(t1 - t);
        let mut k = vec![dy.clone()];
        let mut failed = false;
        for stage in 0..6 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    for i in 0..n {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            match f(t + h * [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0][stage], &ys) {
                Ok(ki) => k.push(ki),
                Err(_) => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            h *= 0.25;
            if h < 1e-14 * (t1 - t0) {
                return Err(Error::TruncatedPath { exit_radius: t });
            }
            continue;
        }
        // 5th-order solution = stage-6 state (FSAL); error vs embedded 4th.
        let mut y5 = y.clone();
        for (j, kj) in k.iter().enumerate().take(6) {
            let a = A[5][j];
            for i in 0..n {
                y5[i] += h * a * kj[i];
            }
        }
        let mut err = 0.0_f64;
        for i in 0..n {
            let mut y4i = y[i];
            for (j, kj) in k.iter().enumerate() {
                y4i += h * B4[j] * kj[i];
            }
            let sc = abs_tol + rel_tol * y[i].abs().max(y5[i].abs());
            err = err.max(((y5[i] - y4i) / sc).abs());
        }
        if err <= 1.0 {
            t += h;
            y = y5;
            dy = k[6].clone();
            if !in_domain(&y) {
                return Err(Error::TruncatedPath { exit_radius: t });
            }
            sol.ts.push(t);
            sol.ys.push(y.clone());
            sol.dys.push(dy.clone());
        }
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
    }
    Ok(sol)
}
