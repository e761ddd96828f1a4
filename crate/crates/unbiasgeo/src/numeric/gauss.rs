//! Gaussian quadrature rules via Golub-Welsch on the Jacobi matrix.

use nalgebra::DMatrix;

/// Nodes and weights of a quadrature rule. For the probabilist rules below
/// the weights sum to one, i.e. the rule integrates against a density.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Eigen-decomposition of the symmetric tridiagonal Jacobi matrix.
/// Returns nodes (eigenvalues) and the squared first eigenvector components,
/// which are the weights normalized to sum one.
fn golub_welsch(diag: &[f64], offdiag: &[f64]) -> GaussRule {
    let n = diag.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = diag[i];
        if i + 1 < n {
            m[(i, i + 1)] = offdiag[i];
            m[(i + 1, i)] = offdiag[i];
        }
    }
    let eig = m.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let v0 = eig.eigenvectors[(0, j)];
            (eig.eigenvalues[j], v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    GaussRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1 / total).collect(),
    }
}

/// Gauss-Hermite rule for E[f(Z)], Z ~ N(0,1).
pub fn gauss_hermite_standard_normal(n: usize) -> GaussRule {
    // Physicists' Hermite recurrence: a_k = 0, b_k = sqrt(k/2); then x = sqrt(2) t.
    let diag = vec![0.0; n];
    let offdiag: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    let mut rule = golub_welsch(&diag, &offdiag);
    for x in rule.nodes.iter_mut() {
        *x *= std::f64::consts::SQRT_2;
    }
    rule
}

/// Generalized Gauss-Laguerre rule for E[f(X)] with X ~ Gamma(shape, scale=1),
/// i.e. weight x^(shape-1) e^{-x}.
pub fn gauss_gamma(shape: f64, n: usize) -> GaussRule {
    let alpha = shape - 1.0;
    let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
    let offdiag: Vec<f64> = (1..n)
        .map(|k| ((k as f64) * (k as f64 + alpha)).sqrt())
        .collect();
    golub_welsch(&diag, &offdiag)
}

/// Rule for E[f(X)] with X ~ chi-squared(k degrees of freedom).
pub fn gauss_chi2(dof: usize, n: usize) -> GaussRule {
    let mut rule = gauss_gamma(dof as f64 / 2.0, n);
    for x in rule.nodes.iter_mut() {
        *x *= 2.0;
    }
    rule
}
