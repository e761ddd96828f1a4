//! Closed-form geometry oracles, tensor identities, and curvature checks
//! for the built-in models.

use std::sync::Arc;

use nalgebra::DMatrix;
use unbiasgeo::geometry::{
    alpha_laplacian, frame_at, identity_residuals, numeric_frame_at, riemann_curvature,
};
use unbiasgeo::manifold::{make_builtin, Model};
use unbiasgeo::prior::Estimand;
use unbiasgeo::registry::estimand_by_name;
use unbiasgeo::NumericConfig;

fn cfg() -> NumericConfig {
    NumericConfig::default()
}

fn ls() -> Arc<dyn Model> {
    make_builtin("location_scale_normal", &serde_json::json!({})).unwrap()
}

fn lme(m: &[usize]) -> Arc<dyn Model> {
    make_builtin("nested_error_lme", &serde_json::json!({ "m": m })).unwrap()
}

fn mvn(d: usize) -> Arc<dyn Model> {
    make_builtin("mvn_known_cov", &serde_json::json!({ "d": d })).unwrap()
}

fn em(n: usize, chart: &str) -> Arc<dyn Model> {
    make_builtin("efron_morris", &serde_json::json!({ "n": n, "chart": chart })).unwrap()
}

/// Ten interior evaluation points per model.
fn grid(model: &dyn Model) -> Vec<Vec<f64>> {
    let dom = model.domain();
    let anchor = model.reference_point();
    let mut pts = Vec::new();
    for k in 0..10 {
        let t = 0.55 + 0.11 * k as f64; // multiplicative spread around the anchor
        let p: Vec<f64> = anchor
            .iter()
            .zip(&dom)
            .map(|(&a, &(lo, hi))| {
                if lo.is_finite() {
                    lo + (a - lo) * t
                } else if hi.is_finite() {
                    hi - (hi - a) * t
                } else {
                    a + (t - 1.0) * 2.0
                }
            })
            .collect();
        pts.push(p);
    }
    pts
}

#[test]
fn location_scale_closed_frame() {
    let m = ls();
    let c = cfg();
    for (mu, sg) in [(0.0, 1.0), (0.7, 0.4), (-1.3, 2.5)] {
        let f = frame_at(m.as_ref(), &[mu, sg], &c).unwrap();
        let w = 2.0 / (sg * sg);
        assert!((f.metric[(0, 0)] - w).abs() < 1e-12);
        assert!((f.metric[(1, 1)] - w).abs() < 1e-12);
        assert!(f.metric[(0, 1)].abs() < 1e-12);
        // third score moments: S_mms = 4/s^3, S_sss = 8/s^3
        let s3 = sg * sg * sg;
        assert!((f.skewness.get(0, 0, 1) - 4.0 / s3).abs() < 1e-12);
        assert!((f.skewness.get(1, 1, 1) - 8.0 / s3).abs() < 1e-12);
        assert!(f.skewness.get(0, 0, 0).abs() < 1e-12);
        // contraction from definitions: S_mu = 0, S_sigma = 6/sigma
        assert!(f.contracted_skewness[0].abs() < 1e-12);
        assert!((f.contracted_skewness[1] - 6.0 / sg).abs() < 1e-12);
        // Gamma^(alpha)_{ss,s} = (-2 - 4 alpha)/sigma^3
        for alpha in [-1.0_f64, 0.0, 0.5, 1.0] {
            let g = f.alpha_connection(alpha);
            assert!((g.get(1, 1, 1) - (-2.0 - 4.0 * alpha) / s3).abs() < 1e-10);
        }
    }
}

#[test]
fn location_scale_curvature_closed_form() {
    let m = ls();
    let c = cfg();
    for (mu, sg) in [(0.0, 1.0), (0.4, 1.6)] {
        for alpha in [-1.0_f64, -0.5, 0.0, 0.5, 1.0] {
            let cv = riemann_curvature(m.as_ref(), &[mu, sg], alpha, &c).unwrap();
            let expect = -2.0 / sg.powi(4) * (1.0 + alpha) * (1.0 - alpha);
            let got = cv.riemann.get(0, 1, 0, 1);
            assert!(
                (got - expect).abs() < 1e-5,
                "R_msms at sigma={sg} alpha={alpha}: {got} vs {expect}"
            );
            // antisymmetry in the last index pair
            assert!((cv.riemann.get(0, 1, 0, 1) + cv.riemann.get(0, 1, 1, 0)).abs() < 1e-8);
        }
    }
}

#[test]
fn mvn_flat_everywhere() {
    let m = mvn(3);
    let c = cfg();
    for p in grid(m.as_ref()) {
        let f = frame_at(m.as_ref(), &p, &c).unwrap();
        assert!((&f.metric - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-12);
        assert!(f.skewness.max_abs() < 1e-12);
        for alpha in [-1.0_f64, 0.0, 1.0] {
            let cv = riemann_curvature(m.as_ref(), &p, alpha, &c).unwrap();
            assert!(cv.riemann.max_abs() < 1e-10, "mvn curvature alpha={alpha}");
        }
    }
}

#[test]
fn lme_dually_flat() {
    let m = lme(&[2, 3, 2, 5]);
    let c = cfg();
    let f = frame_at(m.as_ref(), &[1.0, 2.0], &c).unwrap();
    // the (-1)-connection vanishes in the (a, d) chart
    let g_m1 = f.alpha_connection(-1.0);
    assert!(g_m1.max_abs() < 1e-10, "Gamma^(-1) = {:?}", g_m1.max_abs());
    for alpha in [-1.0_f64, 1.0] {
        let cv = riemann_curvature(m.as_ref(), &[1.0, 2.0], alpha, &c).unwrap();
        assert!(cv.riemann.max_abs() < 1e-5, "LME R^({alpha})");
    }
}

#[test]
fn duality_and_covariant_identities_closed() {
    let c = cfg();
    let models: Vec<Arc<dyn Model>> = vec![em(30, "variance"), em(30, "natural"), mvn(2), ls(), lme(&[2, 3])];
    for m in &models {
        for p in grid(m.as_ref()) {
            for alpha in [-1.0_f64, -0.5, 0.0, 0.5, 1.0] {
                let (dual, cov) = identity_residuals(m.as_ref(), &p, alpha, &c).unwrap();
                assert!(dual < 1e-6, "{} duality {dual:.2e} at {p:?} a={alpha}", m.name());
                assert!(cov < 1e-6, "{} covariant {cov:.2e} at {p:?} a={alpha}", m.name());
            }
        }
    }
}

#[test]
fn numeric_frames_match_closed_forms() {
    let c = cfg();
    let models: Vec<Arc<dyn Model>> = vec![em(20, "variance"), mvn(2), ls(), lme(&[2, 3])];
    for m in &models {
        let anchor = m.reference_point();
        let nf = numeric_frame_at(m.as_ref(), &anchor, &c).unwrap();
        let f = frame_at(m.as_ref(), &anchor, &c).unwrap();
        let dg = (&nf.metric - &f.metric).abs().max() / f.metric.abs().max();
        let ds = nf.skewness.sub(&f.skewness).max_abs() / f.skewness.max_abs().max(1.0);
        assert!(dg < 1e-3, "{} metric gap {dg:.2e}", m.name());
        assert!(ds < 1e-3, "{} skewness gap {ds:.2e}", m.name());
        // and the numeric frame also satisfies the structural identities
        let gamma0 = nf.alpha_connection(0.0);
        let mut max_asym: f64 = 0.0;
        for i in 0..nf.dim() {
            for j in 0..nf.dim() {
                for k in 0..nf.dim() {
                    max_asym = max_asym
                        .max((nf.skewness.get(i, j, k) - nf.skewness.get(j, i, k)).abs())
                        .max((nf.skewness.get(i, j, k) - nf.skewness.get(k, j, i)).abs())
                        .max((gamma0.get(i, j, k) - gamma0.get(j, i, k)).abs());
                }
            }
        }
        assert!(max_asym < 1e-10, "{} symmetry {max_asym:.2e}", m.name());
    }
}

#[test]
fn metric_positive_definite_and_skewness_symmetric() {
    let c = cfg();
    let models: Vec<Arc<dyn Model>> = vec![em(30, "variance"), em(30, "natural"), mvn(3), ls(), lme(&[2, 5])];
    for m in &models {
        for p in grid(m.as_ref()) {
            let f = frame_at(m.as_ref(), &p, &c).unwrap();
            let eig = f.metric.clone().symmetric_eigenvalues();
            assert!(eig.min() > 0.0, "{} metric not PD at {p:?}", m.name());
            for i in 0..f.dim() {
                for j in 0..f.dim() {
                    for k in 0..f.dim() {
                        let s = f.skewness.get(i, j, k);
                        assert!((s - f.skewness.get(j, i, k)).abs() < 1e-12);
                        assert!((s - f.skewness.get(i, k, j)).abs() < 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn first_bianchi_identity() {
    let c = cfg();
    let m = ls();
    for alpha in [-0.5_f64, 0.0, 0.7] {
        let cv = riemann_curvature(m.as_ref(), &[0.2, 1.3], alpha, &c).unwrap();
        let d = 2;
        for j in 0..d {
            for i in 0..d {
                for k in 0..d {
                    for r in 0..d {
                        let cyc = cv.riemann.get(j, i, k, r)
                            + cv.riemann.get(j, k, r, i)
                            + cv.riemann.get(j, r, i, k);
                        assert!(cyc.abs() < 1e-6, "bianchi {cyc:.2e}");
                    }
                }
            }
        }
    }
}

/// R^(alpha) - R^(-alpha) = alpha (D_r S_ijk - D_k S_ijr) on the
/// location-scale model, where D is the Levi-Civita covariant derivative.
/// The hyperbolic plane has constant curvature, so both sides vanish and
/// the manifold is conjugate symmetric; the check is still non-trivial
/// because the plain partial-derivative antisymmetrization of S does not
/// vanish in these coordinates.
#[test]
fn conjugate_symmetry_location_scale() {
    let c = cfg();
    let m = ls();
    let d = 2;
    for point in [[0.0, 1.0], [0.5, 1.8]] {
        let frame = frame_at(m.as_ref(), &point, &c).unwrap();
        let skew = frame.skewness.clone();
        let gam0 = frame.alpha_connection_upper(0.0); // Gamma^t_{ki} as get(t, k, i)
        // d_k S_ijr by central differences of the closed-form skewness
        let h = 1e-5;
        let mut ds = vec![unbiasgeo::linalg::Tensor3::zeros(d); d];
        for (k, slot) in ds.iter_mut().enumerate() {
            let mut xp = point.to_vec();
            xp[k] += h;
            let mut xm = point.to_vec();
            xm[k] -= h;
            let sp = frame_at(m.as_ref(), &xp, &c).unwrap().skewness;
            let sm = frame_at(m.as_ref(), &xm, &c).unwrap().skewness;
            for i in 0..d {
                for j in 0..d {
                    for r in 0..d {
                        slot.set(i, j, r, (sp.get(i, j, r) - sm.get(i, j, r)) / (2.0 * h));
                    }
                }
            }
        }
        // covariant derivative D_k S_{ijr}
        let cov = |k: usize, i: usize, j: usize, r: usize| -> f64 {
            let mut v = ds[k].get(i, j, r);
            for t in 0..d {
                v -= gam0.get(t, k, i) * skew.get(t, j, r);
                v -= gam0.get(t, k, j) * skew.get(i, t, r);
                v -= gam0.get(t, k, r) * skew.get(i, j, t);
            }
            v
        };
        for alpha in [0.5_f64, 1.0] {
            let rp = riemann_curvature(m.as_ref(), &point, alpha, &c).unwrap().riemann;
            let rm = riemann_curvature(m.as_ref(), &point, -alpha, &c).unwrap().riemann;
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        for r in 0..d {
                            let lhs = rp.get(j, i, k, r) - rm.get(j, i, k, r);
                            let rhs = alpha * (cov(r, i, j, k) - cov(k, i, j, r));
                            assert!(
                                (lhs - rhs).abs() < 1e-3,
                                "conj sym ({i}{j}{k}{r}) a={alpha}: {lhs} vs {rhs}"
                            );
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn em_mean_parameter_is_minus_one_harmonic() {
    let c = cfg();
    let m = em(30, "natural");
    let eta = estimand_by_name("em_eta", &serde_json::json!({"n": 30}), &m).unwrap();
    for xi in [-0.9_f64, -0.5, -0.2] {
        let lap = alpha_laplacian(m.as_ref(), &[xi], &eta, -1.0, &c).unwrap();
        assert!(lap.abs() < 1e-8, "em eta laplacian {lap:.2e} at {xi}");
    }
}

#[test]
fn linear_estimand_harmonic_on_flat_model() {
    let c = cfg();
    let m = mvn(2);
    let f = Estimand::new(
        "linear",
        Arc::new(|xi: &[f64]| Ok(3.0 * xi[0] - 0.5 * xi[1] + 2.0)),
    );
    for alpha in [-1.0_f64, 0.0, 1.0] {
        let lap = alpha_laplacian(m.as_ref(), &[0.3, -0.8], &f, alpha, &c).unwrap();
        assert!(lap.abs() < 1e-6, "linear laplacian {lap:.2e} at alpha {alpha}");
    }
}

#[test]
fn fundamental_solution_harmonic_mvn_d3() {
    let c = cfg();
    let m = mvn(3);
    let xi0 = [0.1, -0.2, 0.3];
    let f = Estimand::new(
        "inverse_distance",
        Arc::new(move |xi: &[f64]| {
            let r2: f64 = xi.iter().zip(&xi0).map(|(a, b)| (a - b) * (a - b)).sum();
            Ok(r2.sqrt().recip())
        }),
    );
    for p in [[1.0, 0.0, 0.0], [0.6, 0.7, -0.4], [-0.5, 0.9, 1.2], [2.0, 0.3, 0.3]] {
        let lap = alpha_laplacian(m.as_ref(), &p, &f, 0.0, &c).unwrap();
        assert!(lap.abs() < 1e-6, "1/r laplacian {lap:.2e} at {p:?}");
    }
}

#[test]
fn lme_unit_shrinkage_laplacian_oracle() {
    let c = cfg();
    let m = lme(&[2, 3]);
    let b0 = estimand_by_name("unit_shrinkage", &serde_json::json!({"unit": 0}), &m).unwrap();
    let f = frame_at(m.as_ref(), &[1.0, 1.0], &c).unwrap();
    let lap = alpha_laplacian(m.as_ref(), &[1.0, 1.0], &b0, -1.0, &c).unwrap();
    // hand-evaluated closed form at (a, d) = (1, 1), m = (2, 3)
    assert!(
        (lap * f.metric_det - 23.0 / 54.0).abs() < 1e-8,
        "det(g) * lap = {}",
        lap * f.metric_det
    );
}

#[test]
fn score_mean_zero_over_samples() {
    use rand::SeedableRng;
    let _ = cfg();
    let models: Vec<Arc<dyn Model>> = vec![em(25, "variance"), mvn(2), ls(), lme(&[2, 3])];
    for m in &models {
        for (pi, p) in grid(m.as_ref()).into_iter().step_by(2).enumerate() {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(900 + pi as u64);
            let d = m.dim();
            let draws = 20_000;
            let mut sum = vec![0.0; d];
            let mut sumsq = vec![0.0; d];
            for i in 0..draws {
                let obs = m.sample_obs(&p, i, &mut rng).unwrap();
                let score = match m.log_density_grad(&p, &obs) {
                    Some(g) => g,
                    None => unbiasgeo::numeric::fd::gradient(
                        &mut |x: &[f64]| m.log_density(x, &obs),
                        &p,
                        1e-6,
                    )
                    .unwrap(),
                };
                for k in 0..d {
                    sum[k] += score[k];
                    sumsq[k] += score[k] * score[k];
                }
            }
            for k in 0..d {
                let mean = sum[k] / draws as f64;
                let var = sumsq[k] / draws as f64 - mean * mean;
                let se = (var / draws as f64).sqrt();
                assert!(
                    mean.abs() < 4.0 * se.max(1e-12),
                    "{} score mean {mean:.3e} (se {se:.3e}) at {p:?}",
                    m.name()
                );
            }
        }
    }
}
