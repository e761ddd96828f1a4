//! Radial constructions around a pole: the geodesic-pole prior for a
//! monotone function of the squared distance, and the estimand that makes
//! the Jeffreys prior the right adjustment.
//!
//! Run with: cargo run --example radial_priors

use unbiasgeo::manifold::make_builtin;
use unbiasgeo::prior::{build_prior_geodesic, condition_residual, jeffreys_estimand};
use unbiasgeo::registry::{estimand_by_name, prior_by_name};
use unbiasgeo::NumericConfig;

fn main() -> unbiasgeo::Result<()> {
    let cfg = NumericConfig::default();

    // Flat planar Gaussian, pole at the origin: for f(t) = t the prior is
    // e^{l~} = 1/r.
    let mvn = make_builtin("mvn_known_cov", &serde_json::json!({"d": 2}))?;
    let f_t = estimand_by_name("t_identity", &serde_json::json!({}), &mvn)?;
    let lp = build_prior_geodesic(mvn.clone(), vec![0.0, 0.0], f_t, &cfg)?;
    println!("geodesic-pole prior for the squared radius on the flat Gaussian:");
    for pt in [[1.0_f64, 0.0], [0.6, 0.8], [1.5, -2.0]] {
        let r = pt.iter().map(|x| x * x).sum::<f64>().sqrt();
        println!("  {pt:?}: l~ = {:+.6} (-log r = {:+.6})", lp.eval(&pt)?, -r.ln());
    }

    // The estimand tailored to the Jeffreys prior: on the flat Gaussian it
    // is 2 log(r/r0) in d = 2 and 2(1/r0 - 1/r) in d = 3.
    println!("\nestimand unbiased under the Jeffreys prior:");
    for d in [2usize, 3] {
        let m = make_builtin("mvn_known_cov", &serde_json::json!({"d": d}))?;
        let jef = prior_by_name("jeffreys", &serde_json::json!({}), &m, &cfg)?;
        let f = jeffreys_estimand(m.clone(), vec![0.0; d], &cfg)?;
        let mut pt = vec![0.0; d];
        pt[0] = 0.5;
        pt[1] = 0.9;
        let r = pt.iter().map(|x| x * x).sum::<f64>().sqrt();
        let r0 = cfg.anchor_radius;
        let want = if d == 2 {
            2.0 * (r / r0).ln()
        } else {
            2.0 * (1.0 / r0 - 1.0 / r)
        };
        let res = condition_residual(m.as_ref(), &pt, &f, &jef, &cfg)?;
        println!(
            "  d = {d}, r = {r:.3}: f = {:.6} (closed {want:.6}), condition residual {res:+.1e}",
            f.eval(&pt)?
        );
    }
    Ok(())
}
