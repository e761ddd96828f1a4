//! Building priors that make the MAP plug-in estimator of a scalar
//! second-order unbiased, and checking the defining condition
//! <df, dl~> + (1/2) Lap^(-1) f = 0.
//!
//! Run with: cargo run --example prior_construction

use unbiasgeo::manifold::make_builtin;
use unbiasgeo::prior::{build_prior_1d, build_prior_along_estimand, condition_residual};
use unbiasgeo::registry::{estimand_by_name, prior_by_name};
use unbiasgeo::NumericConfig;

fn main() -> unbiasgeo::Result<()> {
    let cfg = NumericConfig::default();

    // One-parameter normal-variance model: the shrinkage factor 1/(1 + u)
    // gets the adjustment prior e^{l~} = 1 + u. Three independent
    // constructions coincide up to an additive constant.
    let em = make_builtin(
        "efron_morris",
        &serde_json::json!({"n": 50, "chart": "variance"}),
    )?;
    let shrink = estimand_by_name("shrinkage", &serde_json::json!({}), &em)?;
    let closed = prior_by_name("shrinkage_adjust", &serde_json::json!({}), &em, &cfg)?;
    let one_d = build_prior_1d(em.clone(), shrink.clone(), &cfg)?;
    let condg = build_prior_along_estimand(em.clone(), shrink.clone(), vec![1.0], &cfg)?;
    println!("normal-variance shrinkage prior (values relative to u = 1):");
    let offs: Vec<f64> = [&closed, &one_d, &condg]
        .iter()
        .map(|p| p.eval(&[1.0]))
        .collect::<unbiasgeo::Result<_>>()?;
    println!("  u      closed    one-d     level-set  residual");
    for u in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let r = condition_residual(em.as_ref(), &[u], &shrink, &closed, &cfg)?;
        println!(
            "  {u:<5} {:+.5}  {:+.5}  {:+.5}   {r:+.1e}",
            closed.eval(&[u])? - offs[0],
            one_d.eval(&[u])? - offs[1],
            condg.eval(&[u])? - offs[2],
        );
    }

    // Coefficient of variation gamma = sigma/mu on the location-scale model:
    // the level-set construction recovers the closed-form prior
    // e^{l~} = (1 + g^2)^{-1/2} (g^2/(1 + g^2))^{3/4}.
    let ls = make_builtin("location_scale_normal", &serde_json::json!({}))?;
    let gamma = estimand_by_name("coefficient_of_variation", &serde_json::json!({}), &ls)?;
    let cv = build_prior_along_estimand(ls.clone(), gamma.clone(), vec![1.0, 1.0], &cfg)?;
    println!("\ncoefficient-of-variation prior on the location-scale model:");
    for pt in [[2.0_f64, 1.0], [1.0, 0.5], [1.5, 1.2]] {
        let g: f64 = pt[1] / pt[0];
        let want = -0.5 * (1.0 + g * g).ln() + 0.75 * (g * g / (1.0 + g * g)).ln()
            - (-0.5 * 2.0_f64.ln() + 0.75 * 0.5_f64.ln());
        let r = condition_residual(ls.as_ref(), &pt, &gamma, &cv, &cfg)?;
        println!(
            "  (mu,sigma)={pt:?} g={g:.3}: l~ = {:+.6} (closed {want:+.6}), residual {r:+.1e}",
            cv.eval(&pt)?
        );
    }
    Ok(())
}
