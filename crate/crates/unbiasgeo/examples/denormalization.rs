//! Reading an adjustment prior as a denormalization of the model: a factor
//! z(xi) multiplying the density corresponds to l~ = n(1 - z + log z) <= 0,
//! and the Kullback-Leibler decomposition picks up the gap -1 + z - log z.
//!
//! Run with: cargo run --example denormalization

use std::sync::Arc;

use unbiasgeo::prior::{
    denorm_from_log_prior, denorm_gap, log_prior_from_denorm, Denormalization, LogPrior,
};

fn main() -> unbiasgeo::Result<()> {
    println!("gap(z) = -1 + z - log z:");
    for z in [0.5, 0.9, 1.0, 1.1, 2.0] {
        println!("  z = {z}: gap {:.6}", denorm_gap(z)?);
    }

    // A constant denormalization and its induced log-prior.
    let n = 50.0;
    let d = Denormalization::new(n, Arc::new(|_xi: &[f64]| Ok(1.2)));
    let lp = log_prior_from_denorm(&d);
    println!("\nz = 1.2 at n = {n}: l~ = {:.6} (nonpositive)", lp.eval(&[0.0])?);

    // Leading-branch inverse: recover z from a nonpositive log-prior.
    let back = denorm_from_log_prior(&lp, n);
    println!("recovered z = {:.6} (exact to O(z-1)^2)", back.z(&[0.0])?);

    // Positive log-priors admit no denormalization reading.
    let bad = LogPrior::new("positive", Arc::new(|_xi: &[f64]| Ok(0.3)));
    match denorm_from_log_prior(&bad, n).z(&[0.0]) {
        Err(e) => println!("positive prior rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
