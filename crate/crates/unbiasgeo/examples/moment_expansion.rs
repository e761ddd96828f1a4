//! First and second moments of the MAP estimator against their asymptotic
//! expansions E[xi^ - xi] = g^{ij}(d_j l~ - (1/2) g^{kr} Gamma^(-1)_{kr,j})/n
//! and Cov = g^{-1}/n.
//!
//! Run with: cargo run --release --example moment_expansion

use unbiasgeo::mc::{moment_check, ModelFamily};
use unbiasgeo::registry::prior_by_name;
use unbiasgeo::NumericConfig;

fn main() -> unbiasgeo::Result<()> {
    let cfg = NumericConfig::default();
    let n = 200;
    let fam = ModelFamily::EfronMorris;
    let (model, _) = fam.instantiate(n)?;
    let prior = prior_by_name("shrinkage_adjust", &serde_json::json!({}), &model, &cfg)?;

    let rep = moment_check(&fam, &[1.0], &prior, n, 30_000, 3, &cfg)?;
    println!("normal-variance model, u = 1, n = {n}, R = {}", rep.replicates);
    println!(
        "first moment:  empirical {:+.6}, predicted {:+.6} (se {:.1e})",
        rep.empirical_mean_shift[0], rep.predicted_mean_shift[0], rep.mean_se[0]
    );
    println!("  (the prediction equals the textbook 2(1+sigma^2)/n = {:+.6})", 4.0 / n as f64);
    println!(
        "second moment: empirical {:.6}, predicted g^-1/n = {:.6}",
        rep.empirical_cov[0][0], rep.predicted_cov[0][0]
    );
    Ok(())
}
