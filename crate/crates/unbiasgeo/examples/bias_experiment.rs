//! Monte Carlo bias experiment: the n*bias of the plug-in shrinkage factor
//! converges to 2/(1+sigma^2) for the MLE and to 0 for the MAP estimator
//! under the adjustment prior.
//!
//! Run with: cargo run --release --example bias_experiment

use unbiasgeo::mc::{run_bias, BiasExperiment, ModelFamily};
use unbiasgeo::registry::{estimand_by_name, prior_by_name};
use unbiasgeo::NumericConfig;

fn main() -> unbiasgeo::Result<()> {
    let cfg = NumericConfig::default();
    let exp = BiasExperiment {
        family: ModelFamily::EfronMorris,
        estimand: "shrinkage".into(),
        prior: "shrinkage_adjust".into(),
        param_point: vec![1.0],
        sample_sizes: vec![25, 50, 100, 200],
        replicates: 20_000,
        seed: 7,
    };
    let (model, _) = exp.family.instantiate(25)?;
    let f = estimand_by_name(&exp.estimand, &serde_json::json!({}), &model)?;
    let p = prior_by_name(&exp.prior, &serde_json::json!({}), &model, &cfg)?;
    let report = run_bias(&exp, &f, &p, &cfg)?;

    println!("shrinkage factor at sigma^2 = 1 (first-order n*bias of the MLE: 1.0)");
    println!("   n    n*bias(MLE) +/- 3se    n*bias(MAP) +/- 3se");
    for c in &report.cells {
        let n = c.n as f64;
        println!(
            "{:>5}   {:+.4} +/- {:.4}      {:+.4} +/- {:.4}",
            c.n,
            n * c.mle_mean_bias,
            3.0 * n * c.mle_se,
            n * c.map_mean_bias,
            3.0 * n * c.map_se,
        );
    }
    println!(
        "\nfitted bias order p in |bias| ~ C n^p: MLE {:?}, MAP {:?}",
        report.mle_slope, report.map_slope
    );
    println!("MAP second-order verdict: {}", report.map_second_order);
    Ok(())
}
