//! Geodesic distances, the exponential map and the volume density in
//! normal coordinates on the hyperbolic location-scale plane.
//!
//! Run with: cargo run --example geodesics

use unbiasgeo::geodesic::{det_bar_g, distance, normal_coords, riesz_check, shoot};
use unbiasgeo::manifold::make_builtin;
use unbiasgeo::NumericConfig;

fn main() -> unbiasgeo::Result<()> {
    let cfg = NumericConfig::default();
    let ls = make_builtin("location_scale_normal", &serde_json::json!({}))?;

    // Closed form for the metric (2/sigma^2)(dmu^2 + dsigma^2).
    let closed = |a: &[f64], b: &[f64]| {
        let dm = a[0] - b[0];
        let num = dm * dm + (a[1] - b[1]) * (a[1] - b[1]);
        let den = dm * dm + (a[1] + b[1]) * (a[1] + b[1]);
        2.0 * 2.0_f64.sqrt() * (num / den).sqrt().atanh()
    };
    let pole = [0.0, 1.0];
    println!("geodesic distances from (0, 1):");
    for pt in [[0.5, 1.2], [-1.0, 0.4], [2.0, 3.0]] {
        let (r, _path) = distance(ls.as_ref(), &pole, &pt, &cfg)?;
        println!("  to {pt:?}: {r:.8} (closed form {:.8})", closed(&pole, &pt));
    }

    // Vertical geodesics: sigma grows exponentially in arc length.
    let path = shoot(ls.as_ref(), &pole, &[0.0, 1.0 / 2.0_f64.sqrt()], 2.0, &cfg)?;
    println!("\nvertical geodesic through (0, 1):");
    for s in [0.5, 1.0, 2.0] {
        let (p, _) = path.at(s);
        println!("  s = {s}: sigma = {:.8} (exp(s/sqrt 2) = {:.8})", p[1], (s / 2.0_f64.sqrt()).exp());
    }

    // Normal coordinates and the volume density
    // det g-bar = 4 (sqrt(2) sinh(r/sqrt 2)/r)^2.
    println!("\nvolume density in normal coordinates:");
    for pt in [[0.4_f64, 1.3], [-0.6, 0.8]] {
        let zeta = normal_coords(ls.as_ref(), &pole, &pt, &cfg)?;
        let det = det_bar_g(ls.as_ref(), &pole, &zeta, &cfg)?;
        let r = (2.0 * zeta.iter().map(|z| z * z).sum::<f64>()).sqrt();
        let want = 4.0 * (2.0_f64.sqrt() * (r / 2.0_f64.sqrt()).sinh() / r).powi(2);
        println!("  {pt:?} -> zeta {zeta:?}: det g-bar {det:.6} (closed {want:.6})");
    }

    // Identities satisfied by the geodesic distance function.
    println!("\ndistance-function identity residuals:");
    for pt in [[0.3_f64, 1.35], [0.5, 1.7]] {
        let r = riesz_check(ls.as_ref(), &pole, &pt, &cfg)?;
        println!(
            "  r = {:.3}: gradient {:.1e}, chain rule {:.1e}, radial laplacian {:.1e}",
            r.r, r.gradient, r.chain_rule, r.radial_laplacian
        );
    }
    Ok(())
}
