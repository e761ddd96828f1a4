//! Fisher metric, skewness tensor and alpha-connections at a point, plus the
//! identities that tie them together.
//!
//! Run with: cargo run --example geometry_frames

use unbiasgeo::geometry::{frame_at, identity_residuals, riemann_curvature};
use unbiasgeo::manifold::make_builtin;
use unbiasgeo::NumericConfig;

fn main() -> unbiasgeo::Result<()> {
    let cfg = NumericConfig::default();
    let model = make_builtin("location_scale_normal", &serde_json::json!({}))?;
    let point = [0.3, 1.2];

    let frame = frame_at(model.as_ref(), &point, &cfg)?;
    println!("model {} at {:?}", model.name(), point);
    println!("metric:\n{}", frame.metric);
    println!("det g = {:.6}", frame.metric_det);
    println!("contracted skewness S_i = {:?}", frame.contracted_skewness);

    // The metric derivative splits into a pair of dual connections, and the
    // covariant derivative of the metric under the alpha-connection is
    // proportional to the skewness tensor. Both residuals vanish.
    for alpha in [0.0, 0.5, 1.0] {
        let (duality, covariant) = identity_residuals(model.as_ref(), &point, alpha, &cfg)?;
        println!("alpha = {alpha:+.1}: duality residual {duality:.2e}, covariant residual {covariant:.2e}");
    }

    // The location-scale plane is hyperbolic: the alpha-curvature component
    // R_{musigma musigma} is -2(1 - alpha^2)/sigma^4, so the manifold is
    // flat exactly at alpha = +/-1.
    for alpha in [0.0, 0.5, 1.0] {
        let curv = riemann_curvature(model.as_ref(), &point, alpha, &cfg)?;
        let got = curv.riemann.get(0, 1, 0, 1);
        let want = -2.0 * (1.0 - alpha * alpha) / point[1].powi(4);
        println!("alpha = {alpha:+.1}: R_musms = {got:+.6} (closed form {want:+.6})");
    }
    Ok(())
}
