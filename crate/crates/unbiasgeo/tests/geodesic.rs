use std::sync::Arc;

use unbiasgeo::geodesic::{det_bar_g, distance, exp_map, normal_coords, riesz_check, shoot};
use unbiasgeo::manifold::{make_builtin, Model};
use unbiasgeo::NumericConfig;

fn cfg() -> NumericConfig {
    NumericConfig::default()
}

fn ls() -> Arc<dyn Model> {
    make_builtin("location_scale_normal", &serde_json::json!({})).unwrap()
}

fn mvn(d: usize) -> Arc<dyn Model> {
    make_builtin("mvn_known_cov", &serde_json::json!({ "d": d })).unwrap()
}

/// Closed-form geodesic distance of the hyperbolic location-scale plane with
/// metric (2/sigma^2)(d mu^2 + d sigma^2):
/// dist = 2 sqrt(2) atanh sqrt((dmu^2 + (s-s0)^2)/(dmu^2 + (s+s0)^2)).
fn hyperbolic_distance(a: &[f64], b: &[f64]) -> f64 {
    let dm = a[0] - b[0];
    let num = dm * dm + (a[1] - b[1]) * (a[1] - b[1]);
    let den = dm * dm + (a[1] + b[1]) * (a[1] + b[1]);
    2.0 * 2.0_f64.sqrt() * (num / den).sqrt().atanh()
}

#[test]
fn location_scale_distance_closed_form() {
    let c = cfg();
    let m = ls();
    // 20 pairs spread over the upper half plane
    let pts: Vec<[f64; 2]> = (0..10)
        .map(|k| {
            let t = k as f64;
            [0.4 * (t - 4.5), 0.35 + 0.3 * t]
        })
        .collect();
    let mut pairs = 0;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            if (i + j) % 2 == 0 {
                continue;
            }
            pairs += 1;
            let want = hyperbolic_distance(&pts[i], &pts[j]);
            let (got, _) = distance(m.as_ref(), &pts[i], &pts[j], &c).unwrap();
            assert!(
                (got - want).abs() < 1e-6,
                "distance {:?} -> {:?}: {got} vs {want}",
                pts[i],
                pts[j]
            );
            if pairs >= 20 {
                return;
            }
        }
    }
    assert!(pairs >= 20, "only {pairs} pairs tested");
}

#[test]
fn distance_is_symmetric_and_zero_at_coincidence() {
    let c = cfg();
    let m = ls();
    let a = [0.3, 1.4];
    let b = [-0.8, 0.6];
    let (dab, _) = distance(m.as_ref(), &a, &b, &c).unwrap();
    let (dba, _) = distance(m.as_ref(), &b, &a, &c).unwrap();
    assert!((dab - dba).abs() < 1e-8, "asymmetry {dab} vs {dba}");
    // coincident endpoints are rejected rather than returning a degenerate path
    assert!(distance(m.as_ref(), &a, &a, &c).is_err());
    // nearly coincident endpoints give a tiny distance
    let (dz, _) = distance(m.as_ref(), &a, &[a[0] + 1e-7, a[1]], &c).unwrap();
    assert!(dz.abs() < 1e-6, "near-self distance {dz}");
}

#[test]
fn flat_gaussian_distance_is_euclidean() {
    let c = cfg();
    let m = mvn(3);
    let a = [0.1, -0.4, 0.9];
    let b = [1.3, 0.2, -0.5];
    let want: f64 = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let (got, path) = distance(m.as_ref(), &a, &b, &c).unwrap();
    assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    // the geodesic is a straight line
    let (mid, _) = path.at(0.5 * got);
    for i in 0..3 {
        assert!((mid[i] - 0.5 * (a[i] + b[i])).abs() < 1e-8);
    }
}

/// Vertical geodesics of the hyperbolic plane: mu stays constant and
/// sigma grows exponentially in arc length, sigma(s) = exp(s / sqrt(2)).
#[test]
fn location_scale_vertical_geodesic() {
    let c = cfg();
    let m = ls();
    let base = [0.7, 1.0];
    // unit-norm velocity in the sigma direction: g_ss = 2, so v = 1/sqrt(2)
    let v = [0.0, 1.0 / 2.0_f64.sqrt()];
    let path = shoot(m.as_ref(), &base, &v, 1.5, &c).unwrap();
    for s in [0.2_f64, 0.7, 1.4] {
        let (p, vel) = path.at(s);
        assert!((p[0] - 0.7).abs() < 1e-8, "mu drifted to {}", p[0]);
        let want = (s / 2.0_f64.sqrt()).exp();
        assert!((p[1] - want).abs() < 1e-7, "sigma(s={s}) = {} vs {want}", p[1]);
        // unit speed is conserved
        let speed = 2.0 / (p[1] * p[1]) * (vel[0] * vel[0] + vel[1] * vel[1]);
        assert!((speed - 1.0).abs() < 1e-6, "speed^2 {speed} at s={s}");
    }
}

#[test]
fn exp_map_inverts_normal_coords() {
    let c = cfg();
    let m = ls();
    let pole = [0.0, 1.0];
    for pt in [[0.4_f64, 1.3], [-0.6, 0.8]] {
        let zeta = normal_coords(m.as_ref(), &pole, &pt, &c).unwrap();
        let back = exp_map(m.as_ref(), &pole, &zeta, &c).unwrap();
        for i in 0..2 {
            assert!((back[i] - pt[i]).abs() < 1e-6, "round trip {back:?} vs {pt:?}");
        }
    }
}

/// Volume density in normal coordinates on the hyperbolic plane:
/// det g-bar = 4 (sqrt(2) sinh(r/sqrt(2)) / r)^2.
#[test]
fn normal_chart_volume_closed_form() {
    let c = cfg();
    let m = ls();
    let pole = [0.0, 1.0];
    let rr = 2.0_f64.sqrt();
    for (a, b) in [(0.3_f64, 0.2_f64), (0.5, -0.4), (0.1, 0.7)] {
        let zeta = [a, b];
        let r = (a * a + b * b).sqrt() * rr;
        let got = det_bar_g(m.as_ref(), &pole, &zeta, &c).unwrap();
        let want = 4.0 * (rr * (r / rr).sinh() / r).powi(2);
        assert!((got - want).abs() < 1e-4, "det g-bar at r={r}: {got} vs {want}");
    }
    // at the pole the density is det g(pole) = 4
    let got0 = det_bar_g(m.as_ref(), &pole, &[1e-9, 0.0], &c).unwrap();
    assert!((got0 - 4.0).abs() < 1e-4, "det g-bar at pole {got0}");
}

/// Distance-function identities: |grad r^2|-type gradient consistency, the
/// chain rule for radial functions, and the radial Laplacian formula
/// Lap(r^2) = 2d + r d/dr log det g-bar.
#[test]
fn riesz_identities_location_scale() {
    let c = cfg();
    let m = ls();
    let pole = [0.0, 1.0];
    // points at geodesic radius roughly 0.2, 0.5, 1.0
    for pt in [[0.12_f64, 1.15], [0.3, 1.35], [0.5, 1.7]] {
        let r = riesz_check(m.as_ref(), &pole, &pt, &c).unwrap();
        assert!(r.gradient < 1e-4, "gradient identity {:.2e} at r={}", r.gradient, r.r);
        assert!(r.chain_rule < 1e-4, "chain rule {:.2e} at r={}", r.chain_rule, r.r);
        assert!(
            r.radial_laplacian < 1e-4,
            "radial laplacian {:.2e} at r={}",
            r.radial_laplacian,
            r.r
        );
    }
}

/// On the flat Gaussian the radial Laplacian is exactly 2d.
#[test]
fn riesz_identities_flat_gaussian() {
    let c = cfg();
    let m = mvn(3);
    let r = riesz_check(m.as_ref(), &[0.0, 0.0, 0.0], &[0.4, -0.2, 0.6], &c).unwrap();
    assert!(r.gradient < 1e-8, "gradient identity {:.2e}", r.gradient);
    // the probe function is differentiated numerically, so allow FD noise
    assert!(r.chain_rule < 1e-6, "chain rule {:.2e}", r.chain_rule);
    assert!(r.radial_laplacian < 1e-8, "radial laplacian {:.2e}", r.radial_laplacian);
}
