//! End-to-end acceptance suite. Each test prints exactly one PASS/FAIL line
//! (visible with --nocapture, and in the captured output on failure) and then
//! asserts the verdict, so a red test is an honest red.

use std::sync::Arc;
use std::time::Instant;

use unbiasgeo::geodesic::{distance, riesz_check};
use unbiasgeo::geometry::{
    alpha_laplacian, frame_at, identity_residuals, riemann_curvature,
};
use unbiasgeo::manifold::{make_builtin, Model};
use unbiasgeo::mc::{moment_check, run_bias, BiasExperiment, ModelFamily};
use unbiasgeo::prior::{
    build_prior_1d, build_prior_along_estimand, condition_residual, Estimand,
};
use unbiasgeo::registry::{estimand_by_name, prior_by_name};
use unbiasgeo::NumericConfig;

fn cfg() -> NumericConfig {
    NumericConfig::default()
}

fn verdict(name: &str, pass: bool, detail: &str) -> bool {
    println!(
        "criterion {name}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

/// 1. Normal-variance shrinkage bias law. The MLE arm is compared against
/// the first-order value 2/(1+s2); the MAP arm against zero. Note the exact
/// MLE bias is 2/((n-2)(1+s2)), so at n = 20 and n = 50 the gap between the
/// exact and first-order values exceeds 3 SE at R = 2e5 and those cells are
/// expected to fail; the failure is a property of the criterion, not of the
/// estimator.
#[test]
fn criterion_1_em_bias_law() {
    let c = cfg();
    let t0 = Instant::now();
    let mut all = true;
    let mut lines = Vec::new();
    for s2 in [0.5_f64, 1.0, 2.0] {
        let exp = BiasExperiment {
            family: ModelFamily::EfronMorris,
            estimand: "shrinkage".into(),
            prior: "shrinkage_adjust".into(),
            param_point: vec![s2],
            sample_sizes: vec![20, 50, 100, 200],
            replicates: 200_000,
            seed: 20_260_826,
        };
        let (model, _) = exp.family.instantiate(20).unwrap();
        let f = estimand_by_name("shrinkage", &serde_json::json!({}), &model).unwrap();
        let p = prior_by_name("shrinkage_adjust", &serde_json::json!({}), &model, &c).unwrap();
        let rep = run_bias(&exp, &f, &p, &c).unwrap();
        for cell in &rep.cells {
            let n = cell.n as f64;
            let want = 2.0 / (1.0 + s2);
            let mle_ok = (n * cell.mle_mean_bias - want).abs() <= 3.0 * n * cell.mle_se;
            let map_ok = cell.map_mean_bias.abs() <= 3.0 * cell.map_se;
            if !mle_ok || !map_ok {
                all = false;
            }
            lines.push(format!(
                "s2={s2} n={}: mle n*bias {:.4} vs {:.4} (3se {:.4}) {} | map bias {:.2e} (3se {:.2e}) {}",
                cell.n,
                n * cell.mle_mean_bias,
                want,
                3.0 * n * cell.mle_se,
                if mle_ok { "ok" } else { "FAIL" },
                cell.map_mean_bias,
                3.0 * cell.map_se,
                if map_ok { "ok" } else { "FAIL" },
            ));
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let in_time = elapsed <= 120.0;
    for l in &lines {
        println!("  {l}");
    }
    let pass = verdict(
        "1 (shrinkage bias law)",
        all && in_time,
        &format!("{} cells, runtime {elapsed:.0}s (limit 120s)", lines.len()),
    );
    assert!(pass);
}

/// Exact mean of |xbar| when xbar ~ N((r, 0), I/n), by nested quadrature.
fn rice_mean(r: f64, n: f64) -> f64 {
    let s = n.sqrt().recip();
    let w = 10.0 * s;
    let norm = |u: f64| (-0.5 * u * u / (s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
    unbiasgeo::numeric::quad::integrate(
        |u: f64| {
            let inner = unbiasgeo::numeric::quad::integrate(
                |v: f64| Ok(((r + u) * (r + u) + v * v).sqrt() * norm(v)),
                -w,
                w,
                1e-12,
                1e-10,
            )?;
            Ok(inner * norm(u))
        },
        -w,
        w,
        1e-12,
        1e-10,
    )
    .unwrap()
}

/// 2. Norm of a planar Gaussian mean: the MLE arm reproduces the exact
/// (quadrature) bias and the first-order value 1/(2r) at n = 200; the MAP
/// arm under l~ = -(log r)/2 is second-order unbiased.
#[test]
fn criterion_2_mvn_norm() {
    let c = cfg();
    let mut all = true;
    let mut details = Vec::new();
    for r in [1.0_f64, 2.0] {
        let exp = BiasExperiment {
            family: ModelFamily::MvnKnownCov { d: 2 },
            estimand: "radius".into(),
            prior: "mvn_log_radius".into(),
            param_point: vec![r, 0.0],
            sample_sizes: vec![50, 100, 200],
            replicates: 200_000,
            seed: 31,
        };
        let (model, _) = exp.family.instantiate(50).unwrap();
        let f = estimand_by_name("radius", &serde_json::json!({}), &model).unwrap();
        let p = prior_by_name(
            "mvn_log_radius",
            &serde_json::json!({"target": "radius"}),
            &model,
            &c,
        )
        .unwrap();
        let rep = run_bias(&exp, &f, &p, &c).unwrap();
        let cell = rep.cells.iter().find(|c| c.n == 200).unwrap();
        let n = 200.0;
        let exact = rice_mean(r, n) - r;
        // the exact oracle and the first-order value agree to O(1/n^2)
        let oracle_gap = (n * exact - 1.0 / (2.0 * r)).abs();
        let mle_ok = (n * cell.mle_mean_bias - 1.0 / (2.0 * r)).abs() <= 3.0 * n * cell.mle_se
            && (cell.mle_mean_bias - exact).abs() <= 3.0 * cell.mle_se
            && oracle_gap < 1e-2;
        let map_ok = rep.map_second_order;
        if !mle_ok || !map_ok {
            all = false;
        }
        details.push(format!(
            "r={r}: n*bias {:.4} vs 1/(2r)={:.4}, exact {:.4} (3se {:.4}) {}; map verdict {}",
            n * cell.mle_mean_bias,
            1.0 / (2.0 * r),
            n * exact,
            3.0 * n * cell.mle_se,
            if mle_ok { "ok" } else { "FAIL" },
            map_ok,
        ));
    }
    let pass = verdict("2 (mvn norm)", all, &details.join(" | "));
    assert!(pass);
}

/// 3. Grouped random-effects model with mixed unit sizes. The first per-unit
/// prior meets the 1e-6 residual everywhere; the second is derived for equal
/// unit sizes and its mixed-size residual is O(1e-2), so that half of the
/// criterion is expected to fail. The Monte Carlo part checks that the MAP
/// arm removes the O(1/n) bias of the unit shrinkage factor.
#[test]
fn criterion_3_lme() {
    let c = cfg();
    let m: Arc<dyn Model> =
        make_builtin("nested_error_lme", &serde_json::json!({"m": [2, 2, 5, 5]})).unwrap();
    let mut res_ok = true;
    let mut max1 = 0.0_f64;
    let mut max2 = 0.0_f64;
    for a in [0.5_f64, 1.0, 2.0] {
        for d in [0.5_f64, 1.0, 2.0] {
            for unit in [0usize, 2] {
                let b = estimand_by_name("unit_shrinkage", &serde_json::json!({"unit": unit}), &m)
                    .unwrap();
                let p1 =
                    prior_by_name("unit_pr1", &serde_json::json!({"unit": unit}), &m, &c).unwrap();
                let p2 =
                    prior_by_name("unit_pr2", &serde_json::json!({"unit": unit}), &m, &c).unwrap();
                let r1 = condition_residual(m.as_ref(), &[a, d], &b, &p1, &c).unwrap();
                let r2 = condition_residual(m.as_ref(), &[a, d], &b, &p2, &c).unwrap();
                max1 = max1.max(r1.abs());
                max2 = max2.max(r2.abs());
                if r1.abs() > 1e-6 || r2.abs() > 1e-6 {
                    res_ok = false;
                }
            }
        }
    }
    // Monte Carlo arm
    let exp = BiasExperiment {
        family: ModelFamily::NestedErrorLme {
            pattern: vec![2, 5],
        },
        estimand: "unit_shrinkage".into(),
        prior: "unit_pr1".into(),
        param_point: vec![1.0, 1.0],
        sample_sizes: vec![100],
        replicates: 50_000,
        seed: 77,
    };
    let (model, _) = exp.family.instantiate(100).unwrap();
    let f = estimand_by_name("unit_shrinkage", &serde_json::json!({"unit": 0}), &model).unwrap();
    let p = prior_by_name("unit_pr1", &serde_json::json!({"unit": 0}), &model, &c).unwrap();
    let rep = run_bias(&exp, &f, &p, &c).unwrap();
    let cell = &rep.cells[0];
    let n = cell.n as f64;
    let mc_ok = (n * cell.map_mean_bias).abs()
        <= (0.1 * (n * cell.mle_mean_bias).abs()).max(3.0 * n * cell.map_se);
    let pass = verdict(
        "3 (grouped random effects)",
        res_ok && mc_ok,
        &format!(
            "max residual unit_pr1 {max1:.1e}, unit_pr2 {max2:.1e} (tol 1e-6); \
             mc n*bias map {:.3} vs mle {:.3} (3se {:.3}) {}",
            n * cell.map_mean_bias,
            n * cell.mle_mean_bias,
            3.0 * n * cell.map_se,
            if mc_ok { "ok" } else { "FAIL" }
        ),
    );
    assert!(pass);
}

/// Ten interior points per model.
fn grid(model: &dyn Model) -> Vec<Vec<f64>> {
    let dom = model.domain();
    let anchor = model.reference_point();
    (0..10)
        .map(|k| {
            let t = 0.55 + 0.11 * k as f64;
            anchor
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
                .collect()
        })
        .collect()
}

/// 4. Tensor identities at >= 10 points per model, 30 s budget. The
/// conjugate-symmetry identity is checked in its covariant form (the
/// partial-derivative form is not tensorial and fails in curved charts).
#[test]
fn criterion_4_tensor_identities() {
    let c = cfg();
    let t0 = Instant::now();
    let mut worst_closed = 0.0_f64;
    let mut worst_numeric = 0.0_f64;
    let models: Vec<Arc<dyn Model>> = vec![
        make_builtin("location_scale_normal", &serde_json::json!({})).unwrap(),
        make_builtin("mvn_known_cov", &serde_json::json!({"d": 2})).unwrap(),
        make_builtin("nested_error_lme", &serde_json::json!({"m": [2, 3]})).unwrap(),
        make_builtin("efron_morris", &serde_json::json!({"n": 40, "chart": "variance"})).unwrap(),
    ];
    for m in &models {
        let closed = m.closed_frame(&m.reference_point()).is_some();
        for pt in grid(m.as_ref()) {
            let frame = frame_at(m.as_ref(), &pt, &c).unwrap();
            let d = m.dim();
            // duality + covariant identity for several alphas
            for alpha in [0.0_f64, 0.5, -1.0] {
                let (r1, r2) = identity_residuals(m.as_ref(), &pt, alpha, &c).unwrap();
                let w = r1.max(r2);
                if closed {
                    worst_closed = worst_closed.max(w);
                } else {
                    worst_numeric = worst_numeric.max(w);
                }
            }
            // skewness symmetry
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        let s = frame.skewness.get(i, j, k);
                        let sym = (s - frame.skewness.get(j, i, k))
                            .abs()
                            .max((s - frame.skewness.get(k, j, i)).abs());
                        worst_closed = worst_closed.max(sym);
                    }
                }
            }
            // 0-connection consistency: Gamma^(0) is the Levi-Civita
            // connection of the metric, (Gamma^(1) + Gamma^(-1))/2 = Gamma^(0)
            let gp = frame.alpha_connection(1.0);
            let gm = frame.alpha_connection(-1.0);
            let g0 = frame.alpha_connection(0.0);
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        let avg = 0.5 * (gp.get(i, j, k) + gm.get(i, j, k));
                        worst_closed = worst_closed.max((avg - g0.get(i, j, k)).abs());
                    }
                }
            }
        }
    }
    // LME: the (-1)-connection vanishes identically (dually flat chart)
    let lme = &models[2];
    let mut lme_gamma = 0.0_f64;
    for pt in grid(lme.as_ref()) {
        let g = frame_at(lme.as_ref(), &pt, &c).unwrap().alpha_connection(-1.0);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    lme_gamma = lme_gamma.max(g.get(i, j, k).abs());
                }
            }
        }
    }
    worst_closed = worst_closed.max(lme_gamma);
    // location-scale curvature closed form R_{musigma musigma} = -2(1-a^2)/s^4
    let ls = &models[0];
    let mut curv = 0.0_f64;
    for pt in grid(ls.as_ref()) {
        for alpha in [0.0_f64, 0.5, 1.0] {
            let r = riemann_curvature(ls.as_ref(), &pt, alpha, &c).unwrap().riemann;
            let want = -2.0 * (1.0 - alpha * alpha) / pt[1].powi(4);
            curv = curv.max((r.get(0, 1, 0, 1) - want).abs());
        }
    }
    worst_numeric = worst_numeric.max(curv);
    // conjugate symmetry (covariant form) on location-scale
    let mut conj = 0.0_f64;
    for pt in grid(ls.as_ref()) {
        let rp = riemann_curvature(ls.as_ref(), &pt, 0.5, &c).unwrap().riemann;
        let rm = riemann_curvature(ls.as_ref(), &pt, -0.5, &c).unwrap().riemann;
        // constant curvature: both curvatures are even in alpha and the
        // covariant antisymmetrized derivative of S vanishes
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for r in 0..2 {
                        conj = conj.max((rp.get(i, j, k, r) - rm.get(i, j, k, r)).abs());
                    }
                }
            }
        }
    }
    worst_numeric = worst_numeric.max(conj);
    // fundamental solution of the Laplacian is 0-harmonic in d = 3
    let mvn3: Arc<dyn Model> = make_builtin("mvn_known_cov", &serde_json::json!({"d": 3})).unwrap();
    let x0 = [0.1, -0.2, 0.3];
    let fsol = Estimand::new(
        "inverse_distance",
        Arc::new(move |xi: &[f64]| {
            let r2: f64 = xi.iter().zip(&x0).map(|(a, b)| (a - b) * (a - b)).sum();
            Ok(r2.sqrt().recip())
        }),
    );
    let mut harm = 0.0_f64;
    for k in 0..10 {
        let t = 0.8 + 0.15 * k as f64;
        let p = [t, 0.5 * t - 1.0, 1.1 - 0.3 * t];
        let lap = alpha_laplacian(mvn3.as_ref(), &p, &fsol, 0.0, &c).unwrap();
        harm = harm.max(lap.abs());
    }
    worst_numeric = worst_numeric.max(harm);

    let elapsed = t0.elapsed().as_secs_f64();
    let ok = worst_closed <= 1e-6 && worst_numeric <= 1e-3 && elapsed <= 30.0;
    let pass = verdict(
        "4 (tensor identities)",
        ok,
        &format!(
            "closed-form max {worst_closed:.1e} (tol 1e-6), numeric max {worst_numeric:.1e} \
             (tol 1e-3), runtime {elapsed:.1}s (limit 30s)"
        ),
    );
    assert!(pass);
}

/// 5. Geodesic suite: hyperbolic distances on 20 pairs, the Euclidean radial
/// Laplacian, and the distance-function identities.
#[test]
fn criterion_5_geodesics() {
    let c = cfg();
    let ls: Arc<dyn Model> = make_builtin("location_scale_normal", &serde_json::json!({})).unwrap();
    let mut dist_err = 0.0_f64;
    let mut pairs = 0;
    let pts: Vec<[f64; 2]> = (0..10)
        .map(|k| [0.4 * (k as f64 - 4.5), 0.35 + 0.3 * k as f64])
        .collect();
    'outer: for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            if (i + j) % 2 == 0 {
                continue;
            }
            let a = &pts[i];
            let b = &pts[j];
            let dm = a[0] - b[0];
            let num = dm * dm + (a[1] - b[1]) * (a[1] - b[1]);
            let den = dm * dm + (a[1] + b[1]) * (a[1] + b[1]);
            let want = 2.0 * 2.0_f64.sqrt() * (num / den).sqrt().atanh();
            let (got, _) = distance(ls.as_ref(), a, b, &c).unwrap();
            dist_err = dist_err.max((got - want).abs());
            pairs += 1;
            if pairs >= 20 {
                break 'outer;
            }
        }
    }
    // Euclidean Laplacian of r^2 is 2d
    let mvn3: Arc<dyn Model> = make_builtin("mvn_known_cov", &serde_json::json!({"d": 3})).unwrap();
    let rsq = estimand_by_name("radius_sq", &serde_json::json!({}), &mvn3).unwrap();
    let lap = alpha_laplacian(mvn3.as_ref(), &[0.4, -0.2, 0.6], &rsq, 0.0, &c).unwrap();
    let lap_err = (lap - 6.0).abs();
    // distance-function identities at r about 0.2, 0.5, 1.0
    let mut riesz_err = 0.0_f64;
    for pt in [[0.12_f64, 1.15], [0.3, 1.35], [0.5, 1.7]] {
        let r = riesz_check(ls.as_ref(), &[0.0, 1.0], &pt, &c).unwrap();
        riesz_err = riesz_err
            .max(r.gradient)
            .max(r.chain_rule)
            .max(r.radial_laplacian);
    }
    let ok = pairs >= 20 && dist_err <= 1e-6 && lap_err <= 1e-8 && riesz_err <= 1e-4;
    let pass = verdict(
        "5 (geodesics)",
        ok,
        &format!(
            "{pairs} pairs max dist err {dist_err:.1e} (tol 1e-6); Lap(r^2)-2d = {lap_err:.1e} \
             (tol 1e-8); identity residuals {riesz_err:.1e} (tol 1e-4)"
        ),
    );
    assert!(pass);
}

fn cov_z(rep: &unbiasgeo::mc::MomentReport) -> f64 {
    let d = rep.empirical_cov.len();
    let r = rep.replicates as f64;
    let mut worst = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            let cii = rep.predicted_cov[i][i];
            let cjj = rep.predicted_cov[j][j];
            let cij = rep.predicted_cov[i][j];
            let se = ((cii * cjj + cij * cij) / r).sqrt();
            worst = worst.max((rep.empirical_cov[i][j] - cij).abs() / se);
        }
    }
    worst
}

/// 6. Moment expansions: MC first and second moments of the MAP estimator
/// against their asymptotic predictions for all three multi-parameter-ready
/// families; the normal-variance first moment is 2(1+s2)/n.
#[test]
fn criterion_6_moment_expansions() {
    let c = cfg();
    let mut ok = true;
    let mut details = Vec::new();
    // normal-variance family; n is large enough that the O(1/n) correction
    // to the covariance expansion sits below the Monte Carlo resolution
    {
        let n = 500;
        let (m, _) = ModelFamily::EfronMorris.instantiate(n).unwrap();
        let p = prior_by_name("shrinkage_adjust", &serde_json::json!({}), &m, &c).unwrap();
        let rep =
            moment_check(&ModelFamily::EfronMorris, &[1.0], &p, n, 100_000, 6, &c).unwrap();
        let want = 2.0 * 2.0 / n as f64;
        let z1 = (rep.empirical_mean_shift[0] - rep.predicted_mean_shift[0]) / rep.mean_se[0];
        let zp = (rep.empirical_mean_shift[0] - want) / rep.mean_se[0];
        let zc = cov_z(&rep);
        if z1.abs() > 4.0 || zp.abs() > 3.0 || zc > 4.0 {
            ok = false;
        }
        details.push(format!(
            "em: mean z {z1:.2} (4), first-moment=2(1+s2)/n z {zp:.2} (3), cov z {zc:.2} (4)"
        ));
    }
    // flat Gaussian with the log-radius prior
    {
        let fam = ModelFamily::MvnKnownCov { d: 2 };
        let (m, _) = fam.instantiate(200).unwrap();
        let p = prior_by_name(
            "mvn_log_radius",
            &serde_json::json!({"target": "radius"}),
            &m,
            &c,
        )
        .unwrap();
        let rep = moment_check(&fam, &[1.0, 0.5], &p, 200, 100_000, 6, &c).unwrap();
        let mut zm = 0.0_f64;
        for i in 0..2 {
            zm = zm.max(
                ((rep.empirical_mean_shift[i] - rep.predicted_mean_shift[i]) / rep.mean_se[i])
                    .abs(),
            );
        }
        let zc = cov_z(&rep);
        if zm > 4.0 || zc > 4.0 {
            ok = false;
        }
        details.push(format!("mvn: mean z {zm:.2} (4), cov z {zc:.2} (4)"));
    }
    // grouped random effects at n = 200 units
    {
        let fam = ModelFamily::NestedErrorLme {
            pattern: vec![2, 5],
        };
        let (m, _) = fam.instantiate(200).unwrap();
        let p = prior_by_name("unit_pr1", &serde_json::json!({"unit": 0}), &m, &c).unwrap();
        let rep = moment_check(&fam, &[1.0, 1.0], &p, 200, 20_000, 8, &c).unwrap();
        let mut zm = 0.0_f64;
        for i in 0..2 {
            zm = zm.max(
                ((rep.empirical_mean_shift[i] - rep.predicted_mean_shift[i]) / rep.mean_se[i])
                    .abs(),
            );
        }
        let zc = cov_z(&rep);
        if zm > 4.0 || zc > 4.0 {
            ok = false;
        }
        details.push(format!("lme: mean z {zm:.2} (4), cov z {zc:.2} (4)"));
    }
    let pass = verdict("6 (moment expansions)", ok, &details.join(" | "));
    assert!(pass);
}

/// 7. Constructor agreement: the closed-form, one-dimensional and
/// along-estimand constructions coincide on the normal-variance family; the
/// along-estimand construction reproduces the power prior on the grouped
/// model with equal unit sizes and the coefficient-of-variation prior on
/// the location-scale model.
#[test]
fn criterion_7_constructor_agreement() {
    let c = cfg();
    let mut worst = 0.0_f64;
    // normal-variance family over sigma^2 in (0.1, 10)
    {
        let m: Arc<dyn Model> = make_builtin(
            "efron_morris",
            &serde_json::json!({"n": 50, "chart": "variance"}),
        )
        .unwrap();
        let f = estimand_by_name("shrinkage", &serde_json::json!({}), &m).unwrap();
        let closed = prior_by_name("shrinkage_adjust", &serde_json::json!({}), &m, &c).unwrap();
        let one_d = build_prior_1d(m.clone(), f.clone(), &c).unwrap();
        let condg = build_prior_along_estimand(m.clone(), f, vec![1.0], &c).unwrap();
        let offs: Vec<f64> = [&closed, &one_d, &condg]
            .iter()
            .map(|p| p.eval(&[1.0]).unwrap())
            .collect();
        for k in 0..12 {
            let s2 = 0.1 * (100.0_f64).powf(k as f64 / 11.0);
            let u = s2 - 1.0;
            let want = closed.eval(&[u]).unwrap() - offs[0];
            worst = worst.max((one_d.eval(&[u]).unwrap() - offs[1] - want).abs());
            worst = worst.max((condg.eval(&[u]).unwrap() - offs[2] - want).abs());
        }
    }
    // power prior on the equal-size grouped model
    {
        let m: Arc<dyn Model> =
            make_builtin("nested_error_lme", &serde_json::json!({"m": [3, 3, 3]})).unwrap();
        let b0 = estimand_by_name("unit_shrinkage", &serde_json::json!({"unit": 0}), &m).unwrap();
        let lp = build_prior_along_estimand(m.clone(), b0, vec![1.0, 1.0], &c).unwrap();
        let pr2 = prior_by_name("unit_pr2", &serde_json::json!({"unit": 0}), &m, &c).unwrap();
        let off = pr2.eval(&[1.0, 1.0]).unwrap();
        for pt in [[1.5, 0.8], [0.7, 1.3], [2.0, 0.5]] {
            worst = worst.max((lp.eval(&pt).unwrap() - (pr2.eval(&pt).unwrap() - off)).abs());
        }
    }
    // coefficient-of-variation prior on the location-scale model
    {
        let m: Arc<dyn Model> =
            make_builtin("location_scale_normal", &serde_json::json!({})).unwrap();
        let gamma =
            estimand_by_name("coefficient_of_variation", &serde_json::json!({}), &m).unwrap();
        let lp = build_prior_along_estimand(m.clone(), gamma, vec![1.0, 1.0], &c).unwrap();
        let expect =
            |g: f64| -0.5 * (1.0 + g * g).ln() + 0.75 * (g * g / (1.0 + g * g)).ln();
        let base = expect(1.0);
        for pt in [[2.0_f64, 1.0], [1.0, 0.5], [1.5, 1.2]] {
            let g = pt[1] / pt[0];
            worst = worst.max((lp.eval(&pt).unwrap() - (expect(g) - base)).abs());
        }
    }
    let ok = worst <= 1e-6;
    let pass = verdict(
        "7 (constructor agreement)",
        ok,
        &format!("max deviation {worst:.1e} (tol 1e-6)"),
    );
    assert!(pass);
}
