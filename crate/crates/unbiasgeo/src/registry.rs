//! Named estimands and priors for the built-in models, plus the on-disk
//! prior format (tabulated log-prior with monotone cubic interpolation).

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::NumericConfig;
use crate::error::{Error, Result};
use crate::geometry::frame_at;
use crate::manifold::{make_builtin, Model};
use crate::numeric::interp::MonotoneCubic;
use crate::prior::{self, Estimand, LogPrior};

/// Build a model from a JSON spec {"name": ..., ...params}.
pub fn model_from_spec(spec: &Value) -> Result<Arc<dyn Model>> {
    let name = spec
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::config("model.name", "missing"))?;
    make_builtin(name, spec)
}

fn param_usize(params: &Value, key: &str) -> Result<usize> {
    params
        .get(key)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| Error::config(key, "missing or not an integer"))
}

fn param_f64(params: &Value, key: &str) -> Result<f64> {
    params
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::config(key, "missing or not a number"))
}

/// Named estimands. `params` supplies indices/exponents where needed.
pub fn estimand_by_name(
    name: &str,
    params: &Value,
    model: &Arc<dyn Model>,
) -> Result<Estimand> {
    match name {
        // Stein shrinkage factor of the one-parameter normal-variance model.
        "shrinkage" => Ok(Estimand::new(
            "shrinkage",
            Arc::new(|xi: &[f64]| Ok(1.0 / (1.0 + xi[0]))),
        )
        .with_grad(Arc::new(|xi: &[f64]| {
            let s = 1.0 + xi[0];
            Ok(vec![-1.0 / (s * s)])
        }))
        .with_hessian(Arc::new(|xi: &[f64]| {
            let s = 1.0 + xi[0];
            Ok(nalgebra::DMatrix::from_element(1, 1, 2.0 / (s * s * s)))
        }))),
        // Mean parameter -n/(2 xi) of the natural chart.
        "em_eta" => {
            let n = param_usize(params, "n")? as f64;
            Ok(Estimand::new(
                "em_eta",
                Arc::new(move |xi: &[f64]| Ok(-n / (2.0 * xi[0]))),
            )
            .with_grad(Arc::new(move |xi: &[f64]| {
                Ok(vec![n / (2.0 * xi[0] * xi[0])])
            }))
            .with_hessian(Arc::new(move |xi: &[f64]| {
                Ok(nalgebra::DMatrix::from_element(
                    1,
                    1,
                    -n / (xi[0] * xi[0] * xi[0]),
                ))
            })))
        }
        // Shrinkage factor b^(i) = (d/m_i)/(d/m_i + a) of one unit.
        "unit_shrinkage" => {
            let i = param_usize(params, "unit")?;
            let sizes = model
                .unit_sizes()
                .ok_or_else(|| Error::config("unit", "model has no grouped units"))?;
            if i >= sizes.len() {
                return Err(Error::config("unit", "unit index out of range"));
            }
            let mi = sizes[i] as f64;
            Ok(Estimand::new(
                format!("unit_shrinkage[{i}]"),
                Arc::new(move |xi: &[f64]| {
                    let t = xi[1] / mi;
                    Ok(t / (t + xi[0]))
                }),
            )
            .with_grad(Arc::new(move |xi: &[f64]| {
                let (a, d) = (xi[0], xi[1]);
                let t = d / mi;
                let v = t + a;
                Ok(vec![-t / (v * v), a / (mi * v * v)])
            })))
        }
        "radius" => Ok(Estimand::new(
            "radius",
            Arc::new(|xi: &[f64]| Ok(xi.iter().map(|x| x * x).sum::<f64>().sqrt())),
        )
        .with_grad(Arc::new(|xi: &[f64]| {
            let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            if r == 0.0 {
                return Err(Error::Numeric("radius gradient singular at origin".into()));
            }
            Ok(xi.iter().map(|x| x / r).collect())
        }))),
        "radius_sq" => Ok(Estimand::new(
            "radius_sq",
            Arc::new(|xi: &[f64]| Ok(xi.iter().map(|x| x * x).sum())),
        )
        .with_grad(Arc::new(|xi: &[f64]| Ok(xi.iter().map(|x| 2.0 * x).collect())))
        .with_hessian(Arc::new(|xi: &[f64]| {
            Ok(nalgebra::DMatrix::identity(xi.len(), xi.len()) * 2.0)
        }))),
        "coefficient_of_variation" => Ok(Estimand::new(
            "coefficient_of_variation",
            Arc::new(|xi: &[f64]| {
                if xi[0] == 0.0 {
                    return Err(Error::Numeric("coefficient of variation at mu = 0".into()));
                }
                Ok(xi[1] / xi[0])
            }),
        )
        .with_grad(Arc::new(|xi: &[f64]| {
            Ok(vec![-xi[1] / (xi[0] * xi[0]), 1.0 / xi[0]])
        }))),
        "coordinate" => {
            let k = param_usize(params, "k")?;
            if k >= model.dim() {
                return Err(Error::config("k", "coordinate index out of range"));
            }
            Ok(Estimand::new(
                format!("coordinate[{k}]"),
                Arc::new(move |xi: &[f64]| Ok(xi[k])),
            )
            .with_grad(Arc::new(move |xi: &[f64]| {
                let mut g = vec![0.0; xi.len()];
                g[k] = 1.0;
                Ok(g)
            }))
            .with_hessian(Arc::new(move |xi: &[f64]| {
                Ok(nalgebra::DMatrix::zeros(xi.len(), xi.len()))
            })))
        }
        // sigma^p in the (mu, sigma) chart
        "sigma_power" => {
            let p = param_f64(params, "p")?;
            Ok(Estimand::new(
                format!("sigma_power[{p}]"),
                Arc::new(move |xi: &[f64]| Ok(xi[1].powf(p))),
            )
            .with_grad(Arc::new(move |xi: &[f64]| {
                Ok(vec![0.0, p * xi[1].powf(p - 1.0)])
            }))
            .with_hessian(Arc::new(move |xi: &[f64]| {
                let mut h = nalgebra::DMatrix::zeros(2, 2);
                h[(1, 1)] = p * (p - 1.0) * xi[1].powf(p - 2.0);
                Ok(h)
            })))
        }
        // scalar functions of t = r^2 for the pole-based construction
        "t_identity" => Ok(Estimand::new(
            "t_identity",
            Arc::new(|t: &[f64]| Ok(t[0])),
        )
        .with_grad(Arc::new(|_t: &[f64]| Ok(vec![1.0])))),
        "t_sqrt" => Ok(Estimand::new("t_sqrt", Arc::new(|t: &[f64]| Ok(t[0].sqrt())))
            .with_grad(Arc::new(|t: &[f64]| Ok(vec![0.5 / t[0].sqrt()])))),
        other => Err(Error::config("estimand", format!("unknown estimand `{other}`"))),
    }
}

/// Named closed-form priors.
pub fn prior_by_name(
    name: &str,
    params: &Value,
    model: &Arc<dyn Model>,
    cfg: &NumericConfig,
) -> Result<LogPrior> {
    match name {
        "uniform" => Ok(LogPrior::uniform()),
        // l~ = log(1 + u): removes the O(1/n) bias of the shrinkage factor.
        "shrinkage_adjust" => Ok(LogPrior::new(
            "shrinkage_adjust",
            Arc::new(|xi: &[f64]| Ok((1.0 + xi[0]).ln())),
        )
        .with_grad(Arc::new(|xi: &[f64]| Ok(vec![1.0 / (1.0 + xi[0])])))),
        // l~ = -c log |xi| on the flat Gaussian: c = (d-1)/2 for the radius,
        // d/2 for the squared radius.
        "mvn_log_radius" => {
            let d = model.dim() as f64;
            let target = params
                .get("target")
                .and_then(Value::as_str)
                .unwrap_or("radius");
            let c = match target {
                "radius" => (d - 1.0) / 2.0,
                "radius_sq" => d / 2.0,
                other => {
                    return Err(Error::config(
                        "target",
                        format!("unknown target `{other}`"),
                    ))
                }
            };
            Ok(LogPrior::new(
                format!("mvn_log_radius[{target}]"),
                Arc::new(move |xi: &[f64]| {
                    let r2: f64 = xi.iter().map(|x| x * x).sum();
                    if r2 == 0.0 {
                        return Err(Error::Numeric("log-radius prior singular at origin".into()));
                    }
                    Ok(-c * 0.5 * r2.ln())
                }),
            )
            .with_grad(Arc::new(move |xi: &[f64]| {
                let r2: f64 = xi.iter().map(|x| x * x).sum();
                Ok(xi.iter().map(|x| -c * x / r2).collect())
            })))
        }
        // e^{l~} = d/m_i + a: unbiases the unit shrinkage factor exactly.
        "unit_pr1" => {
            let i = param_usize(params, "unit")?;
            let sizes = model
                .unit_sizes()
                .ok_or_else(|| Error::config("unit", "model has no grouped units"))?;
            if i >= sizes.len() {
                return Err(Error::config("unit", "unit index out of range"));
            }
            let mi = sizes[i] as f64;
            Ok(LogPrior::new(
                format!("unit_pr1[{i}]"),
                Arc::new(move |xi: &[f64]| Ok((xi[1] / mi + xi[0]).ln())),
            )
            .with_grad(Arc::new(move |xi: &[f64]| {
                let v = xi[1] / mi + xi[0];
                Ok(vec![1.0 / v, 1.0 / (mi * v)])
            })))
        }
        // e^{l~} = b^{n/m - 1} with b the unit shrinkage; valid when all
        // units have the same size.
        "unit_pr2" => {
            let i = param_usize(params, "unit")?;
            let sizes = model
                .unit_sizes()
                .ok_or_else(|| Error::config("unit", "model has no grouped units"))?;
            if i >= sizes.len() {
                return Err(Error::config("unit", "unit index out of range"));
            }
            let mi = sizes[i] as f64;
            let n_units = sizes.len() as f64;
            let m_total: usize = sizes.iter().sum();
            let expo = n_units / m_total as f64 - 1.0;
            Ok(LogPrior::new(
                format!("unit_pr2[{i}]"),
                Arc::new(move |xi: &[f64]| {
                    let t = xi[1] / mi;
                    Ok(expo * (t / (t + xi[0])).ln())
                }),
            )
            .with_grad(Arc::new(move |xi: &[f64]| {
                let (a, d) = (xi[0], xi[1]);
                let t = d / mi;
                let v = t + a;
                // d/dx log b with b = t/v
                Ok(vec![expo * (-1.0 / v), expo * (1.0 / d - 1.0 / (mi * v))])
            })))
        }
        "jeffreys" => {
            let model = model.clone();
            let cfg = cfg.clone();
            Ok(LogPrior::new(
                "jeffreys",
                Arc::new(move |xi: &[f64]| {
                    let frame = frame_at(model.as_ref(), xi, &cfg)?;
                    Ok(0.5 * frame.metric_det.ln())
                }),
            ))
        }
        // h(alpha) = sigma^{-2 - alpha c / (2 R^2)} for the location-scale
        // family (c and R^2 the family's cubic-moment constants).
        "ls_alpha_invariant" => {
            let alpha = param_f64(params, "alpha")?;
            let c_total = crate::manifold::location_scale::C;
            let r_sq = crate::manifold::location_scale::R_SQ;
            let expo = -2.0 - alpha * c_total / (2.0 * r_sq);
            Ok(LogPrior::new(
                format!("ls_alpha_invariant[{alpha}]"),
                Arc::new(move |xi: &[f64]| Ok(expo * xi[1].ln())),
            )
            .with_grad(Arc::new(move |xi: &[f64]| Ok(vec![0.0, expo / xi[1]]))))
        }
        "alpha_parallel" => {
            let alpha = param_f64(params, "alpha")?;
            let alpha0 = match params.get("alpha0").and_then(Value::as_f64) {
                Some(a) => a,
                None => model.alpha_flat().ok_or_else(|| {
                    Error::config("alpha0", "missing and the chart is not alpha-affine")
                })?,
            };
            prior::alpha_parallel_prior(model.clone(), alpha, alpha0, cfg)
        }
        other => Err(Error::config("prior", format!("unknown prior `{other}`"))),
    }
}

/// On-disk prior: log-prior values tabulated against a scalar argument
/// (an estimand of the parameter), interpolated with a monotone cubic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriorFile {
    pub label: String,
    /// construction that produced the table ("one_d", "condg", "cond0", ...)
    pub method: String,
    pub model: Value,
    /// estimand spec {"name": ..., ...} whose value indexes the table
    pub argument: Value,
    pub anchor: Option<Vec<f64>>,
    pub knots: Vec<(f64, f64)>,
    pub interpolation: String,
}

impl PriorFile {
    pub fn tabulate(
        label: &str,
        method: &str,
        model_spec: Value,
        argument_spec: Value,
        anchor: Option<Vec<f64>>,
        prior: &LogPrior,
        argument: &Estimand,
        points: &[Vec<f64>],
    ) -> Result<PriorFile> {
        let mut knots = Vec::with_capacity(points.len());
        for p in points {
            knots.push((argument.eval(p)?, prior.eval(p)?));
        }
        knots.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        knots.dedup_by(|a, b| a.0 == b.0);
        if knots.len() < 2 {
            return Err(Error::Precondition(
                "prior tabulation needs at least two distinct argument values".into(),
            ));
        }
        Ok(PriorFile {
            label: label.to_string(),
            method: method.to_string(),
            model: model_spec,
            argument: argument_spec,
            anchor,
            knots,
            interpolation: "monotone_cubic".to_string(),
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_string_pretty(self)?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<PriorFile> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Reconstruct a usable log-prior: the tabulated values interpolated
    /// against the argument estimand re-built from its spec.
    pub fn to_log_prior(&self, model: &Arc<dyn Model>) -> Result<LogPrior> {
        if self.interpolation != "monotone_cubic" {
            return Err(Error::config(
                "interpolation",
                format!("unsupported scheme `{}`", self.interpolation),
            ));
        }
        let arg_name = self
            .argument
            .get("name")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::config("argument.name", "missing"))?;
        let argument = estimand_by_name(arg_name, &self.argument, model)?;
        let xs: Vec<f64> = self.knots.iter().map(|k| k.0).collect();
        let ys: Vec<f64> = self.knots.iter().map(|k| k.1).collect();
        let spline = MonotoneCubic::new(xs, ys)
            .ok_or_else(|| Error::config("knots", "not strictly increasing in the argument"))?;
        let label = self.label.clone();
        Ok(LogPrior::new(
            label,
            Arc::new(move |xi: &[f64]| Ok(spline.eval(argument.eval(xi)?))),
        ))
    }
}
