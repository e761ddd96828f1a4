//! Command-line front end. Exit code 0 on success, 2 for configuration and
//! input errors, 3 for numerical failures.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::config::NumericConfig;
use crate::error::{Error, Result};
use crate::geodesic;
use crate::geometry::{self, frame_at, numeric_frame_at};
use crate::manifold::{Dataset, Model};
use crate::mc::{self, BiasExperiment, BiasReport, ModelFamily};
use crate::prior::{self, LogPrior};
use crate::registry::{self, PriorFile};
use crate::{estimate, linalg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Parser)]
#[command(name = "unbiasgeo", version, about = "information-geometric priors for second-order unbiased plug-in estimation")]
pub struct Cli {
    /// JSON file overriding the numeric configuration (partial files allowed)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// output file; stdout when omitted
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// worker threads (also via UNBIASGEO_THREADS); default: all cores
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Metric, skewness and connections at a point
    Geometry {
        /// model spec, e.g. '{"name":"efron_morris","n":50}'
        #[arg(long)]
        model: String,
        /// comma-separated coordinates
        #[arg(long)]
        point: String,
        /// cross-validate closed forms numerically and test tensor identities
        #[arg(long)]
        check: bool,
    },
    /// Build or evaluate priors
    #[command(subcommand)]
    Prior(PriorCmd),
    /// MAP (or ML) estimation from a CSV dataset
    Estimate {
        #[arg(long)]
        model: String,
        /// CSV with columns unit,obs_index,value
        #[arg(long)]
        data: PathBuf,
        /// prior spec '{"name":...}' or '{"file":"prior.json"}'; omit for MLE
        #[arg(long)]
        prior: Option<String>,
    },
    /// Geodesic computations
    #[command(subcommand)]
    Geodesic(GeodesicCmd),
    /// Monte Carlo bias experiment from a JSON spec
    Bias {
        #[arg(long)]
        spec: PathBuf,
        /// overrides the seed in the spec
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Moments of the MAP estimator against their asymptotic expansions
    Moment {
        #[arg(long)]
        spec: PathBuf,
    },
}

#[derive(Subcommand)]
pub enum PriorCmd {
    /// Construct a prior and tabulate it to a prior file
    Build {
        #[arg(long)]
        model: String,
        /// "one_d", "condg", "cond0", or "named"
        #[arg(long)]
        method: String,
        /// estimand spec (for "named": the prior spec)
        #[arg(long)]
        estimand: Option<String>,
        /// named prior spec when method = "named"
        #[arg(long)]
        prior: Option<String>,
        /// anchor point, comma-separated (condg/cond0)
        #[arg(long)]
        anchor: Option<String>,
        /// tabulation grid over the first coordinate: "lo,hi,count"
        #[arg(long)]
        grid: String,
    },
    /// Evaluate a prior file at a point
    Eval {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        point: String,
    },
}

#[derive(Subcommand)]
pub enum GeodesicCmd {
    /// Geodesic distance between two points
    Distance {
        #[arg(long)]
        model: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
}

fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::config("point", format!("not a number: `{p}`")))
        })
        .collect()
}

fn parse_json(field: &str, s: &str) -> Result<Value> {
    serde_json::from_str(s).map_err(|e| Error::config(field, format!("invalid JSON: {e}")))
}

fn load_config(path: &Option<PathBuf>) -> Result<NumericConfig> {
    match path {
        None => Ok(NumericConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::config("config", format!("invalid config file: {e}")))
        }
    }
}

fn matrix_json(m: &nalgebra::DMatrix<f64>) -> Value {
    let rows: Vec<Vec<f64>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect();
    json!(rows)
}

fn tensor3_json(t: &linalg::Tensor3) -> Value {
    let d = t.d;
    let v: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..d).map(|k| t.get(i, j, k)).collect())
                .collect()
        })
        .collect();
    json!(v)
}

fn resolve_prior(spec: &Value, model: &Arc<dyn Model>, cfg: &NumericConfig) -> Result<LogPrior> {
    if let Some(path) = spec.get("file").and_then(Value::as_str) {
        let pf = PriorFile::load(Path::new(path))?;
        return pf.to_log_prior(model);
    }
    let name = spec
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::config("prior", "needs `name` or `file`"))?;
    registry::prior_by_name(name, spec, model, cfg)
}

fn resolve_estimand(
    spec: &Value,
    model: &Arc<dyn Model>,
) -> Result<prior::Estimand> {
    let name = spec
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::config("estimand", "needs `name`"))?;
    registry::estimand_by_name(name, spec, model)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        None => {
            println!("{text}");
            Ok(())
        }
        Some(p) => {
            let tmp = p.with_extension("tmp");
            std::fs::write(&tmp, text)?;
            std::fs::rename(&tmp, p)?;
            Ok(())
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.config)?;
    let threads = cli.threads.or_else(|| {
        std::env::var("UNBIASGEO_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(t) = threads {
        // ignore failure: the global pool may already exist (tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }

    match &cli.cmd {
        Cmd::Geometry {
            model,
            point,
            check,
        } => {
            let model = registry::model_from_spec(&parse_json("model", model)?)?;
            let xi = parse_point(point)?;
            let frame = frame_at(model.as_ref(), &xi, &cfg)?;
            let mut report = json!({
                "model": model.name(),
                "chart": model.chart_name(),
                "point": xi,
                "source": frame.source,
                "metric": matrix_json(&frame.metric),
                "metric_det": frame.metric_det,
                "skewness": tensor3_json(&frame.skewness),
                "contracted_skewness": frame.contracted_skewness,
                "gamma0": tensor3_json(&frame.gamma0),
            });
            if *check {
                let mut max_dual = 0.0_f64;
                let mut max_cov = 0.0_f64;
                for alpha in [0.0, 0.5, 1.0] {
                    let (d, c) = geometry::identity_residuals(model.as_ref(), &xi, alpha, &cfg)?;
                    max_dual = max_dual.max(d);
                    max_cov = max_cov.max(c);
                }
                let numeric = numeric_frame_at(model.as_ref(), &xi, &cfg)?;
                let dg = (&numeric.metric - &frame.metric).abs().max();
                let ds = numeric.skewness.sub(&frame.skewness).max_abs();
                report["check"] = json!({
                    "duality_residual": max_dual,
                    "covariant_metric_residual": max_cov,
                    "numeric_metric_gap": dg,
                    "numeric_skewness_gap": ds,
                    "numeric_source": numeric.source,
                });
            }
            emit(&cli.out, &serde_json::to_string_pretty(&report)?)
        }
        Cmd::Prior(pc) => run_prior(pc, &cli, &cfg),
        Cmd::Estimate { model, data, prior } => {
            let model = registry::model_from_spec(&parse_json("model", model)?)?;
            let text = std::fs::read_to_string(data)?;
            let dataset = Dataset::from_csv(&text)?;
            let (label, result) = match prior {
                None => (
                    "uniform".to_string(),
                    estimate::mle(model.as_ref(), &dataset, &cfg)?,
                ),
                Some(p) => {
                    let lp = resolve_prior(&parse_json("prior", p)?, &model, &cfg)?;
                    let r = estimate::map(model.as_ref(), &dataset, &lp, &cfg)?;
                    (lp.label.clone(), r)
                }
            };
            let report = json!({
                "model": model.name(),
                "prior": label,
                "point": result.point,
                "objective": result.objective,
                "grad_norm": result.grad_norm,
                "iterations": result.iterations,
                "starts_tried": result.starts_tried,
            });
            emit(&cli.out, &serde_json::to_string_pretty(&report)?)
        }
        Cmd::Geodesic(GeodesicCmd::Distance { model, from, to }) => {
            let model = registry::model_from_spec(&parse_json("model", model)?)?;
            let a = parse_point(from)?;
            let b = parse_point(to)?;
            let (r, path) = geodesic::distance(model.as_ref(), &a, &b, &cfg)?;
            let report = json!({
                "model": model.name(),
                "from": a,
                "to": b,
                "distance": r,
                "initial_velocity": path.v0,
            });
            emit(&cli.out, &serde_json::to_string_pretty(&report)?)
        }
        Cmd::Bias { spec, seed } => {
            let text = std::fs::read_to_string(spec)?;
            let spec: BiasSpec = serde_json::from_str(&text)
                .map_err(|e| Error::config("spec", format!("invalid bias spec: {e}")))?;
            let report = run_bias_spec(&spec, *seed, &cfg)?;
            match cli.format {
                Format::Json => emit(&cli.out, &serde_json::to_string_pretty(&report)?),
                Format::Csv => emit(&cli.out, &bias_csv(&report)),
            }
        }
        Cmd::Moment { spec } => {
            let text = std::fs::read_to_string(spec)?;
            let spec: MomentSpec = serde_json::from_str(&text)
                .map_err(|e| Error::config("spec", format!("invalid moment spec: {e}")))?;
            let (model, _) = spec.family.instantiate(spec.n)?;
            let lp = resolve_prior(&spec.prior, &model, &cfg)?;
            let report = mc::moment_check(
                &spec.family,
                &spec.param_point,
                &lp,
                spec.n,
                spec.replicates,
                spec.seed,
                &cfg,
            )?;
            emit(&cli.out, &serde_json::to_string_pretty(&report)?)
        }
    }
}

#[derive(serde::Deserialize)]
pub struct BiasSpec {
    #[serde(flatten)]
    pub family: ModelFamily,
    pub estimand: Value,
    pub prior: Value,
    pub param_point: Vec<f64>,
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
}

pub fn run_bias_spec(
    spec: &BiasSpec,
    seed_override: Option<u64>,
    cfg: &NumericConfig,
) -> Result<BiasReport> {
    let n_ref = *spec
        .sample_sizes
        .iter()
        .max()
        .ok_or_else(|| Error::config("sample_sizes", "must be non-empty"))?;
    let (model_ref, _) = spec.family.instantiate(n_ref)?;
    let estimand = resolve_estimand(&spec.estimand, &model_ref)?;
    let lp = resolve_prior(&spec.prior, &model_ref, cfg)?;
    let experiment = BiasExperiment {
        family: spec.family.clone(),
        estimand: estimand.label.clone(),
        prior: lp.label.clone(),
        param_point: spec.param_point.clone(),
        sample_sizes: spec.sample_sizes.clone(),
        replicates: spec.replicates,
        seed: seed_override.unwrap_or(spec.seed),
    };
    mc::run_bias(&experiment, &estimand, &lp, cfg)
}

#[derive(serde::Deserialize)]
pub struct MomentSpec {
    #[serde(flatten)]
    pub family: ModelFamily,
    pub prior: Value,
    pub param_point: Vec<f64>,
    pub n: usize,
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
}

pub fn bias_csv(report: &BiasReport) -> String {
    let e = &report.experiment;
    let point = e
        .param_point
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";");
    let mut out = String::from(
        "estimand,prior,param_point,arm,n,replicates,failures,mean_bias,se,n_times_bias\n",
    );
    for c in &report.cells {
        for (arm, bias, se) in [
            ("map", c.map_mean_bias, c.map_se),
            ("mle", c.mle_mean_bias, c.mle_se),
        ] {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                e.estimand,
                e.prior,
                point,
                arm,
                c.n,
                c.replicates,
                c.failures,
                bias,
                se,
                c.n as f64 * bias
            ));
        }
    }
    out
}

fn run_prior(pc: &PriorCmd, cli: &Cli, cfg: &NumericConfig) -> Result<()> {
    match pc {
        PriorCmd::Build {
            model,
            method,
            estimand,
            prior,
            anchor,
            grid,
        } => {
            let model_spec = parse_json("model", model)?;
            let model = registry::model_from_spec(&model_spec)?;
            let anchor_pt = anchor.as_deref().map(parse_point).transpose()?;
            let parts = parse_point(grid)?;
            if parts.len() != 3 || parts[2] < 2.0 {
                return Err(Error::config("grid", "expected lo,hi,count with count >= 2"));
            }
            let count = parts[2] as usize;
            let base = anchor_pt
                .clone()
                .unwrap_or_else(|| model.reference_point());
            // tabulation points: vary the first coordinate over the grid,
            // keep the rest at the anchor
            let grid_points: Vec<Vec<f64>> = (0..count)
                .map(|k| {
                    let x = parts[0] + (parts[1] - parts[0]) * k as f64 / (count - 1) as f64;
                    let mut p = base.clone();
                    p[0] = x;
                    p
                })
                .collect();
            let argument_spec = json!({"name": "coordinate", "k": 0});
            let argument = registry::estimand_by_name("coordinate", &argument_spec, &model)?;
            let (lp, est_spec): (LogPrior, Value) = match method.as_str() {
                "one_d" => {
                    let es = parse_json(
                        "estimand",
                        estimand
                            .as_deref()
                            .ok_or_else(|| Error::config("estimand", "required for one_d"))?,
                    )?;
                    let f = resolve_estimand(&es, &model)?;
                    (prior::build_prior_1d(model.clone(), f, cfg)?, es)
                }
                "condg" => {
                    let es = parse_json(
                        "estimand",
                        estimand
                            .as_deref()
                            .ok_or_else(|| Error::config("estimand", "required for condg"))?,
                    )?;
                    let f = resolve_estimand(&es, &model)?;
                    let a = anchor_pt
                        .clone()
                        .ok_or_else(|| Error::config("anchor", "required for condg"))?;
                    (
                        prior::build_prior_along_estimand(model.clone(), f, a, cfg)?,
                        es,
                    )
                }
                "cond0" => {
                    let es = parse_json(
                        "estimand",
                        estimand
                            .as_deref()
                            .ok_or_else(|| Error::config("estimand", "required for cond0"))?,
                    )?;
                    let f = resolve_estimand(&es, &model)?;
                    let a = anchor_pt
                        .clone()
                        .ok_or_else(|| Error::config("anchor", "required for cond0"))?;
                    (
                        prior::build_prior_geodesic(model.clone(), a, f, cfg)?,
                        es,
                    )
                }
                "named" => {
                    let ps = parse_json(
                        "prior",
                        prior
                            .as_deref()
                            .ok_or_else(|| Error::config("prior", "required for named"))?,
                    )?;
                    let lp = resolve_prior(&ps, &model, cfg)?;
                    (lp, ps)
                }
                other => {
                    return Err(Error::config(
                        "method",
                        format!("unknown method `{other}`"),
                    ))
                }
            };
            let label = lp.label.clone();
            let file = PriorFile::tabulate(
                &label,
                method,
                model_spec,
                argument_spec,
                anchor_pt,
                &lp,
                &argument,
                &grid_points,
            )?;
            let _ = est_spec;
            match &cli.out {
                Some(p) => file.save(p),
                None => emit(&None, &serde_json::to_string_pretty(&file)?),
            }
        }
        PriorCmd::Eval { file, point } => {
            let pf = PriorFile::load(file)?;
            let model = registry::model_from_spec(&pf.model)?;
            let lp = pf.to_log_prior(&model)?;
            let xi = parse_point(point)?;
            let report = json!({
                "label": pf.label,
                "point": xi,
                "log_prior": lp.eval(&xi)?,
            });
            emit(&cli.out, &serde_json::to_string_pretty(&report)?)
        }
    }
}
