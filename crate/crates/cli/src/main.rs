//! `caffine`: centroaffine invariants, parallel-cubic-form verification,
//! pointwise classification, and Calabi-product tooling over chart JSON files.
//!
//! Exit codes: 0 success/pass, 1 verification or classification mismatch,
//! 2 invalid input, 3 numerical failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use caffine_core::calabi::{self, CalabiFactor, CalabiSpec};
use caffine_core::catalog;
use caffine_core::classify::{self, ClassifyConfig, Label};
use caffine_core::geometry::{self, GridSpec, ImmersionChart};

#[derive(Parser)]
#[command(name = "caffine", version, about = "centroaffine hypersurface engine")]
struct Cli {
    /// worker threads for grid sweeps (default: available parallelism)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// seed for the deterministic restart family (env CAFFINE_SEED overrides
    /// the default 0)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// report output path (default: stdout)
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute all centroaffine invariants of a chart at a point
    Invariants(InvariantsArgs),
    /// Verify the parallel-cubic-form condition over a grid
    Verify(VerifyArgs),
    /// Classify a chart point
    Classify(ClassifyArgs),
    /// Build the Calabi product described by a spec file
    CalabiCompose(ComposeArgs),
    /// Detect a product structure and split the position vector
    CalabiDecompose(DecomposeArgs),
    /// List the model-hypersurface catalog
    CatalogList,
    /// Emit a catalog chart as JSON
    CatalogEmit(EmitArgs),
}

#[derive(Args)]
struct InvariantsArgs {
    #[arg(long)]
    chart: PathBuf,
    /// comma-separated coordinates (default: domain center)
    #[arg(long)]
    point: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    chart: PathBuf,
    /// grid points per axis
    #[arg(long, default_value_t = 5)]
    grid: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    chart: PathBuf,
    /// comma-separated coordinates (default: domain center)
    #[arg(long)]
    point: Option<String>,
    /// fail (exit 1) unless the label matches
    #[arg(long)]
    expect: Option<String>,
    /// skip the pointwise parallelism precheck
    #[arg(long, default_value_t = false)]
    skip_parallel_check: bool,
}

#[derive(Args)]
struct ComposeArgs {
    /// product spec JSON: {"lambda", "left", "right", "u_interval"}
    #[arg(long)]
    spec: PathBuf,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    chart: PathBuf,
    /// comma-separated coordinates (default: domain center)
    #[arg(long)]
    point: Option<String>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct EmitArgs {
    /// catalog id (see catalog-list)
    id: String,
    /// key=value pairs, e.g. m=3 or alphas=1,1,1
    params: Vec<String>,
}

/// Renders a JSON value with floats at 17 significant digits so reports are
/// byte-identical across runs and platforms.
fn render_json(value: &serde_json::Value, out: &mut String, indent: usize) {
    match value {
        serde_json::Value::Null => out.push_str("null"),
        serde_json::Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                let f = n.as_f64().unwrap();
                if f.is_finite() {
                    out.push_str(&format!("{f:.16e}"));
                } else {
                    out.push_str("null");
                }
            }
        }
        serde_json::Value::String(s) => {
            out.push_str(&serde_json::to_string(s).unwrap());
        }
        serde_json::Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push('\n');
                out.push_str(&" ".repeat(indent + 2));
                render_json(item, out, indent + 2);
            }
            out.push('\n');
            out.push_str(&" ".repeat(indent));
            out.push(']');
        }
        serde_json::Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, (k, v)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push('\n');
                out.push_str(&" ".repeat(indent + 2));
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push_str(": ");
                render_json(v, out, indent + 2);
            }
            out.push('\n');
            out.push_str(&" ".repeat(indent));
            out.push('}');
        }
    }
}

struct Failure {
    code: u8,
    message: String,
    location: String,
}

impl Failure {
    fn invalid(location: &str, message: impl ToString) -> Failure {
        Failure {
            code: 2,
            message: message.to_string(),
            location: location.to_string(),
        }
    }

    fn numerical(location: &str, message: impl ToString) -> Failure {
        Failure {
            code: 3,
            message: message.to_string(),
            location: location.to_string(),
        }
    }

    fn mismatch(location: &str, message: impl ToString) -> Failure {
        Failure {
            code: 1,
            message: message.to_string(),
            location: location.to_string(),
        }
    }
}

fn emit_report(value: &serde_json::Value, output: &Option<PathBuf>) -> Result<(), Failure> {
    let mut text = String::new();
    render_json(value, &mut text, 0);
    text.push('\n');
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::invalid("output", format!("cannot write {path:?}: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_chart(path: &Path) -> Result<ImmersionChart, Failure> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid("chart", format!("cannot read {path:?}: {e}")))?;
    let value: serde_json::Value = serde_json::from_str(&raw)
        .map_err(|e| Failure::invalid("chart", format!("bad JSON in {path:?}: {e}")))?;
    ImmersionChart::from_json(&value).map_err(|e| Failure::invalid("chart", e))
}

fn resolve_point(
    text: &Option<String>,
    chart: &ImmersionChart,
) -> Result<Vec<f64>, Failure> {
    match text {
        Some(t) => parse_point(t, chart.n),
        None => Ok(chart.center()),
    }
}

fn parse_point(text: &str, n: usize) -> Result<Vec<f64>, Failure> {
    let coords: Result<Vec<f64>, _> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect();
    let coords = coords.map_err(|e| Failure::invalid("point", format!("bad coordinate: {e}")))?;
    if coords.len() != n {
        return Err(Failure::invalid(
            "point",
            format!("expected {n} coordinates, got {}", coords.len()),
        ));
    }
    Ok(coords)
}

fn geometry_failure(location: &str, e: geometry::GeometryError) -> Failure {
    use geometry::GeometryError as G;
    match e {
        G::PointOutsideDomain(_) | G::ComponentCount { .. } | G::Expr(_) => {
            Failure::invalid(location, e)
        }
        _ => Failure::numerical(location, e),
    }
}

fn classify_failure(location: &str, e: classify::ClassifyError) -> Failure {
    use classify::ClassifyError as C;
    match e {
        C::Geometry(g) => geometry_failure(location, g),
        C::IndefiniteMetric => Failure::invalid(location, C::IndefiniteMetric),
        other => Failure::numerical(location, other),
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::invalid("jobs", e))?;
    }
    let seed = cli
        .seed
        .or_else(|| {
            std::env::var("CAFFINE_SEED")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0);

    match &cli.command {
        Command::Invariants(args) => {
            let chart = load_chart(&args.chart)?;
            let point = resolve_point(&args.point, &chart)?;
            let data = geometry::invariants_at(&chart, &point)
                .map_err(|e| geometry_failure("invariants", e))?;
            let integ = geometry::integrability_of(&data);
            let h: Vec<Vec<f64>> = data.h.to_dense();
            let report = serde_json::json!({
                "chart": chart.name,
                "point": point,
                "epsilon": data.epsilon,
                "signature": data.signature,
                "non_convex": data.non_convex,
                "h": h,
                "tcheb": data.tcheb,
                "norms": {
                    "c": data.c_norm(),
                    "traceless": data.traceless_norm(),
                    "nabla_c": data.nabla_c_norm(),
                },
                "residuals": {
                    "cross_check": data.cross_check_residual,
                    "gauss": integ.gauss_residual,
                    "slot_symmetry": integ.slot_symmetry_residual,
                    "derivation": integ.derivation_residual,
                },
            });
            emit_report(&report, &cli.output)
        }
        Command::Verify(args) => {
            if args.tol <= 0.0 {
                return Err(Failure::invalid("tol", "tolerance must be positive"));
            }
            if args.grid < 2 {
                return Err(Failure::invalid("grid", "grid must be at least 2"));
            }
            let chart = load_chart(&args.chart)?;
            let rep = geometry::verify_parallel(&chart, &GridSpec::new(args.grid), args.tol)
                .map_err(|e| geometry_failure("verify", e))?;
            let errors: Vec<serde_json::Value> = rep
                .errors
                .iter()
                .map(|(p, m)| serde_json::json!({"point": p, "message": m}))
                .collect();
            let report = serde_json::json!({
                "chart": chart.name,
                "grid": args.grid,
                "tol": args.tol,
                "pass": rep.pass,
                "max_residual": rep.max_residual,
                "worst_point": rep.worst_point,
                "points_checked": rep.points_checked,
                "errors": errors,
            });
            emit_report(&report, &cli.output)?;
            if rep.pass {
                Ok(())
            } else {
                Err(Failure::mismatch(
                    "verify",
                    format!(
                        "max residual {:.3e} exceeds tol {:.3e} at {:?}",
                        rep.max_residual, args.tol, rep.worst_point
                    ),
                ))
            }
        }
        Command::Classify(args) => {
            let chart = load_chart(&args.chart)?;
            let point = resolve_point(&args.point, &chart)?;
            let config = ClassifyConfig {
                seed,
                check_parallel: !args.skip_parallel_check,
                ..Default::default()
            };
            let rep = classify::classify_point(&chart, &point, &config)
                .map_err(|e| classify_failure("classify", e))?;
            let mut value = serde_json::to_value(&rep)
                .map_err(|e| Failure::numerical("classify", e))?;
            if let serde_json::Value::Object(map) = &mut value {
                map.insert("chart".into(), serde_json::json!(chart.name));
                map.insert("point".into(), serde_json::json!(point));
                map.insert("seed".into(), serde_json::json!(seed));
            }
            emit_report(&value, &cli.output)?;
            let label = rep.label.to_string();
            if let Some(expect) = &args.expect {
                if &label != expect {
                    return Err(Failure::mismatch(
                        "classify",
                        format!("label {label} does not match expected {expect}"),
                    ));
                }
            } else if rep.label == Label::Unrecognized {
                return Err(Failure::mismatch(
                    "classify",
                    rep.diagnostic
                        .unwrap_or_else(|| "point not recognized".into()),
                ));
            }
            Ok(())
        }
        Command::CalabiCompose(args) => {
            let raw = std::fs::read_to_string(&args.spec)
                .map_err(|e| Failure::invalid("spec", format!("cannot read spec: {e}")))?;
            let value: serde_json::Value = serde_json::from_str(&raw)
                .map_err(|e| Failure::invalid("spec", format!("bad JSON: {e}")))?;
            let dir = args.spec.parent().unwrap_or(Path::new("."));
            let lambda = value
                .get("lambda")
                .and_then(|v| v.as_f64())
                .ok_or_else(|| Failure::invalid("spec", "missing numeric `lambda`"))?;
            let left_path = value
                .get("left")
                .and_then(|v| v.as_str())
                .ok_or_else(|| Failure::invalid("spec", "missing `left` chart path"))?;
            let left = load_chart(&dir.join(left_path))?;
            let right = match value.get("right") {
                Some(serde_json::Value::String(p)) => {
                    CalabiFactor::Chart(load_chart(&dir.join(p))?)
                }
                Some(other) => {
                    let coords = other
                        .get("point")
                        .and_then(|v| v.as_array())
                        .ok_or_else(|| {
                            Failure::invalid("spec", "`right` must be a path or {\"point\": [...]}")
                        })?
                        .iter()
                        .map(|x| x.as_f64().unwrap_or(f64::NAN))
                        .collect::<Vec<f64>>();
                    CalabiFactor::Point(coords)
                }
                None => return Err(Failure::invalid("spec", "missing `right` factor")),
            };
            let mut spec = CalabiSpec::new(lambda, left, right);
            if let Some(iv) = value.get("u_interval").and_then(|v| v.as_array()) {
                if iv.len() == 2 {
                    spec.u_interval = (
                        iv[0].as_f64().unwrap_or(-0.5),
                        iv[1].as_f64().unwrap_or(0.5),
                    );
                }
            }
            let chart = calabi::compose(&spec).map_err(|e| Failure::invalid("compose", e))?;
            emit_report(&chart.to_json(), &cli.output)
        }
        Command::CalabiDecompose(args) => {
            let chart = load_chart(&args.chart)?;
            let point = resolve_point(&args.point, &chart)?;
            let structure = calabi::detect_at(&chart, &point, args.tol)
                .map_err(|e| Failure::numerical("detect", e))?;
            let report = match &structure {
                None => serde_json::json!({
                    "chart": chart.name,
                    "point": point,
                    "structure": null,
                }),
                Some(s) => {
                    let (psi1, psi2) = calabi::decompose_pointwise(&chart, &point, s)
                        .map_err(|e| Failure::numerical("decompose", e))?;
                    serde_json::json!({
                        "chart": chart.name,
                        "point": point,
                        "structure": {
                            "kind": match s.kind {
                                calabi::StructureKind::TwoFactor => "two-factor",
                                calabi::StructureKind::PointFactor => "point-factor",
                            },
                            "t": s.t,
                            "lambda1": s.lambda1,
                            "lambda2": s.lambda2,
                            "lambda3": s.lambda3,
                            "d2_dim": s.d2_dim,
                            "d3_dim": s.d3_dim,
                            "exact_form": s.exact_form,
                        },
                        "psi1": psi1,
                        "psi2": psi2,
                    })
                }
            };
            emit_report(&report, &cli.output)?;
            if structure.is_none() {
                return Err(Failure::mismatch(
                    "detect",
                    "no product structure found at the point",
                ));
            }
            Ok(())
        }
        Command::CatalogList => {
            for e in catalog::entries() {
                println!("{:<14} expected: {:<22} {}", e.id, e.expected_label, e.reference);
                println!("{:<14} params:   {}", "", e.params);
            }
            Ok(())
        }
        Command::CatalogEmit(args) => {
            let mut params = BTreeMap::new();
            for kv in &args.params {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Failure::invalid("params", format!("expected key=value, got `{kv}`")))?;
                params.insert(k.to_string(), v.to_string());
            }
            let chart = catalog::emit(&args.id, &params)
                .map_err(|e| Failure::invalid("catalog", e))?;
            emit_report(&chart.to_json(), &cli.output)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let err = serde_json::json!({
                "error": {
                    "code": f.code,
                    "message": f.message,
                    "location": f.location,
                }
            });
            let mut text = String::new();
            render_json(&err, &mut text, 0);
            eprintln!("{text}");
            ExitCode::from(f.code)
        }
    }
}
