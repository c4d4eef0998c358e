//! Command-line surface: argument parsing, the result envelope, JSON and CSV
//! writers, and SVG rendering ([`render`]).
//!
//! Every run prints `{manifest, inputs, result}`. The manifest's `replay`
//! argument vector, fed back to [`execute`], reproduces `result` exactly.

pub mod render;

use std::ffi::OsString;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::enhance::{finite_difference, russo_estimates, Axis};
use crate::estimate::{
    annulus_cycle, crossing, dual_tail, estimate_pc, survival, theta_comparison, theta_vs_rho,
};
use crate::explore::explore_dual_forward;
use crate::lattice::{DualVertex, Window};
use crate::models::{parse_param, rational_string, sample_configuration, ModelSpec, Param};
use crate::oracle::{conditional_dual_probability, saw_count, union_bound_curve, ConditionalScenario};
use crate::Error;
use render::{render_svg, RenderTarget};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const GIT_DESCRIBE: &str = env!("NEIGHPERC_GIT_DESCRIBE");

#[derive(Parser, Debug, Clone, Serialize)]
#[command(name = "neighperc", version, about = "Directed neighbor percolation experiments", args_override_self = true)]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, env = "NEIGHPERC_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Write the envelope here instead of stdout.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModelKind {
    #[value(name = "2dp")]
    #[serde(rename = "2dp")]
    TwoDp,
    #[value(name = "2eps")]
    #[serde(rename = "2eps")]
    TwoEps,
    #[value(name = "iid")]
    #[serde(rename = "iid")]
    Iid,
    #[value(name = "all-or-none")]
    #[serde(rename = "all-or-none")]
    AllOrNone,
    #[value(name = "ns-ew")]
    #[serde(rename = "ns-ew")]
    NsEw,
    #[value(name = "corner")]
    #[serde(rename = "corner")]
    Corner,
    #[value(name = "isotropic")]
    #[serde(rename = "isotropic")]
    Isotropic,
}

/// Parameters accept decimals (`0.45`) or fractions (`9/20`).
#[derive(Args, Debug, Clone, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::TwoEps)]
    pub model: ModelKind,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value = "1/2")]
    pub p: String,
    #[arg(long, default_value = "0")]
    pub eps: String,
    #[arg(long, default_value = "0")]
    pub rho: String,
}

impl ModelArgs {
    pub fn spec(&self) -> Result<ModelSpec, Error> {
        let p = || parse_param(&self.p);
        let spec = match self.model {
            ModelKind::TwoDp => ModelSpec::TwoDpNeighbor { d: self.d, p: p()? },
            ModelKind::TwoEps => ModelSpec::TwoEps { eps: parse_param(&self.eps)? },
            ModelKind::Iid => ModelSpec::IidDirected { p: p()? },
            ModelKind::AllOrNone => ModelSpec::AllOrNone { p: p()? },
            ModelKind::NsEw => ModelSpec::NsEw { p: p()? },
            ModelKind::Corner => ModelSpec::Corner { p: p()? },
            ModelKind::Isotropic => ModelSpec::IsotropicDegreeTwo { rho: parse_param(&self.rho)? },
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderWhat {
    Config,
    Explore,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Sample a configuration on a square window.
    Sample {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 8)]
        radius: u32,
    },
    /// Run the dual exploration from the dual origin.
    Explore {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 16)]
        radius: u32,
    },
    /// Survival probability of the origin to the boundary of Λ_n.
    Survival {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 32)]
        n: u32,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
    /// Tail of the dual forward set size.
    Tail {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 100)]
        n_max: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
    /// Finite-size threshold by bisection on p.
    Pc {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 64)]
        n: u32,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
    },
    /// Left-right crossing of the 3L by L rectangle.
    Crossing {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 16)]
        l: u32,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
    /// Open cycle around the annulus of radii L/2 and 3L/2.
    Annulus {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 16)]
        l: u32,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
    /// Survival of the five comparison models at p = 1/2.
    Compare {
        #[arg(long, default_value_t = 64)]
        n: u32,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
    /// Survival across the isotropic degree-two family.
    RhoSweep {
        #[arg(long, value_delimiter = ',', default_value = "0,1/16,1/8,3/16,1/4")]
        rhos: Vec<String>,
        #[arg(long, default_value_t = 64)]
        n: u32,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
    /// Pivotal-count derivatives of the enhanced model, optionally with
    /// finite differences.
    Russo {
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 0.3)]
        q: f64,
        #[arg(long, default_value_t = 6)]
        n: u32,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        #[arg(long, default_value_t = 0.02)]
        h: f64,
        #[arg(long)]
        fd: bool,
    },
    /// Exact conditional probabilities, or walk counts with `--saw`.
    Oracle {
        /// none, w-closed, w-open, s-open or w-s-open.
        #[arg(long, default_value = "w-closed")]
        scenario: String,
        #[arg(long, default_value = "0")]
        eps: String,
        /// Condition in Corner{1/2} instead of the (2,ε)-model.
        #[arg(long)]
        corner: bool,
        /// Count self-avoiding walks up to this length instead.
        #[arg(long)]
        saw: Option<usize>,
    },
    /// Draw a configuration or an exploration as SVG.
    Render {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 16)]
        radius: u32,
        #[arg(long, value_enum, default_value_t = RenderWhat::Explore)]
        what: RenderWhat,
        #[arg(long)]
        svg: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample { .. } => "sample",
            Command::Explore { .. } => "explore",
            Command::Survival { .. } => "survival",
            Command::Tail { .. } => "tail",
            Command::Pc { .. } => "pc",
            Command::Crossing { .. } => "crossing",
            Command::Annulus { .. } => "annulus",
            Command::Compare { .. } => "compare",
            Command::RhoSweep { .. } => "rho-sweep",
            Command::Russo { .. } => "russo",
            Command::Oracle { .. } => "oracle",
            Command::Render { .. } => "render",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Value,
    pub seed: u64,
    pub threads: Option<usize>,
    pub version: String,
    pub git_describe: String,
    /// Seconds since the Unix epoch at start.
    pub started_at: f64,
    pub wall_clock_secs: f64,
    /// Arguments (without the program name) that reproduce the result.
    pub replay: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub manifest: RunManifest,
    pub inputs: Value,
    pub result: Value,
    /// Row view used by `--format csv`; not part of the JSON output.
    #[serde(skip)]
    pub table: Vec<Value>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Args(#[from] clap::Error),
    #[error(transparent)]
    Run(#[from] Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Args(e) => e.exit_code(),
            CliError::Run(Error::Guard(_)) => 3,
            CliError::Run(Error::Io(_)) | CliError::Pool(_) => 1,
            CliError::Run(_) => 2,
        }
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn execute<I, T>(argv: I) -> Result<(Cli, Envelope), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&argv)?;
    // Drop any seed already on the command line and pin the resolved one.
    let mut replay = Vec::new();
    let mut args = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned());
    while let Some(a) = args.next() {
        if a == "--seed" {
            args.next();
        } else if !a.starts_with("--seed=") {
            replay.push(a);
        }
    }
    replay.extend(["--seed".to_string(), cli.seed.to_string()]);

    let started_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
    let clock = Instant::now();
    let (inputs, result, table) = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Pool(e.to_string()))?
            .install(|| dispatch(&cli.command, cli.seed))?,
        None => dispatch(&cli.command, cli.seed)?,
    };
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        params: serde_json::to_value(&cli.command).expect("arguments serialize"),
        seed: cli.seed,
        threads: cli.threads,
        version: VERSION.to_string(),
        git_describe: GIT_DESCRIBE.to_string(),
        started_at,
        wall_clock_secs: clock.elapsed().as_secs_f64(),
        replay,
    };
    Ok((cli, Envelope { manifest, inputs, result, table }))
}

/// Entry point for the binary. Returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let (cli, env) = match execute(argv) {
        Ok(v) => v,
        Err(CliError::Args(e)) => {
            let _ = e.print();
            return e.exit_code();
        }
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let text = match cli.format {
        Format::Json => Ok(to_json(&env)),
        Format::Csv => to_csv(&env),
    };
    let written = text.map_err(Error::from).and_then(|text| match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(Error::from),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(Error::from),
    });
    match written {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn to_json(env: &Envelope) -> String {
    let mut s = serde_json::to_string_pretty(env).expect("envelope serializes");
    s.push('\n');
    s
}

/// CSV body of the envelope's rows, preceded by `#` comment lines holding
/// the manifest and inputs as one-line JSON.
pub fn to_csv(env: &Envelope) -> Result<String, std::io::Error> {
    let mut out = String::new();
    out.push_str(&format!("# manifest: {}\n", serde_json::to_string(&env.manifest).expect("manifest serializes")));
    out.push_str(&format!("# inputs: {}\n", serde_json::to_string(&env.inputs).expect("inputs serialize")));
    let rows: Vec<Map<String, Value>> = env
        .table
        .iter()
        .map(|v| {
            let mut flat = Map::new();
            flatten("", v, &mut flat);
            flat
        })
        .collect();
    let mut header: Vec<String> = Vec::new();
    for r in &rows {
        for k in r.keys() {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for r in &rows {
        w.write_record(header.iter().map(|k| match r.get(k) {
            None | Some(Value::Null) => String::new(),
            Some(Value::String(s)) => s.clone(),
            Some(v) => v.to_string(),
        }))?;
    }
    let body = w.into_inner().map_err(|e| e.into_error())?;
    out.push_str(&String::from_utf8(body).expect("csv is utf-8"));
    Ok(out)
}

fn flatten(prefix: &str, v: &Value, out: &mut Map<String, Value>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Array(xs) if xs.len() == 2 && xs.iter().all(Value::is_number) => {
            out.insert(format!("{prefix}.lo"), xs[0].clone());
            out.insert(format!("{prefix}.hi"), xs[1].clone());
        }
        _ => {
            out.insert(prefix.to_string(), v.clone());
        }
    }
}

fn value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("results serialize")
}

fn rows<T: Serialize>(xs: &[T]) -> Vec<Value> {
    xs.iter().map(value).collect()
}

type Output = (Value, Value, Vec<Value>);

fn dispatch(cmd: &Command, seed: u64) -> Result<Output, Error> {
    Ok(match cmd {
        Command::Sample { model, radius } => {
            let spec = model.spec()?;
            if spec.dim() != 2 {
                return Err(Error::Unsupported("sample prints planar windows only".into()));
            }
            let c = sample_configuration(&spec, Window::square(0, 0, *radius), seed)?;
            let table = (0..c.window.len())
                .map(|i| {
                    let (x, y) = c.window.point2(i);
                    json!({"x": x, "y": y, "mask": c.outcomes[i].mask_string()})
                })
                .collect();
            let grid: Vec<String> = c.debug_grid().lines().map(str::to_string).collect();
            (json!({"spec": spec, "radius": radius}), json!({"grid": grid}), table)
        }
        Command::Explore { model, radius } => {
            let spec = model.spec()?;
            let c = sample_configuration(&spec, Window::square(0, 0, *radius), seed)?;
            let rec = explore_dual_forward(&c, &spec, DualVertex::ORIGIN, c.window)?;
            let table = rows(&rec.steps);
            let summary = json!({
                "termination": rec.termination,
                "steps": rec.steps.len(),
                "visited": rec.visited.len(),
                "t_piv": rec.t_piv(),
                "cluster_sizes": rec.clusters.iter().map(Vec::len).collect::<Vec<_>>(),
                "record": rec,
            });
            (json!({"spec": spec, "radius": radius}), summary, table)
        }
        Command::Survival { model, n, trials } => {
            let spec = model.spec()?;
            let e = survival(&spec, *n, *trials, seed)?;
            (json!({"spec": spec, "n": n, "trials": trials}), value(&e), vec![value(&e)])
        }
        Command::Tail { model, n_max, trials } => {
            let spec = model.spec()?;
            let t = dual_tail(&spec, *n_max, *trials, seed)?;
            (json!({"spec": spec, "n_max": n_max, "trials": trials}), value(&t), rows(&t))
        }
        Command::Pc { model, n, trials, tol } => {
            let spec = model.spec()?;
            let r = estimate_pc(&spec, *n, *trials, *tol, seed)?;
            (json!({"family": spec, "n": n, "trials": trials, "tol": tol}), value(&r), rows(&r.probes))
        }
        Command::Crossing { model, l, trials } => {
            let spec = model.spec()?;
            let e = crossing(&spec, *l, *trials, seed)?;
            (json!({"spec": spec, "l": l, "trials": trials}), value(&e), vec![value(&e)])
        }
        Command::Annulus { model, l, trials } => {
            let spec = model.spec()?;
            let a = annulus_cycle(&spec, *l, *trials, seed)?;
            (json!({"spec": spec, "l": l, "trials": trials}), value(&a), vec![value(&a)])
        }
        Command::Compare { n, trials } => {
            let r = theta_comparison(*n, *trials, seed)?;
            (json!({"n": n, "trials": trials}), value(&r), rows(&r))
        }
        Command::RhoSweep { rhos, n, trials } => {
            let rhos: Vec<Param> = rhos.iter().map(|s| parse_param(s)).collect::<Result<_, _>>()?;
            let r = theta_vs_rho(&rhos, *n, *trials, seed)?;
            let shown: Vec<String> = rhos.iter().map(|r| r.to_string()).collect();
            (json!({"rhos": shown, "n": n, "trials": trials}), value(&r), rows(&r))
        }
        Command::Russo { p, q, n, trials, h, fd } => {
            let r = russo_estimates(*p, *q, *n, *trials, seed)?;
            let mut result = value(&r);
            if *fd {
                let fp = finite_difference(*p, *q, Axis::P, *h, *n, *trials, seed)?;
                let fq = finite_difference(*p, *q, Axis::Q, *h, *n, *trials, seed)?;
                result["finite_difference"] = json!({"p": fp, "q": fq, "h": h});
            }
            let table = vec![result.clone()];
            (json!({"p": p, "q": q, "n": n, "trials": trials}), result, table)
        }
        Command::Oracle { scenario, eps, corner, saw } => {
            if let Some(len) = saw {
                let counts: Vec<u64> = (1..=*len).map(saw_count).collect::<Result<_, _>>()?;
                let curve = union_bound_curve(crate::models::param(1, 2), *len)?;
                let curve: Vec<Value> =
                    curve.iter().map(|(n, b)| json!({"n": n, "bound": rational_string(b)})).collect();
                let table: Vec<Value> =
                    counts.iter().enumerate().map(|(i, c)| json!({"n": i + 1, "count": c})).collect();
                (json!({"saw": len}), json!({"counts": counts, "union_bound_half": curve}), table)
            } else {
                let spec = if *corner {
                    ModelSpec::Corner { p: crate::models::param(1, 2) }
                } else {
                    ModelSpec::TwoEps { eps: parse_param(eps)? }
                };
                spec.validate()?;
                let sc = ConditionalScenario::preset(scenario, spec)?;
                let pr = rational_string(&conditional_dual_probability(&sc)?);
                let result = json!({"probability": pr});
                (json!({"scenario": scenario, "spec": spec}), result.clone(), vec![result])
            }
        }
        Command::Render { model, radius, what, svg } => {
            let spec = model.spec()?;
            if *radius > render::MAX_RENDER_RADIUS {
                return Err(Error::Guard(format!("render radius {radius} exceeds {}", render::MAX_RENDER_RADIUS)));
            }
            let c = sample_configuration(&spec, Window::square(0, 0, *radius), seed)?;
            let text = match what {
                RenderWhat::Config => render_svg(&RenderTarget::Configuration(&c))?,
                RenderWhat::Explore => {
                    let rec = explore_dual_forward(&c, &spec, DualVertex::ORIGIN, c.window)?;
                    render_svg(&RenderTarget::Exploration { record: &rec, config: Some(&c) })?
                }
            };
            std::fs::write(svg, &text)?;
            let result = json!({"path": svg, "bytes": text.len()});
            (json!({"spec": spec, "radius": radius, "what": what}), result.clone(), vec![result])
        }
    })
}
