//! `bga` command line.
//!
//! ```text
//! bga estimate --data F [--crts]
//! bga decompose --data F (--model F | --crts)
//! bga target multiple --m X --rate R
//! bga target catchup --follower A --leader B --leader-rate R (--follower-rate R | --horizon N)
//! bga plan --config F [--out DIR]
//! bga evaluate --plan F --realized F
//! bga serve --port P --store DIR
//! ```
//!
//! Results go to stdout as JSON unless `--format csv`. Exit code 0 on
//! success, 1 on a domain error (JSON on stderr), 2 on a usage error.
//! A file argument of `-` reads stdin.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use bga_core::io::{
    charts_json, decomposition_csv, fmt_num, fmt_pct, plan_charts, plan_csv, plan_json,
    read_dataset, read_plan_json, PlanConfig,
};
use bga_core::{
    catchup_horizon, classify_rts, decompose, evaluate_plan, fit_cobb_douglas, growth_between,
    required_rate, years_to_multiple_exact, years_to_multiple_rule70, BgaError, CatchupProblem,
    PlanEvaluation, ProductionModel, TimeSeriesDataset,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

/// Environment variable that overrides `serve --store`.
pub const STORE_ENV: &str = "BGA_STORE";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliOutput {
    pub stdout: String,
    pub stderr: String,
    pub exit_code: u8,
}

#[derive(Debug, Parser)]
#[command(name = "bga", version, about = "Backward growth accounting planner")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a Cobb-Douglas model to a dataset.
    Estimate {
        #[arg(long)]
        data: PathBuf,
        /// Impose constant returns to scale.
        #[arg(long)]
        crts: bool,
    },
    /// Attribute growth between consecutive periods to inputs and TFP.
    Decompose(DecomposeArgs),
    /// Turn an objective into a rate or horizon.
    #[command(subcommand)]
    Target(TargetCommand),
    /// Generate a plan from a JSON config.
    Plan {
        #[arg(long)]
        config: PathBuf,
        /// Also write plan.csv, plan.json and charts.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare realized rows against a saved plan.
    Evaluate {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        realized: PathBuf,
    },
    /// Run the HTTP scenario service on 127.0.0.1.
    Serve {
        #[arg(long)]
        port: u16,
        #[arg(long)]
        store: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[arg(long)]
    data: PathBuf,
    /// Production model JSON.
    #[arg(long, conflicts_with = "crts", required_unless_present = "crts")]
    model: Option<PathBuf>,
    /// Fit a CRTS model to the data instead.
    #[arg(long)]
    crts: bool,
}

#[derive(Debug, Subcommand)]
enum TargetCommand {
    /// Years for output to grow by a multiple.
    Multiple {
        #[arg(long)]
        m: f64,
        /// Annual growth rate as a fraction.
        #[arg(long, allow_hyphen_values = true)]
        rate: f64,
    },
    /// Catch a rival: required rate within a horizon, or horizon at a rate.
    Catchup {
        #[arg(long)]
        follower: f64,
        #[arg(long)]
        leader: f64,
        #[arg(long, allow_hyphen_values = true)]
        leader_rate: f64,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "horizon", required_unless_present = "horizon")]
        follower_rate: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
    },
}

#[derive(Debug)]
enum CliError {
    Domain(BgaError),
    Io { path: String, message: String },
}

impl From<BgaError> for CliError {
    fn from(e: BgaError) -> Self {
        CliError::Domain(e)
    }
}

impl CliError {
    fn to_json(&self) -> Value {
        match self {
            CliError::Domain(e) => json!({"error": {"code": e.code(), "message": e.to_string()}}),
            CliError::Io { path, message } => json!({
                "error": {"code": "IoError", "message": format!("{path}: {message}")}
            }),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Runs one invocation. `args` excludes the program name.
pub fn run(args: &[String], stdin: &mut dyn Read) -> CliOutput {
    let argv = std::iter::once("bga".to_string()).chain(args.iter().cloned());
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = if e.use_stderr() { 2 } else { 0 };
            let (stdout, stderr) = if code == 0 { (text, String::new()) } else { (String::new(), text) };
            return CliOutput { stdout, stderr, exit_code: code };
        }
    };
    match execute(cli, stdin) {
        Ok(stdout) => CliOutput {
            stdout,
            stderr: String::new(),
            exit_code: 0,
        },
        Err(e) => CliOutput {
            stdout: String::new(),
            stderr: format!("{}\n", pretty(&e.to_json())),
            exit_code: 1,
        },
    }
}

fn execute(cli: Cli, stdin: &mut dyn Read) -> CliResult<String> {
    let format = cli.format;
    match cli.command {
        Command::Estimate { data, crts } => {
            let ds = load_dataset(&data, stdin)?;
            let model = fit_cobb_douglas(&ds, crts)?;
            Ok(match format {
                Format::Json => json_out(&json!({"model": model, "rts": classify_rts(&model)})),
                Format::Csv => model_csv(&model),
            })
        }
        Command::Decompose(args) => {
            let ds = load_dataset(&args.data, stdin)?;
            let model = match &args.model {
                Some(path) => {
                    let mut m: ProductionModel = serde_json::from_str(&read_source(path, stdin)?)
                        .map_err(BgaError::from)?;
                    m.validate()?;
                    m
                }
                None => fit_cobb_douglas(&ds, true)?,
            };
            decompose_periods(&ds, &model, format)
        }
        Command::Target(t) => target(t, format),
        Command::Plan { config, out } => {
            let text = read_source(&config, stdin)?;
            let cfg = PlanConfig::from_json(&text)?;
            let base_dir = if is_stdin(&config) {
                PathBuf::from(".")
            } else {
                config.parent().map(Path::to_path_buf).unwrap_or_default()
            };
            let data_path = base_dir.join(&cfg.dataset_path);
            let ds = read_dataset(&read_file(&data_path)?)?;
            let plan = cfg.plan(&ds)?;
            if let Some(dir) = out {
                fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
                for (name, body) in [
                    ("plan.csv", plan_csv(&plan)),
                    ("plan.json", format!("{}\n", plan_json(&plan))),
                    ("charts.json", format!("{}\n", charts_json(&plan_charts(&plan)))),
                ] {
                    let path = dir.join(name);
                    fs::write(&path, body).map_err(|e| io_err(&path, e))?;
                }
            }
            Ok(match format {
                Format::Json => format!("{}\n", plan_json(&plan)),
                Format::Csv => plan_csv(&plan),
            })
        }
        Command::Evaluate { plan, realized } => {
            let plan = read_plan_json(&read_source(&plan, stdin)?)?;
            let ds = load_dataset(&realized, stdin)?;
            let evals = evaluate_plan(&plan, &ds)?;
            Ok(match format {
                Format::Json => json_out(&serde_json::to_value(&evals).expect("serializes")),
                Format::Csv => evaluations_csv(&evals),
            })
        }
        Command::Serve { port, store } => {
            let store = std::env::var_os(STORE_ENV)
                .map(PathBuf::from)
                .or(store)
                .unwrap_or_else(|| PathBuf::from("bga-store"));
            bga_service::server::serve(port, &store).map_err(|e| io_err(&store, e))?;
            Ok(String::new())
        }
    }
}

fn target(cmd: TargetCommand, format: Format) -> CliResult<String> {
    let (fields, values): (Vec<&str>, Vec<Value>) = match cmd {
        TargetCommand::Multiple { m, rate } => {
            let exact = years_to_multiple_exact(m, rate)?;
            let mut pairs = vec![("multiple", json!(m)), ("rate", json!(rate)), ("years_exact", json!(exact))];
            // The rule of 70 is a doubling-time rule.
            if m == 2.0 {
                pairs.push(("years_rule70", json!(years_to_multiple_rule70(rate * 100.0)?)));
            }
            pairs.into_iter().unzip()
        }
        TargetCommand::Catchup {
            follower,
            leader,
            leader_rate,
            follower_rate,
            horizon,
        } => {
            let problem = CatchupProblem::new(follower, leader, leader_rate);
            match (follower_rate, horizon) {
                (Some(fr), _) => {
                    let years = catchup_horizon(&problem.with_follower_rate(fr))?;
                    (vec!["horizon_years"], vec![json!(years)])
                }
                (None, Some(n)) => (vec!["required_rate"], vec![json!(required_rate(&problem, n)?)]),
                (None, None) => unreachable!("clap requires one of the two"),
            }
        }
    };
    Ok(match format {
        Format::Json => {
            let obj: serde_json::Map<String, Value> =
                fields.iter().map(|f| f.to_string()).zip(values).collect();
            json_out(&Value::Object(obj))
        }
        Format::Csv => {
            let cells: Vec<String> = values
                .iter()
                .map(|v| v.as_f64().map(fmt_num).unwrap_or_default())
                .collect();
            format!("{}\n{}\n", fields.join(","), cells.join(","))
        }
    })
}

fn decompose_periods(ds: &TimeSeriesDataset, model: &ProductionModel, format: Format) -> CliResult<String> {
    if ds.len() < 2 {
        return Err(BgaError::InsufficientObservations { needed: 2, got: ds.len() }.into());
    }
    let mut results = Vec::with_capacity(ds.len() - 1);
    for pair in ds.observations.windows(2) {
        let rates = growth_between(&pair[0], &pair[1])?;
        results.push((pair[0].period.clone(), pair[1].period.clone(), decompose(&rates, &model.elasticities)?));
    }
    Ok(match format {
        Format::Json => {
            let arr: Vec<Value> = results
                .iter()
                .map(|(from, to, d)| json!({"from": from, "to": to, "decomposition": d}))
                .collect();
            json_out(&Value::Array(arr))
        }
        Format::Csv => {
            let mut out = String::from("from,to,source,contribution_pp,share_pct\n");
            for (from, to, d) in &results {
                for line in decomposition_csv(d).lines().skip(1) {
                    out.push_str(&format!("{from},{to},{line}\n"));
                }
            }
            out
        }
    })
}

fn model_csv(model: &ProductionModel) -> String {
    let rts = classify_rts(model);
    let mut out = String::from("parameter,value\n");
    out.push_str(&format!("tfp,{}\n", fmt_num(model.tfp)));
    for (id, e) in &model.elasticities {
        out.push_str(&format!("elasticity:{id},{}\n", fmt_num(*e)));
    }
    out.push_str(&format!("elasticity_sum,{}\n", fmt_num(rts.elasticity_sum)));
    out.push_str(&format!("rts,{}\n", rts.label));
    out.push_str(&format!("residual_variance,{}\n", fmt_num(model.residual_variance)));
    out
}

fn evaluations_csv(evals: &[PlanEvaluation]) -> String {
    let mut out = String::from("year,period,planned_Y,realized_Y,output_gap%,remaining_required%\n");
    for e in evals {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.year,
            e.realized.period,
            fmt_num(e.planned.output),
            fmt_num(e.realized.output_level),
            fmt_pct(e.output_gap),
            e.remaining_required_rate.map(fmt_pct).unwrap_or_default(),
        ));
    }
    out
}

fn json_out(v: &Value) -> String {
    format!("{}\n", pretty(v))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("value serializes")
}

fn is_stdin(path: &Path) -> bool {
    path.as_os_str() == "-"
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn read_source(path: &Path, stdin: &mut dyn Read) -> CliResult<String> {
    if is_stdin(path) {
        let mut s = String::new();
        stdin.read_to_string(&mut s).map_err(|e| io_err(path, e))?;
        Ok(s)
    } else {
        read_file(path)
    }
}

fn load_dataset(path: &Path, stdin: &mut dyn Read) -> CliResult<TimeSeriesDataset> {
    Ok(read_dataset(&read_source(path, stdin)?)?)
}
