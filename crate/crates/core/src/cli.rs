//! `tbp` command line: `run`, `sweep`, `bounds`, `tree` and `trace`.
//!
//! Exit codes are 0 on success, 1 for usage or configuration errors and 2 for
//! runtime failures. `--config <file>` reads flat `key=value` lines whose keys
//! are flag names; they are expanded ahead of the command line, so explicit
//! flags win.

use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bounds::{
    concave_lower, concave_upper, monotone_lower, monotone_upper, unstructured_bounds,
    BoundReport,
};
use crate::env::{GapVector, RngStream};
use crate::error::{Result, TbpError};
use crate::harness::{
    run_experiment, to_csv_string, with_threads, write_csv, Algo, ExperimentConfig, SettingKind,
    Sweep, SweepParam,
};
use crate::tree;

#[derive(Debug, Parser)]
#[command(name = "tbp", version, about = "Thresholding bandits on structured arm sequences")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate error rates at a single point.
    Run(RunArgs),
    /// Estimate error rates over a grid of `delta` or `K`.
    Sweep(SweepArgs),
    /// Evaluate the closed-form error bounds.
    Bounds(BoundsArgs),
    /// Print the search tree over K arms in preorder.
    Tree(TreeArgs),
    /// Print the walk of one replication.
    Trace(TraceArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Flat key=value file with defaults for any flag
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Instance family: 1, 2, 2c (concave) or custom
    #[arg(long, default_value = "1")]
    setting: String,
    /// Comma separated means for --setting custom
    #[arg(long, allow_hyphen_values = true)]
    means: Option<String>,
    /// Comma separated algorithms: explore, naive, uniform, ctb
    #[arg(long, default_value = "explore")]
    algo: String,
    /// Number of arms
    #[arg(long = "K", default_value_t = 100)]
    k: usize,
    /// Total sampling budget
    #[arg(long = "T", default_value_t = 1000)]
    t: u64,
    /// Gap parameter of the setting
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    /// Noise standard deviation
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Threshold
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    tau: f64,
    /// Seed shared by all replications
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Monte-Carlo replications per point
    #[arg(long, default_value_t = 1000)]
    reps: u64,
    /// CSV output path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (all cores by default)
    #[arg(long, env = "TBP_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Swept parameter: delta or K
    #[arg(long)]
    param: String,
    /// Grid as start:stop:step or a comma list
    #[arg(long)]
    grid: String,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// monotone, concave or unstructured
    #[arg(long, default_value = "monotone")]
    shape: String,
    /// lower, upper or both
    #[arg(long, default_value = "both")]
    side: String,
    #[arg(long = "delta-min")]
    delta_min: Option<f64>,
    /// Comma separated gaps (unstructured bounds)
    #[arg(long)]
    gaps: Option<String>,
    #[arg(long = "T", default_value_t = 1000)]
    t: u64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long = "K")]
    k: Option<usize>,
}

#[derive(Debug, Args)]
struct TreeArgs {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long = "K")]
    k: usize,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Replication index whose stream drives the walk
    #[arg(long, default_value_t = 0)]
    rep: u64,
}

/// Parses `argv` (program name first) and runs the command.
pub fn dispatch(argv: &[String]) -> i32 {
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                1
            } else {
                2
            }
        }
    }
}

/// Inserts the flags from `--config <path>` right after the verb.
fn expand_config(argv: &[String]) -> Result<Vec<String>> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else {
        return Ok(argv.to_vec());
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| TbpError::Config(format!("cannot read config '{path}': {e}")))?;
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            TbpError::Config(format!("{path}:{}: expected key=value", n + 1))
        })?;
        let key = key.trim().trim_start_matches("--");
        if key == "config" {
            return Err(TbpError::Config("config files cannot nest".into()));
        }
        extra.push(format!("--{key}={}", value.trim()));
    }
    let split = argv.len().min(2);
    let mut out = argv[..split].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[split..]);
    Ok(out)
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run(a) => {
            let cfg = experiment_config(&a.common, a.reps, None)?;
            run_and_emit(&cfg, a.out.as_deref(), a.threads)
        }
        Command::Sweep(a) => {
            let sweep = Sweep {
                param: a.param.parse::<SweepParam>()?,
                grid: Sweep::parse_grid(&a.grid)?,
            };
            let cfg = experiment_config(&a.run.common, a.run.reps, Some(sweep))?;
            run_and_emit(&cfg, a.run.out.as_deref(), a.run.threads)
        }
        Command::Bounds(a) => bounds(&a),
        Command::Tree(a) => {
            print!("{}", tree::dump(a.k)?);
            Ok(())
        }
        Command::Trace(a) => {
            let cfg = experiment_config(&a.common, 1, None)?;
            let &[algo] = cfg.algos.as_slice() else {
                return Err(TbpError::Config("trace takes exactly one algorithm".into()));
            };
            let (k, delta) = cfg.points()[0];
            let problem = cfg.problem_at(k, delta)?;
            let mut rng = RngStream::new(cfg.base_seed, a.rep);
            let res = algo.run(&problem, cfg.t, &mut rng)?;
            let mut out = std::io::stdout().lock();
            writeln!(out, "# config {}", cfg.describe())?;
            match &res.trajectory {
                Some(tr) => write!(out, "{}", tr.dump())?,
                None => writeln!(out, "# {algo} has no walk")?,
            }
            let labels: Vec<String> = res.q_hat.labels().iter().map(|l| l.to_string()).collect();
            writeln!(out, "# q_hat {}", labels.join(","))?;
            Ok(())
        }
    }
}

fn experiment_config(
    c: &CommonArgs,
    reps: u64,
    sweep: Option<Sweep>,
) -> Result<ExperimentConfig> {
    let setting = match c.setting.as_str() {
        "1" => SettingKind::S1,
        "2" => SettingKind::S2,
        "2c" => SettingKind::S2Concave,
        "custom" => {
            let means = c
                .means
                .as_deref()
                .ok_or_else(|| TbpError::Config("--setting custom needs --means".into()))?;
            SettingKind::Custom(parse_list(means)?)
        }
        other => return Err(TbpError::Config(format!("unknown setting '{other}'"))),
    };
    if c.means.is_some() && !matches!(setting, SettingKind::Custom(_)) {
        return Err(TbpError::Config("--means needs --setting custom".into()));
    }
    let algos = c
        .algo
        .split(',')
        .map(str::parse::<Algo>)
        .collect::<Result<Vec<_>>>()?;
    let cfg = ExperimentConfig {
        setting,
        algos,
        k: c.k,
        t: c.t,
        delta: c.delta,
        sigma: c.sigma,
        tau: c.tau,
        reps,
        base_seed: c.seed,
        sweep,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| TbpError::Config(format!("bad number '{v}'")))
        })
        .collect()
}

fn run_and_emit(
    cfg: &ExperimentConfig,
    out: Option<&std::path::Path>,
    threads: Option<usize>,
) -> Result<()> {
    let rows = with_threads(threads, || run_experiment(cfg))??;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "# config {}", cfg.describe())?;
    match out {
        Some(path) => write_csv(&rows, path)?,
        None => write!(stdout, "{}", to_csv_string(&rows)?)?,
    }
    Ok(())
}

fn bounds(a: &BoundsArgs) -> Result<()> {
    let sides: &[bool] = match a.side.as_str() {
        "lower" => &[true],
        "upper" => &[false],
        "both" => &[true, false],
        other => return Err(TbpError::Config(format!("unknown side '{other}'"))),
    };
    let need_k = || {
        a.k.ok_or_else(|| TbpError::Config("upper bounds need --K".into()))
    };
    let mut reports: Vec<BoundReport> = Vec::new();
    match a.shape.as_str() {
        "monotone" | "concave" => {
            let dmin = a
                .delta_min
                .ok_or_else(|| TbpError::Config("--delta-min is required".into()))?;
            let concave = a.shape == "concave";
            for &lower in sides {
                reports.push(match (concave, lower) {
                    (false, true) => monotone_lower(dmin, a.t, a.sigma)?,
                    (false, false) => monotone_upper(dmin, a.t, a.sigma, need_k()?)?,
                    (true, true) => concave_lower(dmin, a.t, a.sigma)?,
                    (true, false) => concave_upper(dmin, a.t, a.sigma, need_k()?)?,
                });
            }
        }
        "unstructured" => {
            let g = a
                .gaps
                .as_deref()
                .ok_or_else(|| TbpError::Config("unstructured bounds need --gaps".into()))?;
            let gaps = GapVector::new(parse_list(g)?)?;
            let k = a.k.unwrap_or(gaps.len());
            let (lo, hi) = unstructured_bounds(&gaps, a.t, a.sigma, k)?;
            for &lower in sides {
                reports.push(if lower { lo } else { hi });
            }
        }
        other => return Err(TbpError::Config(format!("unknown shape '{other}'"))),
    }
    let mut out = std::io::stdout().lock();
    writeln!(out, "shape,side,exponent,value,clamped,regime_ok")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{:.6},{:.6e},{:.6e},{}",
            a.shape,
            r.side,
            r.exponent,
            r.value,
            r.clamped,
            u8::from(r.regime_ok)
        )?;
    }
    Ok(())
}
