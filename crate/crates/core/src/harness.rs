//! Seeded Monte-Carlo runner for error-rate sweeps, with CSV output.
//!
//! Replication `r` of every grid point and algorithm uses
//! `RngStream::new(base_seed, r)`, so results depend only on the config and
//! never on how replications are scheduled across threads.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::algos::{ctb, explore, naive, uniform, AlgoResult};
use crate::env::{gaps, make_setting, true_labels, Problem, RngStream, Setting};
use crate::error::{Result, TbpError};

#[derive(Debug, Clone, PartialEq)]
pub enum SettingKind {
    S1,
    S2,
    S2Concave,
    /// Explicit means; `K` is their count and `delta` is unused.
    Custom(Vec<f64>),
}

impl SettingKind {
    pub fn name(&self) -> &'static str {
        match self {
            SettingKind::S1 => "1",
            SettingKind::S2 => "2",
            SettingKind::S2Concave => "2c",
            SettingKind::Custom(_) => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algo {
    Explore,
    Naive,
    Uniform,
    Ctb,
}

impl Algo {
    pub const ALL: [Algo; 4] = [Algo::Explore, Algo::Naive, Algo::Uniform, Algo::Ctb];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Explore => "explore",
            Algo::Naive => "naive",
            Algo::Uniform => "uniform",
            Algo::Ctb => "ctb",
        }
    }

    pub fn run(self, problem: &Problem, budget: u64, rng: &mut RngStream) -> Result<AlgoResult> {
        match self {
            Algo::Explore => explore(problem, budget, rng),
            Algo::Naive => naive(problem, budget, rng),
            Algo::Uniform => uniform(problem, budget, rng),
            Algo::Ctb => ctb(problem, budget, rng),
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = TbpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "explore" => Ok(Algo::Explore),
            "naive" => Ok(Algo::Naive),
            "uniform" => Ok(Algo::Uniform),
            "ctb" => Ok(Algo::Ctb),
            other => Err(TbpError::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    Delta,
    K,
}

impl FromStr for SweepParam {
    type Err = TbpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "delta" => Ok(SweepParam::Delta),
            "K" | "k" => Ok(SweepParam::K),
            other => Err(TbpError::Config(format!("cannot sweep over '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub grid: Vec<f64>,
}

impl Sweep {
    /// Parses `a:b:step` (inclusive, `a + i * step`) or a comma list.
    pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| TbpError::Config(format!("bad grid value '{s}'")))
        };
        let parts: Vec<&str> = spec.split(':').collect();
        match parts.as_slice() {
            [a, b, step] => {
                let (a, b, step) = (num(a)?, num(b)?, num(step)?);
                if !(step > 0.0) || !(b >= a) {
                    return Err(TbpError::Config(format!("bad grid range '{spec}'")));
                }
                let n = ((b - a) / step + 1e-9).floor() as usize;
                Ok((0..=n).map(|i| a + i as f64 * step).collect())
            }
            [_] => spec.split(',').map(num).collect(),
            _ => Err(TbpError::Config(format!("bad grid '{spec}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub setting: SettingKind,
    pub algos: Vec<Algo>,
    pub k: usize,
    pub t: u64,
    pub delta: f64,
    pub sigma: f64,
    pub tau: f64,
    pub reps: u64,
    pub base_seed: u64,
    pub sweep: Option<Sweep>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            setting: SettingKind::S1,
            algos: vec![Algo::Explore],
            k: 100,
            t: 1000,
            delta: 0.2,
            sigma: 1.0,
            tau: 0.0,
            reps: 1000,
            base_seed: 0,
            sweep: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(TbpError::Config(m));
        if self.reps < 1 {
            return bad("reps must be >= 1".into());
        }
        if self.algos.is_empty() {
            return bad("at least one algorithm is required".into());
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return bad(format!("sigma must be >= 0, got {}", self.sigma));
        }
        if !self.tau.is_finite() {
            return bad("tau must be finite".into());
        }
        if let SettingKind::Custom(means) = &self.setting {
            if means.is_empty() {
                return bad("custom setting needs at least one mean".into());
            }
            if self.sweep.is_some() {
                return bad("custom settings cannot be swept".into());
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.grid.is_empty() {
                return bad("sweep grid is empty".into());
            }
            if sweep.grid.windows(2).any(|w| !(w[0] < w[1])) {
                return bad("sweep grid must be strictly increasing".into());
            }
            if sweep.param == SweepParam::K
                && sweep.grid.iter().any(|v| *v < 1.0 || v.fract() != 0.0)
            {
                return bad("K grid values must be positive integers".into());
            }
        }
        Ok(())
    }

    /// `(K, delta)` of every grid point, in order.
    pub fn points(&self) -> Vec<(usize, f64)> {
        let k = match &self.setting {
            SettingKind::Custom(means) => means.len(),
            _ => self.k,
        };
        match &self.sweep {
            None => vec![(k, self.delta)],
            Some(Sweep { param: SweepParam::Delta, grid }) => {
                grid.iter().map(|d| (k, *d)).collect()
            }
            Some(Sweep { param: SweepParam::K, grid }) => {
                grid.iter().map(|v| (*v as usize, self.delta)).collect()
            }
        }
    }

    pub fn problem_at(&self, k: usize, delta: f64) -> Result<Problem> {
        let setting = match &self.setting {
            SettingKind::Custom(means) => {
                return Problem::new(means.clone(), self.sigma, self.tau)
            }
            SettingKind::S1 => Setting::S1,
            SettingKind::S2 => Setting::S2,
            SettingKind::S2Concave => Setting::S2Concave,
        };
        make_setting(setting, k, delta, self.tau)?.with_sigma(self.sigma)
    }

    /// Flat `key=value` rendering, comma separated.
    pub fn describe(&self) -> String {
        let mut s = format!(
            "setting={} algo={} K={} T={} delta={} sigma={} tau={} reps={} seed={}",
            self.setting.name(),
            self.algos.iter().map(|a| a.name()).collect::<Vec<_>>().join(","),
            self.k,
            self.t,
            self.delta,
            self.sigma,
            self.tau,
            self.reps,
            self.base_seed
        );
        if let SettingKind::Custom(means) = &self.setting {
            let m: Vec<String> = means.iter().map(|m| m.to_string()).collect();
            s.push_str(&format!(" means={}", m.join(",")));
        }
        if let Some(sw) = &self.sweep {
            let g: Vec<String> = sw.grid.iter().map(|v| v.to_string()).collect();
            let p = match sw.param {
                SweepParam::Delta => "delta",
                SweepParam::K => "K",
            };
            s.push_str(&format!(" param={p} grid={}", g.join(",")));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub error: bool,
    /// Largest gap among mislabeled arms, 0 when every label is right.
    pub regret: f64,
}

/// One replication at the config's base point.
pub fn run_trial(config: &ExperimentConfig, algo: Algo, rep_index: u64) -> Result<TrialOutcome> {
    let (k, delta) = match &config.setting {
        SettingKind::Custom(m) => (m.len(), config.delta),
        _ => (config.k, config.delta),
    };
    let problem = config.problem_at(k, delta)?;
    trial_on(&problem, algo, config.t, config.base_seed, rep_index)
}

pub fn trial_on(
    problem: &Problem,
    algo: Algo,
    budget: u64,
    seed: u64,
    rep_index: u64,
) -> Result<TrialOutcome> {
    let mut rng = RngStream::new(seed, rep_index);
    let res = algo.run(problem, budget, &mut rng)?;
    Ok(score(problem, &res))
}

fn score(problem: &Problem, res: &AlgoResult) -> TrialOutcome {
    let truth = true_labels(problem);
    let g = gaps(problem);
    let wrong = res.q_hat.mismatches(&truth);
    let regret = wrong.iter().map(|j| g.gaps[j - 1]).fold(0.0, f64::max);
    TrialOutcome {
        error: !wrong.is_empty(),
        regret,
    }
}

pub const WILSON_Z: f64 = 1.959963984540054;

/// 95% Wilson score interval for `errors` successes in `reps` trials.
pub fn wilson(errors: u64, reps: u64) -> (f64, f64) {
    let n = reps as f64;
    let p = errors as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = (center - half).clamp(0.0, 1.0).min(p);
    let hi = (center + half).clamp(0.0, 1.0).max(p);
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub errors: u64,
    pub reps: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_simple_regret: f64,
}

impl ErrorEstimate {
    pub fn from_outcomes(outcomes: &[TrialOutcome]) -> Self {
        let reps = outcomes.len() as u64;
        let errors = outcomes.iter().filter(|o| o.error).count() as u64;
        let regret_sum: f64 = outcomes.iter().map(|o| o.regret).sum();
        let (ci_low, ci_high) = wilson(errors, reps);
        ErrorEstimate {
            errors,
            reps,
            rate: errors as f64 / reps as f64,
            ci_low,
            ci_high,
            mean_simple_regret: regret_sum / reps as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub setting: String,
    pub algo: Algo,
    pub k: usize,
    pub t: u64,
    pub delta: f64,
    pub sigma: f64,
    pub tau: f64,
    pub reps: u64,
    pub seed: u64,
    /// `None` when the budget was infeasible for this point.
    pub estimate: Option<ErrorEstimate>,
}

impl ResultRow {
    pub fn skipped(&self) -> bool {
        self.estimate.is_none()
    }
}

/// Runs every grid point and algorithm. Rows are grid-major, algorithm-minor.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for (k, delta) in config.points() {
        let problem = config.problem_at(k, delta)?;
        for &algo in &config.algos {
            let estimate = estimate_point(&problem, algo, config)?;
            rows.push(ResultRow {
                setting: config.setting.name().to_string(),
                algo,
                k: problem.k(),
                t: config.t,
                delta,
                sigma: config.sigma,
                tau: config.tau,
                reps: config.reps,
                seed: config.base_seed,
                estimate,
            });
        }
    }
    Ok(rows)
}

fn estimate_point(
    problem: &Problem,
    algo: Algo,
    config: &ExperimentConfig,
) -> Result<Option<ErrorEstimate>> {
    let (t, seed) = (config.t, config.base_seed);
    let first = match trial_on(problem, algo, t, seed, 0) {
        Err(TbpError::BudgetTooSmall(_)) => return Ok(None),
        other => other?,
    };
    let rest: Vec<Result<TrialOutcome>> = (1..config.reps)
        .into_par_iter()
        .map(|rep| trial_on(problem, algo, t, seed, rep))
        .collect();
    let mut outcomes = Vec::with_capacity(config.reps as usize);
    outcomes.push(first);
    for r in rest {
        outcomes.push(r?);
    }
    Ok(Some(ErrorEstimate::from_outcomes(&outcomes)))
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool
/// when `threads` is `None`.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| TbpError::Config(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub const CSV_HEADER: [&str; 15] = [
    "setting",
    "algo",
    "K",
    "T",
    "delta",
    "sigma",
    "tau",
    "reps",
    "errors",
    "error_rate",
    "ci_low",
    "ci_high",
    "mean_simple_regret",
    "seed",
    "skipped",
];

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn write_rows<W: std::io::Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let (errors, rate, lo, hi, regret) = match &r.estimate {
            Some(e) => (
                e.errors.to_string(),
                f6(e.rate),
                f6(e.ci_low),
                f6(e.ci_high),
                f6(e.mean_simple_regret),
            ),
            None => Default::default(),
        };
        w.write_record([
            r.setting.clone(),
            r.algo.name().to_string(),
            r.k.to_string(),
            r.t.to_string(),
            f6(r.delta),
            f6(r.sigma),
            f6(r.tau),
            r.reps.to_string(),
            errors,
            rate,
            lo,
            hi,
            regret,
            r.seed.to_string(),
            u8::from(r.skipped()).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_rows(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(TbpError::Precondition("no rows to write".into()));
    }
    let file = std::fs::File::create(path)?;
    write_rows(rows, std::io::BufWriter::new(file))
}
