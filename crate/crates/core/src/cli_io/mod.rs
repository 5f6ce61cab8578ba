//! Command-line driver: argument and config resolution, and the
//! `calibrate`, `monitor`, `arl`, `pettitt`, `compare` and `simulate`
//! commands.
//!
//! Values come from flags first, then the config file (`--config` or the
//! `MWCUSUM_CONFIG` environment variable), then built-in defaults.

pub mod config;
pub mod files;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};

use crate::baseline_charts::{
    bakir_reynolds_trace, signed_rank_sum, zhou_smw_stat, ExceedanceState, SequentialRankState,
    TiePolicy,
};
use crate::chart_engine::{ChartConfig, ChartState, Side, Status, DEFAULT_K, DEFAULT_M0};
use crate::error::{Error, Result};
use crate::mc_harness::{
    calibrate, estimate_arl, generate_sequence, standard_n_grid, pettitt_critical, with_workers,
    CalibrationSpec, Dist, RunLengthConvention, ShiftScenario,
};
use crate::rank_core::{pettitt, ObservationSequence, PettittResult};

use config::{KvConfig, List, NGrid};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    /// I/O failures and other unexpected errors.
    pub const FAILURE: i32 = 1;
    /// Invalid flags, config values, or domain arguments.
    pub const VALIDATION: i32 = 2;
    /// Unparsable or non-finite input data, or ties under the strict policy.
    pub const INGESTION: i32 = 3;
    pub const CALIBRATION_ABORT: i32 = 4;
    pub const ESTIMATION: i32 = 5;
    /// `monitor` detected an out-of-control signal.
    pub const SIGNAL: i32 = 10;
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Domain(_) | Error::Config(_) | Error::Lookup { .. } => exit::VALIDATION,
        Error::Ingestion(_) | Error::Tie(_) => exit::INGESTION,
        Error::Calibration(_) => exit::CALIBRATION_ABORT,
        Error::Estimation(_) => exit::ESTIMATION,
        Error::State(_) | Error::Io(_) | Error::Csv(_) => exit::FAILURE,
    }
}

#[derive(Debug, Parser)]
#[command(name = "mwcusum", version, about = "Nonparametric Mann-Whitney CUSUM control chart")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Flat `key = value` config file; flags override its values.
    #[arg(long, global = true, env = "MWCUSUM_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for simulations (results do not depend on it).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Conditional false-alarm rate(s); `calibrate` accepts a comma list.
    #[arg(long, global = true)]
    pub alpha: Option<List<f64>>,
    /// Reference sample size.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Look-back into the reference sample.
    #[arg(long, global = true)]
    pub m0: Option<usize>,
    /// Reference value subtracted at each CUSUM step.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub k: Option<f64>,
    /// `minus` reacts to upward shifts, `plus` to downward shifts.
    #[arg(long, global = true)]
    pub side: Option<Side>,
    /// Keep monitoring after a signal.
    #[arg(long = "continue", global = true)]
    pub keep_going: bool,
    #[arg(long, global = true)]
    pub tie_policy: Option<TiePolicy>,
    /// Increase log verbosity.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate decision values by simulation.
    Calibrate {
        #[arg(long)]
        sequences: Option<u64>,
        /// Sequence length including the reference sample.
        #[arg(long)]
        length: Option<usize>,
        /// `standard`, an inclusive range `a..b`, or a comma list.
        #[arg(long)]
        n_grid: Option<NGrid>,
        #[arg(long)]
        dist: Option<Dist>,
        #[arg(long)]
        min_survivors: Option<u64>,
    },
    /// Monitor a data stream; the first m values are the reference sample.
    Monitor {
        #[arg(long)]
        table: Option<PathBuf>,
        /// Data file, or `-` for standard input.
        #[arg(long)]
        data: Option<PathBuf>,
        /// 1-based CSV column to read.
        #[arg(long)]
        column: Option<usize>,
    },
    /// Estimate run lengths over a grid of shifts and change-points.
    Arl {
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        deltas: Option<List<f64>>,
        #[arg(long)]
        taus: Option<List<usize>>,
        #[arg(long)]
        replications: Option<u64>,
        #[arg(long)]
        max_n: Option<usize>,
        #[arg(long)]
        convention: Option<RunLengthConvention>,
        #[arg(long)]
        dist: Option<Dist>,
        #[arg(long, allow_negative_numbers = true)]
        mu0: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Pettitt change-point test with a simulated critical value.
    Pettitt {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        column: Option<usize>,
        /// Simulated sequences for the critical value.
        #[arg(long)]
        sequences: Option<u64>,
    },
    /// Comparator statistics as long-format CSV.
    Compare {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        column: Option<usize>,
        /// Group size for signed ranks.
        #[arg(long)]
        group_size: Option<usize>,
        /// Reference value of the signed-rank CUSUM.
        #[arg(long)]
        br_k: Option<f64>,
        /// Reference value of the sequential-rank CUSUM.
        #[arg(long)]
        mcdonald_k: Option<f64>,
        /// In-control mean; the reference-sample mean when omitted.
        #[arg(long, allow_negative_numbers = true)]
        mu: Option<f64>,
    },
    /// Write one synthetic change-point sequence.
    Simulate {
        /// Number of future observations.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        tau: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        delta: Option<f64>,
        /// Replication index selecting the random stream.
        #[arg(long)]
        rep: Option<u64>,
        #[arg(long)]
        dist: Option<Dist>,
        #[arg(long, allow_negative_numbers = true)]
        mu0: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
    },
}

/// Flag, then config file, then default.
struct Resolver {
    cfg: KvConfig,
}

type Check<T> = fn(&T) -> std::result::Result<(), String>;

impl Resolver {
    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, check: Check<T>) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => {
                check(&v).map_err(|msg| Error::config(format!("flag --{key}: {msg}")))?;
                Ok(Some(v))
            }
            None => self.cfg.get_checked(key, check),
        }
    }

    fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T, check: Check<T>) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.pick(flag, key, check)?.unwrap_or(default))
    }

    fn required<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.pick(flag, key, any)?
            .ok_or_else(|| Error::config(format!("missing --{key} (flag or config key)")))
    }
}

fn any<T>(_: &T) -> std::result::Result<(), String> {
    Ok(())
}

fn positive(v: &f64) -> std::result::Result<(), String> {
    if *v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn non_negative(v: &f64) -> std::result::Result<(), String> {
    if *v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{v} must be non-negative"))
    }
}

fn finite(v: &f64) -> std::result::Result<(), String> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(format!("{v} must be finite"))
    }
}

fn at_least_one_usize(v: &usize) -> std::result::Result<(), String> {
    if *v >= 1 {
        Ok(())
    } else {
        Err("must be at least 1".into())
    }
}

fn at_least_one_u64(v: &u64) -> std::result::Result<(), String> {
    if *v >= 1 {
        Ok(())
    } else {
        Err("must be at least 1".into())
    }
}

fn alphas(v: &List<f64>) -> std::result::Result<(), String> {
    if v.0.is_empty() {
        return Err("empty alpha list".into());
    }
    match v.0.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        Some(a) => Err(format!("alpha {a} must lie in (0, 1)")),
        None => Ok(()),
    }
}

fn non_empty<T>(v: &List<T>) -> std::result::Result<(), String> {
    if v.0.is_empty() {
        Err("empty list".into())
    } else {
        Ok(())
    }
}

fn reference_size(v: &usize) -> std::result::Result<(), String> {
    if *v >= crate::chart_engine::MIN_REFERENCE {
        Ok(())
    } else {
        Err(format!(
            "m={v} is below the supported minimum {}",
            crate::chart_engine::MIN_REFERENCE
        ))
    }
}

/// Chart settings shared by several commands.
struct ChartSettings {
    m: usize,
    m0: usize,
    k: f64,
    side: Side,
    alphas: Vec<f64>,
}

impl ChartSettings {
    fn resolve(cli: &Cli, r: &Resolver, default_alphas: Vec<f64>) -> Result<Self> {
        let m = r.or(cli.m, "m", 10, reference_size)?;
        let m0 = r.or(cli.m0, "m0", DEFAULT_M0, any)?;
        if m0 >= m {
            return Err(Error::config(format!("m0={m0} must be smaller than m={m}")));
        }
        Ok(Self {
            m,
            m0,
            k: r.or(cli.k, "k", DEFAULT_K, positive)?,
            side: r.or(cli.side, "side", Side::default(), any)?,
            alphas: r.or(cli.alpha.clone(), "alpha", List(default_alphas), alphas)?.0,
        })
    }

    fn single(&self) -> Result<ChartConfig> {
        if self.alphas.len() != 1 {
            return Err(Error::config("this command takes a single --alpha"));
        }
        ChartConfig::new(self.m, self.m0, self.k, self.alphas[0], self.side)
    }
}

/// Result of running a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    Signal,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Done => exit::SUCCESS,
            Outcome::Signal => exit::SIGNAL,
        }
    }
}

fn open_out<'a>(path: Option<&Path>, fallback: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(fallback),
    })
}

fn open_data(path: &Path) -> Result<Box<dyn BufRead>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(BufReader::new(io::stdin())))
    } else {
        let f = File::open(path)
            .map_err(|e| Error::Ingestion(format!("cannot open {}: {e}", path.display())))?;
        Ok(Box::new(BufReader::new(f)))
    }
}

fn load_table(path: &Path) -> Result<crate::chart_engine::DecisionValueTable> {
    let f = File::open(path)
        .map_err(|e| Error::config(format!("cannot open table {}: {e}", path.display())))?;
    files::read_table(BufReader::new(f))
}

/// Runs a parsed command line. Summaries go to `stdout`, warnings to `stderr`.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<Outcome> {
    let cfg = match &cli.config {
        Some(p) => KvConfig::load(p)?,
        None => KvConfig::empty(),
    };
    let r = Resolver { cfg };
    let seed = r.or(cli.seed, "seed", 1, any)?;
    let workers = r.pick(cli.workers, "workers", at_least_one_usize)?;
    let out: Option<PathBuf> = r.pick(cli.out.clone(), "out", any)?;
    let out = out.as_deref();

    match &cli.command {
        Command::Calibrate {
            sequences,
            length,
            n_grid,
            dist,
            min_survivors,
        } => {
            let chart = ChartSettings::resolve(
                cli,
                &r,
                crate::chart_engine::STANDARD_ALPHAS.iter().map(|a| a.0).collect(),
            )?;
            let length = r.or(*length, "length", 250, at_least_one_usize)?;
            let grid = r.or(n_grid.clone(), "n-grid", NGrid(None), any)?;
            let n_grid = grid.0.unwrap_or_else(|| {
                standard_n_grid()
                    .into_iter()
                    .filter(|&n| n + chart.m <= length)
                    .collect()
            });
            let spec = CalibrationSpec {
                m: chart.m,
                m0: chart.m0,
                k: chart.k,
                side: chart.side,
                alphas: chart.alphas,
                n_grid,
                sequences: r.or(*sequences, "sequences", 200_000, at_least_one_u64)?,
                length,
                seed,
                dist: r.or(*dist, "dist", Dist::Normal, any)?,
                min_survivors: r.or(*min_survivors, "min-survivors", 1000, any)?,
                warn_expected_exceedances: 100.0,
            };
            spec.validate()?;
            cmd_calibrate(&spec, workers, out, stdout)
        }
        Command::Monitor {
            table,
            data,
            column,
        } => {
            let chart = ChartSettings::resolve(cli, &r, vec![0.005])?.single()?;
            let table = load_table(&r.required(table.clone(), "table")?)?;
            let data = r.or(data.clone(), "data", PathBuf::from("-"), any)?;
            let column = r.pick(*column, "column", at_least_one_usize)?;
            let keep_going = cli.keep_going || r.or(None, "continue", false, any)?;
            let policy = r.or(cli.tie_policy, "tie-policy", TiePolicy::Strict, any)?;
            let input = open_data(&data)?;
            let mut sink = open_out(out, stdout)?;
            let outcome = cmd_monitor(
                &chart,
                &table,
                input,
                column,
                keep_going,
                policy,
                &mut sink,
                stderr,
            )?;
            sink.flush()?;
            Ok(outcome)
        }
        Command::Arl {
            table,
            deltas,
            taus,
            replications,
            max_n,
            convention,
            dist,
            mu0,
            sigma,
        } => {
            let chart = ChartSettings::resolve(cli, &r, vec![0.005])?.single()?;
            let table = load_table(&r.required(table.clone(), "table")?)?;
            let deltas = r.or(deltas.clone(), "deltas", List(vec![0.0]), non_empty)?.0;
            let taus = r.or(taus.clone(), "taus", List(vec![0]), non_empty)?.0;
            let base = ShiftScenario {
                dist: r.or(*dist, "dist", Dist::Normal, any)?,
                mu0: r.or(*mu0, "mu0", 0.0, finite)?,
                sigma: r.or(*sigma, "sigma", 1.0, positive)?,
                tau: 0,
                delta: 0.0,
                m: chart.m,
                max_n: r.or(*max_n, "max-n", 2000, at_least_one_usize)?,
                replications: r.or(*replications, "replications", 10_000, at_least_one_u64)?,
                seed,
            };
            let convention = r.or(*convention, "convention", RunLengthConvention::default(), any)?;
            let scenarios = grid_scenarios(&base, &taus, &deltas)?;
            cmd_arl(&scenarios, &table, &chart, convention, workers, out, stdout)
        }
        Command::Pettitt {
            data,
            column,
            sequences,
        } => {
            let alpha = r.or(cli.alpha.clone(), "alpha", List(vec![0.05]), alphas)?.0;
            if alpha.len() != 1 {
                return Err(Error::config("pettitt takes a single --alpha"));
            }
            let sequences = r.or(*sequences, "sequences", 100_000, at_least_one_u64)?;
            let data = r.or(data.clone(), "data", PathBuf::from("-"), any)?;
            let column = r.pick(*column, "column", at_least_one_usize)?;
            let values = files::read_observations(open_data(&data)?, column)?;
            let test = with_workers(workers, || {
                PettittTest::new(values.len(), alpha[0], sequences, seed)
            })??;
            let decision = test.decide(&values)?;
            writeln!(stdout, "{decision}")?;
            Ok(Outcome::Done)
        }
        Command::Compare {
            data,
            column,
            group_size,
            br_k,
            mcdonald_k,
            mu,
        } => {
            let m = r.or(cli.m, "m", 10, at_least_one_usize)?;
            let settings = CompareSettings {
                m,
                group_size: r.or(*group_size, "group-size", 4, at_least_one_usize)?,
                br_k: r.or(*br_k, "br-k", 0.0, non_negative)?,
                mcdonald_k: r.or(*mcdonald_k, "mcdonald-k", 0.5, non_negative)?,
                mu: r.pick(*mu, "mu", finite)?,
                policy: r.or(cli.tie_policy, "tie-policy", TiePolicy::Strict, any)?,
            };
            let data = r.or(data.clone(), "data", PathBuf::from("-"), any)?;
            let column = r.pick(*column, "column", at_least_one_usize)?;
            let values = files::read_observations(open_data(&data)?, column)?;
            let mut sink = open_out(out, stdout)?;
            cmd_compare(&values, &settings, &mut sink)?;
            sink.flush()?;
            Ok(Outcome::Done)
        }
        Command::Simulate {
            n,
            tau,
            delta,
            rep,
            dist,
            mu0,
            sigma,
        } => {
            let m = r.or(cli.m, "m", 10, any)?;
            let rep = r.or(*rep, "rep", 0, any)?;
            let scn = ShiftScenario {
                dist: r.or(*dist, "dist", Dist::Normal, any)?,
                mu0: r.or(*mu0, "mu0", 0.0, finite)?,
                sigma: r.or(*sigma, "sigma", 1.0, positive)?,
                tau: r.or(*tau, "tau", 0, any)?,
                delta: r.or(*delta, "delta", 0.0, finite)?,
                m,
                max_n: r.or(*n, "n", 100, at_least_one_usize)?,
                replications: rep + 1,
                seed,
            };
            let seq = generate_sequence(&scn, rep)?;
            let mut sink = open_out(out, stdout)?;
            files::write_observations(seq.values(), &mut sink)?;
            Ok(Outcome::Done)
        }
    }
}

fn grid_scenarios(base: &ShiftScenario, taus: &[usize], deltas: &[f64]) -> Result<Vec<ShiftScenario>> {
    if taus.is_empty() || deltas.is_empty() {
        return Err(Error::config("the (delta, tau) grid is empty"));
    }
    let mut out = Vec::with_capacity(taus.len() * deltas.len());
    for &tau in taus {
        for &delta in deltas {
            let scn = base.with_shift(tau, delta);
            scn.validate()?;
            out.push(scn);
        }
    }
    Ok(out)
}

/// Calibrates, writes the table to `out` (or `stdout`), and prints the
/// survivor curve at the grid points plus any warnings.
pub fn cmd_calibrate(
    spec: &CalibrationSpec,
    workers: Option<usize>,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<Outcome> {
    let outcome = with_workers(workers, || calibrate(spec))??;
    match out {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p)?);
            files::write_table(&outcome.table, &mut f)?;
            f.flush()?;
        }
        None => files::write_table(&outcome.table, &mut *stdout)?,
    }
    writeln!(stdout, "# survivors entering step n")?;
    writeln!(stdout, "# alpha,n,survivors,h")?;
    for (alpha, curve) in &outcome.survivors {
        for &(n, survivors) in curve.iter().filter(|(n, _)| spec.n_grid.binary_search(n).is_ok()) {
            let h = outcome.table.lookup_h(spec.m, spec.m0, *alpha, n)?;
            writeln!(stdout, "# {alpha},{n},{survivors},{h}")?;
        }
    }
    for w in &outcome.warnings {
        writeln!(stdout, "# warning: {w}")?;
    }
    Ok(Outcome::Done)
}

/// Streams observations through the chart, one verdict line per future
/// observation: `n,s_max,h,status`.
#[allow(clippy::too_many_arguments)]
pub fn cmd_monitor(
    cfg: &ChartConfig,
    table: &crate::chart_engine::DecisionValueTable,
    input: impl BufRead,
    column: Option<usize>,
    keep_going: bool,
    policy: TiePolicy,
    out: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<Outcome> {
    // Fail on a missing table entry before reading any data.
    table.lookup_h(cfg.m, cfg.m0, cfg.alpha, 1)?;
    let mut reference = Vec::with_capacity(cfg.m);
    let mut chart: Option<ChartState> = None;
    let mut signaled = false;
    writeln!(out, "n,s_max,h,status")?;
    for (i, line) in input.lines().enumerate() {
        let Some(x) = files::parse_observation_line(&line?, i + 1, column)? else {
            continue;
        };
        let state = match chart.as_mut() {
            Some(s) => s,
            None => {
                reference.push(x);
                if reference.len() == cfg.m {
                    chart = Some(ChartState::new(&reference, *cfg)?);
                }
                continue;
            }
        };
        let v = state.step(x, table)?;
        writeln!(out, "{},{},{},{}", v.n, v.s_max, v.h_used, v.status)?;
        if v.status == Status::Signal {
            signaled = true;
            if !keep_going {
                break;
            }
            state.resume();
        }
    }
    out.flush()?;
    let ties = match &chart {
        Some(s) => s.tie_count(),
        None => {
            if reference.len() < cfg.m {
                return Err(Error::Ingestion(format!(
                    "input has {} observations but the reference sample needs m={}",
                    reference.len(),
                    cfg.m
                )));
            }
            0
        }
    };
    if ties > 0 && policy == TiePolicy::Strict {
        writeln!(
            stderr,
            "warning: {ties} tied observation(s); ties count as no exceedance and the \
             in-control moments assume continuous data"
        )?;
    }
    Ok(if signaled { Outcome::Signal } else { Outcome::Done })
}

/// Pettitt test with a critical value simulated once for a given length.
#[derive(Debug, Clone, Copy)]
pub struct PettittTest {
    pub l: usize,
    pub alpha: f64,
    pub critical: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PettittDecision {
    pub result: PettittResult,
    pub critical: f64,
    pub alpha: f64,
    pub reject: bool,
}

impl std::fmt::Display for PettittDecision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "t_hat={} t_l={} critical={} alpha={} decision={}",
            self.result.t_hat,
            self.result.t_l,
            self.critical,
            self.alpha,
            if self.reject { "reject" } else { "accept" }
        )
    }
}

impl PettittTest {
    pub fn new(l: usize, alpha: f64, sequences: u64, seed: u64) -> Result<Self> {
        if l < 2 {
            return Err(Error::domain(format!(
                "Pettitt test needs at least 2 observations, got {l}"
            )));
        }
        Ok(Self {
            l,
            alpha,
            critical: pettitt_critical(l, alpha, sequences, seed)?,
        })
    }

    /// Rejects "no change" when `T_l` exceeds the critical value.
    pub fn decide(&self, values: &[f64]) -> Result<PettittDecision> {
        if values.len() != self.l {
            return Err(Error::domain(format!(
                "critical value was simulated for length {}, data has {}",
                self.l,
                values.len()
            )));
        }
        let result = pettitt(&ObservationSequence::from_values(values.to_vec())?)?;
        Ok(PettittDecision {
            result,
            critical: self.critical,
            alpha: self.alpha,
            reject: result.t_l > self.critical,
        })
    }
}

/// Estimates one report per scenario and writes them as CSV.
pub fn cmd_arl(
    scenarios: &[ShiftScenario],
    table: &crate::chart_engine::DecisionValueTable,
    cfg: &ChartConfig,
    convention: RunLengthConvention,
    workers: Option<usize>,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<Outcome> {
    if scenarios.is_empty() {
        return Err(Error::config("the (delta, tau) grid is empty"));
    }
    let reports = with_workers(workers, || {
        scenarios
            .iter()
            .map(|s| estimate_arl(s, table, cfg, convention))
            .collect::<Result<Vec<_>>>()
    })??;
    match out {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p)?);
            files::write_reports(&reports, &mut f)?;
            f.flush()?;
        }
        None => files::write_reports(&reports, &mut *stdout)?,
    }
    Ok(Outcome::Done)
}

/// Settings for [`cmd_compare`].
#[derive(Debug, Clone, Copy)]
pub struct CompareSettings {
    pub m: usize,
    pub group_size: usize,
    pub br_k: f64,
    pub mcdonald_k: f64,
    /// In-control mean; the reference mean when `None`.
    pub mu: Option<f64>,
    pub policy: TiePolicy,
}

/// Writes `statistic,index,value` rows:
///
/// * `zhou_t` for `n = 1..`: `max |SMW(t, m+n)|, m <= t < m+n`
/// * `mcdonald_r`, `mcdonald_u`, `mcdonald_t` over the whole sequence
/// * `yang_cheng_m` over the future observations against `mu`
/// * `br_sr`, `br_upper`, `br_lower` over groups of future observations
///   centered at `mu` (a trailing partial group is dropped)
pub fn cmd_compare(values: &[f64], s: &CompareSettings, out: &mut dyn Write) -> Result<()> {
    let seq = ObservationSequence::new(values.to_vec(), s.m)?;
    if seq.future().is_empty() {
        return Err(Error::domain(format!(
            "compare needs observations beyond the m={} reference values",
            s.m
        )));
    }
    let mut rows: Vec<(&str, usize, f64)> = Vec::new();

    for n in 1..=seq.future().len() {
        let prefix = ObservationSequence::new(values[..s.m + n].to_vec(), s.m)?;
        rows.push(("zhou_t", n, zhou_smw_stat(&prefix, s.m, n)?));
    }

    let mut mc = SequentialRankState::new(s.policy);
    for (i, &x) in values.iter().enumerate() {
        mc.step(x, s.mcdonald_k)?;
        rows.push(("mcdonald_r", i + 1, mc.last_r));
        rows.push(("mcdonald_u", i + 1, mc.last_u));
        rows.push(("mcdonald_t", i + 1, mc.t_stat));
    }

    let mut yc = match s.mu {
        Some(mu) => ExceedanceState::new(mu)?,
        None => ExceedanceState::from_reference(seq.reference())?,
    };
    let mu = yc.mu;
    for (i, &x) in seq.future().iter().enumerate() {
        rows.push(("yang_cheng_m", i + 1, yc.update(x)? as f64));
    }

    let groups: Vec<Vec<f64>> = seq
        .future()
        .chunks_exact(s.group_size)
        .map(|g| g.iter().map(|x| x - mu).collect())
        .collect();
    if !groups.is_empty() {
        let sr = groups
            .iter()
            .map(|g| signed_rank_sum(g, s.policy))
            .collect::<Result<Vec<f64>>>()?;
        let trace = bakir_reynolds_trace(&sr, s.br_k)?;
        for (i, (v, c)) in sr.iter().zip(&trace).enumerate() {
            rows.push(("br_sr", i + 1, *v));
            rows.push(("br_upper", i + 1, c.upper));
            rows.push(("br_lower", i + 1, c.lower));
        }
    }

    let mut w = csv::Writer::from_writer(out);
    w.write_record(["statistic", "index", "value"])?;
    for (name, idx, v) in rows {
        w.serialize((name, idx, v))?;
    }
    w.flush()?;
    Ok(())
}
