//! Command-line front end: instance generation, single solves, oracles,
//! power sweeps and side-by-side comparisons.

use std::f64::consts::LN_2;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bb::{run_bb, BbOptions};
use crate::error::{Error, Result};
use crate::model::{generate, interference_box, rates, GeneratorSpec, Scenario, Topology};
use crate::oracle::{dpc_sum_capacity, grid_search, waterfilling_decoupled, GridSpec};
use crate::pricing::{kkt_residual, run_pricing, PricingOptions};
use crate::sweep::{run_sweep, SweepAlgorithm, SweepSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "miso-bb", version, about = "Globally optimal linear precoding for MISO broadcast and interference channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded random instance.
    Generate(GenerateArgs),
    /// Run one algorithm on an instance and write a JSON result.
    Solve(SolveArgs),
    /// Sweep the transmit power and write a CSV of sum rates.
    Sweep(SweepArgs),
    /// Run a reference oracle.
    Oracle(OracleArgs),
    /// Run branch and bound, pricing and the references on one instance.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TopologyArg {
    Bc,
    Ic,
}

impl From<TopologyArg> for Topology {
    fn from(t: TopologyArg) -> Self {
        match t {
            TopologyArg::Bc => Topology::Broadcast,
            TopologyArg::Ic => Topology::Interference,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Bb,
    Pricing,
    Dpc,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    Grid,
    Dpc,
    Waterfill,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long = "users", short = 'k', default_value_t = 4)]
    pub users: usize,
    #[arg(long = "antennas", short = 'n', default_value_t = 4)]
    pub antennas: usize,
    #[arg(long = "carriers", default_value_t = 1)]
    pub carriers: usize,
    #[arg(long, value_enum, default_value_t = TopologyArg::Bc)]
    pub topology: TopologyArg,
    /// Sum (BC) or per-user (IC) power budget in dB.
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pub power_db: f64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct SolverArgs {
    /// Absolute optimality gap of branch and bound, in nats.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Node budget of branch and bound.
    #[arg(long, default_value_t = 50_000)]
    pub max_nodes: usize,
    /// Initial interference price of every link (repeatable for sweeps).
    #[arg(long = "lambda0", value_delimiter = ',', default_values_t = [1e-5])]
    pub lambda0: Vec<f64>,
    /// Initial interference level of every link.
    #[arg(long, default_value_t = 1.0)]
    pub i0: f64,
    /// Outer (price) iteration cap of pricing.
    #[arg(long, default_value_t = 100)]
    pub max_outer: usize,
    /// Inner (interference) iteration cap of pricing.
    #[arg(long, default_value_t = 200)]
    pub max_inner: usize,
    /// Grid intervals per axis of the grid oracle.
    #[arg(long, default_value_t = 32)]
    pub resolution: usize,
    /// Sequential evaluation and no wall-clock fields in the output.
    #[arg(long)]
    pub deterministic: bool,
}

impl SolverArgs {
    fn bb(&self) -> BbOptions {
        BbOptions {
            epsilon: self.eps,
            max_nodes: self.max_nodes,
            parallel: !self.deterministic,
            ..BbOptions::default()
        }
    }

    fn pricing(&self) -> PricingOptions {
        PricingOptions {
            max_outer: self.max_outer,
            max_inner: self.max_inner,
            ..PricingOptions::default()
        }
    }

    fn grid(&self) -> GridSpec {
        GridSpec {
            angle_resolution: self.resolution,
            phase_resolution: self.resolution,
            power_resolution: self.resolution,
            ..GridSpec::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Algo::Bb)]
    pub algo: Algo,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// JSON-lines trace of branch-and-bound nodes or pricing iterations.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Instance whose budgets are rescaled; a seeded BC instance otherwise.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Seed of the generated instance when `--instance` is absent.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long = "users", short = 'k', default_value_t = 4)]
    pub users: usize,
    #[arg(long = "antennas", short = 'n', default_value_t = 4)]
    pub antennas: usize,
    /// Power levels in dB.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0], allow_negative_numbers = true)]
    pub db: Vec<f64>,
    /// Algorithms; `pricing` adds one column per `--lambda0` value.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Algo::Bb, Algo::Pricing, Algo::Dpc])]
    pub algo: Vec<Algo>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// CSV output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = OracleKind::Grid)]
    pub kind: OracleKind,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("result records serialize");
    s.push('\n');
    s
}

fn write_trace<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).expect("trace records serialize"));
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn bits(nats: f64) -> f64 {
    nats / LN_2
}

/// Result of one algorithm plus the exit code it implies.
struct Outcome {
    record: Value,
    code: i32,
}

fn solve_bb(s: &Scenario, args: &SolverArgs, trace: Option<&Path>) -> Result<Outcome> {
    let mut opts = args.bb();
    opts.record_trace = trace.is_some();
    let start = Instant::now();
    let r = run_bb(&s.instance, &s.utility, &s.constraints, &opts)?;
    let wall = start.elapsed().as_secs_f64();
    if let Some(p) = trace {
        write_trace(p, &r.trace)?;
    }
    let rate = match &r.q_best {
        Some(q) => rates(&s.instance, q)?.iter().map(|x| bits(*x)).collect(),
        None => Vec::new(),
    };
    let mut record = json!({
        "algorithm": "bb",
        "cost": r.upper_final,
        "sum_rate_bits": bits(-r.upper_final),
        "bound_sum_rate_bits": bits(-r.lower_final),
        "rates_bits": rate,
        "lower_bound": r.lower_final,
        "gap": r.gap,
        "relative_gap": r.relative_gap(),
        "converged": r.converged,
        "stats": {
            "nodes_bounded": r.stats.nodes_bounded,
            "nodes_pruned": r.stats.nodes_pruned,
            "nodes_empty": r.stats.nodes_empty,
            "fallbacks": r.stats.fallbacks,
            "branchings": r.stats.branchings,
            "solver_iterations": r.stats.solver_iterations,
            "max_depth": r.stats.max_depth,
            "rank_one_violations": r.stats.rank_one_violations,
        },
    });
    if !args.deterministic {
        record["wall_seconds"] = json!(wall);
    }
    let code = if r.budget_exhausted() { EXIT_BUDGET } else { EXIT_OK };
    Ok(Outcome { record, code })
}

fn solve_pricing(s: &Scenario, args: &SolverArgs, lambda0: f64, trace: Option<&Path>) -> Result<Outcome> {
    let opts = PricingOptions {
        record_trace: trace.is_some(),
        ..args.pricing()
    };
    let start = Instant::now();
    let root = interference_box(&s.instance, &s.constraints, &opts.solver)?;
    let l = root.len();
    let r = run_pricing(&s.instance, &s.utility, &s.constraints, &root, &vec![lambda0; l], &vec![args.i0; l], &opts)?;
    let wall = start.elapsed().as_secs_f64();
    if let Some(p) = trace {
        write_trace(p, &r.trace)?;
    }
    let kkt = kkt_residual(&s.instance, &s.utility, &s.constraints, &r.state.q, &r.state.i_hat, &r.state.lambda, &opts.solver)?;
    let mut record = json!({
        "algorithm": "pricing",
        "lambda0": lambda0,
        "i0": args.i0,
        "cost": r.cost,
        "sum_rate_bits": bits(-r.cost),
        "rates_bits": rates(&s.instance, &r.q)?.iter().map(|x| bits(*x)).collect::<Vec<_>>(),
        "converged": r.converged,
        "kkt_residual": kkt,
        "stats": {
            "outer_iterations": r.state.outer,
            "inner_iterations": r.state.inner,
            "solves": r.solves,
        },
    });
    if !args.deterministic {
        record["wall_seconds"] = json!(wall);
    }
    let code = if r.converged { EXIT_OK } else { EXIT_NOT_CONVERGED };
    Ok(Outcome { record, code })
}

fn solve_dpc(s: &Scenario, args: &SolverArgs) -> Result<Outcome> {
    let start = Instant::now();
    let r = dpc_sum_capacity(&s.instance, &s.constraints, &args.bb().solver)?;
    let mut record = json!({
        "algorithm": "dpc",
        "sum_rate_bits": bits(r.capacity),
        "dual_powers": r.powers,
        "gap": r.gap,
    });
    if !args.deterministic {
        record["wall_seconds"] = json!(start.elapsed().as_secs_f64());
    }
    Ok(Outcome { record, code: EXIT_OK })
}

fn solve_grid(s: &Scenario, args: &SolverArgs) -> Result<Outcome> {
    let start = Instant::now();
    let r = grid_search(&s.instance, &s.utility, &s.constraints, &args.grid())?;
    let mut record = json!({
        "algorithm": "grid",
        "cost": r.cost_best,
        "sum_rate_bits": bits(-r.cost_best),
        "rates_bits": rates(&s.instance, &r.q_best)?.iter().map(|x| bits(*x)).collect::<Vec<_>>(),
        "resolution_bound": r.resolution_bound,
        "points_evaluated": r.points_evaluated,
    });
    if !args.deterministic {
        record["wall_seconds"] = json!(start.elapsed().as_secs_f64());
    }
    Ok(Outcome { record, code: EXIT_OK })
}

fn solve_waterfill(s: &Scenario) -> Result<Outcome> {
    let r = waterfilling_decoupled(&s.instance, &s.utility, &s.constraints)?;
    Ok(Outcome {
        record: json!({
            "algorithm": "waterfill",
            "cost": r.cost,
            "sum_rate_bits": bits(-r.cost),
            "levels": r.levels,
            "powers": r.powers,
        }),
        code: EXIT_OK,
    })
}

fn single_lambda(args: &SolverArgs) -> Result<f64> {
    match args.lambda0.as_slice() {
        [l] => Ok(*l),
        _ => Err(Error::Validation("solve takes a single --lambda0 value".into())),
    }
}

fn cmd_generate(a: &GenerateArgs) -> Result<i32> {
    let s = generate(&GeneratorSpec {
        seed: a.seed,
        users: a.users,
        antennas: a.antennas,
        carriers: a.carriers,
        topology: a.topology.into(),
        power: 10f64.powf(a.power_db / 10.0),
    })?;
    emit(a.out.as_deref(), &s.to_json())?;
    Ok(EXIT_OK)
}

fn cmd_solve(a: &SolveArgs) -> Result<i32> {
    let s = Scenario::load(&a.instance)?;
    let trace = a.trace.as_deref();
    let o = match a.algo {
        Algo::Bb => solve_bb(&s, &a.solver, trace)?,
        Algo::Pricing => solve_pricing(&s, &a.solver, single_lambda(&a.solver)?, trace)?,
        Algo::Dpc => solve_dpc(&s, &a.solver)?,
        Algo::Grid => solve_grid(&s, &a.solver)?,
    };
    emit(a.out.as_deref(), &to_json(&o.record))?;
    Ok(o.code)
}

fn cmd_sweep(a: &SweepArgs) -> Result<i32> {
    let base = match &a.instance {
        Some(p) => Scenario::load(p)?,
        None => generate(&GeneratorSpec {
            seed: a.seed,
            users: a.users,
            antennas: a.antennas,
            carriers: 1,
            topology: Topology::Broadcast,
            power: 1.0,
        })?,
    };
    let mut algorithms = Vec::new();
    for alg in &a.algo {
        match alg {
            Algo::Bb => algorithms.push(SweepAlgorithm::Bb),
            Algo::Pricing => algorithms.extend(a.solver.lambda0.iter().map(|&lambda0| SweepAlgorithm::Pricing { lambda0 })),
            Algo::Dpc => algorithms.push(SweepAlgorithm::Dpc),
            Algo::Grid => algorithms.push(SweepAlgorithm::Grid),
        }
    }
    let spec = SweepSpec {
        i0: a.solver.i0,
        bb: a.solver.bb(),
        pricing: a.solver.pricing(),
        grid: a.solver.grid(),
        deterministic: a.solver.deterministic,
        ..SweepSpec::new(a.db.clone(), algorithms)
    };
    let table = run_sweep(&base, &spec)?;
    emit(a.out.as_deref(), &table.to_csv())?;
    Ok(if table.any_budget_exhausted() {
        EXIT_BUDGET
    } else if table.any_pricing_not_converged() {
        EXIT_NOT_CONVERGED
    } else {
        EXIT_OK
    })
}

fn cmd_oracle(a: &OracleArgs) -> Result<i32> {
    let s = Scenario::load(&a.instance)?;
    let o = match a.kind {
        OracleKind::Grid => solve_grid(&s, &a.solver)?,
        OracleKind::Dpc => solve_dpc(&s, &a.solver)?,
        OracleKind::Waterfill => solve_waterfill(&s)?,
    };
    emit(a.out.as_deref(), &to_json(&o.record))?;
    Ok(o.code)
}

fn cmd_compare(a: &CompareArgs) -> Result<i32> {
    let s = Scenario::load(&a.instance)?;
    let mut records = Vec::new();
    let mut code = EXIT_OK;
    let bb = solve_bb(&s, &a.solver, None)?;
    let bb_rate = bb.record["sum_rate_bits"].as_f64().unwrap_or(f64::NAN);
    code = code.max(bb.code);
    records.push(bb.record);
    for &lambda0 in &a.solver.lambda0 {
        let mut p = solve_pricing(&s, &a.solver, lambda0, None)?;
        let rate = p.record["sum_rate_bits"].as_f64().unwrap_or(f64::NAN);
        p.record["below_bb_bits"] = json!(bb_rate - rate);
        if code == EXIT_OK {
            code = p.code;
        }
        records.push(p.record);
    }
    if s.instance.topology() == Topology::Broadcast && s.instance.carriers() == 1 {
        match solve_dpc(&s, &a.solver) {
            Ok(d) => records.push(d.record),
            Err(e) => log::warn!("DPC reference skipped: {e}"),
        }
    }
    if s.instance.is_decoupled() {
        match solve_waterfill(&s) {
            Ok(w) => records.push(w.record),
            Err(e) => log::warn!("waterfilling reference skipped: {e}"),
        }
    }
    emit(a.out.as_deref(), &to_json(&records))?;
    Ok(code)
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Dimension(_)
        | Error::Validation(_)
        | Error::Unbounded(_)
        | Error::Precondition(_)
        | Error::GridCaps(_)
        | Error::Parse { .. } => EXIT_VALIDATION,
        Error::Solver(_) | Error::Io(_) => EXIT_FAILURE,
    }
}

pub fn run(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
