//! Command-line front end over the library: schedule search and validation,
//! memory-circuit embedding, Monte Carlo sweeps, and curve fits.
//!
//! Exit codes: 0 on success, 2 when a schedule fails validation or
//! certification, 3 when a fit cannot be performed, 1 for other errors.

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use epp_routing::experiment::{
    self, abstract_instance, embedded_instance, fit_peff, fit_slope, per_round_two_qubit_depth,
    select_points, sweep, CurveRow, ExperimentError, MemoryInstance, SweepPoint,
};
use epp_routing::decoder::PreparedDecoder;
use epp_routing::embedder::EmbedError;
use epp_routing::noise::effective_multiplier;
use epp_routing::surface_router::{
    golden_schedule, search_cell_schedule, CellSchedule, ScheduleVariant, SearchConfig,
};
use epp_routing::topology::LatticeKind;

#[derive(Parser)]
#[command(name = "epp-routing", version, about = "Error-pattern-preserving routing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a memory circuit on a device lattice and certify every swap.
    Route(TargetArgs),
    /// Search for a minimum-depth unit-cell schedule.
    Tile(TileArgs),
    /// Embed, lower to device gates, and report depth and swap overhead.
    Embed(TargetArgs),
    /// Estimate the logical error rate at one physical rate.
    Simulate(SimulateArgs),
    /// Estimate logical error rates across a physical-rate grid.
    Sweep(SweepArgs),
    /// Fit log-log slopes and the effective-noise scale from sweep CSV.
    Fit(FitArgs),
    /// Parse a schedule table and validate it on its unit cell.
    ValidateSchedule(ValidateArgs),
}

#[derive(Args)]
struct TargetArgs {
    /// Device lattice of the golden schedule to use.
    #[arg(long)]
    lattice: LatticeArg,
    /// Schedule table file overriding the golden schedule.
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Code distance.
    #[arg(long, default_value_t = 3)]
    distance: usize,
    /// Syndrome-extraction rounds; defaults to the distance.
    #[arg(long)]
    rounds: Option<usize>,
}

#[derive(Args)]
struct TileArgs {
    #[arg(long)]
    lattice: LatticeArg,
    /// Direction pattern of the syndrome-extraction round.
    #[arg(long, default_value = "hvvh")]
    variant: VariantArg,
    #[arg(long, default_value_t = 6)]
    max_swap_layers: usize,
    /// Forbid type-2 swaps, allowing only hops onto routing qubits.
    #[arg(long)]
    hops_only: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Device lattice, or "abstract" for the un-routed reference.
    #[arg(long)]
    lattice: String,
    /// Round variant; required for the abstract target, otherwise taken from
    /// the schedule.
    #[arg(long)]
    variant: Option<VariantArg>,
    #[arg(long)]
    schedule: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    distance: usize,
    #[arg(long)]
    rounds: Option<usize>,
    /// Physical error rate per operation.
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    target: SimulateTarget,
    #[arg(long, default_value_t = 3)]
    distance: usize,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    p_min: f64,
    #[arg(long)]
    p_max: f64,
    #[arg(long, default_value_t = 4)]
    points: usize,
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateTarget {
    #[arg(long)]
    lattice: String,
    #[arg(long)]
    variant: Option<VariantArg>,
    #[arg(long)]
    schedule: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Sweep CSV containing both the abstract and the embedded curve.
    #[arg(long)]
    csv: PathBuf,
    /// Embedded-curve lattice label to fit against the abstract rows.
    #[arg(long)]
    lattice: LatticeArg,
    #[arg(long, default_value_t = 3)]
    distance: usize,
}

#[derive(Args)]
struct ValidateArgs {
    /// Schedule table file; the lattice's golden table when omitted.
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long)]
    lattice: Option<LatticeArg>,
}

#[derive(Clone, Copy)]
struct LatticeArg(LatticeKind);

impl std::str::FromStr for LatticeArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LatticeKind::from_token(s)
            .map(LatticeArg)
            .ok_or_else(|| format!("unknown lattice {s:?} (heavy-hex, hexagonal)"))
    }
}

#[derive(Clone, Copy)]
struct VariantArg(ScheduleVariant);

impl std::str::FromStr for VariantArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScheduleVariant::from_token(s)
            .map(VariantArg)
            .ok_or_else(|| format!("unknown variant {s:?}"))
    }
}

/// Failure category driving the process exit code.
enum CliError {
    Certification(String),
    Fit(String),
    Other(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Certification(_) => 2,
            CliError::Fit(_) => 3,
            CliError::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Certification(m) | CliError::Fit(m) | CliError::Other(m) => m,
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        let msg = e.to_string();
        match e {
            ExperimentError::Schedule(_)
            | ExperimentError::Lowering(_)
            | ExperimentError::Embed(EmbedError::Schedule(_) | EmbedError::Certify(_)) => {
                CliError::Certification(msg)
            }
            _ => CliError::Other(msg),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Route(args) => route(args, false),
        Command::Embed(args) => route(args, true),
        Command::Tile(args) => tile(args),
        Command::Simulate(args) => simulate(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Fit(args) => fit(args),
        Command::ValidateSchedule(args) => validate_schedule(args),
    }
}

fn load_schedule(
    lattice: LatticeKind,
    path: &Option<PathBuf>,
) -> Result<CellSchedule, CliError> {
    match path {
        None => Ok(golden_schedule(lattice)),
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let schedule = CellSchedule::from_csv(&text)
                .map_err(|e| CliError::Certification(e.to_string()))?;
            if schedule.lattice != lattice {
                return Err(CliError::Other(format!(
                    "schedule is for {}, requested {}",
                    schedule.lattice.token(),
                    lattice.token()
                )));
            }
            Ok(schedule)
        }
    }
}

fn route(args: TargetArgs, lowered: bool) -> Result<(), CliError> {
    let rounds = args.rounds.unwrap_or(args.distance);
    let schedule = load_schedule(args.lattice.0, &args.schedule)?;
    let embedded = embedded_instance(args.distance, &schedule, rounds)?;
    let cert = &embedded.certification;
    let mut report = json!({
        "lattice": args.lattice.0.token(),
        "variant": schedule.variant.token(),
        "distance": args.distance,
        "rounds": rounds,
        "certification": cert,
        "mean_type1_per_leg": cert.mean_type1_per_leg(),
        "mean_type2": cert.mean_type2(),
    });
    if lowered {
        let depth = per_round_two_qubit_depth(&schedule, args.distance)?;
        report["lowering"] = json!({
            "two_qubit_depth": embedded.lowering.two_qubit_depth,
            "per_round_two_qubit_depth": depth,
            "cancelled_computational": embedded.lowering.cancelled_computational,
            "uniform_extra_cnots_per_swap": embedded.lowering.uniform_extra_cnots(),
        });
    }
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable report"));
    Ok(())
}

fn tile(args: TileArgs) -> Result<(), CliError> {
    let config = SearchConfig {
        max_swap_layers: args.max_swap_layers,
        allow_type2: !args.hops_only,
    };
    let schedule = search_cell_schedule(args.lattice.0, args.variant.0, &config)
        .map_err(|e| CliError::Other(e.to_string()))?;
    let report = schedule
        .validate()
        .map_err(|e| CliError::Certification(e.to_string()))?;
    eprintln!(
        "{} swap layers, {} type-1 and {} type-2 swaps per cell round",
        schedule.num_swap_layers(),
        report.type1_per_cell_round,
        report.type2_per_cell_round,
    );
    print!("{}", schedule.to_csv());
    Ok(())
}

struct ResolvedTarget {
    label: String,
    variant: ScheduleVariant,
    instance: MemoryInstance,
}

fn resolve_target(
    lattice: &str,
    variant: Option<VariantArg>,
    schedule: &Option<PathBuf>,
    distance: usize,
    rounds: usize,
) -> Result<ResolvedTarget, CliError> {
    if lattice == "abstract" {
        let variant = variant
            .ok_or_else(|| CliError::Other("--variant is required with --lattice abstract".into()))?
            .0;
        let instance = abstract_instance(distance, variant, rounds)?;
        return Ok(ResolvedTarget {
            label: "abstract".into(),
            variant,
            instance,
        });
    }
    let kind = LatticeKind::from_token(lattice)
        .ok_or_else(|| CliError::Other(format!("unknown lattice {lattice:?}")))?;
    let schedule = load_schedule(kind, schedule)?;
    let embedded = embedded_instance(distance, &schedule, rounds)?;
    Ok(ResolvedTarget {
        label: kind.token().into(),
        variant: schedule.variant,
        instance: embedded.instance,
    })
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let rounds = args.rounds.unwrap_or(args.distance);
    let target = resolve_target(
        &args.lattice,
        args.variant,
        &args.schedule,
        args.distance,
        rounds,
    )?;
    let decoder = PreparedDecoder::new(&target.instance.dict, args.p)
        .map_err(|e| CliError::Other(e.to_string()))?;
    let estimate = experiment::logical_error_rate(
        &target.instance.dict,
        &decoder,
        args.p,
        args.shots,
        args.seed,
    );
    let rows = [CurveRow {
        lattice: target.label,
        variant: target.variant,
        distance: args.distance,
        point: SweepPoint {
            p: args.p,
            estimate,
        },
    }];
    let mut stdout = io::stdout().lock();
    experiment::write_curve_csv(&mut stdout, &rows)?;
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<(), CliError> {
    let rounds = args.rounds.unwrap_or(args.distance);
    let target = resolve_target(
        &args.target.lattice,
        args.target.variant,
        &args.target.schedule,
        args.distance,
        rounds,
    )?;
    let grid = experiment::geometric_grid(args.p_min, args.p_max, args.points);
    let points = sweep(&target.instance.dict, &grid, args.shots, args.seed)?;
    let rows: Vec<CurveRow> = points
        .into_iter()
        .map(|point| CurveRow {
            lattice: target.label.clone(),
            variant: target.variant,
            distance: args.distance,
            point,
        })
        .collect();
    match &args.out {
        Some(path) => {
            let mut file = fs::File::create(path)?;
            experiment::write_curve_csv(&mut file, &rows)?;
            file.flush()?;
        }
        None => {
            let mut stdout = io::stdout().lock();
            experiment::write_curve_csv(&mut stdout, &rows)?;
        }
    }
    Ok(())
}

fn fit(args: FitArgs) -> Result<(), CliError> {
    let file = fs::File::open(&args.csv)?;
    let rows = experiment::read_curve_csv(BufReader::new(file))?;
    let abstract_points = select_points(&rows, "abstract", args.distance);
    let embedded_points = select_points(&rows, args.lattice.0.token(), args.distance);
    let fit_err = |e: experiment::FitError| CliError::Fit(e.to_string());
    let abstract_slope = fit_slope(&abstract_points).map_err(fit_err)?;
    let embedded_slope = fit_slope(&embedded_points).map_err(fit_err)?;
    let scale = fit_peff(&abstract_points, &embedded_points).map_err(fit_err)?;
    let report = json!({
        "lattice": args.lattice.0.token(),
        "distance": args.distance,
        "abstract_slope": { "value": abstract_slope.slope, "stderr": abstract_slope.slope_stderr },
        "embedded_slope": { "value": embedded_slope.slope, "stderr": embedded_slope.slope_stderr },
        "scale": { "value": scale.scale, "stderr": scale.scale_stderr },
    });
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable report"));
    Ok(())
}

fn validate_schedule(args: ValidateArgs) -> Result<(), CliError> {
    let schedule = match (&args.file, args.lattice) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)?;
            CellSchedule::from_csv(&text).map_err(|e| CliError::Certification(e.to_string()))?
        }
        (None, Some(lattice)) => golden_schedule(lattice.0),
        (None, None) => {
            return Err(CliError::Other(
                "pass --file or --lattice to pick a schedule".into(),
            ))
        }
    };
    let report = schedule
        .validate()
        .map_err(|e| CliError::Certification(e.to_string()))?;
    let summary = json!({
        "lattice": schedule.lattice.token(),
        "variant": schedule.variant.token(),
        "swap_layers": schedule.num_swap_layers(),
        "type1_per_cell_round": report.type1_per_cell_round,
        "type2_per_cell_round": report.type2_per_cell_round,
        "mean_type1_per_leg": report.mean_type1_per_leg(),
        "mean_type2": report.mean_type2(),
        "peff_multiplier": effective_multiplier(
            report.mean_type1_per_leg(),
            report.mean_type2(),
        ),
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("serializable report"));
    Ok(())
}
