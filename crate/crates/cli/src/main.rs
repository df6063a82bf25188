//! `fleetmix`: generate instances, solve operational periods, and rank fleet
//! mixes by total cost of ownership.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use fleetmix_core::alns;
use fleetmix_core::eval::{path_from_arcs, ArcRoute, OperationalProblem, Violation};
use fleetmix_core::model::{FleetMix, Instance, Route, Scenario, Solution};
use fleetmix_core::oracle::{exact_solve, OracleLimits};
use fleetmix_core::saa::{enumerate_mixes, optimize, sweep, AlnsSolver, EstimationPolicy, Estimator, SweepKind, SweepSpec};
use fleetmix_core::scen::{mth_synthetic, regionh_synthetic, MthSpec, RegionHSpec, SamplerSpec, ScenarioSampler};
use fleetmix_core::{Error, Result};
use serde::{Deserialize, Serialize};

use config::{Case, RunConfig, CASE_SEED};

#[derive(Parser)]
#[command(name = "fleetmix", version, about = "Fleet size and mix planning for mixed electric fleets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Default)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Instance JSON. Defaults to the synthetic instance of the case.
    #[arg(long, global = true)]
    instance: Option<PathBuf>,
    /// Scenario JSON for solve, verify and oracle. Defaults to sample 0.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Master seed. Required, either here or in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Preset horizon, sampler and mix grid.
    #[arg(long, value_enum, global = true)]
    case: Option<Case>,
    /// Fleet as counts per vehicle type, e.g. `6,0`. Repeat or separate with `;` to list several.
    #[arg(long, global = true, value_delimiter = ';')]
    mix: Vec<String>,
    /// Fixed number of samples per mix instead of the half-width rule.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// ALNS iterations per solve.
    #[arg(long, global = true)]
    iterations: Option<usize>,
    /// ALNS wall-clock limit per solve in seconds; 0 removes it.
    #[arg(long, global = true)]
    time_limit: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic instance and sampled scenarios.
    Gen {
        /// Scenarios to sample next to the instance.
        #[arg(long, default_value_t = 1)]
        scenarios: u64,
    },
    /// Solve one operational period with ALNS.
    Solve,
    /// Price every mix of the grid and rank them by TCO.
    Optimize,
    /// Re-run the optimization across a parameter grid.
    Sweep {
        /// Parameter to vary; may also come from the config's `sweep` section.
        #[arg(long, value_enum)]
        kind: Option<SweepArg>,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        grid: Vec<f64>,
    },
    /// Check a solution file against every constraint.
    Verify {
        /// Plan as node paths or arc lists; `solve`'s solution.json also works.
        #[arg(long)]
        solution: PathBuf,
    },
    /// Solve a tiny period exactly.
    Oracle,
    /// Print the resolved configuration.
    Params {
        /// Print the configuration as JSON.
        #[arg(long)]
        show: bool,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SweepArg {
    DemandScale,
    FixedTemperature,
    EnergyPrices,
    AdditionalMass,
    EvPriceDelta,
}

impl From<SweepArg> for SweepKind {
    fn from(a: SweepArg) -> Self {
        match a {
            SweepArg::DemandScale => SweepKind::DemandScale,
            SweepArg::FixedTemperature => SweepKind::FixedTemperature,
            SweepArg::EnergyPrices => SweepKind::EnergyPrices,
            SweepArg::AdditionalMass => SweepKind::AdditionalMass,
            SweepArg::EvPriceDelta => SweepKind::EvPriceDelta,
        }
    }
}

enum Failure {
    Core(Error),
    Violations(Vec<Violation>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FLEETMIX_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violations(vs)) => {
            for v in &vs {
                println!("{}", v.kind);
                eprintln!("violation: {v}");
            }
            ExitCode::from(3)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Validation(_) | Error::Consistency(_) | Error::Domain(_) => 3,
                _ => 2,
            })
        }
    }
}

fn parse_mix(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| Error::Config(format!("bad mix {s:?}"))))
        .collect()
}

fn build_config(common: &Common, command: &Command) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::read(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = common.case {
        cfg.case = v;
    }
    if let Some(v) = &common.instance {
        cfg.instance = Some(v.clone());
    }
    if let Some(v) = &common.scenario {
        cfg.scenario = Some(v.clone());
    }
    if let Some(v) = common.seed {
        cfg.seed = Some(v);
    }
    if let Some(v) = common.jobs {
        cfg.jobs = v;
    }
    if let Some(v) = &common.out {
        cfg.out = v.clone();
    }
    if !common.mix.is_empty() {
        cfg.mixes = Some(common.mix.iter().map(|m| parse_mix(m)).collect::<Result<_>>()?);
    }
    if let Some(n) = common.samples {
        cfg.policy = EstimationPolicy {
            common_random_numbers: cfg.policy.common_random_numbers,
            max_resamples: cfg.policy.max_resamples,
            batch_size: cfg.policy.batch_size,
            confidence: cfg.policy.confidence,
            ..EstimationPolicy::fixed(n)
        };
    }
    if let Some(v) = common.iterations {
        cfg.alns.max_iterations = v;
    }
    if let Some(t) = common.time_limit {
        cfg.alns.time_limit_secs = (t > 0.0).then_some(t);
    }
    if let Command::Sweep { kind, grid } = command {
        match (kind, &mut cfg.sweep) {
            (Some(k), Some(s)) => s.kind = (*k).into(),
            (Some(k), None) => {
                cfg.sweep = Some(SweepSpec {
                    kind: (*k).into(),
                    grid: Vec::new(),
                    powertrain: None,
                })
            }
            _ => {}
        }
        if !grid.is_empty() {
            match &mut cfg.sweep {
                Some(s) => s.grid = grid.clone(),
                None => return Err(Error::Config("--grid needs --kind".into())),
            }
        }
        if cfg.sweep.is_none() {
            return Err(Error::Config("sweep needs --kind and --grid (or \"sweep\" in the config)".into()));
        }
    }
    cfg.resolve(!matches!(command, Command::Params { .. }))
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    let cfg = build_config(&cli.common, &cli.command)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", cfg.jobs)))?;
    let started = Instant::now();
    let name = match &cli.command {
        Command::Gen { .. } => "gen",
        Command::Solve => "solve",
        Command::Optimize => "optimize",
        Command::Sweep { .. } => "sweep",
        Command::Verify { .. } => "verify",
        Command::Oracle => "oracle",
        Command::Params { .. } => "params",
    };
    pool.install(|| match &cli.command {
        Command::Gen { scenarios } => cmd_gen(&cfg, *scenarios),
        Command::Solve => cmd_solve(&cfg),
        Command::Optimize => cmd_optimize(&cfg),
        Command::Sweep { .. } => cmd_sweep(&cfg),
        Command::Verify { solution } => cmd_verify(&cfg, solution),
        Command::Oracle => cmd_oracle(&cfg),
        Command::Params { .. } => {
            println!("{}", serde_json::to_string_pretty(&cfg).map_err(Error::from)?);
            Ok(())
        }
    })?;
    if !matches!(cli.command, Command::Params { .. } | Command::Verify { .. }) {
        output::write_meta(&cfg.out, name, &cfg, started.elapsed().as_secs_f64())?;
    }
    Ok(())
}

fn fleet_for(cfg: &RunConfig, inst: &Instance) -> Result<FleetMix> {
    match cfg.mixes.as_ref().and_then(|m| m.first()) {
        Some(counts) => FleetMix::from_counts(inst, counts),
        None => Ok(FleetMix::all(inst)),
    }
}

fn scenario_for(cfg: &RunConfig, inst: &Instance) -> Result<Scenario> {
    let sc = match &cfg.scenario {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text)?
        }
        None => cfg.sampler().build(inst)?.sample(cfg.seed(), 0)?,
    };
    sc.validate(inst)?;
    Ok(sc)
}

fn cmd_gen(cfg: &RunConfig, scenarios: u64) -> std::result::Result<(), Failure> {
    let inst = match (&cfg.instance, cfg.case) {
        (Some(_), _) => cfg.load_instance()?,
        (None, Case::Regionh) => regionh_synthetic(&RegionHSpec::default(), cfg.seed())?,
        (None, Case::Mth) => mth_synthetic(&MthSpec::default(), cfg.seed())?,
        (None, Case::Custom) => unreachable!("custom requires an instance"),
    };
    if cfg.instance.is_none() && cfg.seed() != CASE_SEED {
        log::info!("generated with seed {}; the bundled instances use {CASE_SEED}", cfg.seed());
    }
    output::ensure_dir(&cfg.out)?;
    inst.save(cfg.out.join("instance.json"))?;
    let sampler = cfg.sampler().build(&inst)?;
    for i in 0..scenarios {
        let sc = sampler.sample(cfg.seed(), i)?;
        output::write_json(&cfg.out.join(format!("scenario_{i}.json")), &sc)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveReport<'a> {
    config: &'a RunConfig,
    seed: u64,
    scenario_temperature: f64,
    costs: fleetmix_core::model::CostBreakdown,
    served_demand: f64,
    solution: &'a Solution,
}

#[derive(Serialize)]
struct OracleReport<'a> {
    config: &'a RunConfig,
    seed: u64,
    cost: f64,
    solution: &'a Solution,
}

fn cmd_solve(cfg: &RunConfig) -> std::result::Result<(), Failure> {
    let inst = cfg.load_instance()?;
    let fleet = fleet_for(cfg, &inst)?;
    let sc = scenario_for(cfg, &inst)?;
    let problem = OperationalProblem::new(&inst, &sc, &cfg.power)?;
    let out = alns::solve(&problem, &fleet, &cfg.alns, cfg.seed())?;
    let report = problem.evaluate_solution(&fleet, &out.solution)?;
    if !report.feasible() {
        return Err(Failure::Violations(report.violations));
    }
    output::ensure_dir(&cfg.out)?;
    output::write_json(
        &cfg.out.join("solution.json"),
        &SolveReport {
            config: cfg,
            seed: cfg.seed(),
            scenario_temperature: sc.temperature,
            costs: report.costs,
            served_demand: report.served_demand,
            solution: &out.solution,
        },
    )?;
    let path = cfg.out.join("routes.csv");
    let mut w = output::csv_writer(&path, cfg)?;
    let err = |e: csv::Error| Error::Config(format!("{}: {e}", path.display()));
    w.write_record(["vehicle", "type", "customers", "fixed", "energy_cost", "maintenance", "energy_kwh", "distance_km", "charge_minutes", "end_time", "cost"])
        .map_err(err)?;
    for (route, eval) in out.solution.routes.iter().zip(&report.routes) {
        let Some(e) = eval else { continue };
        w.write_record([
            route.vehicle.to_string(),
            inst.vehicle_type(route.vehicle).name.clone(),
            route.customers(&inst).count().to_string(),
            e.fixed.to_string(),
            e.energy_cost.to_string(),
            e.maintenance_cost.to_string(),
            e.energy_kwh.to_string(),
            e.distance_km.to_string(),
            e.charge_minutes.to_string(),
            e.end_time.to_string(),
            e.cost.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let c = report.costs;
    println!(
        "total {:.2} USD (fixed {:.2}, energy {:.2}, maintenance {:.2}, penalty {:.2}); {} unserved",
        c.total,
        c.fixed,
        c.energy,
        c.maintenance,
        c.penalty,
        out.solution.unserved.len()
    );
    Ok(())
}

fn mixes_for(cfg: &RunConfig, inst: &Instance) -> Result<Vec<Vec<usize>>> {
    match &cfg.mixes {
        Some(m) => {
            for counts in m {
                FleetMix::from_counts(inst, counts)?;
            }
            Ok(m.clone())
        }
        None => enumerate_mixes(inst, cfg.grid()),
    }
}

fn cmd_optimize(cfg: &RunConfig) -> std::result::Result<(), Failure> {
    let inst = cfg.load_instance()?;
    let mixes = mixes_for(cfg, &inst)?;
    let sampler = cfg.sampler().build(&inst)?;
    let solver = AlnsSolver {
        params: cfg.alns.clone(),
        power: cfg.power.clone(),
    };
    let estimator = Estimator {
        sampler: &sampler,
        solver: &solver,
        policy: cfg.policy.clone(),
        seed: cfg.seed(),
    };
    log::info!("pricing {} mixes", mixes.len());
    let results = optimize(&inst, &mixes, &estimator, &cfg.horizon())?;
    output::ensure_dir(&cfg.out)?;
    output::write_optimize(&cfg.out, cfg, &inst, &results)?;
    if let Some(best) = results.first() {
        let e = &best.evaluation;
        println!(
            "best mix {:?}: TCO {:.2} USD, mean period cost {:.2} ± {:.2} over {} samples",
            e.counts, e.tco, e.mean, e.half_width, e.n
        );
    }
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig) -> std::result::Result<(), Failure> {
    let inst = cfg.load_instance()?;
    let mixes = mixes_for(cfg, &inst)?;
    let spec = cfg.sweep.as_ref().expect("resolved sweep");
    let solver = AlnsSolver {
        params: cfg.alns.clone(),
        power: cfg.power.clone(),
    };
    let sampler_spec: &SamplerSpec = cfg.sampler();
    let points = sweep(
        &inst,
        &mixes,
        spec,
        &|i| sampler_spec.build(i),
        &solver,
        &cfg.policy,
        cfg.seed(),
        &cfg.horizon(),
    )?;
    output::ensure_dir(&cfg.out)?;
    output::write_sweep(&cfg.out, cfg, &inst, &points)?;
    let kind = serde_json::to_value(spec.kind).map_err(Error::from)?;
    let kind = kind.as_str().unwrap_or("sweep");
    for p in &points {
        if let Some(best) = p.results.first() {
            println!("{kind} = {}: best {:?}, TCO {:.2} USD", p.value, best.evaluation.counts, best.evaluation.tco);
        }
    }
    Ok(())
}

/// A route as a node sequence or as an unordered arc list.
#[derive(Deserialize)]
#[serde(untagged)]
enum RouteInput {
    Path(Route),
    Arcs(ArcRoute),
}

#[derive(Deserialize)]
struct SolutionInput {
    routes: Vec<RouteInput>,
    #[serde(default)]
    unserved: Vec<usize>,
}

fn read_solution(path: &Path, inst: &Instance) -> std::result::Result<Solution, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
    // Accept both a bare solution and the report written by `solve`.
    let value = value.get("solution").cloned().unwrap_or(value);
    let input: SolutionInput = serde_json::from_value(value).map_err(Error::from)?;
    let mut routes = Vec::new();
    let mut broken = Vec::new();
    for r in input.routes {
        let vehicle = match &r {
            RouteInput::Path(p) => p.vehicle,
            RouteInput::Arcs(a) => a.vehicle,
        };
        if vehicle >= inst.vehicles.len() {
            return Err(Error::Consistency(format!("route for unknown vehicle {vehicle}")).into());
        }
        match r {
            RouteInput::Path(p) => routes.push(p),
            RouteInput::Arcs(a) => match path_from_arcs(inst, &a) {
                Ok(p) => routes.push(p),
                Err(v) => broken.push(v),
            },
        }
    }
    if !broken.is_empty() {
        return Err(Failure::Violations(broken));
    }
    Ok(Solution {
        routes,
        unserved: input.unserved,
    })
}

fn cmd_verify(cfg: &RunConfig, solution: &Path) -> std::result::Result<(), Failure> {
    let inst = cfg.load_instance()?;
    let fleet = fleet_for(cfg, &inst)?;
    let sc = scenario_for(cfg, &inst)?;
    let sol = read_solution(solution, &inst)?;
    let problem = OperationalProblem::new(&inst, &sc, &cfg.power)?;
    let report = problem.evaluate_solution(&fleet, &sol)?;
    if !report.feasible() {
        return Err(Failure::Violations(report.violations));
    }
    println!("feasible; total {:.2} USD", report.costs.total);
    Ok(())
}

fn cmd_oracle(cfg: &RunConfig) -> std::result::Result<(), Failure> {
    let inst = cfg.load_instance()?;
    let fleet = fleet_for(cfg, &inst)?;
    let sc = scenario_for(cfg, &inst)?;
    let problem = OperationalProblem::new(&inst, &sc, &cfg.power)?;
    let out = exact_solve(&problem, &fleet, &OracleLimits::default())?;
    output::ensure_dir(&cfg.out)?;
    output::write_json(
        &cfg.out.join("oracle.json"),
        &OracleReport {
            config: cfg,
            seed: cfg.seed(),
            cost: out.cost,
            solution: &out.solution,
        },
    )?;
    println!("optimal total {:.2} USD; {} unserved", out.cost, out.solution.unserved.len());
    Ok(())
}
