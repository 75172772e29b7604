use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use v2vsched_core::cutplane::CutplaneStatus;
use v2vsched_core::formulation::{build, FormulationOptions, ObjectiveKind};
use v2vsched_core::solution::SOLUTION_FORMAT_VERSION;
use v2vsched_core::{
    build_scenario, colgen, cutplane, decode, run_fairness, run_sweep, validate_solution, AcirProfile, ColgenBudget,
    CutplaneBudget, EvalOptions, ExperimentConfig, FixedPowers, Mode, RadioParams, Scenario, SolutionFile, SolveStatus,
    SolverOptions, VariantFlags,
};

#[derive(Parser)]
#[command(name = "v2vsched", version, about = "V2V broadcast scheduling and power control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scenario files.
    Scenario {
        #[command(subcommand)]
        command: ScenarioCommand,
    },
    /// Solve one scenario and write a solution file.
    Solve(SolveArgs),
    /// Monte-Carlo sweep over N, F or T.
    Sweep(SweepArgs),
    /// Per-VUE success distribution at one (N, F, T).
    Fairness(FairnessArgs),
    /// Re-check a solution file against the SINR model.
    Validate(ValidateArgs),
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Draw a random convoy.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AcirChoice {
    /// 3GPP mask.
    ThreeGpp,
    /// Co-channel interference only.
    CoChannel,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    f: usize,
    #[arg(long)]
    t: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "three-gpp")]
    acir: AcirChoice,
    /// Disable log-normal shadowing.
    #[arg(long)]
    no_shadowing: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolveMode {
    Joint,
    Sched,
    Power,
    Colgen,
    Cutplane,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Variant {
    NonOverlap,
    MaxOneRb,
    HalfDuplex,
    MaxMin,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum)]
    mode: SolveMode,
    /// Problem variants; may be repeated or comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    variant: Vec<Variant>,
    /// Branch-and-bound node budget per MILP solve.
    #[arg(long, default_value_t = 50_000)]
    budget: usize,
    /// Solution file whose schedule is fixed in power mode.
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Per-iteration trace CSV (colgen and cutplane modes).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Summary CSV: sweep value then one column per scheme.
    #[arg(long)]
    out: PathBuf,
    /// Per-trial CSV.
    #[arg(long)]
    trials_out: Option<PathBuf>,
}

#[derive(Args)]
struct FairnessArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    cdf_out: PathBuf,
    #[arg(long)]
    per_vue_out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    solution: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    Ok(Scenario::from_json(&read(path)?)?)
}

fn status_label(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::Unbounded => "unbounded",
        SolveStatus::GapLimit => "gap-limit",
        SolveStatus::IterationLimit => "iteration-limit",
    }
}

fn scenario_gen(a: GenArgs) -> Result<()> {
    let mut params = RadioParams::table_ii();
    if a.no_shadowing {
        params = params.without_shadowing();
    }
    let acir = match a.acir {
        AcirChoice::ThreeGpp => AcirProfile::three_gpp(),
        AcirChoice::CoChannel => AcirProfile::co_channel_only(),
    };
    let s = build_scenario(a.n, a.f, a.t, &params, &acir, a.seed)?;
    write(&a.out, &s.to_json()?)
}

fn solve(a: SolveArgs) -> Result<()> {
    let s = load_scenario(&a.scenario)?;
    let has = |v: Variant| a.variant.contains(&v);
    let mut flags = VariantFlags {
        non_overlap: has(Variant::NonOverlap),
        max_one_rb: has(Variant::MaxOneRb),
        half_duplex: has(Variant::HalfDuplex),
        objective: if has(Variant::MaxMin) { ObjectiveKind::MaxMin } else { ObjectiveKind::SumLinks },
        ..VariantFlags::default()
    };
    let eval = EvalOptions { half_duplex: flags.half_duplex };
    let solver = SolverOptions::default().with_node_limit(a.budget);
    let fixed = FixedPowers::max_power(&s);

    let (label, status, schedule, powers, claimed) = match a.mode {
        SolveMode::Joint | SolveMode::Sched | SolveMode::Power => {
            let opts = match a.mode {
                SolveMode::Joint => {
                    flags.mode = Mode::Joint;
                    FormulationOptions::robust()
                }
                SolveMode::Sched => {
                    flags.mode = Mode::SchedulingOnly;
                    flags.fixed_powers = Some(fixed.clone());
                    FormulationOptions::robust_exact_threshold()
                }
                _ => {
                    let path = a.schedule.as_ref().context("power mode needs --schedule")?;
                    flags.mode = Mode::PowerOnly;
                    flags.fixed_schedule = Some(SolutionFile::from_json(&read(path)?)?.schedule);
                    FormulationOptions::robust()
                }
            };
            let form = build(&s, &flags, &opts)?;
            let sol = v2vsched_core::solve_milp(&form.model, &SolverOptions { objective_step: form.objective_step(), ..solver })?;
            if !sol.has_solution() {
                bail!("solver found no solution ({})", status_label(sol.status));
            }
            let dec = decode(&form, &s, &sol.values)?;
            let label = match a.mode {
                SolveMode::Joint => "joint",
                SolveMode::Sched => "sched",
                _ => "power",
            };
            (label, status_label(sol.status).to_string(), dec.schedule, dec.powers, dec.claimed)
        }
        SolveMode::Colgen => {
            if flags.objective == ObjectiveKind::MaxMin {
                bail!("colgen supports the sum-of-links objective only");
            }
            let budget = ColgenBudget { pricing: solver, ..ColgenBudget::default() };
            let r = colgen::run_colgen(&s, &flags, &budget)?;
            if let Some(path) = &a.trace {
                colgen::write_trace_csv(&r.trace, fs::File::create(path)?)?;
            }
            let status = if r.pricing_truncated { "gap-limit" } else { "heuristic" };
            ("colgen", status.to_string(), r.schedule, r.powers, r.outcome)
        }
        SolveMode::Cutplane => {
            let budget = CutplaneBudget { solver, ..CutplaneBudget::default() };
            let r = cutplane::run_cutting_plane(&s, &fixed, &flags, &budget)?;
            if let Some(path) = &a.trace {
                cutplane::write_trace_csv(&r.trace, fs::File::create(path)?)?;
            }
            let status = match r.status {
                CutplaneStatus::Converged => "optimal",
                CutplaneStatus::BudgetExhausted => "budget-exhausted",
            };
            let powers = v2vsched_core::PowerAllocation::from_schedule(&r.schedule, &fixed);
            ("cutplane", status.to_string(), r.schedule, powers, r.outcome)
        }
    };
    let file = SolutionFile {
        version: SOLUTION_FORMAT_VERSION,
        mode: label.into(),
        status,
        half_duplex: eval.half_duplex,
        schedule,
        powers,
        claimed,
    };
    let report = validate_solution(&s, &file)?;
    println!(
        "{label}: status {} claimed {} links, {} after physical check",
        file.status, report.claimed_objective, report.actual_objective
    );
    write(&a.out, &file.to_json()?)
}

fn sweep(a: SweepArgs) -> Result<()> {
    let cfg = ExperimentConfig::from_toml(&read(&a.config)?)?;
    let out = run_sweep(&cfg)?;
    write(&a.out, &out.summary_csv)?;
    if let Some(p) = &a.trials_out {
        write(p, &out.trials_csv)?;
    }
    let failures = out.records.iter().filter(|r| r.run.is_err()).count();
    if failures > 0 {
        eprintln!("{failures} scheme runs failed; their cells are left empty");
    }
    Ok(())
}

fn fairness(a: FairnessArgs) -> Result<()> {
    let cfg = ExperimentConfig::from_toml(&read(&a.config)?)?;
    let out = run_fairness(&cfg)?;
    write(&a.cdf_out, &out.cdf_csv)?;
    write(&a.per_vue_out, &out.per_vue_csv)
}

fn validate(a: ValidateArgs) -> Result<bool> {
    let s = load_scenario(&a.scenario)?;
    let sol = SolutionFile::from_json(&read(&a.solution)?)?;
    let r = validate_solution(&s, &sol)?;
    println!("claimed {} links, physical {}", r.claimed_objective, r.actual_objective);
    for (i, j) in &r.false_claims {
        println!("false claim: {i} -> {j}");
    }
    for (i, j) in &r.unclaimed {
        println!("unclaimed success: {i} -> {j}");
    }
    Ok(r.is_consistent())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Scenario { command: ScenarioCommand::Gen(a) } => scenario_gen(a).map(|_| true),
        Command::Solve(a) => solve(a).map(|_| true),
        Command::Sweep(a) => sweep(a).map(|_| true),
        Command::Fairness(a) => fairness(a).map(|_| true),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
