use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rdars_core::campaign::{drop_ues, emit_csv, format_sig, run_campaign, summarize, Algorithm, Campaign, CsvOptions, Sweep};
use rdars_core::closed_form::{case2_cscc, proposition1_select, sparse_null_metric, DEFAULT_REGIME_FACTOR};
use rdars_core::array::feasible_sparsities;
use rdars_core::scenario::{watts_to_dbm, Scenario};
use rdars_core::validation::{run_all, Scale};

/// Sparsity and beamforming design for RDARS-aided multi-user downlink.
#[derive(Debug, Parser)]
#[command(name = "rdars", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo campaign; writes one CSV row per trial, sweep point and algorithm.
    Run(RunArgs),
    /// Two-UE correlation tables versus the sparsity level.
    Analyze(AnalyzeArgs),
    /// Runs the self-check suite and prints one line per check.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario file (TOML); built-in reference scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated: WA_OPT_ETA, COMPACT_ETA1, RANDOM_ETA, EXHAUSTIVE_ETA,
    /// SINGLE_UE_CLOSED, TWO_UE_PROP1.
    #[arg(long, default_value = "WA_OPT_ETA,COMPACT_ETA1,RANDOM_ETA")]
    algos: String,
    /// Power sweep, e.g. `ptot_dbm=10:40:5` (inclusive).
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Run trials one after another instead of on the thread pool.
    #[arg(long)]
    serial: bool,
    /// Leave the wall_ms column empty so reruns are byte-identical.
    #[arg(long)]
    no_wall_time: bool,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Two-UE analysis (the only analysis available).
    #[arg(long)]
    two_ue: bool,
    /// Tabulate over every feasible sparsity level.
    #[arg(long)]
    eta_sweep: bool,
    /// Seed for the UE drop when the scenario has no fixed positions.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Smaller trial counts.
    #[arg(long)]
    quick: bool,
}

fn load_scenario(path: Option<&Path>) -> Result<Scenario> {
    match path {
        Some(p) => Ok(Scenario::load(p)?),
        None => Ok(Scenario::reference_defaults()),
    }
}

fn run(args: RunArgs) -> Result<()> {
    let scenario = load_scenario(args.scenario.as_deref())?;
    let mut campaign = Campaign::new(scenario, args.trials, args.seed, Algorithm::parse_list(&args.algos)?);
    campaign.sweep = args.sweep.as_deref().map(Sweep::parse).transpose()?;
    campaign.parallel = !args.serial;
    let table = run_campaign(&campaign)?;
    emit_csv(&table, &args.out, CsvOptions { wall_time: !args.no_wall_time })?;

    println!(
        "{:>10}  {:<16} {:>5} {:>6} {:>12} {:>10} {:>12} {:>8} {:>10}",
        "ptot_dbm", "algorithm", "ok", "failed", "sum_rate", "std", "min_ue_rate", "iters", "wall_ms"
    );
    for cell in summarize(&table) {
        println!(
            "{:>10}  {:<16} {:>5} {:>6} {:>12.4} {:>10.4} {:>12.4} {:>8.1} {:>10.2}",
            format_sig(cell.sweep_value, 6),
            cell.algorithm.name(),
            cell.n_ok,
            cell.n_failed,
            cell.mean_sum_rate,
            cell.std_sum_rate,
            cell.mean_min_rate,
            cell.mean_iters,
            cell.mean_wall_ms
        );
    }
    let failed = table.records.iter().filter(|r| !r.succeeded()).count();
    if failed > 0 {
        eprintln!("warning: {failed} of {} rows failed; see the status column", table.records.len());
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    if !(args.two_ue && args.eta_sweep) {
        bail!("only the two-UE sparsity sweep is available: pass --two-ue --eta-sweep");
    }
    let mut scenario = load_scenario(args.scenario.as_deref())?;
    let ues = match &scenario.ue_pos {
        Some(p) if p.len() == 2 => p.clone(),
        Some(p) => bail!("two-UE analysis needs 2 UE positions, scenario lists {}", p.len()),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            drop_ues(scenario.ue_center, scenario.ue_radius, 2, &mut rng)?
        }
    };
    scenario.config.n_ues = 2;
    let cfg = &scenario.config;
    let geo = scenario.geometry(&ues)?;
    let selection = proposition1_select(&geo, cfg, DEFAULT_REGIME_FACTOR)?;
    let preferred = selection.preferred(&geo, cfg);
    let du = geo.u_ru_aod[1] - geo.u_ru_aod[0];

    let mut w = csv::Writer::from_path(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    w.write_record(["eta", "eps_distributed", "eps_bar", "in_selection", "preferred"])?;
    for eta in feasible_sparsities(cfg.n_elems, cfg.n_connected)? {
        let eps_distributed = sparse_null_metric(cfg.n_connected, eta, 1, cfg.spacing, cfg.wavelength, du);
        let eps_bar = case2_cscc(&geo, cfg, eta)?;
        w.write_record([
            eta.to_string(),
            format_sig(eps_distributed, 9),
            format_sig(eps_bar, 9),
            u8::from(selection.etas.contains(&eta)).to_string(),
            u8::from(eta == preferred).to_string(),
        ])?;
    }
    w.flush().with_context(|| format!("writing {}", args.out.display()))?;

    println!("UE positions: {:?}", ues);
    println!(
        "du = {:.6}, kappa_br = {:.3e}, regime ratio = {:.3e}, case {}{}",
        du,
        geo.kappa_br,
        selection.ratio,
        selection.case,
        if selection.fallback { " (nearest-null fallback)" } else { "" }
    );
    println!("selected levels {:?}, preferred {preferred}; P_tot = {} dBm", selection.etas, format_sig(watts_to_dbm(cfg.total_power), 6));
    println!("wrote {}", args.out.display());
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<bool> {
    let scale = if args.quick { Scale::Quick } else { Scale::Full };
    let checks = run_all(scale);
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{}/{} checks passed", checks.len() - failed, checks.len());
    Ok(failed == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a).map(|_| true),
        Command::Analyze(a) => analyze(a).map(|_| true),
        Command::Validate(a) => validate(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
