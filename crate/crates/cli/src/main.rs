use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use pts_core::agents::{best_response, AgentProfile, ReportMap};
use pts_core::analysis::{
    strategy_map, truthfulness_threshold, verify_expost_equilibrium, verify_truthful_equilibrium,
};
use pts_core::config::parse_config;
use pts_core::mechanism::{check_arbitrage_free, decompose_consensus, STRUCTURE_TOLERANCE};
use pts_core::presets::{run_preset, PresetOutcome, PRESET_NAMES};
use pts_core::sampling::SelfPredictingTypes;
use pts_core::text::format_g12;
use pts_core::{run_simulation, Distribution, SimConfig};

const EXIT_EXPECTATION: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Sampled types per profile in `verify`.
const VERIFY_SAMPLES: usize = 1000;

#[derive(Parser)]
#[command(name = "pts", version, about = "Simulate and verify peer-consistency payment mechanisms")]
struct Cli {
    /// Overrides the seed of the scenario or preset.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its trace and summary.
    Simulate { config: PathBuf },
    /// Check incentive properties of a scenario at its starting histogram.
    Verify { config: PathBuf },
    /// Print each profile's payoffs and best response for one observation.
    BestResponse {
        config: PathBuf,
        #[arg(long)]
        observe: String,
    },
    /// Run named presets (`all` runs every preset).
    Preset {
        #[arg(required = true)]
        names: Vec<String>,
        /// Run the presets concurrently.
        #[arg(long)]
        parallel: bool,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Expectation(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Expectation(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(EXIT_EXPECTATION)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Simulate { config } => simulate(cli, config),
        Command::Verify { config } => verify(cli, config),
        Command::BestResponse { config, observe } => best_response_cmd(cli, config, observe),
        Command::Preset { names, parallel } => presets(cli, names, *parallel),
    }
}

fn load(cli: &Cli, path: &Path) -> anyhow::Result<SimConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config = parse_config(&text).with_context(|| format!("in {}", path.display()))?;
    Ok(match cli.seed {
        Some(seed) => config.with_seed(seed),
        None => config,
    })
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned())
}

fn write(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn simulate(cli: &Cli, path: &Path) -> Result<(), Failure> {
    let config = load(cli, path)?;
    let trace = run_simulation(&config).map_err(|e| anyhow!(e))?;
    let name = stem(path);
    write(&cli.out_dir, &format!("{name}.trace.csv"), &trace.to_csv())?;
    let summary = trace.summary_text();
    write(&cli.out_dir, &format!("{name}.summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn initial_public(config: &SimConfig) -> anyhow::Result<Distribution> {
    Distribution::normalize(&config.histogram_init).map_err(|e| anyhow!(e))
}

fn verify(cli: &Cli, path: &Path) -> Result<(), Failure> {
    let config = load(cli, path)?;
    let public = initial_public(&config)?;
    let space = &config.space;
    let mut out = format!("seed = {}\npublic = {}\n", config.seed, join(public.probs()));
    match check_arbitrage_free(&config.payment, &public, STRUCTURE_TOLERANCE) {
        Ok(c) => out.push_str(&format!("arbitrage_free = yes\narbitrage_free.constant = {}\n", format_g12(c))),
        Err(v) => out.push_str(&format!(
            "arbitrage_free = no\narbitrage_free.max = {} {}\narbitrage_free.min = {} {}\n",
            space.label(v.max_report),
            format_g12(v.max_value),
            space.label(v.min_report),
            format_g12(v.min_value)
        )),
    }
    match decompose_consensus(&config.payment, &public, STRUCTURE_TOLERANCE) {
        Ok(form) => out.push_str(&format!(
            "consensus_form = yes\nconsensus_form.c = {}\nconsensus_form.f = {}\n",
            format_g12(form.scale),
            join(&form.offsets)
        )),
        Err(v) => out.push_str(&format!("consensus_form = no\nconsensus_form.violation = {v:?}\n")),
    }
    for entry in &config.population {
        let belief = entry.profile.beliefs.belief_at(&public, &config.truth).map_err(|e| anyhow!(e))?;
        let prefix = format!("profile.{}", entry.name);
        out.push('\n');
        out.push_str(&format!("{prefix}.strategy = {}\n", entry.profile.strategy.name()));
        out.push_str(&format!("{prefix}.self_predicting = {}\n", belief.is_self_predicting()));
        out.push_str(&format!("{prefix}.self_dominating = {}\n", belief.is_self_dominating()));
        if let Ok(th) = truthfulness_threshold(&belief) {
            out.push_str(&format!("{prefix}.truthfulness_threshold = {}\n", format_g12(th)));
        }
        let truthful = verify_truthful_equilibrium(&config.payment, &belief, &public, STRUCTURE_TOLERANCE);
        out.push_str(&indent(&prefix, &truthful.to_text(space)));
        if strategy_map(&entry.profile.strategy, belief.prior(), &public).is_ok() {
            let sampled = verify_expost_equilibrium(
                &config.payment,
                &entry.profile.strategy,
                belief.prior(),
                &SelfPredictingTypes,
                &public,
                VERIFY_SAMPLES,
                config.seed,
            )
            .map_err(|e| anyhow!(e))?;
            out.push_str(&indent(&prefix, &sampled.to_text(space)));
        }
    }
    write(&cli.out_dir, &format!("{}.verify.txt", stem(path)), &out)?;
    print!("{out}");
    Ok(())
}

fn indent(prefix: &str, text: &str) -> String {
    let claim = text.lines().next().and_then(|l| l.strip_prefix("claim = ")).unwrap_or("claim");
    text.lines().map(|l| format!("{prefix}.{claim}.{l}\n")).collect()
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format_g12(*v)).collect::<Vec<_>>().join(" ")
}

fn best_response_cmd(cli: &Cli, path: &Path, observe: &str) -> Result<(), Failure> {
    let config = load(cli, path)?;
    let space = &config.space;
    let o = space
        .index_of(observe)
        .ok_or_else(|| anyhow!("`{observe}` is not an answer (expected one of {})", space.labels().join(", ")))?;
    let public = initial_public(&config)?;
    let mut out = format!("observe = {observe}\npublic = {}\n", join(public.probs()));
    for entry in &config.population {
        let AgentProfile { strategy, beliefs } = &entry.profile;
        let posterior = beliefs.posterior_at(&public, &config.truth, o).map_err(|e| anyhow!(e))?;
        let br = best_response(&posterior, &config.payment, &public, &ReportMap::truthful(space.len()));
        let played = entry.profile.report(o, &public, &config.truth, &config.payment).map_err(|e| anyhow!(e))?;
        let prefix = format!("profile.{}", entry.name);
        for (r, v) in br.payoffs.iter().enumerate() {
            out.push_str(&format!("{prefix}.payoff.{} = {}\n", space.label(r), format_g12(*v)));
        }
        out.push_str(&format!("{prefix}.best_response = {}\n", space.label(br.report)));
        out.push_str(&format!("{prefix}.strategy = {}\n", strategy.name()));
        out.push_str(&format!("{prefix}.report = {}\n", space.label(played)));
    }
    print!("{out}");
    Ok(())
}

fn presets(cli: &Cli, names: &[String], parallel: bool) -> Result<(), Failure> {
    let names: Vec<String> = if names.iter().any(|n| n == "all") {
        PRESET_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        names.to_vec()
    };
    for name in &names {
        if !PRESET_NAMES.contains(&name.as_str()) {
            return Err(Failure::Usage(anyhow!(
                "unknown preset `{name}` (expected one of: {})",
                PRESET_NAMES.join(", ")
            )));
        }
    }
    let run_one = |name: &String| run_preset(name, cli.seed).map_err(|e| anyhow!(e));
    let outcomes: Vec<anyhow::Result<PresetOutcome>> = if parallel {
        names.par_iter().map(run_one).collect()
    } else {
        names.iter().map(run_one).collect()
    };
    let mut failed = Vec::new();
    for outcome in outcomes {
        let outcome = outcome?;
        for (file, contents) in &outcome.files {
            write(&cli.out_dir, file, contents)?;
        }
        let status = if outcome.passed() { "pass" } else { "FAIL" };
        println!("{status} {} (seed {})", outcome.name, outcome.seed);
        for e in outcome.failures() {
            println!("  violated {}: {} [{}]", e.name, e.detail, e.anchor);
            failed.push(format!("{}.{}", outcome.name, e.name));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Expectation(format!("expectations failed: {}", failed.join(", "))))
    }
}
