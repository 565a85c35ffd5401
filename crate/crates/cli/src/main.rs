use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use chc_modinc::analyzer::NodeKey;
use chc_modinc::bench::{
    emit_csv, emit_plot_data, plan_product, run_experiment_states, Direction, Experiment, ExperimentPlan, Mode,
    StepRecord,
};
use chc_modinc::domain::{AbsValue, DomainKind};
use chc_modinc::engine::{
    boundary_answers, default_entries, describe, load_state, mod_inc_analyze, parse_entries, save_state,
    state_to_dot, top_entry, DelStrategy, EngineOptions, EngineState, UnitProgram,
};
use chc_modinc::ir::{program_load_dir, sym, Diff, LoadMode, Program};
use chc_modinc::par::{par_map, with_threads};
use chc_modinc::Error;

const EXIT_ANALYSIS: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_FINGERPRINT: u8 = 4;

#[derive(Parser)]
#[command(name = "chc-modinc", version, about = "Incremental modular analysis of CHC programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a program directory from scratch and write the state.
    Analyze {
        dir: PathBuf,
        #[arg(long, default_value = "bit")]
        domain: DomainKind,
        #[arg(long, default_value = "mod_inc")]
        mode: Mode,
        #[arg(long, default_value = "td")]
        strategy: DelStrategy,
        /// Entry predicates, `name/arity` or `module:name/arity`, comma separated.
        #[arg(long)]
        entries: Option<String>,
        /// Module whose exports are the entries (default: the import root).
        #[arg(long)]
        root: Option<String>,
        #[arg(short, long, default_value = "state.json")]
        out: PathBuf,
    },
    /// Reanalyze after a change, reusing a saved state.
    Reanalyze {
        dir: PathBuf,
        #[arg(long)]
        state: PathBuf,
        /// JSON diff leading from the saved program to `dir`.
        #[arg(long, conflicts_with = "old")]
        diff: Option<PathBuf>,
        /// Directory with the sources the state was built from.
        #[arg(long, required_unless_present = "diff")]
        old: Option<PathBuf>,
        #[arg(long)]
        domain: Option<DomainKind>,
        #[arg(long, default_value = "td")]
        strategy: DelStrategy,
        /// Where to write the new state (default: overwrite `--state`).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Replay one-clause-at-a-time addition or deletion sequences.
    Bench {
        direction: Direction,
        dir: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "bit")]
        domains: Vec<DomainKind>,
        #[arg(long, value_delimiter = ',', default_value = "mon,mon_inc,mod,mod_inc")]
        modes: Vec<Mode>,
        #[arg(long, value_delimiter = ',', default_value = "td")]
        strategy: Vec<DelStrategy>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads for independent plans (0: all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Check every incremental step against a from-scratch run.
        #[arg(long)]
        verify: bool,
        /// CSV output; the plot data goes next to it as `.plot.json`.
        #[arg(short, long, default_value = "bench.csv")]
        out: PathBuf,
    },
    /// Print the graphs of a state file.
    Dump {
        state: PathBuf,
        #[arg(long, value_enum, default_value = "dot")]
        format: Format,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Json,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::FingerprintMismatch(_) => EXIT_FINGERPRINT,
        Error::EntrySyntax(_) | Error::BadEntry(_) | Error::UnknownModule(_) => EXIT_USAGE,
        Error::AtStep { source, .. } => exit_code(source),
        _ => EXIT_ANALYSIS,
    }
}

fn load(dir: &Path) -> Result<Program, Error> {
    if !dir.is_dir() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{}: not a directory", dir.display()),
        )));
    }
    program_load_dir(dir, LoadMode::Strict)
}

fn entries_for(p: &Program, domain: DomainKind, entries: Option<&str>, root: Option<&str>) -> Result<Vec<NodeKey>, Error> {
    match (entries, root) {
        (Some(spec), _) => parse_entries(p, spec, domain),
        (None, Some(r)) => {
            let name = sym(r);
            let m = p.module(&name).ok_or_else(|| Error::UnknownModule(name.clone()))?;
            Ok(m.exports.iter().map(|s| top_entry(p.resolve(&name, s), domain)).collect())
        }
        (None, None) => default_entries(p, domain),
    }
}

fn print_answers(units: &UnitProgram, answers: &BTreeMap<NodeKey, AbsValue>) {
    for (k, v) in answers {
        println!("{}", describe(units, k, v));
    }
}

fn analyze(
    dir: &Path,
    domain: DomainKind,
    mode: Mode,
    strategy: DelStrategy,
    entries: Option<&str>,
    root: Option<&str>,
    out: &Path,
) -> Result<(), Error> {
    let p = load(dir)?;
    let qalpha = entries_for(&p, domain, entries, root)?;
    let opts = EngineOptions::new(domain).layout(mode.layout()).strategy(strategy);
    let (state, stats) = mod_inc_analyze(&p, &qalpha, None, &Diff::default(), &opts)?;
    info!("{} clause evaluations", stats.clause_evals());
    save_state(&state, out)?;
    print_answers(&UnitProgram::new(&p, mode.layout()), &boundary_answers(&state));
    Ok(())
}

fn reanalyze(
    dir: &Path,
    state_path: &Path,
    diff: Option<&Path>,
    old: Option<&Path>,
    domain: Option<DomainKind>,
    strategy: DelStrategy,
    out: Option<&Path>,
) -> Result<(), Error> {
    let p = load(dir)?;
    let prev = load_state(state_path, domain)?;
    let d = match (diff, old) {
        (Some(f), _) => Diff::from_json(&fs::read_to_string(f)?)?,
        (None, Some(o)) => Diff::between(&load(o)?, &p)?,
        (None, None) => unreachable!("clap requires --diff or --old"),
    };
    let before = boundary_answers(&prev);
    let qalpha: Vec<NodeKey> = prev.entries.iter().cloned().collect();
    let opts = EngineOptions::new(prev.domain).layout(prev.layout).strategy(strategy);
    let (state, stats) = mod_inc_analyze(&p, &qalpha, Some(prev), &d, &opts)?;
    info!("{} clause evaluations, {} nodes deleted", stats.clause_evals(), stats.nodes_deleted);
    save_state(&state, out.unwrap_or(state_path))?;

    let units = UnitProgram::new(&p, state.layout);
    let after = boundary_answers(&state);
    let mut changed = 0;
    for (k, v) in &after {
        match before.get(k) {
            Some(w) if w == v => {}
            Some(w) => {
                changed += 1;
                let was = describe(&units, k, w);
                let was = was.rsplit_once(" -> ").map_or(was.as_str(), |(_, a)| a).to_string();
                println!("{} (was {was})", describe(&units, k, v));
            }
            None => {
                changed += 1;
                println!("{} (new)", describe(&units, k, v));
            }
        }
    }
    for (k, w) in before.iter().filter(|(k, _)| !after.contains_key(*k)) {
        changed += 1;
        println!("{} (gone)", describe(&units, k, w));
    }
    if changed == 0 {
        println!("no changes");
    }
    Ok(())
}

/// Per-step global graphs must agree across deletion strategies.
fn check_strategies(plans: &[ExperimentPlan], runs: &[Experiment]) -> Result<(), Error> {
    let mut groups: BTreeMap<(String, String), Vec<(&ExperimentPlan, &Experiment)>> = BTreeMap::new();
    for (plan, run) in plans.iter().zip(runs) {
        if plan.mode.incremental() {
            groups.entry((plan.domain.to_string(), plan.mode.to_string())).or_default().push((plan, run));
        }
    }
    for ((domain, mode), group) in groups {
        let Some(((first_plan, first), rest)) = group.split_first() else { continue };
        for (plan, run) in rest {
            for (i, (a, b)) in first.states.iter().zip(&run.states).enumerate() {
                if a.gag != b.gag {
                    return Err(Error::Verification {
                        step: i + 1,
                        detail: format!(
                            "{domain}/{mode}: {} and {} disagree on the global graph",
                            first_plan.strategy, plan.strategy
                        ),
                    });
                }
            }
        }
        if !rest.is_empty() {
            println!("{domain}/{mode}: strategies agree on every step");
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bench(
    direction: Direction,
    dir: &Path,
    domains: &[DomainKind],
    modes: &[Mode],
    strategies: &[DelStrategy],
    seed: u64,
    jobs: usize,
    verify: bool,
    out: &Path,
) -> Result<(), Error> {
    let p = load(dir)?;
    let name = dir.file_name().map_or_else(|| "program".to_string(), |n| n.to_string_lossy().into_owned());
    let plans = plan_product(&name, &p, direction, domains, modes, strategies, seed, verify);
    let compare = direction == Direction::Del && strategies.len() > 1;
    info!("running {} plans", plans.len());
    let runs = with_threads(jobs, || par_map(&plans, |plan| run_experiment_states(plan, compare)));
    let runs: Vec<Experiment> = runs.into_iter().collect::<Result<_, _>>()?;
    if compare {
        check_strategies(&plans, &runs)?;
    }
    let records: Vec<StepRecord> = runs.into_iter().flat_map(|r| r.records).collect();
    emit_csv(&records, out)?;
    let plot = out.with_extension("plot.json");
    emit_plot_data(&records, &plot)?;
    println!("{} plans, {} rows -> {} and {}", plans.len(), records.len(), out.display(), plot.display());
    Ok(())
}

fn dump(state: &Path, format: Format, out: Option<&Path>) -> Result<(), Error> {
    let s: EngineState = load_state(state, None)?;
    let text = match format {
        Format::Dot => state_to_dot(&s),
        Format::Json => s.to_json_string(),
    };
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("CHC_MODINC_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Analyze { dir, domain, mode, strategy, entries, root, out } => {
            analyze(dir, *domain, *mode, *strategy, entries.as_deref(), root.as_deref(), out)
        }
        Command::Reanalyze { dir, state, diff, old, domain, strategy, out } => {
            reanalyze(dir, state, diff.as_deref(), old.as_deref(), *domain, *strategy, out.as_deref())
        }
        Command::Bench { direction, dir, domains, modes, strategy, seed, jobs, verify, out } => {
            bench(*direction, dir, domains, modes, strategy, *seed, *jobs, *verify, out)
        }
        Command::Dump { state, format, out } => dump(state, *format, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = exit_code(&e);
            if code == EXIT_FINGERPRINT {
                eprintln!(
                    "hint: the sources do not match the saved state; pass --old with the sources it was built \
                     from, a --diff leading to the current sources, or run `analyze` again"
                );
            }
            ExitCode::from(code)
        }
    }
}
