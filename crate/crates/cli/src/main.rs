//! `splitmerge`: run, inspect and verify split/merge coalition dynamics.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use splitmerge_core::config::{load_config, GameSource, InitialPartition, RunConfig};
use splitmerge_core::dynamics::{MergePolicy, StepMode, Verdict};
use splitmerge_core::generators::generators;
use splitmerge_core::oracle::{
    enumerate_partitions, enumerate_sfms, fixed_points, largest_weakly_invariant, zero_progress_set,
};
use splitmerge_core::shapley::{methods, negative_mass, sign_split};
use splitmerge_core::verify::{suites, SuiteReport};
use splitmerge_core::{save_game, Coalition, Game, Partition};

/// Exit code for failed hard verification checks.
const EXIT_FAILED: u8 = 1;
/// Exit code for bad input, unreadable files and cap violations.
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "splitmerge", version, about = "Shapley-fair split/merge coalition formation")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Tolerance for Shapley signs and merge surplus [default: 1e-9]
    #[arg(long, global = true, value_name = "TOL")]
    tol: Option<f64>,
    /// Step map: composite (split then merge closure) or atomic (one operation) [default: composite]
    #[arg(long, global = true, value_name = "MODE")]
    mode: Option<StepMode>,
    /// Merge pair choice: lex or random:<seed> [default: lex]
    #[arg(long, global = true, value_name = "POLICY")]
    policy: Option<MergePolicy>,
    /// Iteration budget [default: Bell(n), capped at 1000000]
    #[arg(long, global = true, value_name = "N")]
    max_iters: Option<usize>,
    /// Output path: a directory for `run`, a file otherwise
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the dynamics from an initial partition and emit trace and plot data
    Run(RunArgs),
    /// Print the Shapley values of one coalition
    Shapley(ShapleyArgs),
    /// Run a named verification suite; exits 1 if a hard check fails
    Verify(VerifyArgs),
    /// Write a generated game file
    Generate(GenerateArgs),
    /// List partitions of a game with a given property
    Enumerate(EnumerateArgs),
}

#[derive(Args)]
struct GameArgs {
    /// Game file (JSON)
    #[arg(long, value_name = "FILE", conflicts_with = "generator")]
    game: Option<PathBuf>,
    /// Generate the game with this generator instead
    #[arg(long, value_name = "KIND", value_parser = PossibleValuesParser::new(generators().names()))]
    generator: Option<String>,
    /// Generator parameter override; VALUE is read as JSON when it parses
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Generator seed
    #[arg(long, value_name = "SEED", default_value_t = 0)]
    game_seed: u64,
}

#[derive(Args)]
struct RunArgs {
    /// Run config (TOML); flags given alongside override its keys
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(flatten)]
    game: GameArgs,
    /// singletons, grand, random:<seed>, or nested labels like [[1,2],[3]]
    #[arg(long, value_name = "SPEC")]
    initial: Option<InitialPartition>,
}

#[derive(Args)]
struct ShapleyArgs {
    #[command(flatten)]
    game: GameArgs,
    /// Coalition as 1-based labels, e.g. 1,2,4 [default: all players]
    #[arg(long, value_name = "LABELS")]
    coalition: Option<String>,
    #[arg(long, default_value = "exact", value_parser = PossibleValuesParser::new(methods(1, 0).names()))]
    method: String,
    /// Permutations drawn by the sampled method
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Seed of the sampled method
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_parser = PossibleValuesParser::new(suites().names()))]
    suite: String,
    /// Random games per player count
    #[arg(long)]
    games: Option<usize>,
    /// Player counts, comma separated
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Random samples for sampled sweeps
    #[arg(long)]
    pairs: Option<usize>,
    /// Starting partitions per game
    #[arg(long)]
    starts: Option<usize>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(value_parser = PossibleValuesParser::new(generators().names()))]
    kind: String,
    /// Parameter override; VALUE is read as JSON when it parses
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Apply the minimal shift making every singleton value nonnegative
    #[arg(long)]
    shift: bool,
    /// Print the generator's parameter defaults and exit
    #[arg(long)]
    show_defaults: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Listing {
    Partitions,
    Sfms,
    FixedPoints,
    ZeroProgress,
    InvariantSet,
}

#[derive(Args)]
struct EnumerateArgs {
    what: Listing,
    #[command(flatten)]
    game: GameArgs,
    /// Player count, for `partitions` without a game
    #[arg(long)]
    n: Option<usize>,
}

fn parse_params(pairs: &[String]) -> Result<Value> {
    let mut map = Map::new();
    for pair in pairs {
        let (key, raw) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("parameter `{pair}` is not KEY=VALUE"))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        map.insert(key.trim().to_string(), value);
    }
    Ok(Value::Object(map))
}

impl GameArgs {
    fn source(&self) -> Result<Option<GameSource>> {
        if let Some(file) = &self.game {
            return Ok(Some(GameSource::File { file: file.clone() }));
        }
        if let Some(generator) = &self.generator {
            return Ok(Some(GameSource::Generator {
                generator: generator.clone(),
                params: parse_params(&self.params)?,
                seed: self.game_seed,
            }));
        }
        if !self.params.is_empty() {
            bail!("--param needs --generator");
        }
        Ok(None)
    }

    fn load(&self) -> Result<Game> {
        let source = self
            .source()?
            .ok_or_else(|| anyhow!("give a game with --game or --generator"))?;
        Ok(source.resolve(Path::new(""))?)
    }
}

fn write_or_print(out: Option<&Path>, body: &str, stdout: &mut String) -> Result<()> {
    match out {
        Some(path) => fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => {
            stdout.push_str(body);
            Ok(())
        }
    }
}

fn describe_verdict(v: &Verdict) -> String {
    match *v {
        Verdict::FixedPoint { t } => format!("fixed point at t={t}"),
        Verdict::Cycle { entry, period } => format!("cycle of period {period} entered at t={entry}"),
        Verdict::Truncated { max_iters } => format!("truncated after {max_iters} iterations"),
    }
}

fn cmd_run(g: &Global, args: &RunArgs, stdout: &mut String) -> Result<u8> {
    let (mut cfg, base) = match &args.config {
        Some(path) => load_config(path).with_context(|| format!("loading {}", path.display()))?,
        None => {
            let source = args
                .game
                .source()?
                .ok_or_else(|| anyhow!("give --config, --game or --generator"))?;
            (RunConfig::new(source), PathBuf::new())
        }
    };
    if args.config.is_some() {
        if let Some(source) = args.game.source()? {
            cfg.game = source;
        }
    }
    if let Some(initial) = &args.initial {
        cfg.initial = initial.clone();
    }
    if let Some(tol) = g.tol {
        cfg.tol = tol;
    }
    if let Some(mode) = g.mode {
        cfg.mode = mode;
    }
    if let Some(policy) = g.policy {
        cfg.policy = policy;
    }
    if g.max_iters.is_some() {
        cfg.max_iters = g.max_iters;
    }
    let out = match &g.out {
        Some(dir) => Some(dir.clone()),
        None => cfg.out.as_ref().map(|dir| base.join(dir)),
    };

    let outcome = cfg.execute(&base)?;
    let s = outcome.summary();
    writeln!(
        stdout,
        "game: {} ({} players, {})",
        s.game.as_deref().unwrap_or("unnamed"),
        s.n,
        s.fingerprint
    )?;
    writeln!(
        stdout,
        "mode: {}  policy: {}  tol: {:e}",
        s.options.mode, s.options.policy, s.options.tol
    )?;
    writeln!(stdout, "initial: {}", s.initial)?;
    writeln!(stdout, "verdict: {}", describe_verdict(&s.verdict))?;
    writeln!(stdout, "final partition: {}", s.final_partition)?;
    writeln!(stdout, "final Psi: {}  final Phi: {}", s.psi, s.phi)?;
    match s.iterations_to_invariance {
        Some(t) => writeln!(stdout, "iterations to invariance: {t}")?,
        None => writeln!(stdout, "iterations to invariance: not reached")?,
    }
    if s.truncated {
        writeln!(
            stdout,
            "truncated: yes (no fixed point or cycle within {} iterations)",
            s.options.max_iters
        )?;
    }
    if let Some(dir) = out {
        for path in outcome.write_outputs(&dir)? {
            writeln!(stdout, "wrote {}", path.display())?;
        }
        // The resolved config replays this run from anywhere.
        let mut replay = cfg.clone();
        replay.out = None;
        if let GameSource::File { file } = &mut replay.game {
            *file = fs::canonicalize(base.join(&*file))?;
        }
        let path = dir.join("config.toml");
        fs::write(&path, replay.to_toml())?;
        writeln!(stdout, "wrote {}", path.display())?;
    }
    Ok(0)
}

fn cmd_shapley(g: &Global, args: &ShapleyArgs, stdout: &mut String) -> Result<u8> {
    let game = args.game.load()?;
    let s = match &args.coalition {
        Some(text) => Coalition::parse_labels(text, game.n())?,
        None => game.grand(),
    };
    let registry = methods(args.samples, args.seed);
    let est = registry.get(&args.method)?.compute(&game, s)?;
    let tol = g.tol.unwrap_or(splitmerge_core::shapley::DEFAULT_TOL);
    let split = sign_split(&est.vector, tol);
    let theta = negative_mass(&est.vector);

    writeln!(stdout, "coalition {s}  v(S) = {}  method {}", game.v(s), args.method)?;
    for (k, (i, phi)) in est.vector.iter().enumerate() {
        match &est.std_errors {
            Some(se) => writeln!(stdout, "  phi[{}] = {phi}  (se {})", i + 1, se[k])?,
            None => writeln!(stdout, "  phi[{}] = {phi}", i + 1)?,
        }
    }
    writeln!(stdout, "Theta = {theta}")?;
    writeln!(stdout, "P+ = {}", split.positive)?;
    writeln!(stdout, "P- = {}", split.negative)?;
    if let Some(path) = &g.out {
        let report = json!({
            "coalition": s.labels(),
            "value": game.v(s),
            "method": args.method,
            "phi": est.vector,
            "std_errors": est.std_errors,
            "theta": theta,
            "positive": split.positive.labels(),
            "negative": split.negative.labels(),
            "tol": tol,
        });
        fs::write(path, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    Ok(0)
}

fn print_report(report: &SuiteReport, stdout: &mut String) -> Result<()> {
    let status = if report.passed { "PASS" } else { "FAIL" };
    writeln!(
        stdout,
        "{}: {status}  ({} checks, {} failed, {} findings)",
        report.suite, report.checks, report.failure_count, report.findings
    )?;
    if let Value::Object(details) = &report.details {
        for (key, value) in details {
            if !value.is_object() && !value.is_array() {
                writeln!(stdout, "  {key}: {value}")?;
            }
        }
    }
    for failure in report.failures.iter().take(10) {
        writeln!(stdout, "  failed: {failure}")?;
    }
    if report.failures.len() > 10 {
        writeln!(stdout, "  ... {} more failures", report.failure_count - 10)?;
    }
    Ok(())
}

fn cmd_verify(g: &Global, args: &VerifyArgs, stdout: &mut String) -> Result<u8> {
    let registry = suites();
    let suite = registry.get(&args.suite)?;
    let mut p = suite.defaults();
    if let Some(games) = args.games {
        p.games = games;
    }
    if let Some(n) = &args.n {
        p.n = n.clone();
    }
    if let Some(seed) = args.seed {
        p.seed = seed;
    }
    if let Some(pairs) = args.pairs {
        p.pairs = pairs;
    }
    if let Some(starts) = args.starts {
        p.starts = starts;
    }
    if let Some(tol) = g.tol {
        p.tol = tol;
    }
    if let Some(mode) = g.mode {
        p.mode = mode;
    }
    let report = suite.run(&p)?;
    print_report(&report, stdout)?;
    if let Some(path) = &g.out {
        fs::write(path, serde_json::to_string_pretty(&report)? + "\n")?;
        writeln!(stdout, "wrote {}", path.display())?;
    }
    Ok(if report.passed { 0 } else { EXIT_FAILED })
}

fn cmd_generate(g: &Global, args: &GenerateArgs, stdout: &mut String) -> Result<u8> {
    let registry = generators();
    let generator = registry.get(&args.kind)?;
    if args.show_defaults {
        writeln!(stdout, "{}", serde_json::to_string_pretty(&generator.defaults())?)?;
        return Ok(0);
    }
    let mut game = generator.generate(&parse_params(&args.params)?, args.seed)?;
    if args.shift {
        game = game.shift_to_nonneg_singletons().0;
    }
    let negative = game.check_assumption1();
    if negative.is_empty() {
        eprintln!("all singleton values nonnegative");
    } else {
        let labels: Vec<String> = negative.iter().map(|p| p.to_string()).collect();
        eprintln!("negative singleton values for players {}", labels.join(","));
    }
    write_or_print(g.out.as_deref(), &save_game(&game), stdout)?;
    Ok(0)
}

fn cmd_enumerate(g: &Global, args: &EnumerateArgs, stdout: &mut String) -> Result<u8> {
    let tol = g.tol.unwrap_or(splitmerge_core::shapley::DEFAULT_TOL);
    let listing: Vec<Partition> = match args.what {
        Listing::Partitions => {
            let n = match (args.n, args.game.source()?) {
                (Some(n), _) => n,
                (None, Some(_)) => args.game.load()?.n(),
                (None, None) => bail!("give --n or a game"),
            };
            enumerate_partitions(n)?.collect()
        }
        Listing::Sfms => enumerate_sfms(&args.game.load()?, tol)?,
        Listing::FixedPoints => fixed_points(&args.game.load()?, tol)?.fixed_points,
        Listing::ZeroProgress => zero_progress_set(&args.game.load()?, tol)?.into_iter().collect(),
        Listing::InvariantSet => largest_weakly_invariant(&args.game.load()?, tol)?.into_iter().collect(),
    };
    let mut body = String::new();
    for p in &listing {
        body.push_str(&p.to_string());
        body.push('\n');
    }
    write_or_print(g.out.as_deref(), &body, stdout)?;
    eprintln!("count: {}", listing.len());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = String::new();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(&cli.global, args, &mut stdout),
        Command::Shapley(args) => cmd_shapley(&cli.global, args, &mut stdout),
        Command::Verify(args) => cmd_verify(&cli.global, args, &mut stdout),
        Command::Generate(args) => cmd_generate(&cli.global, args, &mut stdout),
        Command::Enumerate(args) => cmd_enumerate(&cli.global, args, &mut stdout),
    };
    // A closed pipe (`| head`) is a normal way for a reader to stop.
    let mut handle = io::stdout().lock();
    if let Err(e) = handle.write_all(stdout.as_bytes()).and_then(|_| handle.flush()) {
        if e.kind() != io::ErrorKind::BrokenPipe {
            eprintln!("error: writing output: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    }
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
