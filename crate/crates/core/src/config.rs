//! Run configuration files (TOML) and their execution.
//!
//! ```toml
//! mode = "atomic"
//! tol = 1e-9
//! policy = "lex"
//! initial = "random:26"
//!
//! [game]
//! generator = "case-study"
//! seed = 0
//! params = { n = 10 }
//! ```
//!
//! `game` may instead be `{ file = "g2.json" }`; relative paths resolve
//! against the directory holding the config file. `initial` is
//! `"singletons"`, `"grand"`, `"random:<seed>"` or a nested list of 1-based
//! labels such as `[[1, 2], [3]]`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{default_max_iters, run, MergePolicy, RunOptions, StepMode, Trace, Verdict};
use crate::error::{Error, Result};
use crate::game::{load_game, Game, Partition};
use crate::generators::generators;
use crate::oracle::random_partition;
use crate::rng::Stream;
use crate::shapley::DEFAULT_TOL;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameSource {
    File {
        file: PathBuf,
    },
    Generator {
        generator: String,
        #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
        params: serde_json::Value,
        #[serde(default)]
        seed: u64,
    },
}

impl GameSource {
    /// Loads or generates the game; `base` anchors relative file paths.
    pub fn resolve(&self, base: &Path) -> Result<Game> {
        match self {
            GameSource::File { file } => {
                let path = base.join(file);
                let text = fs::read_to_string(&path)
                    .map_err(|e| Error::format(format!("cannot read game file {}: {e}", path.display())))?;
                load_game(&text)
            }
            GameSource::Generator {
                generator,
                params,
                seed,
            } => generators().get(generator)?.generate(params, *seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum InitialPartition {
    #[default]
    Singletons,
    Grand,
    Random {
        seed: u64,
    },
    Explicit(Vec<Vec<usize>>),
}

impl InitialPartition {
    pub fn resolve(&self, n: usize) -> Result<Partition> {
        match self {
            InitialPartition::Singletons => Ok(Partition::singletons(n)),
            InitialPartition::Grand => Ok(Partition::grand(n)),
            InitialPartition::Random { seed } => Ok(random_partition(n, &mut Stream::new(*seed))),
            InitialPartition::Explicit(nested) => Partition::from_nested(nested, n),
        }
    }
}

impl fmt::Display for InitialPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialPartition::Singletons => f.write_str("singletons"),
            InitialPartition::Grand => f.write_str("grand"),
            InitialPartition::Random { seed } => write!(f, "random:{seed}"),
            InitialPartition::Explicit(nested) => {
                f.write_str(&serde_json::to_string(nested).expect("nested labels serialize"))
            }
        }
    }
}

impl FromStr for InitialPartition {
    type Err = Error;

    /// Also accepts the nested JSON form, e.g. `[[1,2],[3]]`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('[') {
            return serde_json::from_str(s)
                .map(InitialPartition::Explicit)
                .map_err(|e| Error::format(format!("initial partition: {e}")));
        }
        match s.split_once(':') {
            None if s == "singletons" => Ok(InitialPartition::Singletons),
            None if s == "grand" => Ok(InitialPartition::Grand),
            Some(("random", seed)) => seed
                .parse()
                .map(|seed| InitialPartition::Random { seed })
                .map_err(|_| Error::format(format!("bad initial partition seed `{seed}`"))),
            _ => Err(Error::UnknownName {
                kind: "initial partition",
                name: s.to_string(),
                known: "singletons, grand, random:<seed>, [[...], ...]".into(),
            }),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum InitialRepr {
    Named(String),
    Explicit(Vec<Vec<usize>>),
}

impl Serialize for InitialPartition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            InitialPartition::Explicit(nested) => InitialRepr::Explicit(nested.clone()).serialize(s),
            other => s.collect_str(other),
        }
    }
}

impl<'de> Deserialize<'de> for InitialPartition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match InitialRepr::deserialize(d)? {
            InitialRepr::Named(s) => s.parse().map_err(serde::de::Error::custom),
            InitialRepr::Explicit(nested) => Ok(InitialPartition::Explicit(nested)),
        }
    }
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

/// Everything needed to replay a run. Keys mirror the CLI flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub game: GameSource,
    #[serde(default)]
    pub initial: InitialPartition,
    #[serde(default)]
    pub mode: StepMode,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub policy: MergePolicy,
    /// Defaults to `Bell(n)`, capped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    /// Output directory for trace, plot tables and summary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(game: GameSource) -> Self {
        RunConfig {
            game,
            initial: InitialPartition::default(),
            mode: StepMode::default(),
            tol: DEFAULT_TOL,
            policy: MergePolicy::default(),
            max_iters: None,
            out: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::format(format!("run config: {e}")))?;
        if !(cfg.tol.is_finite() && cfg.tol >= 0.0) {
            return Err(Error::domain(format!("tol must be finite and >= 0, got {}", cfg.tol)));
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn options(&self, n: usize) -> RunOptions {
        RunOptions {
            mode: self.mode,
            tol: self.tol,
            policy: self.policy,
            max_iters: self.max_iters.unwrap_or_else(|| default_max_iters(n)),
        }
    }

    /// Resolves the game and start, then runs. `base` anchors relative paths.
    pub fn execute(&self, base: &Path) -> Result<RunOutcome> {
        let game = self.game.resolve(base)?;
        let start = self.initial.resolve(game.n())?;
        let options = self.options(game.n());
        let trace = run(&game, &start, &options);
        Ok(RunOutcome { game, options, trace })
    }
}

/// Reads a config file; returns it with the directory its paths are relative to.
pub fn load_config(path: &Path) -> Result<(RunConfig, PathBuf)> {
    let text = fs::read_to_string(path)?;
    let cfg = RunConfig::parse(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

pub struct RunOutcome {
    pub game: Game,
    pub options: RunOptions,
    pub trace: Trace,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub game: Option<String>,
    pub fingerprint: String,
    pub n: usize,
    pub options: RunOptions,
    pub initial: Partition,
    pub verdict: Verdict,
    pub final_partition: Partition,
    pub psi: f64,
    pub phi: f64,
    pub iterations: usize,
    /// First iteration inside the terminal fixed point or cycle.
    pub iterations_to_invariance: Option<usize>,
    pub truncated: bool,
}

impl RunOutcome {
    pub fn summary(&self) -> RunSummary {
        let last = self.trace.last();
        RunSummary {
            game: self.game.name().map(str::to_string),
            fingerprint: self.game.fingerprint(),
            n: self.game.n(),
            options: self.options,
            initial: self.trace.steps[0].partition.clone(),
            verdict: self.trace.verdict,
            final_partition: last.partition.clone(),
            psi: last.psi,
            phi: last.phi,
            iterations: self.trace.transitions(),
            iterations_to_invariance: self.trace.verdict.entry(),
            truncated: !self.trace.verdict.is_finite(),
        }
    }

    /// Writes `trace.jsonl`, `plot.csv`, `membership.csv` and
    /// `summary.json` into `dir`, returning the paths written.
    pub fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let summary = serde_json::to_string_pretty(&self.summary()).expect("summary serializes") + "\n";
        let files = [
            ("trace.jsonl", self.trace.to_jsonl()),
            ("plot.csv", self.trace.plot_csv()),
            ("membership.csv", self.trace.membership_csv()),
            ("summary.json", summary),
        ];
        let mut written = Vec::new();
        for (name, body) in files {
            let path = dir.join(name);
            fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }
}
