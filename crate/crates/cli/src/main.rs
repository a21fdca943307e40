//! `perclab` experiment runner.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use config::*;
use error::CliError;
use output::{sha256_hex, Manifest, Outputs, SCHEMA_VERSION};

#[derive(Parser, Debug)]
#[command(name = "perclab", version, about = "Critical percolation experiments on Z^d")]
struct Cli {
    /// TOML file with top-level `seed`/`out` and one table per subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cluster-size histogram and tail exponent.
    Sizes(SizesOpts),
    /// Conditional two-point profile.
    Qn(QnOpts),
    /// Conditional three-point profile.
    Q3(Q3Opts),
    /// ISE transforms and densities.
    Ise(IseOpts),
    /// Main-term coefficients by two routes.
    Coeff(CoeffOpts),
    /// Randomized checks of the analytic lemmas.
    Lemmas(LemmasOpts),
    /// Triangle and square diagrams.
    Diagrams(DiagramsOpts),
    /// Critical point estimate.
    Pc(PcOpts),
    /// Galton-Watson progeny law.
    Tree(TreeOpts),
    /// Two-point profile against the ISE.
    CompareQn(CompareQnOpts),
    /// Three-point profile against the ISE.
    CompareQ3(CompareQ3Opts),
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    out: Option<PathBuf>,
    sizes: SizesOpts,
    qn: QnOpts,
    q3: Q3Opts,
    ise: IseOpts,
    coeff: CoeffOpts,
    lemmas: LemmasOpts,
    diagrams: DiagramsOpts,
    pc: PcOpts,
    tree: TreeOpts,
    compare_qn: CompareQnOpts,
    compare_q3: CompareQ3Opts,
}

/// The fully resolved run, written back as `config.toml`.
#[derive(Serialize)]
struct Resolved<T: Serialize> {
    seed: u64,
    #[serde(flatten)]
    table: std::collections::BTreeMap<String, T>,
}

const DEFAULT_SEED: u64 = 1;

fn load(path: &Path) -> Result<FileConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn resolved_text<T: Serialize>(name: String, seed: u64, opts: &T) -> Result<String, CliError> {
    let r = Resolved { seed, table: [(name, opts)].into_iter().collect() };
    toml::to_string(&r).map_err(|e| CliError::Config(e.to_string()))
}

type Runner<T> = fn(&T, u64, &mut Outputs) -> Result<Value, CliError>;

struct Run<'a> {
    command: &'static str,
    seed: u64,
    out: &'a Path,
    started: Instant,
    started_unix: u64,
}

impl Run<'_> {
    fn go<T: Serialize>(&self, opts: T, runner: Runner<T>) -> Result<(), CliError> {
        let text = resolved_text(self.command.replace('-', "_"), self.seed, &opts)?;
        let mut outputs = Outputs::new(self.out)?;
        outputs.text("config.toml", &text)?;
        let result = runner(&opts, self.seed, &mut outputs);
        let (status, summary, err) = match &result {
            Ok(v) => ("ok", v.clone(), None),
            Err(e) => (e.status(), Value::Null, Some(e.to_string())),
        };
        let config: Value = toml::from_str::<toml::Value>(&text)
            .ok()
            .and_then(|v| serde_json::to_value(v).ok())
            .unwrap_or(Value::Null);
        let manifest = Manifest {
            command: self.command,
            status,
            partial: result.is_err(),
            error: err,
            seed: self.seed,
            config_sha256: sha256_hex(&text),
            config,
            schema_version: SCHEMA_VERSION,
            versions: json!({ "perclab": env!("CARGO_PKG_VERSION") }),
            started_unix: self.started_unix,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            outputs: outputs.written(),
            summary,
        };
        let body = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(self.out.join("manifest.json"), body)?;
        result.map(|_| ())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("perclab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => load(p)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let out = cli.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let r = Run {
        command: command_name(&cli.command),
        seed,
        out: &out,
        started: Instant::now(),
        started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    match cli.command {
        Command::Sizes(o) => r.go(o.resolve(file.sizes), commands::sizes),
        Command::Qn(o) => r.go(o.resolve(file.qn), commands::qn),
        Command::Q3(o) => r.go(o.resolve(file.q3), commands::q3),
        Command::Ise(o) => r.go(o.resolve(file.ise), commands::ise),
        Command::Coeff(o) => r.go(o.resolve(file.coeff), commands::coeff),
        Command::Lemmas(o) => r.go(o.resolve(file.lemmas), commands::lemmas),
        Command::Diagrams(o) => r.go(o.resolve(file.diagrams), commands::diagrams),
        Command::Pc(o) => r.go(o.resolve(file.pc), commands::pc),
        Command::Tree(o) => r.go(o.resolve(file.tree), commands::tree),
        Command::CompareQn(o) => r.go(o.resolve(file.compare_qn), commands::compare_qn),
        Command::CompareQ3(o) => r.go(o.resolve(file.compare_q3), commands::compare_q3),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Sizes(_) => "sizes",
        Command::Qn(_) => "qn",
        Command::Q3(_) => "q3",
        Command::Ise(_) => "ise",
        Command::Coeff(_) => "coeff",
        Command::Lemmas(_) => "lemmas",
        Command::Diagrams(_) => "diagrams",
        Command::Pc(_) => "pc",
        Command::Tree(_) => "tree",
        Command::CompareQn(_) => "compare-qn",
        Command::CompareQ3(_) => "compare-q3",
    }
}
