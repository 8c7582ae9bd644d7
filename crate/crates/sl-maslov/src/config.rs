//! Run configuration: command-line flags over an optional JSON file over
//! built-in defaults.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sl_maslov_core::Tolerances;

use crate::bundled;
use crate::error::CliError;
use crate::format::{parse_json, BcSpec, ProblemFile};

pub const CONFIG_SCHEMA: &str = "sl-maslov/config/v1";

/// Environment variable holding the default output directory.
pub const OUT_ENV: &str = "SL_MASLOV_OUT";
pub const DEFAULT_OUT: &str = "sl-maslov-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Maslov,
    Jump,
    Range,
    Limit,
    Axioms,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Maslov => "maslov",
            Command::Jump => "jump",
            Command::Range => "range",
            Command::Limit => "limit",
            Command::Axioms => "axioms",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    #[default]
    Shooting,
    Galerkin,
}

/// Singular path used by `jump`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum JumpPath {
    /// Tan-path of the boundary condition closed up through `L_D`.
    #[default]
    DirichletLoop,
    /// Random path of layer `r` whose layer rises by `q` at `s = 0`.
    Random,
}

#[derive(Debug, Default, Parser)]
#[command(
    name = "sl-maslov",
    version,
    about = "Spectra and Maslov-index experiments for Sturm-Liouville systems"
)]
pub struct Cli {
    /// Problem file, or `bundled:<name>`.
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long, value_enum)]
    pub command: Option<Command>,
    /// Named boundary condition or a JSON file.
    #[arg(long)]
    pub bc: Option<String>,
    /// Spectral window `lo,hi`.
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<String>,
    /// Number of eigenvalues when no window is given.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<SolveMethod>,
    /// Galerkin elements.
    #[arg(long)]
    pub mesh: Option<usize>,
    #[arg(long)]
    pub j: Option<usize>,
    #[arg(long)]
    pub r: Option<usize>,
    /// Layer increase of a random jump path at `s = 0`.
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol_lambda: Option<f64>,
    #[arg(long)]
    pub tol_rank: Option<f64>,
    /// Most negative `lambda` for `limit` and `jump`.
    #[arg(long, allow_hyphen_values = true)]
    pub floor: Option<f64>,
    #[arg(long)]
    pub j_max: Option<usize>,
    /// Random paths per axiom.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_enum)]
    pub path: Option<JumpPath>,
    /// Output directory; defaults to `$SL_MASLOV_OUT`, then `sl-maslov-out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub rank: Option<f64>,
    pub unit: Option<f64>,
    pub symp: Option<f64>,
    pub eig: Option<f64>,
    pub lambda: Option<f64>,
    pub integrator: Option<f64>,
}

/// Contents of a `--config` file. Relative paths are taken relative to the
/// file.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub schema: Option<String>,
    pub problem: Option<String>,
    pub command: Option<Command>,
    pub bc: Option<String>,
    pub window: Option<[f64; 2]>,
    pub count: Option<usize>,
    pub method: Option<SolveMethod>,
    pub mesh: Option<usize>,
    pub j: Option<usize>,
    pub r: Option<usize>,
    pub q: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub tolerances: Option<ToleranceOverrides>,
    pub floor: Option<f64>,
    pub j_max: Option<usize>,
    pub trials: Option<usize>,
    pub path: Option<JumpPath>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: FileConfig = parse_json(&text, &path.display().to_string())?;
        if let Some(s) = &cfg.schema {
            if s != CONFIG_SCHEMA {
                return Err(CliError::invalid(
                    "schema",
                    &format!("expected {CONFIG_SCHEMA:?}, found {s:?}"),
                ));
            }
        }
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &str| -> String {
            if p.starts_with(bundled::PREFIX)
                || crate::format::NAMED_BCS.contains(&p)
                || Path::new(p).is_absolute()
            {
                p.to_string()
            } else {
                base.join(p).display().to_string()
            }
        };
        cfg.problem = cfg.problem.as_deref().map(rebase);
        cfg.bc = cfg.bc.as_deref().map(rebase);
        cfg.out = cfg
            .out
            .map(|o| if o.is_absolute() { o } else { base.join(o) });
        Ok(cfg)
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub problem_label: String,
    pub problem: ProblemFile,
    pub bc_label: String,
    pub bc: BcSpec,
    pub window: Option<(f64, f64)>,
    pub count: usize,
    pub method: SolveMethod,
    pub mesh: usize,
    pub j: Option<usize>,
    pub r: Option<usize>,
    pub q: Option<usize>,
    pub samples: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub floor: Option<f64>,
    pub j_max: usize,
    pub trials: usize,
    pub path: JumpPath,
    pub out: PathBuf,
}

/// The part of a [`RunConfig`] that determines the results; the output
/// directory and file paths are left out so moved inputs hash the same.
#[derive(Serialize)]
struct HashView<'a> {
    schema: &'static str,
    command: Command,
    problem: &'a ProblemFile,
    bc: &'a BcSpec,
    window: Option<(f64, f64)>,
    count: usize,
    method: SolveMethod,
    mesh: usize,
    j: Option<usize>,
    r: Option<usize>,
    q: Option<usize>,
    samples: usize,
    seed: u64,
    tolerances: Tolerances,
    floor: Option<f64>,
    j_max: usize,
    trials: usize,
    path: JumpPath,
}

impl RunConfig {
    /// Merges flags over `--config` over defaults and loads the inputs.
    pub fn resolve(cli: Cli, env_out: Option<PathBuf>) -> Result<Self, CliError> {
        let file = match &cli.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let command = cli.command.or(file.command).ok_or_else(|| {
            CliError::invalid("command", "missing; use --command or the config file")
        })?;
        let problem_label = cli.problem.or(file.problem).ok_or_else(|| {
            CliError::invalid("problem", "missing; use --problem or the config file")
        })?;
        let problem = load_problem(&problem_label)?;
        let bc_label = cli
            .bc
            .or(file.bc)
            .unwrap_or_else(|| "dirichlet".to_string());
        let bc = BcSpec::from_arg(&bc_label)?;
        let window = match cli.window {
            Some(w) => Some(parse_window(&w)?),
            None => file.window.map(|[a, b]| (a, b)),
        };
        if let Some((a, b)) = window {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(CliError::invalid("window", "need finite lo < hi"));
            }
        }

        let mut tolerances = Tolerances::default();
        if let Some(o) = &file.tolerances {
            let t = &mut tolerances;
            for (slot, v) in [
                (&mut t.rank, o.rank),
                (&mut t.unit, o.unit),
                (&mut t.symp, o.symp),
                (&mut t.eig, o.eig),
                (&mut t.lambda, o.lambda),
                (&mut t.integrator, o.integrator),
            ] {
                if let Some(v) = v {
                    *slot = v;
                }
            }
        }
        if let Some(v) = cli.tol_lambda {
            tolerances.lambda = v;
        }
        if let Some(v) = cli.tol_rank {
            tolerances.rank = v;
        }
        for (name, v) in [
            ("tolerances.rank", tolerances.rank),
            ("tolerances.unit", tolerances.unit),
            ("tolerances.symp", tolerances.symp),
            ("tolerances.eig", tolerances.eig),
            ("tolerances.lambda", tolerances.lambda),
            ("tolerances.integrator", tolerances.integrator),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::invalid(name, "tolerances must be positive"));
            }
        }

        let cfg = RunConfig {
            command,
            problem_label,
            problem,
            bc_label,
            bc,
            window,
            count: cli.count.or(file.count).unwrap_or(5),
            method: cli.method.or(file.method).unwrap_or_default(),
            mesh: cli.mesh.or(file.mesh).unwrap_or(400),
            j: cli.j.or(file.j),
            r: cli.r.or(file.r),
            q: cli.q.or(file.q),
            samples: cli.samples.or(file.samples).unwrap_or(200),
            seed: cli.seed.or(file.seed).unwrap_or(0),
            tolerances,
            floor: cli.floor.or(file.floor),
            j_max: cli.j_max.or(file.j_max).unwrap_or(6),
            trials: cli.trials.or(file.trials).unwrap_or(200),
            path: cli.path.or(file.path).unwrap_or_default(),
            out: cli
                .out
                .or(file.out)
                .or(env_out)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        };
        if cfg.count == 0 {
            return Err(CliError::invalid("count", "must be positive"));
        }
        if cfg.mesh < 2 {
            return Err(CliError::invalid("mesh", "need at least 2 elements"));
        }
        if cfg.j_max == 0 {
            return Err(CliError::invalid("j_max", "must be positive"));
        }
        if let Some(f) = cfg.floor {
            if !(f < 0.0 && f.is_finite()) {
                return Err(CliError::invalid("floor", "must be negative and finite"));
            }
        }
        Ok(cfg)
    }

    /// Hex SHA-256 of the canonical JSON form of the inputs.
    pub fn hash(&self) -> String {
        let view = HashView {
            schema: CONFIG_SCHEMA,
            command: self.command,
            problem: &self.problem,
            bc: &self.bc,
            window: self.window,
            count: self.count,
            method: self.method,
            mesh: self.mesh,
            j: self.j,
            r: self.r,
            q: self.q,
            samples: self.samples,
            seed: self.seed,
            tolerances: self.tolerances,
            floor: self.floor,
            j_max: self.j_max,
            trials: self.trials,
            path: self.path,
        };
        let text = serde_json::to_string(&view).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn load_problem(label: &str) -> Result<ProblemFile, CliError> {
    match label.strip_prefix(bundled::PREFIX) {
        Some(name) => bundled::find(name)
            .map(|b| b.problem_file())
            .ok_or_else(|| {
                CliError::invalid(
                    "problem",
                    &format!("no bundled problem {name:?}; see bundled::bundled_examples"),
                )
            }),
        None => ProblemFile::load(Path::new(label)),
    }
}

fn parse_window(s: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || CliError::Parse {
        location: "argv".into(),
        field: "window".into(),
        message: format!("expected lo,hi, found {s:?}"),
    };
    match parts.as_slice() {
        [a, b] => Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?)),
        _ => Err(bad()),
    }
}

/// Outcome of command-line parsing: a config or text for `--help` and
/// `--version`.
#[derive(Debug)]
pub enum Parsed {
    Run(Box<RunConfig>),
    Display(String),
}

/// Parses `argv` (including the program name) and resolves the config,
/// reading the default output directory from the environment.
pub fn parse_config<I, T>(argv: I) -> Result<Parsed, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => return clap_error(e),
    };
    let env_out = std::env::var_os(OUT_ENV).map(PathBuf::from);
    RunConfig::resolve(cli, env_out).map(|c| Parsed::Run(Box::new(c)))
}

fn clap_error(e: clap::Error) -> Result<Parsed, CliError> {
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
            Ok(Parsed::Display(e.render().to_string()))
        }
        ErrorKind::UnknownArgument => {
            let key = e
                .get(clap::error::ContextKind::InvalidArg)
                .map(|v| v.to_string())
                .unwrap_or_default();
            Err(CliError::UnknownKey {
                location: "argv".into(),
                key,
            })
        }
        _ => {
            let field = e
                .get(clap::error::ContextKind::InvalidArg)
                .map(|v| v.to_string())
                .unwrap_or_default();
            let message = e
                .render()
                .to_string()
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ")
                .to_string();
            Err(CliError::Parse {
                location: "argv".into(),
                field,
                message,
            })
        }
    }
}
