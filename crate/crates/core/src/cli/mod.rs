//! The `nodal-lab` command line: `verify`, `scan`, `extract` and `report`.
//!
//! Settings come from defaults, then an optional `--config` file of
//! `key=value` lines, then flags. Every output document embeds the
//! resulting canonical configuration.
//!
//! Exit codes: 0 success, 1 numerical failure (a check or band missed, or a
//! computation failed), 2 invalid configuration or usage.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod commands;
pub mod config;

pub use config::{parse_mode, parse_test_function, CommandKind, ConfigError, FitSpec, IdentityKind, RunConfig};

/// Environment fallback for `--threads`.
pub const THREADS_ENV: &str = "NODAL_LAB_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "nodal-lab", version, about = "Nodal-set identities and eigenfunction norm asymptotics")]
struct Cli {
    /// Worker thread cap (falls back to NODAL_LAB_THREADS).
    #[arg(long, global = true)]
    threads: Option<String>,
    /// key=value file mirroring the flags; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Output formats, comma separated: json,csv,mesh.
    #[arg(long, global = true)]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check identities and write a JSON report.
    Verify(VerifyArgs),
    /// Scan a family of eigenfunctions and fit exponents.
    Scan(ScanArgs),
    /// Extract level sets and write mesh files.
    Extract(ExtractArgs),
    /// Merge earlier JSON outputs into one summary.
    Report(ReportArgs),
}

#[derive(Args, Debug, Default)]
struct ExtractionArgs {
    /// subdivide | bilinear-decider
    #[arg(long)]
    ambiguity_policy: Option<String>,
    #[arg(long)]
    newton_steps: Option<String>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// circle | torus2 | torus3 | sphere (default: from the mode).
    #[arg(long)]
    manifold: Option<String>,
    /// k=a,b[@phase] | zonal:N | sectoral:N
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    mode_j: Option<String>,
    #[arg(long)]
    mode_k: Option<String>,
    /// one | const:v | mode:<mode> | bump:x,y,r
    #[arg(long, alias = "f")]
    test_function: Option<String>,
    /// Comma-separated identities, or `all`.
    #[arg(long)]
    identity: Option<String>,
    /// Comma-separated levels c.
    #[arg(long)]
    level: Option<String>,
    #[arg(long)]
    n_levels: Option<String>,
    #[arg(long)]
    resolution: Option<String>,
    /// `t` for every identity or `name:t`; repeatable.
    #[arg(long, alias = "tol")]
    tolerance: Vec<String>,
    #[command(flatten)]
    extraction: ExtractionArgs,
}

#[derive(Args, Debug)]
struct ScanArgs {
    /// circle | torus-axis | torus-diag | zonal | sectoral
    #[arg(long)]
    family: Option<String>,
    /// start:stop[:step], inclusive.
    #[arg(long)]
    range: Option<String>,
    /// y:x[=target/tol | =const/variation]; repeatable.
    #[arg(long)]
    fit: Vec<String>,
    #[arg(long)]
    base_resolution: Option<String>,
    #[arg(long, alias = "ppw")]
    points_per_wavelength: Option<String>,
    #[arg(long)]
    p_values: Option<String>,
    #[command(flatten)]
    extraction: ExtractionArgs,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    #[arg(long)]
    manifold: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    level: Option<String>,
    #[arg(long)]
    resolution: Option<String>,
    #[command(flatten)]
    extraction: ExtractionArgs,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Directory of earlier outputs (default: --out).
    #[arg(long)]
    input: Option<String>,
}

fn push(pairs: &mut Vec<(&'static str, String)>, key: &'static str, v: &Option<String>) {
    if let Some(v) = v {
        pairs.push((key, v.clone()));
    }
}

fn push_list(pairs: &mut Vec<(&'static str, String)>, key: &'static str, v: &[String]) {
    if !v.is_empty() {
        pairs.push((key, v.join(",")));
    }
}

impl ExtractionArgs {
    fn pairs(&self, p: &mut Vec<(&'static str, String)>) {
        push(p, "ambiguity_policy", &self.ambiguity_policy);
        push(p, "newton_steps", &self.newton_steps);
    }
}

impl Command {
    fn kind(&self) -> CommandKind {
        match self {
            Command::Verify(_) => CommandKind::Verify,
            Command::Scan(_) => CommandKind::Scan,
            Command::Extract(_) => CommandKind::Extract,
            Command::Report(_) => CommandKind::Report,
        }
    }

    /// Flag values as config keys.
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut p = Vec::new();
        match self {
            Command::Verify(a) => {
                push(&mut p, "manifold", &a.manifold);
                push(&mut p, "mode", &a.mode);
                push(&mut p, "mode_j", &a.mode_j);
                push(&mut p, "mode_k", &a.mode_k);
                push(&mut p, "test_function", &a.test_function);
                push(&mut p, "identity", &a.identity);
                push(&mut p, "level", &a.level);
                push(&mut p, "n_levels", &a.n_levels);
                push(&mut p, "resolution", &a.resolution);
                push_list(&mut p, "tolerance", &a.tolerance);
                a.extraction.pairs(&mut p);
            }
            Command::Scan(a) => {
                push(&mut p, "family", &a.family);
                push(&mut p, "range", &a.range);
                push_list(&mut p, "fit", &a.fit);
                push(&mut p, "base_resolution", &a.base_resolution);
                push(&mut p, "points_per_wavelength", &a.points_per_wavelength);
                push(&mut p, "p_values", &a.p_values);
                a.extraction.pairs(&mut p);
            }
            Command::Extract(a) => {
                push(&mut p, "manifold", &a.manifold);
                push(&mut p, "mode", &a.mode);
                push(&mut p, "level", &a.level);
                push(&mut p, "resolution", &a.resolution);
                a.extraction.pairs(&mut p);
            }
            Command::Report(a) => push(&mut p, "input", &a.input),
        }
        p
    }
}

fn thread_count(flag: Option<&str>) -> Result<Option<usize>, ConfigError> {
    let env = std::env::var(THREADS_ENV).ok();
    let Some(raw) = flag.map(str::to_string).or(env) else {
        return Ok(None);
    };
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(Some(n)),
        _ => Err(ConfigError(format!("thread count '{raw}' is not a positive integer"))),
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::new(cli.command.kind());
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    push_globals(cli, &mut cfg)?;
    for (k, v) in cli.command.pairs() {
        cfg.set(k, &v)?;
    }
    cfg.finalize()
}

fn push_globals(cli: &Cli, cfg: &mut RunConfig) -> Result<(), ConfigError> {
    if let Some(o) = &cli.out {
        cfg.set("out", o)?;
    }
    if let Some(f) = &cli.format {
        cfg.set("format", f)?;
    }
    Ok(())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let threads = match thread_count(cli.threads.as_deref()) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n);
    }
    match pool.build() {
        Ok(pool) => pool.install(|| commands::execute(&cfg)),
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            EXIT_FAILURE
        }
    }
}
