use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fiberscope::io::{check_cluster_file, ScanOptions, DEFAULT_PATTERN};
use fiberscope::json::to_stable_string_pretty;
use fiberscope::projection::ProjectionError;
use fiberscope::server::{serve, AppState};
use fiberscope::session::{Engine, EngineConfig, EngineError, ProjectionRequest, DEFAULT_SEED};
use fiberscope::stats::RangeScope;

const EXIT_DATA: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "fiberscope", version, about = "Explore tractography cluster cohorts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CohortArgs {
    /// Cohort root directory.
    #[arg(env = "FIBERSCOPE_ROOT")]
    root: PathBuf,
    /// Regex over `<subject>/<file>` paths with named groups `subject` and `cluster`.
    #[arg(long, default_value = DEFAULT_PATTERN)]
    pattern: String,
    /// Keep only cluster ids divisible by N.
    #[arg(long, value_name = "N")]
    every: Option<u32>,
    /// Clusters whose means define the normalization ranges.
    #[arg(long, value_enum, default_value_t = Scope::Cohort)]
    range_scope: Scope,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scope {
    Cohort,
    Selection,
}

impl CohortArgs {
    fn scan_options(&self) -> ScanOptions {
        ScanOptions { pattern: self.pattern.clone(), every: self.every }
    }

    fn open(&self) -> Result<Engine, EngineError> {
        let range_scope = match self.range_scope {
            Scope::Cohort => RangeScope::Cohort,
            Scope::Selection => RangeScope::Selection,
        };
        Engine::open(&self.root, &self.scan_options(), EngineConfig { range_scope })
    }
}

#[derive(Subcommand)]
enum Command {
    /// List subjects and cluster files and check that every file parses.
    Scan {
        #[command(flatten)]
        cohort: CohortArgs,
    },
    /// Write per-cluster statistics as JSON.
    Summarize {
        #[command(flatten)]
        cohort: CohortArgs,
        /// Output file, `-` for stdout.
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Run PivotMDS over cluster fingerprints and write the layout as JSON.
    Project {
        #[command(flatten)]
        cohort: CohortArgs,
        /// Comma-separated axes; all fields when omitted.
        #[arg(long, value_delimiter = ',')]
        axes: Vec<String>,
        /// Comma-separated subject ids; all subjects when omitted.
        #[arg(long, value_delimiter = ',')]
        subjects: Vec<String>,
        /// Pivot count (default: min(50, clusters)).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Serve the JSON API.
    Serve {
        #[command(flatten)]
        cohort: CohortArgs,
        #[arg(long, env = "FIBERSCOPE_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

fn write_output(out: &Path, text: &str) -> std::io::Result<()> {
    if out.as_os_str() == "-" {
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(text.as_bytes())?;
        stdout.flush()
    } else {
        std::fs::write(out, text)
    }
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn engine_exit(e: &EngineError) -> u8 {
    match e {
        EngineError::Projection(ProjectionError::BadK { .. })
        | EngineError::UnknownAxis(_)
        | EngineError::UnknownSubject(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn scan(cohort: &CohortArgs) -> ExitCode {
    let engine = match cohort.open() {
        Ok(e) => e,
        Err(e) => return fail(EXIT_DATA, e),
    };
    let manifest = engine.manifest();
    let index = engine.cohort();
    println!("{} subjects, {} clusters", index.subjects.len(), index.cluster_count());
    for s in &index.subjects {
        let trk = s.cluster_index.values().filter(|f| f.format.as_str() == "trk").count();
        println!(
            "  {}: {} clusters ({} trk, {} vtp)",
            s.subject_id,
            s.cluster_index.len(),
            trk,
            s.cluster_index.len() - trk
        );
    }
    let mut bad = 0;
    for e in &manifest.entries {
        if let Err(err) = check_cluster_file(&e.path, e.format) {
            bad += 1;
            println!("  FAIL {}/{}: {err}", e.subject_id, e.cluster_id);
        }
    }
    if bad > 0 {
        eprintln!("{bad} of {} files failed to parse", manifest.entries.len());
        return ExitCode::from(EXIT_DATA);
    }
    ExitCode::SUCCESS
}

fn summarize(cohort: &CohortArgs, out: &Path) -> ExitCode {
    let engine = match cohort.open() {
        Ok(e) => e,
        Err(e) => return fail(EXIT_DATA, e),
    };
    let (summaries, failed) = engine.summaries(&engine.keys());
    for s in &summaries {
        for w in &s.warnings {
            eprintln!("warning: {}: {w}", s.key);
        }
    }
    for (key, e) in &failed {
        eprintln!("error: {key}: {e}");
    }
    let records: Vec<_> = summaries.iter().map(|s| s.as_ref()).collect();
    let text = match to_stable_string_pretty(&records) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_DATA, e),
    };
    if let Err(e) = write_output(out, &text) {
        return fail(EXIT_DATA, e);
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_DATA)
    }
}

fn project(cohort: &CohortArgs, req: ProjectionRequest, out: &Path) -> ExitCode {
    let engine = match cohort.open() {
        Ok(e) => e,
        Err(e) => return fail(EXIT_DATA, e),
    };
    let outcome = match engine.project(&req) {
        Ok(o) => o,
        Err(e) => return fail(engine_exit(&e), e),
    };
    for n in &outcome.notices {
        eprintln!("notice: {n}");
    }
    let text = match to_stable_string_pretty(&outcome.layout.records()) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_DATA, e),
    };
    match write_output(out, &text) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(EXIT_DATA, e),
    }
}

fn serve_cmd(cohort: &CohortArgs, host: IpAddr, port: u16) -> ExitCode {
    let engine = match cohort.open() {
        Ok(e) => e,
        Err(e) => return fail(EXIT_DATA, e),
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => return fail(EXIT_DATA, e),
    };
    let state = Arc::new(AppState::new(engine));
    match runtime.block_on(serve(state, SocketAddr::new(host, port))) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(EXIT_DATA, e),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Scan { cohort } => scan(cohort),
        Command::Summarize { cohort, out } => summarize(cohort, out),
        Command::Project { cohort, axes, subjects, k, seed, out } => {
            let req = ProjectionRequest { subjects: subjects.clone(), axes: axes.clone(), k: *k, seed: Some(*seed) };
            project(cohort, req, out)
        }
        Command::Serve { cohort, port, host } => serve_cmd(cohort, *host, *port),
    }
}
