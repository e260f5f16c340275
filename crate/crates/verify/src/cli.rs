//! Argument handling for the `verify` binary.

use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

use crate::report::SuiteReport;
use crate::suites::{run_suite, RunError, RunOptions, Scene, Suite};

/// Exact verification of conformal tractor identities on a scene.
#[derive(Debug, Parser)]
#[command(name = "verify", version)]
pub struct Args {
    /// `builtin:NAME` or a path to a scene file.
    #[arg(long)]
    pub scene: String,
    /// Suite to run; repeat for several. Defaults to all suites that apply.
    #[arg(long, value_enum)]
    pub suite: Vec<Suite>,
    /// Operator order for the pk and spectrum suites (1 to 3).
    #[arg(long)]
    pub k: Option<usize>,
    /// Jet order; defaults to the suite's policy.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Number of sample points; defaults to the scene's count, else 3.
    #[arg(long)]
    pub points: Option<usize>,
    /// Write the reports as JSON to this path.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Print only the summary line per suite.
    #[arg(long)]
    pub quiet: bool,
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Runs the requested suites and returns the reports.
pub fn run_args(args: &Args) -> Result<Vec<SuiteReport>, RunError> {
    let scene = Scene::resolve(&args.scene)?;
    let suites: Vec<Suite> = if args.suite.is_empty() {
        Suite::ALL
            .into_iter()
            .filter(|s| *s != Suite::Dim4 || scene.spec.dim() == 4)
            .collect()
    } else {
        args.suite.clone()
    };
    suites
        .into_iter()
        .map(|suite| {
            let opts = RunOptions {
                suite,
                k: args.k,
                order: args.order,
                seed: args.seed,
                points: args.points,
            };
            run_suite(&scene, &opts)
        })
        .collect()
}

/// Full driver: parse, run, print, write JSON. Returns the exit code.
pub fn main_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
            } else {
                let _ = write!(stdout, "{}", e.render());
            }
            return code;
        }
    };
    let reports = match run_args(&args) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "verify: {e}");
            return EXIT_USAGE;
        }
    };
    for r in &reports {
        if args.quiet {
            let _ = writeln!(
                stdout,
                "{} {} {}: {} checks, {} failed",
                if r.passed() { "PASS" } else { "FAIL" },
                r.suite,
                r.scene,
                r.checks.len(),
                r.failures()
            );
        } else {
            let _ = write!(stdout, "{}", r.to_table());
        }
    }
    if let Some(path) = &args.json {
        let text = serde_json::to_string_pretty(&reports).expect("reports serialize");
        if let Err(e) = std::fs::write(path, text) {
            let _ = writeln!(stderr, "verify: cannot write {}: {e}", path.display());
            return EXIT_USAGE;
        }
    }
    if reports.iter().all(SuiteReport::passed) {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}
