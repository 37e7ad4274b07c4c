use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pg::checks::{run_checks, CheckConfig, Selection, WarpVerify};
use pg::manifest::{self, load_manifest};
use pg::Report;

/// Verify contravariant Riemannian-Poisson geometry manifests: connection
/// and curvature identities, Killing and 2-Killing characterizations, and
/// warped-product decompositions, all cross-checked along independent
/// computation routes at seeded sample points.
#[derive(Parser)]
#[command(name = "pg", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Structured,
}

#[derive(Args, Clone, Copy)]
struct Sampling {
    /// Number of sample points.
    #[arg(long, default_value_t = 64)]
    samples: usize,

    /// Seed for the deterministic sample plan.
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Residual tolerance (the indeterminate band reaches to 10x this).
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,

    /// Output format: human-readable text or a structured JSON document.
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    report: ReportFormat,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run identity checks for a manifest file.
    Check {
        /// Manifest to verify (plain or warp).
        manifest: PathBuf,

        /// Restrict to selected checks:
        /// poisson | connection | curvature | killing:<form> |
        /// two-killing:<form> | weitzenbock:<form>. Repeatable.
        #[arg(long = "only")]
        only: Vec<String>,

        #[command(flatten)]
        sampling: Sampling,
    },

    /// Build a warped product from two manifests and verify the
    /// decomposition identities.
    Warp {
        /// Base-factor manifest.
        #[arg(long)]
        base: PathBuf,

        /// Fiber-factor manifest.
        #[arg(long)]
        fiber: PathBuf,

        /// Warp expression over the base coordinates, positive on the domain.
        #[arg(long)]
        f: String,

        /// Named 1-form of the base manifest used in the split checks.
        #[arg(long)]
        eta1: Option<String>,

        /// Named 1-form of the fiber manifest used in the split checks.
        #[arg(long)]
        eta2: Option<String>,

        /// Comma-separated subset of
        /// prop22,prop31,prop34,prop45,thm23,thm36,thm47,eq322.
        #[arg(long)]
        verify: Option<String>,

        #[command(flatten)]
        sampling: Sampling,
    },

    /// Verify the flat-plane closed forms for a bivector and a 1-form.
    R2 {
        /// The single bivector component over coordinates x1, x2.
        #[arg(long)]
        pi: String,

        /// Two comma-separated form components, e.g. "x2,x1^2".
        #[arg(long)]
        eta: String,

        /// Verification list; `thm48` (the default) runs the full family.
        #[arg(long)]
        verify: Option<String>,

        #[command(flatten)]
        sampling: Sampling,
    },
}

fn emit(report: &Report, format: ReportFormat) -> ExitCode {
    match format {
        ReportFormat::Text => print!("{}", report.to_text()),
        ReportFormat::Structured => print!("{}", report.to_json()),
    }
    if report.has_failures() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn run() -> Result<ExitCode, pg::CliError> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Check {
            manifest,
            only,
            sampling,
        } => {
            let m = load_manifest(&manifest)?;
            let selection = Selection::parse(&only)?;
            let cfg = CheckConfig {
                seed: sampling.seed,
                samples: sampling.samples,
                tol: sampling.tol,
                r2_identities: false,
            };
            let report = run_checks(&m, &selection, &WarpVerify::ALL, &cfg);
            Ok(emit(&report, sampling.report))
        }
        Cmd::Warp {
            base,
            fiber,
            f,
            eta1,
            eta2,
            verify,
            sampling,
        } => {
            let m = manifest::warp_manifest_from_parts(&base, &fiber, &f, eta1, eta2)?;
            let verify = WarpVerify::parse_list(verify.as_deref())?;
            let cfg = CheckConfig {
                seed: sampling.seed,
                samples: sampling.samples,
                tol: sampling.tol,
                r2_identities: false,
            };
            let report = run_checks(&m, &Selection::all(), &verify, &cfg);
            Ok(emit(&report, sampling.report))
        }
        Cmd::R2 {
            pi,
            eta,
            verify,
            sampling,
        } => {
            if let Some(v) = &verify {
                for t in v.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                    if t != "thm48" {
                        return Err(pg::CliError::BadWarpVerify(t.to_string()));
                    }
                }
            }
            let m = manifest::r2_manifest_from_parts(&pi, &eta)?;
            let cfg = CheckConfig {
                seed: sampling.seed,
                samples: sampling.samples,
                tol: sampling.tol,
                r2_identities: true,
            };
            let report = run_checks(&m, &Selection::all(), &[], &cfg);
            Ok(emit(&report, sampling.report))
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
