//! Manifest loading, check orchestration and report emission for the `pg`
//! command-line tool.

pub mod checks;
pub mod manifest;
pub mod report;

pub use checks::{run_checks, CheckConfig, Selection, WarpVerify};
pub use manifest::{load_manifest, Manifest, ManifestKind, PlainManifest, WarpManifest};
pub use report::{CheckResult, Report, Verdict};

/// Errors surfaced by manifest handling and check orchestration.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("failed to read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("`{path}`: {source}")]
    Toml {
        path: String,
        #[source]
        source: Box<toml::de::Error>,
    },

    #[error("`{path}`: {field}: {source}")]
    BadExpression {
        path: String,
        field: String,
        #[source]
        source: pgeom::ParseError,
    },

    #[error("`{path}`: {message}")]
    Invalid { path: String, message: String },

    #[error(transparent)]
    Geometry(#[from] pgeom::GeomError),

    #[error("unknown check selector `{0}` (expected poisson | connection | curvature | killing:<form> | two-killing:<form> | weitzenbock:<form>)")]
    BadSelector(String),

    #[error("unknown warp verification `{0}` (expected prop22 | prop31 | prop34 | prop45 | thm23 | thm36 | thm47 | eq322)")]
    BadWarpVerify(String),
}
