//! Nonlinear pose (attitude + position) filtering on SE(3) with a fuzzy-tuned
//! feedback gain.
//!
//! The filter propagates a homogeneous-transform estimate from a corrupted
//! group-velocity measurement and corrects it from vector and landmark
//! observations. Its scalar feedback gain `K = 1 + k_op` is recomputed every
//! step by a two-input Mamdani fuzzy controller driven by the pose error and
//! its rate of change; the controller's 22 triangular membership-function
//! parameters are tuned offline by a gravitational search over a simulated
//! rigid-body scenario.
//!
//! Crate layout:
//! - [`se3`]: Lie-group primitives (hat/wedge maps, exponentials, error metrics).
//! - [`sim`]: deterministic ground-truth trajectory and sensor corruption.
//! - [`filter`]: the SE(3) filter (correction term, innovation, bias estimator).
//! - [`fuzzy`]: the gain controller (membership functions, rule base, centroid).
//! - [`gsa`]: gravitational search over box-bounded cost functions.
//! - [`tuning`]: episode runner, cost function, tuning loop.
//! - [`config`]: flat key-value config/params files and CSV series export.

pub mod config;
pub mod filter;
pub mod fuzzy;
pub mod gsa;
pub mod se3;
pub mod sim;
pub mod tuning;

/// Crate-wide error type.
///
/// [`Error::exit_code`] maps each variant onto the CLI exit-code contract:
/// 2 for configuration/validation problems, 3 for runtime failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A measured vector was too close to zero to normalize.
    #[error("degenerate measurement: vector norm {norm:.3e} is below 1e-12")]
    DegenerateMeasurement { norm: f64 },

    /// The scenario's observation set cannot determine the pose.
    #[error("scenario is not observable: {0}")]
    Unobservable(String),

    /// A config or params file could not be parsed.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// A value was syntactically fine but violates a documented constraint.
    #[error("validation error: {0}")]
    Validation(String),

    /// A fuzzy universe has no membership function covering an interval.
    #[error("{universe} universe uncovered on [{lo}, {hi}]")]
    CoverageGap {
        universe: &'static str,
        lo: f64,
        hi: f64,
    },

    /// A numerical result left the representable/meaningful range.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// File I/O failed; the path is included for context.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// CLI exit code: 0 is success, 2 config/validation, 3 runtime failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateMeasurement { .. } | Error::Numerical(_) | Error::Io { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
