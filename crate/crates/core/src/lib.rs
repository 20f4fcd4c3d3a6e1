//! Core numerics for secrecy-rate simulation of MIMO-OFDM wiretap channels with
//! hybrid spatial/temporal artificial-noise (AN) injection.
//!
//! The crate is organized around the transmit chain: [`ofdm`] models the cyclic-prefix
//! OFDM link and frequency-selective channels, [`an_design`] constructs the data and
//! AN precoders (SVD-based spatial precoding, null-space and Toeplitz temporal-AN
//! routes), [`rates`] evaluates instantaneous rates and secrecy metrics for the
//! legitimate link and an eavesdropper with joint or per-subcarrier processing,
//! [`asymptotics`] provides the closed-form large-array bounds and power allocations,
//! and [`montecarlo`] averages everything over channel realizations deterministically.
//! [`matops`] holds the shared dense/structured linear algebra these are built on.

pub mod an_design;
pub mod asymptotics;
pub mod matops;
pub mod montecarlo;
pub mod ofdm;
pub mod rates;
pub mod verify;

pub use num_complex::Complex64;

/// Dense complex matrix, column-major. Shared type across all modules.
pub type CMat = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<Complex64>;

use thiserror::Error;

/// Unified error type. Variants are grouped by origin: configuration errors are
/// caller mistakes (bad input), the rest are numerical or contract failures
/// detected during computation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config: field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("config file {path}: {message}")]
    ConfigFile { path: String, message: String },
    #[error("sweep plan: {0}")]
    Plan(String),

    #[error("matrix is not Hermitian: relative asymmetry {asymmetry:.3e} exceeds 1e-10")]
    NonHermitian { asymmetry: f64 },
    #[error("matrix is not positive semidefinite: {detail}")]
    NotPsd { detail: String },
    #[error("SVD failed to converge")]
    SvdFailed,
    #[error("eigendecomposition failed to converge")]
    EigenFailed,
    #[error(
        "degenerate column {col} in orthonormalization: norm {norm:.3e} below 1e-12 of matrix scale {scale:.3e}"
    )]
    DegenerateColumn { col: usize, norm: f64, scale: f64 },
    #[error(
        "channel on subcarrier {subcarrier} is rank deficient: singular value {value:.3e} too small to carry {n_s} streams"
    )]
    DegenerateChannel { subcarrier: usize, value: f64, n_s: usize },
    #[error("singular linear system in {context}")]
    SingularSystem { context: String },
    #[error("Toeplitz solve: leading tap magnitude {magnitude:.3e} below singularity threshold")]
    SingularTap { magnitude: f64 },
    #[error("circulant solve: DFT of first column has near-zero entry (magnitude {magnitude:.3e})")]
    SingularSpectrum { magnitude: f64 },

    #[error("null-space rank anomaly: expected {expected} basis columns, found {found}")]
    RankAnomaly { expected: usize, found: usize },
    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),
    #[error(
        "block-diagonalization convention violated: off-block mass {off_block:.3e} exceeds 1e-10 of total"
    )]
    ConstructionConvention { off_block: f64 },
    #[error("operation undefined when spatial AN dimension is zero (n_a == n_s)")]
    NoSpatialDimensions,

    #[error("trial {trial} failed: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for errors caused by invalid user input (config/plan), as opposed to
    /// numerical failures. The CLI maps these to distinct exit codes.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::ConfigFile { .. }
                | Error::Plan(_)
                | Error::UnsupportedShape(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
