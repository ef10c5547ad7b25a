//! Numerical laboratory for quasi-homogeneous operators built from weighted
//! Bergman shifts.
//!
//! The crate constructs truncated matrix models of the block operators
//! (atoms on the diagonal, jet connectors above it), computes the unitary
//! invariants of the associated Hermitian holomorphic bundles (Grammians,
//! curvature, second fundamental forms), solves the intertwining/Sylvester
//! equations that govern similarity, and probes power-boundedness.
//!
//! Everything is double precision on finite truncations; residual checks are
//! restricted to an "interior window" of coordinates unaffected by the
//! truncation cut.

pub mod analysis;
pub mod atomic;
pub mod band;
pub mod battery;
pub mod bergman;
pub mod block;
pub mod geometry;
pub mod intertwiner;
pub mod norms;
pub mod par;
pub mod smallmat;
pub mod special;

pub use num_complex::Complex64;

/// Shorthand used throughout the crate.
pub type C64 = num_complex::Complex64;

/// Crate-wide error type.
#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum Error {
    /// A scalar argument violated its domain (negative weight, point outside
    /// the disc, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A structurally invalid argument (bad dimensions, order out of range).
    #[error("argument error: {0}")]
    Argument(String),

    /// A nonzero coefficient sits on a position that boundedness forces to
    /// vanish; the requested operator does not exist as a bounded model.
    #[error("unbounded entry ({0},{1}): coefficient must vanish for a bounded operator")]
    UnboundedEntry(usize, usize),

    /// The block elimination requires valency >= 2.
    #[error("valency {0} too small: similarity reduction requires valency >= 2")]
    ValencyTooSmall(f64),

    /// Two evaluation routes that must agree disagreed beyond tolerance.
    #[error("internal consistency error: {0}")]
    Inconsistent(String),

    /// A numerical procedure failed (non-positive radicand, ill conditioning,
    /// iteration budget exhausted).
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
