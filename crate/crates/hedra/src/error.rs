//! Crate-wide error type.

use crate::statics::Configuration;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter is out of its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Geometry that breaks the math, e.g. a zero-length member.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// Nothing to solve: no members, or no free nodes.
    #[error("empty system: {0}")]
    EmptySystem(String),

    #[error("unknown node id {0}")]
    UnknownNode(usize),

    /// The load has a component outside the range of the equilibrium matrix,
    /// so no force densities can balance it in this configuration.
    #[error("load not balanceable in this configuration (least-squares residual {residual:.3e})")]
    InfeasibleLoad { residual: f64 },

    /// Equilibrium is solvable but not with every cable at or above its
    /// minimum density.
    #[error("pose not statically feasible: {0}")]
    Infeasible(String),

    /// A rest length would be non-positive: the cable cannot be shortened
    /// enough to carry the requested density.
    #[error("cable {member_id} cannot carry density {q} with stiffness {stiffness}; rest length would be non-positive")]
    SlackImpossible {
        member_id: usize,
        q: f64,
        stiffness: f64,
    },

    /// An iterative solver ran out of iterations. For dynamic relaxation the
    /// last node positions are attached.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last: Option<Box<Configuration>>,
    },

    /// A matrix factorization broke down. Should not happen on well-posed
    /// input; indicates wildly scaled or non-finite data.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed file: {0}")]
    Format(String),
}
