//! Crate error type.

use crate::graph::Vertex;

/// Errors produced by graph loading, model building, solving, and planning.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("vertex {vertex} out of range 1..={n}")]
    InvalidVertex { vertex: usize, n: usize },

    #[error("self-loop on vertex {0} (graph must be simple)")]
    SelfLoop(Vertex),

    #[error("duplicate edge {0}-{1} (graph must be simple)")]
    DuplicateEdge(Vertex, Vertex),

    #[error("graph is disconnected: vertex {to} is unreachable from vertex {from}")]
    Disconnected { from: Vertex, to: Vertex },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid {what}: {message}")]
    InvalidInput { what: &'static str, message: String },

    #[error("illegal plan step for searcher {searcher} at step {time}: {from} -> {to} is not a stay or neighbor move")]
    IllegalPlanStep {
        searcher: usize,
        time: usize,
        from: Vertex,
        to: Vertex,
    },

    #[error("capture configuration mismatch: {message}")]
    WrongModel { message: String },

    #[error("fixing searcher {searcher} is infeasible: vertex {vertex} not reachable at step {time}")]
    InfeasibleFixing {
        searcher: usize,
        time: usize,
        vertex: Vertex,
    },

    #[error("joint-path space too large for enumeration: estimated {estimate} leaves exceeds cap {cap}")]
    EnumerationCapExceeded { estimate: u128, cap: u64 },

    #[error("cannot decode searcher paths: {message}")]
    Decode { message: String },

    #[error("solver invocation failed: {message}")]
    SolverInvocation { message: String },

    #[error("solver returned no usable result: {message}")]
    SolverFailed { message: String },

    #[error("simulation requires an initial belief with zero capture mass (got {0})")]
    UnsupportedStart(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
