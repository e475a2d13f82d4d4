use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("edge {edge} is out of range for a lattice with {n_edges} edges")]
    InvalidEdge { edge: usize, n_edges: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("duplicate tracker origin at edge {0}")]
    DuplicateOrigin(usize),

    #[error("non-finite state at t = {time}: {what}")]
    NonFinite { time: f64, what: String },

    #[error(
        "domination property violated at t = {time}: tracker at edge {edge} had gap {pre_gap}, \
         window maximum after event is {post_max}"
    )]
    DominationViolated {
        time: f64,
        edge: usize,
        pre_gap: f64,
        post_max: f64,
    },

    #[error("pair sum not conserved at t = {time}: before {before}, after {after}")]
    Conservation { time: f64, before: f64, after: f64 },

    #[error("root bracketing failed: {0}")]
    Bracketing(String),
}

impl Error {
    /// True for errors that report a failed mathematical property rather than
    /// bad input or numerical breakdown.
    pub fn is_property_failure(&self) -> bool {
        matches!(
            self,
            Error::DominationViolated { .. } | Error::Conservation { .. }
        )
    }
}
