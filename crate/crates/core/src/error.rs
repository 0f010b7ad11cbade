use thiserror::Error;

/// Errors produced by the estimation, weighting, simulation and pooling code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A sample size or summary does not have the shape an operation needs
    /// (for example `n` not of the form `4Q + 1`, or a missing quartile).
    #[error("scenario shape error: {0}")]
    ScenarioShape(String),

    #[error("unsupported size: {0}")]
    Unsupported(String),

    /// Invalid user-supplied data: unordered summaries, bad sample sizes,
    /// malformed input rows.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Numbers that violate a structural identity (non positive definite
    /// systems, degenerate denominators). Signals bad moments or a bug.
    #[error("internal consistency error: {0}")]
    InternalConsistency(String),

    #[error("underdetermined fit: {points} points for {params} parameters")]
    Underdetermined { points: usize, params: usize },

    #[error("fit did not converge after {iterations} iterations (best residual {residual:e}, coefficients {coefficients:?})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        coefficients: Vec<f64>,
    },

    /// One or more study rows could not be converted or parsed.
    #[error("{} study error(s): {}", .0.len(), format_issues(.0))]
    Studies(Vec<StudyIssue>),
}

/// Diagnostic for a single study row.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyIssue {
    /// Study index, or the 1-based data row when the index itself is unreadable.
    pub index: usize,
    pub message: String,
}

fn format_issues(issues: &[StudyIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("study {}: {}", i.index, i.message))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    /// True for failures caused by the numbers themselves rather than by
    /// malformed or out-of-range input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::InternalConsistency(_) | Error::NotConverged { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
