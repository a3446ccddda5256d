use thiserror::Error;

use crate::continuation::PathEntry;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The solution-set does not exist at this ratio ν/f.
    #[error("set {set} is not admissible at nu/f = {x}: requires nu/f > {threshold}")]
    Inadmissible { set: String, x: f64, threshold: i64 },

    /// Lattice window or sign pattern inconsistent with the requested state.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// μ^S coincides with f·ℓ for a site outside the solution-set, so the
    /// linearization at β = 0 has a zero diagonal entry.
    #[error("resonance at site {site}: mu/f = {mu_over_f} (T_l = 0)")]
    Resonance { site: i64, mu_over_f: f64 },

    #[error("singular jacobian (pivot {pivot:e} at row {row})")]
    SingularJacobian { row: usize, pivot: f64 },

    #[error("newton did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// Continuation aborted at `beta`; `path` holds every step that did converge.
    #[error("continuation failed at beta = {beta}: {source}")]
    Continuation {
        beta: f64,
        path: Vec<PathEntry>,
        #[source]
        source: Box<Error>,
    },

    #[error("integration quality: norm drift {norm_drift:e} exceeds {limit:e}; use a smaller dt")]
    IntegrationQuality { norm_drift: f64, limit: f64 },
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
