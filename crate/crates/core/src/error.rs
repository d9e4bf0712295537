use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("fold {fold}: training units contain only one instrument level")]
    DegenerateFold { fold: usize },

    #[error("positivity violated at unit {index}: m(1|x) = {value}")]
    Positivity { index: usize, value: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(&'static str),

    #[error(
        "mean first-stage score {mean_psi_a:e} is numerically zero; \
         the ratio estimator is undefined, use the score confidence set"
    )]
    WeakDenominator { mean_psi_a: f64 },

    #[error("argument outside domain: {0}")]
    Domain(&'static str),

    #[error("covariance matrix is not positive semidefinite")]
    NotPositiveSemidefinite,
}

impl Error {
    /// True for failures caused by the data rather than by the caller's
    /// configuration.
    pub fn is_degenerate_data(&self) -> bool {
        matches!(
            self,
            Error::DegenerateFold { .. }
                | Error::Positivity { .. }
                | Error::DegenerateData(_)
                | Error::WeakDenominator { .. }
        )
    }
}
