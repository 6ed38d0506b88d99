use thiserror::Error;

use crate::observer::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("value {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid observer parameters: {0}")]
    InvalidParams(ValidationReport),

    #[error("state diverged{}", match .time { Some(t) => format!(" at t = {t} s"), None => String::new() })]
    Diverged { time: Option<f64> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("signal kind {0} has no closed-form integral")]
    UnsupportedTruth(&'static str),

    #[error("transfer function denominator vanishes at omega = {omega}")]
    SingularDenominator { omega: f64 },

    #[error("ideal integrator 1/s^{order} is singular at DC")]
    SingularAtDc { order: u32 },

    #[error("no {drop_db} dB crossing in [{lo}, {hi}] rad/s")]
    CutoffNotFound { drop_db: f64, lo: f64, hi: f64 },

    #[error("normal equations ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },
}
