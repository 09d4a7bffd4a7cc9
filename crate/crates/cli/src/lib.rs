//! Command-line driver: configuration, experiment orchestration and CSV output.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

use ratelessnet::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_SAMPLES: i32 = 4;

/// Process exit code for a failed command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_)) => EXIT_CONFIG,
        Some(Error::Numeric(_)) => EXIT_NUMERIC,
        Some(Error::InsufficientSamples { .. }) => EXIT_SAMPLES,
        Some(_) => 1,
        None => match err.downcast_ref::<ratelessnet::NumericError>() {
            Some(_) => EXIT_NUMERIC,
            None => 1,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ratelessnet::NumericError;

    #[test]
    fn exit_codes() {
        let e = |err: Error| exit_code(&anyhow::Error::from(err));
        assert_eq!(e(Error::Config("x".into())), 2);
        assert_eq!(
            e(Error::Numeric(NumericError::SeriesDivergence { terms: 1 })),
            3
        );
        assert_eq!(e(Error::InsufficientSamples { got: 1, need: 100 }), 4);
        assert_eq!(e(Error::Degenerate("x".into())), 1);
        assert_eq!(
            exit_code(&anyhow::Error::from(NumericError::Domain("x".into()))),
            3
        );
        assert_eq!(exit_code(&anyhow::anyhow!("io")), 1);
    }
}
