//! Batch driver: experiment configs, pipelines and artifacts.

pub mod artifacts;
pub mod config;
pub mod pipeline;
pub mod plot;

use platelike_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;

/// Process exit status for an error that stopped a pipeline.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) => EXIT_PARSE,
        Error::Config(_) | Error::InvalidDirection(_) | Error::Precondition(_) | Error::Misuse(_) => {
            EXIT_PRECONDITION
        }
        _ => EXIT_VERIFICATION_FAILED,
    }
}
