//! Failure classes and process exit codes.

use std::fmt;

/// A problem with the user's input: configuration, file contents or
/// command-line values. Maps to exit code 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

pub fn invalid(msg: impl Into<String>) -> Invalid {
    Invalid(msg.into())
}

/// The run stopped early but left a resumable checkpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interrupted(pub String);

impl fmt::Display for Interrupted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Interrupted {}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_INTERRUPTED: i32 = 3;

/// Exit code for an error chain. Core configuration and shape errors count
/// as invalid input.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use neurocal_core::Error as E;
    for cause in err.chain() {
        if cause.is::<Interrupted>() {
            return EXIT_INTERRUPTED;
        }
        if cause.is::<Invalid>() {
            return EXIT_INVALID;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            if matches!(
                e,
                E::Config(_)
                    | E::DimensionMismatch { .. }
                    | E::ZeroScale { .. }
                    | E::NotEnoughSamples { .. }
            ) {
                return EXIT_INVALID;
            }
        }
    }
    EXIT_RUNTIME
}
