use std::fmt;

use schrodinger::Error;

/// A failed command and its exit code.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or invalid input, violated precondition: exit 2.
    Input(String),
    /// Non-convergence or failed internal consistency: exit 3.
    Solver(String),
    /// No accepted batch in a statistical run: exit 4.
    Degenerate(String),
    /// Acceptance checks that did not pass: exit 1.
    Checks(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Checks(_) => 1,
            Failure::Input(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Degenerate(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Solver(m) | Failure::Degenerate(m) | Failure::Checks(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let text = e.to_string();
        match e {
            Error::NotConverged { .. } | Error::Consistency(_) => Failure::Solver(text),
            Error::NoAcceptedBatches { .. } => Failure::Degenerate(text),
            _ => Failure::Input(text),
        }
    }
}
