use leafscan_core::Error;

/// Bad arguments, missing or malformed input files, unusable datasets.
pub const INPUT: u8 = 2;
/// Anything that should not happen given valid input.
pub const INTERNAL: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            code: INPUT,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Failure {
            code: INTERNAL,
            message: message.into(),
        }
    }
}

fn code_for(e: &Error) -> u8 {
    match e {
        Error::Batch { source, .. } => code_for(source),
        Error::Domain(_) => INTERNAL,
        _ => INPUT,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: code_for(&e),
            message: e.to_string(),
        }
    }
}
