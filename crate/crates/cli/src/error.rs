use std::fmt;

use sl_krein::ErrorClass;

/// A failure with its exit code: 2 input, 3 numeric, 4 property violation.
#[derive(Clone, Debug, PartialEq)]
pub enum CliError {
    Input(String),
    Numeric(String),
    Property(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Property(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Property(m) => write!(f, "property violated: {m}"),
        }
    }
}

impl From<sl_krein::Error> for CliError {
    fn from(e: sl_krein::Error) -> Self {
        let m = e.to_string();
        match e.class() {
            ErrorClass::Input => CliError::Input(m),
            ErrorClass::Numeric => CliError::Numeric(m),
            ErrorClass::Property => CliError::Property(m),
        }
    }
}
