use std::fmt;

/// Failure class, also the process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    BlowUp,
    Io,
}

impl Category {
    pub fn exit_code(self) -> u8 {
        match self {
            Category::Config => 2,
            Category::BlowUp => 3,
            Category::Io => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Config => "config",
            Category::BlowUp => "blow-up",
            Category::Io => "io",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub category: Category,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            category: Category::Config,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError {
            category: Category::Io,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.category.name(), self.message)
    }
}

impl std::error::Error for CliError {}

impl From<mvlab::Error> for CliError {
    fn from(err: mvlab::Error) -> Self {
        let category = match err {
            mvlab::Error::BlowUp { .. } | mvlab::Error::Overflow(_) => Category::BlowUp,
            mvlab::Error::Io(_) => Category::Io,
            _ => Category::Config,
        };
        CliError {
            category,
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::io(err.to_string())
    }
}
