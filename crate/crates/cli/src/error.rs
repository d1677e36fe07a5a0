use crackfield_service::ErrorPayload;

/// Failure of a command, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Missing or inconsistent settings, unreadable config or material file.
    Config(String),
    Io(String),
    Engine(crackfield::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Engine(e) if e.is_io() => 3,
            CliError::Engine(_) => 1,
        }
    }

    pub fn payload(&self) -> ErrorPayload {
        match self {
            CliError::Config(m) => ErrorPayload::new("ConfigError", "cli", m.clone()),
            CliError::Io(m) => ErrorPayload::new("IoError", "io", m.clone()),
            CliError::Engine(e) => e.into(),
        }
    }
}

impl From<crackfield::Error> for CliError {
    fn from(e: crackfield::Error) -> Self {
        CliError::Engine(e)
    }
}

impl From<crackfield::field_io::FieldError> for CliError {
    fn from(e: crackfield::field_io::FieldError) -> Self {
        CliError::Engine(e.into())
    }
}

pub fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
