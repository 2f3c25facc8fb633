use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    NotFound,
    Parse,
    Validation,
    Other,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::NotFound => 3,
            Kind::Parse => 4,
            Kind::Validation => 5,
            Kind::Other => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::NotFound => "not_found",
            Kind::Parse => "parse",
            Kind::Validation => "validation",
            Kind::Other => "other",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        CliError { kind, message: message.into() }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        CliError::new(Kind::Validation, message)
    }

    /// `error kind=<kind> msg=<json string>` on a single line.
    pub fn line(&self) -> String {
        format!("error kind={} msg={}", self.kind.name(), serde_json::Value::String(self.message.clone()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.name(), self.message)
    }
}

impl std::error::Error for CliError {}

fn io_kind(e: &std::io::Error) -> Kind {
    if e.kind() == std::io::ErrorKind::NotFound {
        Kind::NotFound
    } else {
        Kind::Other
    }
}

impl From<primasm_core::Error> for CliError {
    fn from(e: primasm_core::Error) -> Self {
        use primasm_core::Error as E;
        let kind = match &e {
            E::Io { source, .. } => io_kind(source),
            E::Parse { .. } | E::Version { .. } => Kind::Parse,
            E::InvalidInput(_) | E::UnknownClass(_) | E::EmptyAssembly | E::Degenerate(_) | E::ContractViolation(_) => {
                Kind::Validation
            }
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<primasm_model::Error> for CliError {
    fn from(e: primasm_model::Error) -> Self {
        use primasm_model::Error as E;
        match e {
            E::Core(inner) => inner.into(),
            E::Io { ref source, .. } => CliError::new(io_kind(source), e.to_string()),
            E::Checkpoint { .. } => CliError::new(Kind::Parse, e.to_string()),
            E::Config(_) | E::InvalidInput(_) | E::InsufficientInput(_) | E::Length { .. } => {
                CliError::new(Kind::Validation, e.to_string())
            }
            _ => CliError::new(Kind::Other, e.to_string()),
        }
    }
}

pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::new(io_kind(&e), format!("{}: {e}", path.display()))
}
