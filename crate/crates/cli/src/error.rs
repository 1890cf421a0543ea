//! Command failures and how they map to exit codes.

use std::fmt;

use tooleval_core::critic::CriticError;
use tooleval_core::dataset::DatasetError;
use tooleval_core::endpoint::EndpointError;
use tooleval_core::harness::HarnessError;
use tooleval_core::injector::InjectorError;

/// Exit status for bad input: configuration, corpora, arguments, files.
pub const EXIT_VALIDATION: i32 = 1;
/// Exit status when a model endpoint failed.
pub const EXIT_TRANSPORT: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Validation,
    Transport,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { kind: Kind::Validation, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Validation => EXIT_VALIDATION,
            Kind::Transport => EXIT_TRANSPORT,
        }
    }

    /// Prefixes the message with where it happened.
    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// A missing secret is a configuration problem; everything else the
/// endpoint layer reports (network, status, replay miss, cache damage) is
/// a transport failure.
fn endpoint_kind(e: &EndpointError) -> Kind {
    match e {
        EndpointError::MissingEnv(_) => Kind::Validation,
        _ => Kind::Transport,
    }
}

fn critic_kind(e: &CriticError) -> Kind {
    match e {
        CriticError::Transport(t) => endpoint_kind(t),
        _ => Kind::Validation,
    }
}

impl From<EndpointError> for CliError {
    fn from(e: EndpointError) -> Self {
        Self { kind: endpoint_kind(&e), message: e.to_string() }
    }
}

impl From<CriticError> for CliError {
    fn from(e: CriticError) -> Self {
        Self { kind: critic_kind(&e), message: e.to_string() }
    }
}

impl From<InjectorError> for CliError {
    fn from(e: InjectorError) -> Self {
        let kind = match &e {
            InjectorError::Transport(t) => endpoint_kind(t),
            _ => Kind::Validation,
        };
        Self { kind, message: e.to_string() }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        let kind = match &e {
            DatasetError::Critic(c) => critic_kind(c),
            _ => Kind::Validation,
        };
        Self { kind, message: e.to_string() }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        let kind = match &e {
            HarnessError::Assistant { source, .. } => endpoint_kind(source),
            HarnessError::Critic { source, .. } => critic_kind(source),
            _ => Kind::Validation,
        };
        Self { kind, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::validation(e.to_string())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
