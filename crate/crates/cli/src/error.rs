//! Exit-code classes and the mapping from library errors onto them.

use std::fmt;

use icbench_core::eval::EvalError;
use icbench_core::maze::MazeError;
use icbench_core::metalang::MetalangError;
use icbench_core::rollout::RolloutError;
use icbench_core::agent::PolicyError;
use icbench_core::wire::WireError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    Usage = 1,
    Config = 2,
    Io = 3,
    Protocol = 4,
}

/// An error raised by the CLI itself with an explicit class.
#[derive(Debug)]
pub struct Classified {
    pub class: ExitClass,
    pub message: String,
}

impl fmt::Display for Classified {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Classified {}

pub fn config_error(message: impl Into<String>) -> anyhow::Error {
    Classified { class: ExitClass::Config, message: message.into() }.into()
}

pub fn io_error(message: impl Into<String>) -> anyhow::Error {
    Classified { class: ExitClass::Io, message: message.into() }.into()
}

fn eval_class(e: &EvalError) -> Option<ExitClass> {
    if e.is_protocol() {
        return Some(ExitClass::Protocol);
    }
    match e {
        EvalError::AtTask { .. } => None,
        EvalError::Io(_) | EvalError::Csv(_) => Some(ExitClass::Io),
        _ => Some(ExitClass::Config),
    }
}

fn rollout_class(e: &RolloutError) -> Option<ExitClass> {
    match e {
        RolloutError::AtEpisode { .. } => None,
        RolloutError::Config(_) | RolloutError::Maze(_) => Some(ExitClass::Config),
        _ => Some(ExitClass::Io),
    }
}

/// Exit class of the first error in the chain that has one. Wrapper errors
/// that only add location defer to their source.
pub fn classify(err: &anyhow::Error) -> ExitClass {
    for cause in err.chain() {
        let class = if let Some(c) = cause.downcast_ref::<Classified>() {
            Some(c.class)
        } else if let Some(e) = cause.downcast_ref::<EvalError>() {
            eval_class(e)
        } else if let Some(e) = cause.downcast_ref::<RolloutError>() {
            rollout_class(e)
        } else if let Some(e) = cause.downcast_ref::<MetalangError>() {
            Some(match e {
                MetalangError::Io(_) | MetalangError::Format(_) => ExitClass::Io,
                _ => ExitClass::Config,
            })
        } else if let Some(e) = cause.downcast_ref::<MazeError>() {
            Some(match e {
                MazeError::Config(_) | MazeError::Argument(_) => ExitClass::Config,
                _ => ExitClass::Protocol,
            })
        } else if cause.is::<WireError>() || cause.is::<PolicyError>() {
            Some(ExitClass::Protocol)
        } else if cause.is::<serde_json::Error>() {
            Some(ExitClass::Config)
        } else if cause.is::<std::io::Error>()
            || cause.is::<csv::Error>()
            || cause.is::<png::EncodingError>()
            || cause.is::<walkdir::Error>()
        {
            Some(ExitClass::Io)
        } else {
            None
        };
        if let Some(c) = class {
            return c;
        }
    }
    ExitClass::Usage
}
