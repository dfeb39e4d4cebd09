//! Framed binary protocol connecting external policies and world models to
//! the evaluation drivers, over child-process stdio or TCP.
//!
//! Every frame is `"GPW1" | type u8 | length u32 LE | payload`. After a
//! 5-byte hello (`"GPW1" | version`) in each direction the server announces
//! the session with RESET, then streams OBS, optionally PREDICT_REQ, and
//! reads ACT until END. The client closes the connection after END.

mod client;
mod codec;
mod conn;
mod grammar;
mod server;

use std::time::Duration;

use thiserror::Error;

pub use client::{run_client, ClientEpisode, RandomAgent, WireAgent};
pub use codec::{
    decode, encode, hello, read_message, write_message, ErrorCode, Message, MsgType, ObsKind, ObsPayload,
    ResetPayload, SessionMode, HEADER_BYTES, HELLO_BYTES, MAGIC, MAX_PAYLOAD, VERSION,
};
pub use conn::{Connection, DEFAULT_TIMEOUT};
pub use grammar::{Grammar, Phase};
pub use server::{serve_episode, Endpoint, EpisodeResult, ServerSession, WirePolicy, WirePredictor};

#[derive(Debug, Error)]
pub enum WireError {
    #[error("short read: frame needs {needed} bytes, {available} available")]
    ShortRead { needed: usize, available: usize },
    #[error("declared payload length {0} exceeds the 16 MiB cap")]
    LengthOverflow(u32),
    #[error("unknown message type {0}")]
    UnknownType(u8),
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("malformed {kind:?} payload: {message}")]
    BadPayload { kind: MsgType, message: String },
    #[error("protocol version mismatch: ours {ours}, peer {theirs}")]
    VersionMismatch { ours: u8, theirs: u8 },
    #[error("out-of-order message: expected {expected}, got {got:?}")]
    OutOfOrder { expected: &'static str, got: MsgType },
    #[error("peer reported {code}: {message}")]
    Remote { code: ErrorCode, message: String },
    #[error("timed out after {0:?}")]
    Timeout(Duration),
    #[error("connection closed mid-episode")]
    Closed,
    #[error("cannot resolve address {0}")]
    BadAddress(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl WireError {
    /// The ERROR code announced to the peer for this failure, if any.
    pub fn code(&self) -> Option<ErrorCode> {
        match self {
            WireError::UnknownType(_) => Some(ErrorCode::UNKNOWN_TYPE),
            WireError::ShortRead { .. }
            | WireError::LengthOverflow(_)
            | WireError::BadMagic(_)
            | WireError::BadPayload { .. } => Some(ErrorCode::BAD_PAYLOAD),
            WireError::VersionMismatch { .. } => Some(ErrorCode::VERSION_MISMATCH),
            WireError::OutOfOrder { .. } => Some(ErrorCode::OUT_OF_ORDER),
            WireError::Timeout(_) => Some(ErrorCode::TIMEOUT),
            WireError::Remote { .. } | WireError::Closed | WireError::BadAddress(_) | WireError::Io(_) => None,
        }
    }

    /// Whether the failure lies in the transport rather than the peer's
    /// adherence to the protocol.
    pub fn is_transport(&self) -> bool {
        matches!(self, WireError::Closed | WireError::BadAddress(_) | WireError::Io(_) | WireError::Timeout(_))
    }
}
