use std::io::{ErrorKind, Read, Write};

use super::WireError;
use crate::maze::ActionId;
use crate::render::{FrameRGB, FRAME_BYTES, TOPDOWN_BYTES};

pub const MAGIC: [u8; 4] = *b"GPW1";
pub const VERSION: u8 = 1;
/// Magic, type byte, little-endian u32 length.
pub const HEADER_BYTES: usize = 9;
pub const HELLO_BYTES: usize = 5;
pub const MAX_PAYLOAD: usize = 16 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum MsgType {
    Reset = 1,
    Obs = 2,
    Act = 3,
    PredictReq = 4,
    PredictResp = 5,
    End = 6,
    Error = 7,
}

impl MsgType {
    pub const ALL: [MsgType; 7] =
        [MsgType::Reset, MsgType::Obs, MsgType::Act, MsgType::PredictReq, MsgType::PredictResp, MsgType::End, MsgType::Error];

    pub fn from_u8(v: u8) -> Option<MsgType> {
        MsgType::ALL.get((v as usize).wrapping_sub(1)).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ObsKind {
    Frame = 0,
    TopDown = 1,
}

impl ObsKind {
    pub fn byte_len(self) -> usize {
        match self {
            ObsKind::Frame => FRAME_BYTES,
            ObsKind::TopDown => TOPDOWN_BYTES,
        }
    }

    pub fn from_u8(v: u8) -> Option<ObsKind> {
        match v {
            0 => Some(ObsKind::Frame),
            1 => Some(ObsKind::TopDown),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorCode(pub u16);

impl ErrorCode {
    pub const OUT_OF_ORDER: ErrorCode = ErrorCode(1);
    pub const UNKNOWN_TYPE: ErrorCode = ErrorCode(2);
    pub const VERSION_MISMATCH: ErrorCode = ErrorCode(3);
    pub const BAD_PAYLOAD: ErrorCode = ErrorCode(4);
    pub const TIMEOUT: ErrorCode = ErrorCode(5);
    pub const INTERNAL: ErrorCode = ErrorCode(6);

    pub fn name(self) -> &'static str {
        match self.0 {
            1 => "OUT_OF_ORDER",
            2 => "UNKNOWN_TYPE",
            3 => "VERSION_MISMATCH",
            4 => "BAD_PAYLOAD",
            5 => "TIMEOUT",
            6 => "INTERNAL",
            _ => "UNKNOWN",
        }
    }
}

impl std::fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({})", self.name(), self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum SessionMode {
    /// The client's actions drive the environment.
    Policy = 0,
    /// The client forecasts frames; its actions are read but not executed.
    WorldModel = 1,
}

/// Session parameters announced by the server.
#[derive(Debug, Clone, PartialEq)]
pub struct ResetPayload {
    pub obs_kind: ObsKind,
    pub mode: SessionMode,
    pub episode_len: u32,
    /// Forecast requests sent after the t-th observation for each `t` in
    /// `checkpoints` (world-model sessions only).
    pub requests_per_checkpoint: u32,
    pub checkpoints: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObsPayload {
    pub step: u32,
    pub reward: f32,
    pub command: u8,
    pub kind: ObsKind,
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Reset(ResetPayload),
    Obs(ObsPayload),
    Act(ActionId),
    /// After `t` observed frames: the `t − 1` executed actions and the
    /// future actions to condition the forecast on.
    PredictReq { t: u32, executed: Vec<ActionId>, future: Vec<ActionId> },
    PredictResp { frames: Vec<FrameRGB> },
    End { steps: u32, accumulated_reward: f64 },
    Error { code: ErrorCode, message: String },
}

impl Message {
    pub fn kind(&self) -> MsgType {
        match self {
            Message::Reset(_) => MsgType::Reset,
            Message::Obs(_) => MsgType::Obs,
            Message::Act(_) => MsgType::Act,
            Message::PredictReq { .. } => MsgType::PredictReq,
            Message::PredictResp { .. } => MsgType::PredictResp,
            Message::End { .. } => MsgType::End,
            Message::Error { .. } => MsgType::Error,
        }
    }
}

fn put_actions(out: &mut Vec<u8>, actions: &[ActionId]) {
    out.extend((actions.len() as u32).to_le_bytes());
    out.extend(actions.iter().map(|a| a.as_u8()));
}

fn payload(msg: &Message) -> Vec<u8> {
    let mut p = Vec::new();
    match msg {
        Message::Reset(r) => {
            p.push(r.obs_kind as u8);
            p.push(r.mode as u8);
            p.extend(r.episode_len.to_le_bytes());
            p.extend(r.requests_per_checkpoint.to_le_bytes());
            p.extend((r.checkpoints.len() as u32).to_le_bytes());
            for c in &r.checkpoints {
                p.extend(c.to_le_bytes());
            }
        }
        Message::Obs(o) => {
            p.reserve(10 + o.data.len());
            p.extend(o.step.to_le_bytes());
            p.extend(o.reward.to_le_bytes());
            p.push(o.command);
            p.push(o.kind as u8);
            p.extend(&o.data);
        }
        Message::Act(a) => p.push(a.as_u8()),
        Message::PredictReq { t, executed, future } => {
            p.extend(t.to_le_bytes());
            put_actions(&mut p, executed);
            put_actions(&mut p, future);
        }
        Message::PredictResp { frames } => {
            p.reserve(4 + frames.len() * FRAME_BYTES);
            p.extend((frames.len() as u32).to_le_bytes());
            for f in frames {
                p.extend(&f.pixels);
            }
        }
        Message::End { steps, accumulated_reward } => {
            p.extend(steps.to_le_bytes());
            p.extend(accumulated_reward.to_le_bytes());
        }
        Message::Error { code, message } => {
            p.extend(code.0.to_le_bytes());
            p.extend(message.as_bytes());
        }
    }
    p
}

/// Full frame: magic, type, length, payload.
pub fn encode(msg: &Message) -> Vec<u8> {
    let p = payload(msg);
    let mut out = Vec::with_capacity(HEADER_BYTES + p.len());
    out.extend(MAGIC);
    out.push(msg.kind() as u8);
    out.extend((p.len() as u32).to_le_bytes());
    out.extend(p);
    out
}

pub fn hello(version: u8) -> [u8; HELLO_BYTES] {
    [MAGIC[0], MAGIC[1], MAGIC[2], MAGIC[3], version]
}

struct Cursor<'a> {
    kind: MsgType,
    buf: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn bad(&self, message: impl Into<String>) -> WireError {
        WireError::BadPayload { kind: self.kind, message: message.into() }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.buf.len() < n {
            return Err(self.bad(format!("needs {n} more bytes, {} left", self.buf.len())));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn actions(&mut self) -> Result<Vec<ActionId>, WireError> {
        let n = self.u32()? as usize;
        self.take(n)?.iter().map(|&b| ActionId::try_from(b).map_err(|_| self.bad(format!("action {b}")))).collect()
    }

    fn finish(self) -> Result<(), WireError> {
        if self.buf.is_empty() { Ok(()) } else { Err(self.bad(format!("{} trailing bytes", self.buf.len()))) }
    }
}

fn parse_payload(kind: MsgType, buf: &[u8]) -> Result<Message, WireError> {
    let mut c = Cursor { kind, buf };
    let msg = match kind {
        MsgType::Reset => {
            let k = c.u8()?;
            let obs_kind = ObsKind::from_u8(k).ok_or_else(|| c.bad(format!("obs_kind {k}")))?;
            let mode = match c.u8()? {
                0 => SessionMode::Policy,
                1 => SessionMode::WorldModel,
                m => return Err(c.bad(format!("mode {m}"))),
            };
            let episode_len = c.u32()?;
            let requests_per_checkpoint = c.u32()?;
            let n = c.u32()? as usize;
            if c.buf.len() != n.saturating_mul(4) {
                return Err(c.bad(format!("{n} checkpoints need {} bytes, got {}", n * 4, c.buf.len())));
            }
            let checkpoints = (0..n).map(|_| c.u32()).collect::<Result<_, _>>()?;
            Message::Reset(ResetPayload { obs_kind, mode, episode_len, requests_per_checkpoint, checkpoints })
        }
        MsgType::Obs => {
            let step = c.u32()?;
            let reward = f32::from_le_bytes(c.take(4)?.try_into().unwrap());
            let command = c.u8()?;
            let k = c.u8()?;
            let kind = ObsKind::from_u8(k).ok_or_else(|| c.bad(format!("obs_kind {k}")))?;
            if c.buf.len() != kind.byte_len() {
                return Err(c.bad(format!("{:?} observation needs {} bytes, got {}", kind, kind.byte_len(), c.buf.len())));
            }
            let data = c.take(kind.byte_len())?.to_vec();
            Message::Obs(ObsPayload { step, reward, command, kind, data })
        }
        MsgType::Act => {
            let b = c.u8()?;
            Message::Act(ActionId::try_from(b).map_err(|_| c.bad(format!("action {b}")))?)
        }
        MsgType::PredictReq => {
            let t = c.u32()?;
            let executed = c.actions()?;
            let future = c.actions()?;
            Message::PredictReq { t, executed, future }
        }
        MsgType::PredictResp => {
            let n = c.u32()? as usize;
            if c.buf.len() != n.saturating_mul(FRAME_BYTES) {
                return Err(c.bad(format!("{n} frames need {} bytes, got {}", n * FRAME_BYTES, c.buf.len())));
            }
            let frames = (0..n).map(|_| c.take(FRAME_BYTES).map(|b| FrameRGB { pixels: b.to_vec() })).collect::<Result<_, _>>()?;
            Message::PredictResp { frames }
        }
        MsgType::End => {
            let steps = c.u32()?;
            let accumulated_reward = f64::from_le_bytes(c.take(8)?.try_into().unwrap());
            Message::End { steps, accumulated_reward }
        }
        MsgType::Error => {
            let code = ErrorCode(u16::from_le_bytes(c.take(2)?.try_into().unwrap()));
            let rest = c.take(c.buf.len())?;
            let message = String::from_utf8(rest.to_vec()).map_err(|_| c.bad("message is not UTF-8"))?;
            Message::Error { code, message }
        }
    };
    c.finish()?;
    Ok(msg)
}

/// Header fields after validating magic and length cap.
fn parse_header(h: &[u8; HEADER_BYTES]) -> Result<(u8, usize), WireError> {
    let magic: [u8; 4] = h[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(WireError::BadMagic(magic));
    }
    let len = u32::from_le_bytes(h[5..9].try_into().unwrap());
    if len as usize > MAX_PAYLOAD {
        return Err(WireError::LengthOverflow(len));
    }
    Ok((h[4], len as usize))
}

/// Decodes one frame from the front of `bytes`; returns the message and the
/// number of bytes consumed. Nothing is returned for an incomplete frame.
pub fn decode(bytes: &[u8]) -> Result<(Message, usize), WireError> {
    if bytes.len() < HEADER_BYTES {
        return Err(WireError::ShortRead { needed: HEADER_BYTES, available: bytes.len() });
    }
    let (ty, len) = parse_header(bytes[..HEADER_BYTES].try_into().unwrap())?;
    let total = HEADER_BYTES + len;
    if bytes.len() < total {
        return Err(WireError::ShortRead { needed: total, available: bytes.len() });
    }
    let kind = MsgType::from_u8(ty).ok_or(WireError::UnknownType(ty))?;
    Ok((parse_payload(kind, &bytes[HEADER_BYTES..total])?, total))
}

/// Fills `buf`; `Ok(n < buf.len())` only at end of stream.
fn read_full(r: &mut impl Read, buf: &mut [u8]) -> Result<usize, WireError> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) => break,
            Ok(n) => got += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(WireError::Io(e)),
        }
    }
    Ok(got)
}

/// Reads one frame from a stream. A clean end of stream before any byte is
/// [`WireError::Closed`]; ending mid-frame is a short read.
pub fn read_message(r: &mut impl Read) -> Result<Message, WireError> {
    let mut h = [0u8; HEADER_BYTES];
    match read_full(r, &mut h)? {
        0 => return Err(WireError::Closed),
        n if n < HEADER_BYTES => return Err(WireError::ShortRead { needed: HEADER_BYTES, available: n }),
        _ => {}
    }
    let (ty, len) = parse_header(&h)?;
    let mut payload = vec![0u8; len];
    let got = read_full(r, &mut payload)?;
    if got < len {
        return Err(WireError::ShortRead { needed: HEADER_BYTES + len, available: HEADER_BYTES + got });
    }
    let kind = MsgType::from_u8(ty).ok_or(WireError::UnknownType(ty))?;
    parse_payload(kind, &payload)
}

pub fn write_message(w: &mut impl Write, msg: &Message) -> Result<(), WireError> {
    w.write_all(&encode(msg))?;
    w.flush()?;
    Ok(())
}

/// Reads the peer's handshake and returns its version.
pub fn read_hello(r: &mut impl Read) -> Result<u8, WireError> {
    let mut h = [0u8; HELLO_BYTES];
    match read_full(r, &mut h)? {
        0 => return Err(WireError::Closed),
        n if n < HELLO_BYTES => return Err(WireError::ShortRead { needed: HELLO_BYTES, available: n }),
        _ => {}
    }
    let magic: [u8; 4] = h[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(WireError::BadMagic(magic));
    }
    Ok(h[4])
}
