use std::time::Duration;

use super::{
    Connection, Grammar, Message, MsgType, ObsKind, ObsPayload, ResetPayload, SessionMode, WireError,
};
use crate::agent::{Policy, PolicyError, StepView};
use crate::eval::{EvalError, PredictRequest, Predictor};
use crate::maze::{ActionId, MazeTask, SimState};
use crate::render::{render_fp, render_topdown, FrameRGB, WIRE_TOPDOWN_K};

/// Where external agents live: a command speaking over its stdio, or a TCP
/// address accepting one connection per episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Exec(String),
    Connect(String),
}

impl Endpoint {
    pub fn open(&self, timeout: Duration) -> Result<Connection, WireError> {
        match self {
            Endpoint::Exec(cmd) => Connection::spawn(cmd, timeout),
            Endpoint::Connect(addr) => Connection::connect(addr, timeout),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Endpoint::Exec(cmd) => format!("exec:{cmd}"),
            Endpoint::Connect(addr) => format!("wire:{addr}"),
        }
    }
}

/// Environment side of one episode. Enforces the message grammar on
/// everything it sends and receives and keeps the transcript.
pub struct ServerSession {
    conn: Connection,
    grammar: Grammar,
    transcript: Vec<MsgType>,
    reset: ResetPayload,
}

impl ServerSession {
    pub fn start(mut conn: Connection, reset: ResetPayload) -> Result<ServerSession, WireError> {
        conn.handshake()?;
        let mut s = ServerSession { conn, grammar: Grammar::default(), transcript: Vec::new(), reset: reset.clone() };
        s.send(Message::Reset(reset))?;
        Ok(s)
    }

    pub fn reset(&self) -> &ResetPayload {
        &self.reset
    }

    /// Message types exchanged so far, in order.
    pub fn transcript(&self) -> &[MsgType] {
        &self.transcript
    }

    fn send(&mut self, msg: Message) -> Result<(), WireError> {
        let kind = msg.kind();
        assert!(self.grammar.advance(kind), "server emitted {kind:?} out of order");
        self.transcript.push(kind);
        self.conn.send(msg)
    }

    /// Tells the peer why the session ends, then hands back the error.
    fn fail(&mut self, err: WireError) -> WireError {
        if let Some(code) = err.code() {
            let _ = self.conn.send(Message::Error { code, message: err.to_string() });
        }
        err
    }

    fn expect(&mut self, want: MsgType, expected: &'static str) -> Result<Message, WireError> {
        let msg = match self.conn.recv() {
            Ok(m) => m,
            Err(e) => return Err(self.fail(e)),
        };
        if let Message::Error { code, message } = msg {
            return Err(WireError::Remote { code, message });
        }
        let got = msg.kind();
        if got != want || !self.grammar.advance(got) {
            return Err(self.fail(WireError::OutOfOrder { expected, got }));
        }
        self.transcript.push(got);
        Ok(msg)
    }

    pub fn observe(&mut self, view: &StepView<'_>) -> Result<(), WireError> {
        let data = match self.reset.obs_kind {
            ObsKind::Frame => render_fp(view.task, view.state).pixels,
            ObsKind::TopDown => render_topdown(view.task, view.state, WIRE_TOPDOWN_K).to_bytes(),
        };
        self.send(Message::Obs(ObsPayload {
            step: view.state.step_index as u32,
            reward: view.last_reward as f32,
            command: view.command(),
            kind: self.reset.obs_kind,
            data,
        }))
    }

    pub fn act(&mut self) -> Result<ActionId, WireError> {
        match self.expect(MsgType::Act, "ACT")? {
            Message::Act(a) => Ok(a),
            _ => unreachable!("kind checked"),
        }
    }

    pub fn predict(&mut self, t: usize, executed: &[ActionId], future: &[ActionId]) -> Result<Vec<FrameRGB>, WireError> {
        self.send(Message::PredictReq { t: t as u32, executed: executed.to_vec(), future: future.to_vec() })?;
        match self.expect(MsgType::PredictResp, "PREDICT_RESP")? {
            Message::PredictResp { frames } if frames.len() == future.len() => Ok(frames),
            Message::PredictResp { frames } => Err(self.fail(WireError::BadPayload {
                kind: MsgType::PredictResp,
                message: format!("expected {} frames, got {}", future.len(), frames.len()),
            })),
            _ => unreachable!("kind checked"),
        }
    }

    /// Sends END and waits for the client to hang up; anything the client
    /// sends instead is out of order.
    pub fn end(mut self, steps: usize, accumulated_reward: f64) -> Result<Vec<MsgType>, WireError> {
        self.send(Message::End { steps: steps as u32, accumulated_reward })?;
        match self.conn.await_close() {
            Ok(None) => Ok(self.transcript),
            Ok(Some(Message::Error { code, message })) => Err(WireError::Remote { code, message }),
            Ok(Some(m)) => Err(self.fail(WireError::OutOfOrder { expected: "end of stream", got: m.kind() })),
            Err(e) => Err(self.fail(e)),
        }
    }
}

fn policy_error(step: usize, e: WireError) -> PolicyError {
    if e.is_transport() {
        PolicyError::Transport { step, message: e.to_string() }
    } else {
        PolicyError::Protocol { step, message: e.to_string() }
    }
}

/// An external policy reached over the wire; one connection per episode.
pub struct WirePolicy {
    endpoint: Endpoint,
    timeout: Duration,
    obs_kind: ObsKind,
    session: Option<ServerSession>,
}

impl WirePolicy {
    pub fn new(endpoint: Endpoint, timeout: Duration, obs_kind: ObsKind) -> WirePolicy {
        WirePolicy { endpoint, timeout, obs_kind, session: None }
    }
}

impl Policy for WirePolicy {
    fn name(&self) -> String {
        self.endpoint.describe()
    }

    fn begin_episode(&mut self, task: &MazeTask, _seed: u64) -> Result<(), PolicyError> {
        let reset = ResetPayload {
            obs_kind: self.obs_kind,
            mode: SessionMode::Policy,
            episode_len: task.config.episode_len as u32,
            requests_per_checkpoint: 0,
            checkpoints: Vec::new(),
        };
        let conn = self.endpoint.open(self.timeout).map_err(|e| policy_error(0, e))?;
        self.session = Some(ServerSession::start(conn, reset).map_err(|e| policy_error(0, e))?);
        Ok(())
    }

    fn act(&mut self, view: &StepView<'_>) -> Result<ActionId, PolicyError> {
        let step = view.state.step_index;
        let s = self.session.as_mut().ok_or_else(|| PolicyError::Protocol { step, message: "no open session".into() })?;
        s.observe(view).and_then(|_| s.act()).map_err(|e| policy_error(step, e))
    }

    fn end_episode(&mut self, final_state: &SimState) -> Result<(), PolicyError> {
        let step = final_state.step_index;
        let s = self.session.take().ok_or_else(|| PolicyError::Protocol { step, message: "no open session".into() })?;
        s.end(step, final_state.accumulated_reward).map(|_| ()).map_err(|e| policy_error(step, e))
    }
}

/// An external world model reached over the wire.
pub struct WirePredictor {
    endpoint: Endpoint,
    timeout: Duration,
    episode_len: usize,
    checkpoints: Vec<usize>,
    depths: usize,
    session: Option<ServerSession>,
    last_t: usize,
}

impl WirePredictor {
    pub fn new(endpoint: Endpoint, timeout: Duration, episode_len: usize, checkpoints: Vec<usize>, depths: usize) -> Self {
        WirePredictor { endpoint, timeout, episode_len, checkpoints, depths, session: None, last_t: 0 }
    }

    fn wrap(&self, e: WireError) -> EvalError {
        EvalError::Predictor { t: self.last_t, message: e.to_string() }
    }

    fn session(&mut self) -> Result<&mut ServerSession, EvalError> {
        let t = self.last_t;
        self.session.as_mut().ok_or(EvalError::Predictor { t, message: "no open session".into() })
    }
}

impl Predictor for WirePredictor {
    fn begin_episode(&mut self, _task_index: usize) -> Result<(), EvalError> {
        self.last_t = 0;
        let reset = ResetPayload {
            obs_kind: ObsKind::Frame,
            mode: SessionMode::WorldModel,
            episode_len: self.episode_len as u32,
            requests_per_checkpoint: self.depths as u32,
            checkpoints: self.checkpoints.iter().map(|&c| c as u32).collect(),
        };
        let conn = self.endpoint.open(self.timeout).map_err(|e| self.wrap(e))?;
        self.session = Some(ServerSession::start(conn, reset).map_err(|e| self.wrap(e))?);
        Ok(())
    }

    fn observe(&mut self, view: &StepView<'_>) -> Result<(), EvalError> {
        self.last_t = view.state.step_index + 1;
        let r = self.session()?.observe(view);
        r.map_err(|e| self.wrap(e))
    }

    fn predict(&mut self, request: &PredictRequest<'_>) -> Result<Vec<FrameRGB>, EvalError> {
        let r = self.session()?.predict(request.t, request.executed, request.future_actions);
        r.map_err(|e| self.wrap(e))
    }

    fn commit(&mut self, _action: ActionId) -> Result<(), EvalError> {
        // the client's choice is read for the grammar but not executed
        let r = self.session()?.act();
        r.map(|_| ()).map_err(|e| self.wrap(e))
    }

    fn end_episode(&mut self, final_state: &SimState) -> Result<(), EvalError> {
        let s = self.session.take().ok_or(EvalError::Predictor { t: self.last_t, message: "no open session".into() })?;
        s.end(final_state.step_index, final_state.accumulated_reward).map(|_| ()).map_err(|e| self.wrap(e))
    }
}


#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub steps: usize,
    pub accumulated_reward: f64,
    pub actions: Vec<ActionId>,
    pub transcript: Vec<MsgType>,
}

/// Runs one full policy episode of `task` against the client on `conn`.
pub fn serve_episode(task: &MazeTask, conn: Connection, obs_kind: ObsKind) -> Result<EpisodeResult, WireError> {
    let reset = ResetPayload {
        obs_kind,
        mode: SessionMode::Policy,
        episode_len: task.config.episode_len as u32,
        requests_per_checkpoint: 0,
        checkpoints: Vec::new(),
    };
    let mut session = ServerSession::start(conn, reset)?;
    let mut state = SimState::initial(task);
    let mut last_reward = 0.0;
    let mut actions = Vec::with_capacity(task.config.episode_len);
    while !state.done {
        session.observe(&StepView { task, state: &state, last_reward })?;
        let a = session.act()?;
        let out = crate::maze::step(task, &state, a).expect("state is not done");
        actions.push(a);
        last_reward = out.reward;
        state = out.state;
    }
    let transcript = session.end(state.step_index, state.accumulated_reward)?;
    Ok(EpisodeResult { steps: state.step_index, accumulated_reward: state.accumulated_reward, actions, transcript })
}
