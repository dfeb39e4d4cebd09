use rand_chacha::ChaCha8Rng;

use super::{Connection, Message, MsgType, ObsPayload, ResetPayload, SessionMode, WireError};
use crate::agent::random_action;
use crate::maze::ActionId;
use crate::render::{FrameRGB, FRAME_BYTES};
use crate::checksum::fnv64;
use crate::rng::{self, derive_seed, streams, tags};

/// The client side of a session: an external policy or world model.
pub trait WireAgent {
    fn begin(&mut self, _reset: &ResetPayload) {}
    fn observe(&mut self, obs: &ObsPayload);
    fn act(&mut self) -> ActionId;
    /// Forecast `future.len()` frames. The default repeats the last frame.
    fn predict(&mut self, _t: u32, _executed: &[ActionId], future: &[ActionId]) -> Vec<FrameRGB> {
        vec![FrameRGB::blank(); future.len()]
    }
}

/// Uniform-random actions; forecasts repeat the last frame seen.
pub struct RandomAgent {
    seed: u64,
    rng: ChaCha8Rng,
    last: Option<Vec<u8>>,
    keyed: bool,
    fresh: bool,
}

impl RandomAgent {
    pub fn new(seed: u64) -> RandomAgent {
        RandomAgent { seed, rng: rng::stream(seed, streams::AGENT_RANDOM), last: None, keyed: false, fresh: false }
    }

    /// Reseeds at the first observation of every episode from `seed` and a
    /// hash of that observation, so a client started once per episode with
    /// a fixed seed still draws a different (reproducible) stream per task.
    pub fn keyed(seed: u64) -> RandomAgent {
        RandomAgent { keyed: true, ..RandomAgent::new(seed) }
    }
}

impl WireAgent for RandomAgent {
    fn begin(&mut self, _reset: &ResetPayload) {
        self.fresh = true;
        self.last = None;
    }

    fn observe(&mut self, obs: &ObsPayload) {
        if self.keyed && self.fresh {
            let key = derive_seed(self.seed, tags::EPISODE, fnv64(&obs.data));
            self.rng = rng::stream(key, streams::AGENT_RANDOM);
        }
        self.fresh = false;
        if obs.data.len() == FRAME_BYTES {
            self.last = Some(obs.data.clone());
        }
    }

    fn act(&mut self) -> ActionId {
        random_action(&mut self.rng)
    }

    fn predict(&mut self, _t: u32, _executed: &[ActionId], future: &[ActionId]) -> Vec<FrameRGB> {
        let f = self.last.clone().map(|pixels| FrameRGB { pixels }).unwrap_or_else(FrameRGB::blank);
        vec![f; future.len()]
    }
}

/// What the client saw of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientEpisode {
    pub reset: ResetPayload,
    pub steps: u32,
    /// Accumulated reward as reported by END.
    pub reported_reward: f64,
    /// Sum of the per-step OBS rewards (f32 on the wire).
    pub observed_reward: f64,
    pub actions: Vec<ActionId>,
}

fn out_of_order(conn: &mut Connection, expected: &'static str, got: MsgType) -> WireError {
    let err = WireError::OutOfOrder { expected, got };
    let _ = conn.send(Message::Error { code: err.code().expect("has a code"), message: err.to_string() });
    err
}

/// Plays one episode as the client. The caller drops the connection
/// afterwards, which is the client's hang-up.
pub fn run_client(conn: &mut Connection, agent: &mut dyn WireAgent) -> Result<ClientEpisode, WireError> {
    conn.handshake()?;
    let reset = match conn.recv()? {
        Message::Reset(r) => r,
        Message::Error { code, message } => return Err(WireError::Remote { code, message }),
        m => return Err(out_of_order(conn, "RESET", m.kind())),
    };
    agent.begin(&reset);
    let mut ep = ClientEpisode { reset, steps: 0, reported_reward: 0.0, observed_reward: 0.0, actions: Vec::new() };
    loop {
        match conn.recv()? {
            Message::Obs(obs) => {
                ep.observed_reward += f64::from(obs.reward);
                agent.observe(&obs);
                let t = obs.step + 1;
                if ep.reset.mode == SessionMode::WorldModel && ep.reset.checkpoints.contains(&t) {
                    for _ in 0..ep.reset.requests_per_checkpoint {
                        match conn.recv()? {
                            Message::PredictReq { t, executed, future } => {
                                let frames = agent.predict(t, &executed, &future);
                                conn.send(Message::PredictResp { frames })?;
                            }
                            Message::Error { code, message } => return Err(WireError::Remote { code, message }),
                            m => return Err(out_of_order(conn, "PREDICT_REQ", m.kind())),
                        }
                    }
                }
                let a = agent.act();
                ep.actions.push(a);
                conn.send(Message::Act(a))?;
            }
            Message::End { steps, accumulated_reward } => {
                ep.steps = steps;
                ep.reported_reward = accumulated_reward;
                conn.close_write();
                return Ok(ep);
            }
            Message::Error { code, message } => return Err(WireError::Remote { code, message }),
            m => return Err(out_of_order(conn, "OBS or END", m.kind())),
        }
    }
}
