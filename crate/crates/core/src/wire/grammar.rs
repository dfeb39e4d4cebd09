use super::MsgType;

/// Position in the per-episode language
/// `RESET (OBS (PREDICT_REQ PREDICT_RESP)* ACT)* END`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Start,
    /// Between steps: OBS or END may follow.
    Ready,
    /// After OBS: a forecast request or the ACT.
    Observed,
    /// After PREDICT_REQ: only PREDICT_RESP.
    Forecasting,
    Done,
}

#[derive(Debug, Clone)]
pub struct Grammar {
    phase: Phase,
}

impl Default for Grammar {
    fn default() -> Self {
        Grammar { phase: Phase::Start }
    }
}

impl Grammar {
    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Advances on `t`; on rejection the phase is left unchanged.
    pub fn advance(&mut self, t: MsgType) -> bool {
        use MsgType::*;
        use Phase::*;
        let next = match (self.phase, t) {
            (Start, Reset) => Ready,
            (Ready, Obs) => Observed,
            (Ready, End) => Done,
            (Observed, PredictReq) => Forecasting,
            (Observed, Act) => Ready,
            (Forecasting, PredictResp) => Observed,
            _ => return false,
        };
        self.phase = next;
        true
    }

    pub fn is_complete(&self) -> bool {
        self.phase == Phase::Done
    }

    /// Whole-sequence membership.
    pub fn accepts(seq: &[MsgType]) -> bool {
        let mut g = Grammar::default();
        seq.iter().all(|&t| g.advance(t)) && g.is_complete()
    }
}
