//! Policy and predictor specifications as written on the command line.

use std::time::Duration;

use icbench_core::agent::{Policy, PrivilegedPolicy, RandomPolicy};
use icbench_core::eval::{EvalError, OraclePredictor, Predictor, RepeatLastPredictor, WMEvalConfig};
use icbench_core::wire::{Endpoint, ObsKind, WirePolicy, WirePredictor};

use crate::error::config_error;

#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Random,
    Privileged(f64),
    Wire(Endpoint),
}

fn endpoint(s: &str) -> Option<Endpoint> {
    if let Some(addr) = s.strip_prefix("wire:") {
        Some(Endpoint::Connect(addr.to_string()))
    } else {
        s.strip_prefix("exec:").map(|cmd| Endpoint::Exec(cmd.to_string()))
    }
}

impl PolicySpec {
    /// `random`, `privileged:P`, `wire:HOST:PORT` or `exec:COMMAND`.
    pub fn parse(s: &str) -> anyhow::Result<PolicySpec> {
        if s == "random" {
            return Ok(PolicySpec::Random);
        }
        if let Some(p) = s.strip_prefix("privileged:") {
            let p: f64 = p.parse().map_err(|_| config_error(format!("bad transfer probability in {s:?}")))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(config_error(format!("transfer probability {p} outside [0, 1]")));
            }
            return Ok(PolicySpec::Privileged(p));
        }
        match endpoint(s) {
            Some(Endpoint::Connect(a) | Endpoint::Exec(a)) if a.trim().is_empty() => {
                Err(config_error(format!("empty endpoint in {s:?}")))
            }
            Some(e) => Ok(PolicySpec::Wire(e)),
            None => Err(config_error(format!(
                "unknown policy {s:?}; expected random, privileged:P, wire:ADDR or exec:CMD"
            ))),
        }
    }

    pub fn build(&self, timeout: Duration, obs: ObsKind) -> Box<dyn Policy> {
        match self {
            PolicySpec::Random => Box::new(RandomPolicy::new(0)),
            PolicySpec::Privileged(p) => Box::new(PrivilegedPolicy::new(*p)),
            PolicySpec::Wire(e) => Box::new(WirePolicy::new(e.clone(), timeout, obs)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PredictorSpec {
    Oracle,
    RepeatLast,
    Wire(Endpoint),
}

impl PredictorSpec {
    /// `oracle`, `repeat-last`, `wire:HOST:PORT` or `exec:COMMAND`.
    pub fn parse(s: &str) -> anyhow::Result<PredictorSpec> {
        match s {
            "oracle" => Ok(PredictorSpec::Oracle),
            "repeat-last" => Ok(PredictorSpec::RepeatLast),
            _ => endpoint(s).map(PredictorSpec::Wire).ok_or_else(|| {
                config_error(format!("unknown predictor {s:?}; expected oracle, repeat-last, wire:ADDR or exec:CMD"))
            }),
        }
    }

    pub fn build(&self, timeout: Duration, cfg: &WMEvalConfig) -> Result<Box<dyn Predictor>, EvalError> {
        Ok(match self {
            PredictorSpec::Oracle => Box::<OraclePredictor>::default(),
            PredictorSpec::RepeatLast => Box::<RepeatLastPredictor>::default(),
            PredictorSpec::Wire(e) => Box::new(WirePredictor::new(
                e.clone(),
                timeout,
                cfg.rollout_len(),
                cfg.checkpoints.clone(),
                cfg.depths.len(),
            )),
        })
    }
}

pub fn obs_kind(s: &str) -> anyhow::Result<ObsKind> {
    match s {
        "frame" => Ok(ObsKind::Frame),
        "topdown" => Ok(ObsKind::TopDown),
        _ => Err(config_error(format!("unknown observation kind {s:?}; expected frame or topdown"))),
    }
}
