use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EpisodeRecord, RolloutError};
use crate::checksum::fnv64;
use crate::maze::TaskManifest;
use crate::render::FRAME_BYTES;

pub const PACK_FORMAT: &str = "icbench-episode-pack";
pub const PACK_VERSION: u32 = 1;

const META: &str = "meta.json";
const FRAMES: &str = "frames.bin";
const ACTIONS: &str = "actions.bin";
const LABELS: &str = "labels.bin";
const REWARDS: &str = "rewards.bin";
const COMMANDS: &str = "commands.bin";
const CHECKSUMS: &str = "checksums.json";

/// Checksummed chunks, in the order they are verified.
pub const CHUNKS: [&str; 6] = [META, FRAMES, ACTIONS, LABELS, REWARDS, COMMANDS];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackMeta {
    pub format: String,
    pub version: u32,
    pub engine_version: String,
    pub manifest: TaskManifest,
    pub seed: u64,
    pub behavior_p: f64,
    pub epsilon: f64,
    pub episode_len: usize,
    pub frame_bytes: usize,
}

fn hex(v: u64) -> String {
    format!("{v:016x}")
}

/// Writes `rec` as a pack directory at `dir` (created if missing).
pub fn write_pack(rec: &EpisodeRecord, dir: &Path) -> Result<(), RolloutError> {
    fs::create_dir_all(dir).map_err(RolloutError::io(dir))?;
    let meta = PackMeta {
        format: PACK_FORMAT.into(),
        version: PACK_VERSION,
        engine_version: env!("CARGO_PKG_VERSION").into(),
        manifest: rec.manifest.clone(),
        seed: rec.seed,
        behavior_p: rec.behavior_p,
        epsilon: rec.epsilon,
        episode_len: rec.len(),
        frame_bytes: FRAME_BYTES,
    };
    let mut meta_bytes = serde_json::to_vec_pretty(&meta)?;
    meta_bytes.push(b'\n');
    let rewards: Vec<u8> = rec.rewards.iter().flat_map(|r| r.to_le_bytes()).collect();
    let chunks: [(&str, &[u8]); 6] = [
        (META, &meta_bytes),
        (FRAMES, &rec.frames),
        (ACTIONS, &rec.behavior_actions),
        (LABELS, &rec.reference_actions),
        (REWARDS, &rewards),
        (COMMANDS, &rec.commands),
    ];
    let mut sums = BTreeMap::new();
    for (name, bytes) in chunks {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(RolloutError::io(path))?;
        sums.insert(name, hex(fnv64(bytes)));
    }
    let mut sums_bytes = serde_json::to_vec_pretty(&sums)?;
    sums_bytes.push(b'\n');
    let path = dir.join(CHECKSUMS);
    fs::write(&path, sums_bytes).map_err(RolloutError::io(path))
}

fn read(dir: &Path, name: &str) -> Result<Vec<u8>, RolloutError> {
    let path = dir.join(name);
    fs::read(&path).map_err(RolloutError::io(path))
}

fn exact_len(chunk: &'static str, bytes: &[u8], expected: usize) -> Result<(), RolloutError> {
    let found = bytes.len();
    if found < expected {
        return Err(RolloutError::Truncated { chunk, expected: expected as u64, found: found as u64 });
    }
    if found > expected {
        return Err(RolloutError::Malformed { chunk, message: format!("{} trailing bytes", found - expected) });
    }
    Ok(())
}

/// Reads and verifies a pack. Checks run in order: version, chunk lengths,
/// checksums; the first failure is reported.
pub fn read_pack(dir: &Path) -> Result<EpisodeRecord, RolloutError> {
    let sums: BTreeMap<String, String> = serde_json::from_slice(&read(dir, CHECKSUMS)?)
        .map_err(|e| RolloutError::Malformed { chunk: CHECKSUMS, message: e.to_string() })?;
    let mut data = BTreeMap::new();
    for name in CHUNKS {
        data.insert(name, read(dir, name)?);
    }
    let verify = |name: &'static str| -> Result<(), RolloutError> {
        match sums.get(name) {
            Some(h) if *h == hex(fnv64(&data[name])) => Ok(()),
            Some(_) => Err(RolloutError::Checksum { chunk: name }),
            None => Err(RolloutError::Malformed { chunk: CHECKSUMS, message: format!("no entry for {name}") }),
        }
    };

    let meta: PackMeta = match serde_json::from_slice(&data[META]) {
        Ok(m) => m,
        Err(e) => {
            verify(META)?;
            return Err(RolloutError::Malformed { chunk: META, message: e.to_string() });
        }
    };
    if meta.version != PACK_VERSION {
        return Err(RolloutError::Version { found: meta.version, expected: PACK_VERSION });
    }
    if meta.format != PACK_FORMAT || meta.frame_bytes != FRAME_BYTES {
        verify(META)?;
        return Err(RolloutError::Malformed { chunk: META, message: "not an episode pack of this frame size".into() });
    }
    let n = meta.episode_len;
    exact_len(FRAMES, &data[FRAMES], n * FRAME_BYTES)?;
    exact_len(ACTIONS, &data[ACTIONS], n)?;
    exact_len(LABELS, &data[LABELS], n)?;
    exact_len(REWARDS, &data[REWARDS], n * 4)?;
    exact_len(COMMANDS, &data[COMMANDS], n)?;
    for name in CHUNKS {
        verify(name)?;
    }

    let mut take = |name| data.remove(name).expect("chunk read above");
    let rewards = take(REWARDS).chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
    Ok(EpisodeRecord {
        manifest: meta.manifest,
        seed: meta.seed,
        behavior_p: meta.behavior_p,
        epsilon: meta.epsilon,
        frames: take(FRAMES),
        behavior_actions: take(ACTIONS),
        reference_actions: take(LABELS),
        rewards,
        commands: take(COMMANDS),
    })
}
