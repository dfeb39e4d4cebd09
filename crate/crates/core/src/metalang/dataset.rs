use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sample_task, LangConfig, LangTask, MetalangError, TokenSequence, NONLINEARITY};
use crate::rng::{self, derive_seed, streams, tags};

pub const DATASET_MAGIC: &[u8; 4] = b"MLG1";
pub const DATASET_FILE: &str = "sequences.mlg";
pub const INDEX_FILE: &str = "index.json";

const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetMode {
    /// A fresh task for every sequence.
    Procedural,
    /// Sequences draw their task uniformly from `size` pre-sampled tasks.
    Pool { size: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    /// Shared generator settings; `order` is replaced per task by a draw from `orders`.
    pub lang: LangConfig,
    pub orders: Vec<usize>,
    pub mode: DatasetMode,
    pub num_sequences: usize,
    pub master_seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            lang: LangConfig::default(),
            orders: vec![3, 4, 5, 6],
            mode: DatasetMode::Procedural,
            num_sequences: 1000,
            master_seed: 0,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<(), MetalangError> {
        self.lang.validate()?;
        if self.lang.vocab_size > 256 {
            return Err(MetalangError::Config("byte format supports vocab_size <= 256".into()));
        }
        if self.orders.is_empty() || self.orders.contains(&0) {
            return Err(MetalangError::Config("orders must be a non-empty list of positive integers".into()));
        }
        if let DatasetMode::Pool { size: 0 } = self.mode {
            return Err(MetalangError::Config("pool size must be at least 1".into()));
        }
        Ok(())
    }

    /// Seed and order of task slot `slot` (pool index, or sequence index in
    /// procedural mode).
    fn task_slot(&self, slot: usize) -> (u64, usize) {
        let tag = match self.mode {
            DatasetMode::Procedural => tags::LANG_TASK,
            DatasetMode::Pool { .. } => tags::LANG_POOL,
        };
        let seed = derive_seed(self.master_seed, tag, slot as u64);
        let pick = derive_seed(self.master_seed, tags::LANG_ORDER ^ tag, slot as u64);
        (seed, self.orders[(pick % self.orders.len() as u64) as usize])
    }

    fn task_config(&self, order: usize) -> LangConfig {
        LangConfig { order, ..self.lang.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    /// Pool slot in pool mode, sequence index in procedural mode.
    pub task_id: usize,
    pub task_seed: u64,
    pub n: usize,
    pub theta_sigma: f64,
    pub sequence_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub format: String,
    pub spec: DatasetSpec,
    pub nonlinearity: String,
    pub context_padding_token: u32,
    pub entries: Vec<IndexEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetHeader {
    pub vocab_size: u32,
    pub seq_len: u32,
    pub count: u64,
}

#[derive(Debug, Clone)]
pub struct DatasetSummary {
    pub dataset_path: PathBuf,
    pub index_path: PathBuf,
    pub sequences: usize,
}

/// `k` tasks sharing `config`, with seeds derived from `seed`.
pub fn make_task_pool(k: usize, config: &LangConfig, seed: u64) -> Result<Vec<LangTask>, MetalangError> {
    if k == 0 {
        return Err(MetalangError::Config("pool size must be at least 1".into()));
    }
    (0..k as u64).map(|i| sample_task(config, derive_seed(seed, tags::LANG_POOL, i))).collect()
}

/// Uniform pool slot for each of `num_sequences` sequences.
pub fn assign_pool_tasks(pool_size: usize, num_sequences: usize, seed: u64) -> Vec<usize> {
    assert!(pool_size > 0);
    let mut rng = rng::stream(seed, streams::DATASET);
    (0..num_sequences).map(|_| rng.random_range(0..pool_size)).collect()
}

fn plan(spec: &DatasetSpec) -> Vec<IndexEntry> {
    let slots: Vec<usize> = match spec.mode {
        DatasetMode::Procedural => (0..spec.num_sequences).collect(),
        DatasetMode::Pool { size } => assign_pool_tasks(size, spec.num_sequences, spec.master_seed),
    };
    slots
        .into_iter()
        .enumerate()
        .map(|(i, slot)| {
            let (task_seed, n) = spec.task_slot(slot);
            IndexEntry {
                task_id: slot,
                task_seed,
                n,
                theta_sigma: spec.lang.theta_sigma,
                sequence_seed: derive_seed(spec.master_seed, tags::LANG_SEQUENCE, i as u64),
            }
        })
        .collect()
}

/// Writes `DATASET_FILE` and `INDEX_FILE` into `dir`.
///
/// Sequences are generated in parallel but written in index order, so the
/// bytes do not depend on the thread count.
pub fn write_dataset(spec: &DatasetSpec, dir: &Path) -> Result<DatasetSummary, MetalangError> {
    spec.validate()?;
    fs::create_dir_all(dir)?;
    let entries = plan(spec);
    let dataset_path = dir.join(DATASET_FILE);
    let mut out = BufWriter::new(File::create(&dataset_path)?);
    let header = DatasetHeader {
        vocab_size: spec.lang.vocab_size as u32,
        seq_len: spec.lang.seq_len as u32,
        count: spec.num_sequences as u64,
    };
    write_header(&mut out, &header)?;

    for chunk in entries.chunks(CHUNK) {
        let rows: Vec<Vec<u8>> = chunk
            .par_iter()
            .map(|e| {
                let task = sample_task(&spec.task_config(e.n), e.task_seed)?;
                let seq = task.generate_sequence(e.sequence_seed);
                Ok(seq.tokens.iter().map(|&t| t as u8).collect())
            })
            .collect::<Result<_, MetalangError>>()?;
        for row in rows {
            out.write_all(&row)?;
        }
    }
    out.flush()?;

    let index = DatasetIndex {
        format: String::from_utf8_lossy(DATASET_MAGIC).into_owned(),
        spec: spec.clone(),
        nonlinearity: NONLINEARITY.to_string(),
        context_padding_token: 0,
        entries,
    };
    let index_path = dir.join(INDEX_FILE);
    fs::write(&index_path, serde_json::to_vec_pretty(&index)?)?;
    Ok(DatasetSummary { dataset_path, index_path, sequences: spec.num_sequences })
}

fn write_header(out: &mut impl Write, h: &DatasetHeader) -> std::io::Result<()> {
    out.write_all(DATASET_MAGIC)?;
    out.write_all(&h.vocab_size.to_le_bytes())?;
    out.write_all(&h.seq_len.to_le_bytes())?;
    out.write_all(&h.count.to_le_bytes())
}

/// Writes pre-tokenized rows (e.g. a remapped text corpus) in the dataset
/// file format.
pub fn write_sequences(path: &Path, vocab_size: usize, sequences: &[TokenSequence]) -> Result<DatasetHeader, MetalangError> {
    let seq_len = sequences.first().map_or(0, |s| s.tokens.len());
    if vocab_size > 256 || sequences.iter().any(|s| s.tokens.len() != seq_len) {
        return Err(MetalangError::Config("rows must share one length and fit in a byte".into()));
    }
    let header = DatasetHeader { vocab_size: vocab_size as u32, seq_len: seq_len as u32, count: sequences.len() as u64 };
    let mut out = BufWriter::new(File::create(path)?);
    write_header(&mut out, &header)?;
    for s in sequences {
        if let Some(&bad) = s.tokens.iter().find(|&&t| t as usize >= vocab_size) {
            return Err(MetalangError::Config(format!("token {bad} outside vocabulary")));
        }
        out.write_all(&s.tokens.iter().map(|&t| t as u8).collect::<Vec<u8>>())?;
    }
    out.flush()?;
    Ok(header)
}

/// Reads a dataset file into its header and one byte row per sequence.
pub fn read_dataset(path: &Path) -> Result<(DatasetHeader, Vec<Vec<u8>>), MetalangError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; 20];
    r.read_exact(&mut head)
        .map_err(|_| MetalangError::Format("file shorter than header".into()))?;
    if &head[0..4] != DATASET_MAGIC {
        return Err(MetalangError::Format("bad magic".into()));
    }
    let header = DatasetHeader {
        vocab_size: u32::from_le_bytes(head[4..8].try_into().unwrap()),
        seq_len: u32::from_le_bytes(head[8..12].try_into().unwrap()),
        count: u64::from_le_bytes(head[12..20].try_into().unwrap()),
    };
    let mut rows = Vec::with_capacity(header.count as usize);
    for i in 0..header.count {
        let mut row = vec![0u8; header.seq_len as usize];
        r.read_exact(&mut row)
            .map_err(|_| MetalangError::Format(format!("truncated at sequence {i}")))?;
        if let Some(&bad) = row.iter().find(|&&t| u32::from(t) >= header.vocab_size) {
            return Err(MetalangError::Format(format!("token {bad} outside vocabulary in sequence {i}")));
        }
        rows.push(row);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(MetalangError::Format("trailing bytes after last sequence".into()));
    }
    Ok((header, rows))
}
