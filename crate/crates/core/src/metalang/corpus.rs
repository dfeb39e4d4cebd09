use rand::seq::SliceRandom;

use super::TokenSequence;
use crate::rng::{self, streams};

/// Characters that take the six tokens left over after the 26 letters.
pub const PUNCTUATION: [u8; 6] = [b' ', b'.', b',', b'\'', b'?', b'\n'];

const VOCAB: usize = 32;

/// Random bijection between {a..z} ∪ [`PUNCTUATION`] and the 32 tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusMap {
    seed: u64,
    char_to_token: [Option<u8>; 256],
    token_to_char: [u8; VOCAB],
}

impl CorpusMap {
    pub fn new(seed: u64) -> Self {
        let mut perm: Vec<u8> = (0..VOCAB as u8).collect();
        perm.shuffle(&mut rng::stream(seed, streams::CORPUS_MAP));
        let chars = (b'a'..=b'z').chain(PUNCTUATION);
        let mut char_to_token = [None; 256];
        let mut token_to_char = [0u8; VOCAB];
        for (ch, &tok) in chars.zip(perm.iter()) {
            char_to_token[ch as usize] = Some(tok);
            token_to_char[tok as usize] = ch;
        }
        CorpusMap { seed, char_to_token, token_to_char }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Token for `ch` after ASCII case folding; `None` for unmapped bytes.
    pub fn token(&self, ch: u8) -> Option<u8> {
        self.char_to_token[ch.to_ascii_lowercase() as usize]
    }

    pub fn char_of(&self, token: u8) -> Option<u8> {
        self.token_to_char.get(token as usize).copied()
    }

    /// Maps every usable byte of `text`, dropping the rest.
    pub fn map_text(&self, text: &[u8]) -> Vec<u8> {
        text.iter().filter_map(|&c| self.token(c)).collect()
    }

    /// Non-overlapping windows of `window` tokens; a short tail is dropped.
    pub fn map_corpus(&self, text: &[u8], window: usize) -> Vec<TokenSequence> {
        assert!(window > 0, "window must be positive");
        let tokens = self.map_text(text);
        if tokens.is_empty() {
            log::warn!("corpus contains no mappable characters");
        } else if tokens.len() < window {
            log::warn!("corpus has {} usable characters, fewer than one window of {window}", tokens.len());
        }
        tokens
            .chunks_exact(window)
            .map(|w| TokenSequence {
                tokens: w.iter().map(|&t| u32::from(t)).collect(),
                vocab_size: VOCAB,
                task_seed: self.seed,
            })
            .collect()
    }
}
