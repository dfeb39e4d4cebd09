//! Procedural benchmark engine for in-context learning research.
//!
//! Two task families are generated here: randomized n-gram pseudo-languages
//! ([`metalang`]) and first-person maze navigation ([`maze`], [`render`]),
//! together with rule-based reference agents ([`agent`]), imitation data
//! collection ([`rollout`]), evaluation protocols ([`eval`]) and the binary
//! protocol that connects external policies ([`wire`]), plus a reset/step
//! environment surface ([`env`]).

pub mod checksum;
pub mod metalang;
pub mod rng;
pub mod maze;
pub mod render;
pub mod agent;
pub mod eval;
pub mod rollout;
pub mod wire;
pub mod env;
