//! Function-correcting codes with homogeneous distance over `Z_{2^l}`.
//!
//! The crate covers the full pipeline: ring arithmetic and ball volumes
//! ([`ring`]), evaluatable message functions ([`function`]), requirement and
//! function-distance matrices ([`matrix`]), greedy and exact searches for
//! irregular-distance codes ([`search`]), closed-form redundancy bounds
//! ([`bounds`]), systematic encoders with verification and decoding
//! ([`encoder`]), and seeded channel experiments ([`channel`]).
//!
//! Data-parallel inner loops (pair verification, nearest-neighbor decoding,
//! simulation trials, subtree search) run on rayon when the default
//! `parallel` feature is enabled and fall back to sequential loops when it
//! is disabled. The `*_seq` entry points expose the sequential paths
//! directly so the two can be compared.

pub mod bounds;
pub mod channel;
pub mod encoder;
pub mod error;
pub mod function;
pub mod matrix;
pub mod ring;
pub mod search;

pub use error::{Error, Result};
pub use ring::{RingParams, RingVector, WeightKind};

/// Default cap on `l*k` for operations that enumerate all of `Z_{2^l}^k`.
pub const DEFAULT_BUDGET_LK: u32 = 24;
