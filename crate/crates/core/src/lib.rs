//! Simulation and verification toolkit for sparse set disjointness
//! protocols and down-shift isoperimetry on the grid `[t]^n`.

pub mod channel;
pub mod disjointness;
pub mod downshift;
pub mod embedding;
pub mod error;
pub mod grid;
pub mod harness;

pub use channel::{run, Decision, Message, MessageKind, Party, Protocol, SharedRandomness, Transcript};
pub use disjointness::{compute_schedule, KSet, Schedule};
pub use embedding::{BoxT, EmbeddingParams};
pub use error::{Error, Result};
pub use grid::{CoordSet, GridParams, GridPoint, GridSet, PointCode};
