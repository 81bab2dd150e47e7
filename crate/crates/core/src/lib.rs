//! Randomized branching programs and the machinery for simulating them with
//! their own input as the source of randomness.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command-line front end live in the companion `bpderand` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bits;
pub mod bp;
pub mod distribution;
pub mod extractors;
pub mod field;
pub mod gf2x;
pub mod gip;
pub mod prg;
pub mod simulator;

pub use bits::{BitStream, RngBitStream, SliceBitStream, StreamExhausted};
pub use bp::{AccessDiscipline, BpError, Program, Vertex, VertexId};
