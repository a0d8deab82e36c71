//! Core analysis primitives for host provenance graphs.
//!
//! This crate is the allocation-only (`no_std` + `alloc`) half of the
//! toolkit. It knows nothing about files, processes, or the network: it
//! takes already-parsed event sequences and turns them into provenance
//! graphs, neighborhood type vectors, anomaly scores, process communities,
//! and evaluation metrics. All IO, trace generation, and the CLI live in
//! the companion `provlab` crate.
//!
//! Everything here is deterministic: maps are ordered, traversal orders are
//! fixed, and no operation reads clocks or random state. Rebuilding the same
//! inputs always yields identical outputs, which is what makes run
//! directories replayable byte-for-byte.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod detector;
pub mod event;
pub mod features;
pub mod fp_reduction;
pub mod graph;
pub mod metrics;

mod special;
