//! Detection lab around `provlab-core`: synthetic trace generation, trace
//! IO and export formats, and the staged evaluation pipeline behind the
//! `provlab` binary.

pub mod export;
pub mod gen;
pub mod pipeline;
pub mod trace;
