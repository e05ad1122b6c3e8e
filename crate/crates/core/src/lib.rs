//! Cycle-approximate simulator of a single-issue core with sparse stream
//! semantic registers, a sparse linear-algebra kernel library on top of it,
//! and an experiment harness.

pub mod bench;
pub mod cluster;
pub mod formats;
pub mod kernels;
pub mod machine;
pub mod streamer;
pub mod timing;
