//! LDPC decoding with loopy belief update on factor graphs and LTRIP cluster
//! graphs.

pub mod bench;
pub mod channel;
pub mod codec;
pub mod codes;
pub mod factor;
pub mod graph;
pub mod inference;
pub mod schedule;
