//! Weighted union-find decoding of the toric code under circuit-level
//! depolarizing noise.

pub mod circuit_sim;
pub mod decoder_graph;
pub mod harness;
pub mod io;
pub mod lattice;
pub mod matching_oracle;
pub mod uf_decoder;
