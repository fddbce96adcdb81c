//! Tooling for variable-free DRS sequences: lexing, graph construction,
//! Penman conversion, Smatch scoring, corpus handling, training-pair
//! emission and text metrics.

pub mod cli;
pub mod corpus;
pub mod exec;
pub mod graph;
pub mod penman;
pub mod pretrain;
pub mod seeds;
pub mod sequence;
pub mod smatch;
pub mod textmetrics;

pub use graph::{build_graph, check_line, Drg, IllFormedCategory, IllFormedReport};
pub use penman::{to_penman, PenmanGraph, TripleSet};
pub use sequence::{lex, serialize, SymbolInventory, Token, TokenKind, TokenSequence};
pub use smatch::{corpus_f1, smatch_score, SmatchScore};
