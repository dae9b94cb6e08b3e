//! Update classification for regex-formula document spanners, with
//! materialized view maintenance.

pub mod alphabet;
pub mod automata;
pub mod eval;
pub mod formula;
pub mod fuzz;
pub mod verifier;
pub mod viewstore;
