//! Propose, extract, check, resample: a generation loop that keeps a
//! stochastic text proposer consistent with a symbolic world model.
//!
//! Domains: bAbI-style object tracking ([`babi`]), kinship logic
//! ([`clutrr`]) and gridworld instruction following ([`gscan`]).

pub mod babi;
pub mod clutrr;
pub mod engine;
pub mod gscan;
pub mod proposers;
pub mod seed;
