//! Simulator-grounded question answering with claim-level verification.

pub mod benchgen;
pub mod claims;
pub mod domain;
pub mod evaluation;
pub mod gateway;
pub mod numbers;
pub mod offline;
pub mod pipeline;
pub mod retrieval;
pub mod simulators;
