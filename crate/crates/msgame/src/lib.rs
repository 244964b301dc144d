//! Multi-structural games on linear orders and binary strings.
//!
//! The engine plays Spoiler strategies against the oblivious Duplicator,
//! turns winning plays into separating first-order sentences and checks
//! strategy round counts against exhaustive search on small instances.

pub mod formulas;
pub mod game;
pub mod oracle;
pub mod order_strategies;
pub mod string_strategies;
pub mod structures;
