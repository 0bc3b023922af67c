//! Library surface of the batch front end: command implementations, report
//! schema, and the cubic-oscillator expression-file format. The binary in
//! `main.rs` is a thin argument-parsing shell over these.

pub mod commands;
pub mod exprfile;
pub mod report;
