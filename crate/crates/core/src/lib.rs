//! Program synthesis for a minimal Forth-style stack machine.

pub mod enumerator;
pub mod evolution;
pub mod stochastic;
pub mod testio;
pub mod vm;
