pub mod bitstring;
pub mod engine;
pub mod harness;
pub mod oracles;
pub mod powerlaw;
pub mod problems;
pub mod stats;
pub mod verify;
