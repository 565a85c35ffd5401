//! The parity program used throughout the tests: a `main` module computing
//! the parity of a bit list and a `bitops` module in three versions.

use crate::error::Result;
use crate::ir::{program_load, Program};

pub const MAIN: &str = include_str!("../programs/parity/main.pl");
/// Only `xor(0,0,0)`.
pub const BITOPS_B0: &str = include_str!("../programs/parity_b0/bitops.pl");
/// The full truth table.
pub const BITOPS_B1: &str = include_str!("../programs/parity/bitops.pl");
/// The truth table without `xor(1,1,0)`.
pub const BITOPS_B2: &str = include_str!("../programs/parity_b2/bitops.pl");

/// `main` together with bitops version `b` (0, 1 or 2).
pub fn program(b: u8) -> Result<Program> {
    let bitops = match b {
        0 => BITOPS_B0,
        1 => BITOPS_B1,
        2 => BITOPS_B2,
        _ => panic!("no bitops version {b}"),
    };
    program_load(&[MAIN, bitops])
}
