//! Cuspidal divisor class groups of the modular curves `X+ns(p^k)` attached
//! to normalizers of non-split Cartan subgroups.

pub mod arith;
pub mod cartan;
pub mod classgroup;
pub mod cli;
pub mod crosscheck;
pub mod output;
pub mod siegel;
pub mod stickelberger;
pub mod verify;
