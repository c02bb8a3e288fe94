pub mod cli_io;
pub mod dynamics;
pub mod error;
pub mod fronts;
pub mod grid;
pub mod kernels;
pub mod report;
pub mod semigroup;
pub mod stats;
