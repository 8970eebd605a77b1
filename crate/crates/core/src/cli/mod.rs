//! Input handling, generators and the subcommands behind the binary.

pub mod commands;
pub mod gen;
pub mod input;

pub use commands::{run_bench, run_sort, run_verify, CliError, SortRun, VerifyRun};
pub use gen::{generate, Distribution, GenParams};
pub use input::{parse_input, InputError, InputFile};
