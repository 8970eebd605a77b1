//! Sorting exact rationals through order-preserving integer keys.
//!
//! Values are scaled into `(0, 1)`, inserted into a multi-level key
//! structure ([`converter`]) that finds a power-of-two level at which all
//! distinct values get distinct keys, and the keys are then radix sorted
//! ([`intsort`]).

pub mod cli;
pub mod converter;
pub mod intsort;
pub mod levelspace;
pub mod metrics;
pub mod numeric;
pub mod pipeline;

pub use converter::{convert, Conversion, ConvertError, ConvertOptions, ConverterConfig};
pub use numeric::{ExactReal, ScaleFactor};
pub use pipeline::{oracle_order, sort_values, SortOutcome};
