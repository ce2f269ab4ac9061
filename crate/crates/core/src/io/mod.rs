//! Configuration files, snapshots and CSV reports.

pub mod config;
pub mod snapshot;
pub mod table;

pub use config::{load_config, parse_config, RunConfig, SCHEMA};
pub use snapshot::{decode_snapshot, encode_snapshot, read_snapshot, write_snapshot};
pub use table::{num, sha256_hex, CsvTable, Provenance};
