//! IO and command-line surface around `lad-core`: CSV dataset ingestion,
//! versioned scenario/metrics files, run orchestration, and report
//! assembly.

pub mod commands;
pub mod config;
pub mod csv_io;
pub mod files;
pub mod report;

use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256 of arbitrary bytes; used to fingerprint resolved
/// configurations in provenance records.
pub fn hex_digest(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
