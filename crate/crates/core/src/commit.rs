//! Hash commitments to a report matrix.

use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::reports::ReportMatrix;

pub const HASH_ALGORITHM: &str = "sha256";

/// Hex SHA-256 of the canonical binary report followed by the salt.
pub fn commit(reports: &ReportMatrix, salt: &[u8]) -> Result<String> {
    let mut h = Sha256::new();
    h.update(reports.to_binary()?);
    h.update(salt);
    Ok(hex::encode(h.finalize()))
}

pub fn verify(reports: &ReportMatrix, salt: &[u8], digest: &str) -> Result<bool> {
    Ok(commit(reports, salt)?.eq_ignore_ascii_case(digest.trim()))
}
