use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

/// One oracle verdict, printable as a single line.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRecord {
    pub check: String,
    pub inputs_digest: u64,
    pub pass: bool,
    pub residual: f64,
}

impl OracleRecord {
    /// Digests the debug rendering of `inputs`.
    pub fn new(check: &str, inputs: &impl fmt::Debug, pass: bool, residual: f64) -> OracleRecord {
        let mut h = DefaultHasher::new();
        format!("{inputs:?}").hash(&mut h);
        OracleRecord { check: check.to_string(), inputs_digest: h.finish(), pass, residual }
    }
}

impl fmt::Display for OracleRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "check={} inputs={:016x} pass={} residual={:.3e}",
            self.check, self.inputs_digest, self.pass, self.residual
        )
    }
}
