//! Audit records serialized into the JSON reports emitted by every audit.

use serde::{Deserialize, Serialize};

/// Serializes non-finite floats as clamped sentinels (serde_json would emit
/// `null` for inf, which breaks downstream table readers).
pub mod json_f64 {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        let clamped = if v.is_finite() {
            *v
        } else if *v > 0.0 {
            1e308
        } else {
            -1e308
        };
        s.serialize_f64(clamped)
    }
}

/// One audit outcome: the asserted bound, the observed extremal value, the
/// margin (bound - observed, positive means pass with room), sampling
/// metadata and the verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditRecord {
    pub name: String,
    #[serde(serialize_with = "json_f64::serialize")]
    pub bound: f64,
    #[serde(serialize_with = "json_f64::serialize")]
    pub observed: f64,
    #[serde(serialize_with = "json_f64::serialize")]
    pub margin: f64,
    pub samples: usize,
    pub seed: u64,
    pub pass: bool,
    /// Free-text caveats (hypothesis gaps, truncation bias, uniformity-class
    /// limits of grid evidence).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl AuditRecord {
    pub fn new(name: impl Into<String>, bound: f64, observed: f64, samples: usize, seed: u64) -> Self {
        AuditRecord {
            name: name.into(),
            bound,
            observed,
            margin: bound - observed,
            samples,
            seed,
            pass: observed <= bound,
            notes: Vec::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

/// FNV-1a 64-bit hash, hex-encoded; used to stamp reports with the
/// configuration they came from.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    format!("{h:016x}")
}
