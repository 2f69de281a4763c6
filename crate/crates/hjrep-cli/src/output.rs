//! Deterministic artifact writers: RFC-4180 CSV ('.' decimal, LF line ends)
//! and JSON audit reports. Identical config + seed reproduce byte-identical
//! files: all floats use the shortest round-trip formatting, field order is
//! fixed by struct order, and nothing time- or environment-dependent is
//! written.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use hjrep_core::report::{fnv1a_hex, AuditRecord};

pub struct OutputDir {
    pub root: PathBuf,
    pub config_hash: String,
    pub seed: u64,
}

impl OutputDir {
    pub fn create(root: &Path, config_raw: &str, seed: u64) -> std::io::Result<OutputDir> {
        fs::create_dir_all(root)?;
        let config_hash = fnv1a_hex(format!("{config_raw}\nseed={seed}").as_bytes());
        fs::write(root.join("config_echo.toml"), config_raw)?;
        Ok(OutputDir { root: root.to_path_buf(), config_hash, seed })
    }

    pub fn write_meta(&self, subcommand: &str) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Meta<'a> {
            subcommand: &'a str,
            seed: u64,
            config_hash: &'a str,
            schema: &'a str,
        }
        let meta = Meta {
            subcommand,
            seed: self.seed,
            config_hash: &self.config_hash,
            schema: "hjrep-v1",
        };
        fs::write(
            self.root.join("run_meta.json"),
            serde_json::to_string_pretty(&meta).unwrap() + "\n",
        )
    }

    /// Writes `audits.json`: one object per audit with the config hash.
    pub fn write_audits(&self, records: &[AuditRecord]) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct AuditOut<'a> {
            name: &'a str,
            #[serde(serialize_with = "hjrep_core::report::json_f64::serialize")]
            bound: f64,
            #[serde(serialize_with = "hjrep_core::report::json_f64::serialize")]
            observed: f64,
            #[serde(serialize_with = "hjrep_core::report::json_f64::serialize")]
            margin: f64,
            samples: usize,
            seed: u64,
            pass: bool,
            config_hash: &'a str,
            #[serde(skip_serializing_if = "Vec::is_empty")]
            notes: &'a Vec<String>,
        }
        let out: Vec<AuditOut> = records
            .iter()
            .map(|r| AuditOut {
                name: &r.name,
                bound: r.bound,
                observed: r.observed,
                margin: r.margin,
                samples: r.samples,
                seed: r.seed,
                pass: r.pass,
                config_hash: &self.config_hash,
                notes: &r.notes,
            })
            .collect();
        fs::write(
            self.root.join("audits.json"),
            serde_json::to_string_pretty(&out).unwrap() + "\n",
        )
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> std::io::Result<()> {
        fs::write(
            self.root.join(name),
            serde_json::to_string_pretty(value).unwrap() + "\n",
        )
    }

    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
        let mut buf = String::new();
        buf.push_str(&header.join(","));
        buf.push('\n');
        for row in rows {
            let encoded: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
            buf.push_str(&encoded.join(","));
            buf.push('\n');
        }
        fs::write(self.root.join(name), buf)
    }
}

fn csv_field(f: &str) -> String {
    if f.contains(',') || f.contains('"') || f.contains('\n') {
        format!("\"{}\"", f.replace('"', "\"\""))
    } else {
        f.to_string()
    }
}

/// Shortest round-trip float formatting ("inf" / "-inf" for the conjugate
/// sentinels).
pub fn fmt_f64(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x}")
    }
}
