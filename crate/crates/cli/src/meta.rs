//! `run.meta`: resolved configuration plus input/output hashes.
//!
//! The file is itself a valid configuration file: provenance lines are
//! comments, the rest are the resolved `key = value` assignments.

use std::fmt::Write as _;
use std::path::Path;

use kga::config::RunConfig;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub struct RunMeta {
    command: &'static str,
    inputs: Vec<(String, String)>,
    outputs: Vec<(String, String)>,
}

impl RunMeta {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Records an input by file name, so the record does not depend on where
    /// the data lives.
    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push((file_name(path), sha256_hex(bytes)));
    }

    pub fn output(&mut self, name: &str, bytes: &[u8]) {
        self.outputs.push((name.to_string(), sha256_hex(bytes)));
    }

    pub fn render(&self, config: &RunConfig) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# kga {} {}", env!("CARGO_PKG_VERSION"), self.command);
        for (name, hash) in &self.inputs {
            let _ = writeln!(out, "# input {hash} {name}");
        }
        for (name, hash) in &self.outputs {
            let _ = writeln!(out, "# output {hash} {name}");
        }
        out.push_str(&config.to_text());
        out
    }
}

pub fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}
