//! Machine-readable report format shared by all subcommands.

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct ReportFile {
    pub tool_version: &'static str,
    pub command: String,
    pub input_digest: String,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub items: Vec<ReportItem>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<BlockReport>>,
    pub verdict: bool,
}

#[derive(Debug, Serialize)]
pub struct ReportItem {
    pub name: String,
    pub passed: bool,
    /// The numeric quantity the verdict thresholds.
    pub value: f64,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
}

#[derive(Debug, Serialize)]
pub struct BlockReport {
    pub dimension: usize,
    pub signature: [usize; 2],
    pub class: String,
    /// Real/imaginary eigenvalue data of the block's Ricci operator.
    pub eigenvalue: Option<[f64; 2]>,
}

impl ReportFile {
    pub fn new(command: &str, raw_input: &[u8], tolerance: f64) -> Self {
        let mut h = Sha256::new();
        h.update(raw_input);
        Self {
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            input_digest: format!("sha256:{:x}", h.finalize()),
            tolerance,
            samples: None,
            seed: None,
            items: Vec::new(),
            blocks: None,
            verdict: true,
        }
    }

    pub fn push(&mut self, item: ReportItem) {
        self.verdict &= item.passed;
        self.items.push(item);
    }

    pub fn emit(&self, out: Option<&std::path::Path>) -> std::io::Result<()> {
        use std::io::Write;
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        if let Some(path) = out {
            std::fs::write(path, &text)?;
        }
        // ignore a closed stdout (e.g. piped into `head`)
        let _ = writeln!(std::io::stdout(), "{text}");
        Ok(())
    }
}
