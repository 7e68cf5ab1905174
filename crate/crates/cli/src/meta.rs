//! Provenance sidecars.
//!
//! Subcommands that write files also write a `meta.json` next to them (or
//! into the output directory) recording the tool version, the full
//! effective settings, and a SHA-256 digest of every input file. No
//! timestamps: reruns from identical inputs produce identical sidecars.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Settings;

#[derive(Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    config: &'a Settings,
    inputs: Vec<InputDigest>,
}

/// Sidecar path for a single-file output: `scene.jsonl` -> `scene.meta.json`.
pub fn sibling_meta_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

pub fn write_meta(
    path: &Path,
    subcommand: &str,
    settings: &Settings,
    inputs: &[&Path],
) -> anyhow::Result<()> {
    let inputs = inputs
        .iter()
        .map(|input| {
            let data = std::fs::read(input)
                .with_context(|| format!("hashing input {}", input.display()))?;
            Ok(InputDigest {
                path: input.display().to_string(),
                sha256: sha256_hex(&data),
            })
        })
        .collect::<anyhow::Result<_>>()?;
    let meta = Meta {
        tool: "gazekit",
        version: env!("CARGO_PKG_VERSION"),
        subcommand,
        config: settings,
        inputs,
    };
    let mut text = serde_json::to_string_pretty(&meta).expect("meta serializes");
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn sha256_hex(data: &[u8]) -> String {
    let digest = Sha256::digest(data);
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}
