//! Artifact plumbing: content-addressed run ids, the versioned CSV body,
//! the JSON manifest a run can be replayed from, and the text summary.
//! Nothing here may depend on the clock; byte-identical replays are the
//! contract.

use std::fs;
use std::path::{Path, PathBuf};

use pamlab_core::{Error, Result};

use crate::config::Config;

/// FNV-1a over command and resolved configuration. Equal inputs mean
/// equal artifact names, so a replay overwrites its original with
/// identical bytes instead of littering the output directory.
pub fn run_id(command: &str, cfg: &Config) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in command.bytes().chain(*b"\n").chain(cfg.to_text().bytes()) {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

/// Numbers rendered with Rust's shortest round-trip formatting: exact,
/// deterministic, and free of trailing zero padding.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub struct CommandOutput {
    /// Artifact stem, e.g. "fk-quenched".
    pub slug: &'static str,
    /// `key=value` context lines placed after the schema comment.
    pub comments: Vec<String>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub summary: Vec<String>,
    /// Set when results were produced but a solver missed its tolerance;
    /// artifacts are still written and the process exits nonzero.
    pub soft_error: Option<Error>,
}

pub fn csv_body(out: &CommandOutput, id: &str) -> String {
    let mut body = String::from("# schema=v1\n");
    body.push_str(&format!("# command={}\n# run_id={}\n", out.slug, id));
    for line in &out.comments {
        body.push_str(&format!("# {line}\n"));
    }
    body.push_str(&out.columns.join(","));
    body.push('\n');
    for row in &out.rows {
        debug_assert_eq!(row.len(), out.columns.len());
        body.push_str(&row.join(","));
        body.push('\n');
    }
    body
}

pub struct Artifacts {
    pub run_id: String,
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub summary: PathBuf,
}

fn write(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

pub fn write_artifacts(out_dir: &Path, cfg: &Config, out: &CommandOutput) -> Result<Artifacts> {
    fs::create_dir_all(out_dir)
        .map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", out_dir.display())))?;
    let id = run_id(out.slug, cfg);
    let stem = format!("{}-{}", out.slug, id);
    let csv = out_dir.join(format!("{stem}.csv"));
    let manifest = out_dir.join(format!("{stem}.json"));
    let summary = out_dir.join(format!("{stem}.txt"));

    write(&csv, &csv_body(out, &id))?;

    let manifest_json = serde_json::json!({
        "schema": "v1",
        "command": out.slug,
        "run_id": id,
        "config": cfg.sections(),
        "outputs": {
            "csv": format!("{stem}.csv"),
            "summary": format!("{stem}.txt"),
        },
    });
    let mut manifest_text =
        serde_json::to_string_pretty(&manifest_json).expect("manifest serialization cannot fail");
    manifest_text.push('\n');
    write(&manifest, &manifest_text)?;

    let mut summary_text = format!("{} run {}\n", out.slug, id);
    for line in &out.summary {
        summary_text.push_str(line);
        summary_text.push('\n');
    }
    write(&summary, &summary_text)?;

    Ok(Artifacts {
        run_id: id,
        csv,
        manifest,
        summary,
    })
}
