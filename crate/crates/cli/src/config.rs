//! Layered key-value configuration. Resolution order: built-in defaults,
//! then a config file (plain sections, or a JSON run manifest being
//! replayed), then `PAMLAB_SECTION_KEY` environment variables, then
//! command-line flags. Unknown sections or keys are rejected, not ignored.

use std::collections::BTreeMap;

use pamlab_core::model::ModelParams;
use pamlab_core::{Error, Result};

/// Every recognized setting: (section, key, default, documentation).
/// `defaults` prints this table; parsing validates against it.
pub const DEFAULTS: &[(&str, &str, &str, &str)] = &[
    ("model", "dimension", "1", "lattice dimension d >= 1"),
    (
        "model",
        "alpha",
        "4.0",
        "single-site tail exponent; needs alpha > d",
    ),
    (
        "model",
        "theta",
        "1.0",
        "displacement cost exponent; needs theta > 0",
    ),
    (
        "model",
        "c0",
        "1.0",
        "coupling strength; negative means attractive wells",
    ),
    (
        "model",
        "core_radius",
        "1.0",
        "plateau radius of the single-site profile",
    ),
    (
        "run",
        "seed",
        "42",
        "root seed; every random stream derives from it",
    ),
    (
        "run",
        "out",
        "runs",
        "directory receiving CSV, manifest and summary artifacts",
    ),
    (
        "run",
        "threads",
        "0",
        "worker threads; 0 uses every available core",
    ),
    (
        "run",
        "t",
        "8.0",
        "time horizon for single-horizon commands (constants, fk ratio)",
    ),
    (
        "run",
        "t_grid",
        "4,8,16,32",
        "time grid for sweeps (variational, fk quenched/annealed, exponent)",
    ),
    (
        "run",
        "p_grid",
        "1,2,4",
        "moment orders reported by constants and fk annealed",
    ),
    ("run", "tol", "1e-8", "quadrature and eigensolver tolerance"),
    (
        "run",
        "mesh",
        "0",
        "mesh width override; 0 keeps each command's own default",
    ),
    (
        "eigen",
        "sweep",
        "0.125,0.0625,0.03125",
        "mesh widths for the refinement sweep; each must be 1/k",
    ),
    ("eigen", "max_iter", "40000", "eigensolver iteration cap"),
    (
        "eigen",
        "potential",
        "vacuum",
        "vacuum | environment (potential sampled from the model)",
    ),
    (
        "eigen",
        "box_side",
        "8",
        "side of the centered domain when potential=environment",
    ),
    (
        "variational",
        "optimizer",
        "auto",
        "auto | interval | greedy | annealing",
    ),
    (
        "variational",
        "budget",
        "400",
        "eigensolve budget for greedy/annealing",
    ),
    (
        "variational",
        "subdiv",
        "4",
        "mesh cells per unit length for greedy/annealing",
    ),
    (
        "variational",
        "halo_width",
        "4.0",
        "half-width of the displaced-site halo, in units of r",
    ),
    (
        "variational",
        "target_h",
        "0.0625",
        "interval-search mesh width",
    ),
    ("meo", "r", "4", "coarse-graining radius; whole number >= 2"),
    (
        "meo",
        "t",
        "16.0",
        "box side; the cube grid has about t/r cells per axis",
    ),
    (
        "meo",
        "config",
        "zeros",
        "zeros | sampled displacement field for classify",
    ),
    (
        "meo",
        "trials",
        "200",
        "environment samples for the volume trial",
    ),
    (
        "meo",
        "size_cap",
        "2",
        "largest enumerated animal, in cells (1..=4)",
    ),
    (
        "meo",
        "disp_cap",
        "1.0",
        "largest enumerated displacement norm (0..=2)",
    ),
    (
        "meo",
        "halo_width",
        "1.0",
        "enumeration halo, in units of r",
    ),
    (
        "meo",
        "subdiv",
        "4",
        "mesh cells per unit length for enumerated animals",
    ),
    ("fk", "n_paths", "400", "Brownian paths per environment"),
    (
        "fk",
        "n_env",
        "100",
        "environment samples for annealed quantities",
    ),
    (
        "fk",
        "dt",
        "0",
        "time step; 0 means t/1024, otherwise must divide every t",
    ),
    (
        "fk",
        "integrator",
        "left",
        "left | trapezoid quadrature along the path",
    ),
    ("fk", "p1", "1.0", "lower moment order for fk ratio"),
    ("fk", "p2", "2.0", "upper moment order for fk ratio"),
];

#[derive(Debug, Clone)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Config {
    pub fn defaults() -> Self {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for (section, key, value, _) in DEFAULTS {
            sections
                .entry(section.to_string())
                .or_default()
                .insert(key.to_string(), value.to_string());
        }
        Config { sections }
    }

    pub fn sections(&self) -> &BTreeMap<String, BTreeMap<String, String>> {
        &self.sections
    }

    /// Sets one value, rejecting section/key pairs absent from [`DEFAULTS`].
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        let known = DEFAULTS
            .iter()
            .any(|(s, k, _, _)| *s == section && *k == key);
        if !known {
            return Err(Error::InvalidInput(format!(
                "unknown setting [{section}] {key}"
            )));
        }
        self.sections
            .get_mut(section)
            .expect("defaults populate every section")
            .insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Merges a config file. A leading `{` marks a JSON run manifest being
    /// replayed; its `config` object carries the resolved sections.
    pub fn merge_file(&mut self, text: &str) -> Result<()> {
        if text.trim_start().starts_with('{') {
            return self.merge_manifest(text);
        }
        let mut section = String::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                if !self.sections.contains_key(&section) {
                    return Err(Error::InvalidInput(format!(
                        "unknown section [{section}] at line {}",
                        ln + 1
                    )));
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!("expected key = value at line {}", ln + 1))
            })?;
            if section.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "setting before any [section] at line {}",
                    ln + 1
                )));
            }
            self.set(&section, key.trim(), value)?;
        }
        Ok(())
    }

    fn merge_manifest(&mut self, text: &str) -> Result<()> {
        let root: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("manifest is not valid JSON: {e}")))?;
        let config = root
            .get("config")
            .and_then(|c| c.as_object())
            .ok_or_else(|| Error::InvalidInput("manifest lacks a config object".into()))?;
        for (section, entries) in config {
            let entries = entries.as_object().ok_or_else(|| {
                Error::InvalidInput(format!("manifest section {section} is not an object"))
            })?;
            for (key, value) in entries {
                let text = match value {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                self.set(section, key, &text)?;
            }
        }
        Ok(())
    }

    /// Applies `PAMLAB_SECTION_KEY=value` overrides. Keys may themselves
    /// contain underscores; sections never do, so the first one splits.
    pub fn merge_env<I>(&mut self, vars: I) -> Result<()>
    where
        I: Iterator<Item = (String, String)>,
    {
        let mut sorted: Vec<(String, String)> =
            vars.filter(|(k, _)| k.starts_with("PAMLAB_")).collect();
        sorted.sort();
        for (name, value) in sorted {
            let rest = name["PAMLAB_".len()..].to_lowercase();
            let (section, key) = rest.split_once('_').ok_or_else(|| {
                Error::InvalidInput(format!("cannot split {name} into PAMLAB_SECTION_KEY"))
            })?;
            self.set(section, key, &value)?;
        }
        Ok(())
    }

    /// Canonical text form: sorted sections and keys. Feeds the run-id
    /// hash, so byte equality here means artifact-name equality.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (section, entries) in &self.sections {
            out.push_str(&format!("[{section}]\n"));
            for (key, value) in entries {
                out.push_str(&format!("{key} = {value}\n"));
            }
            out.push('\n');
        }
        out
    }

    pub fn get(&self, section: &str, key: &str) -> &str {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .unwrap_or_else(|| panic!("setting [{section}] {key} missing from the defaults table"))
    }

    pub fn f64(&self, section: &str, key: &str) -> Result<f64> {
        let raw = self.get(section, key);
        raw.parse()
            .map_err(|_| Error::InvalidInput(format!("[{section}] {key} = {raw} is not a number")))
    }

    pub fn u64(&self, section: &str, key: &str) -> Result<u64> {
        let raw = self.get(section, key);
        raw.parse().map_err(|_| {
            Error::InvalidInput(format!("[{section}] {key} = {raw} is not a whole number"))
        })
    }

    pub fn usize(&self, section: &str, key: &str) -> Result<usize> {
        Ok(self.u64(section, key)? as usize)
    }

    pub fn list_f64(&self, section: &str, key: &str) -> Result<Vec<f64>> {
        let raw = self.get(section, key);
        raw.split(',')
            .map(|tok| {
                tok.trim().parse().map_err(|_| {
                    Error::InvalidInput(format!("[{section}] {key} entry {tok:?} is not a number"))
                })
            })
            .collect()
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        ModelParams::new(
            self.usize("model", "dimension")?,
            self.f64("model", "alpha")?,
            self.f64("model", "theta")?,
            self.f64("model", "c0")?,
            self.f64("model", "core_radius")?,
        )
    }
}

/// The `defaults` command output: the full table with documentation,
/// itself valid as a config file.
pub fn render_defaults() -> String {
    let mut out = String::from(
        "# pamlab settings. Override with a config file (--config), \
         PAMLAB_SECTION_KEY environment\n# variables, or command flags \
         (--seed, --out, --threads, --mesh, --tol).\n",
    );
    let mut current = "";
    for (section, key, value, doc) in DEFAULTS {
        if *section != current {
            out.push_str(&format!("\n[{section}]\n"));
            current = section;
        }
        out.push_str(&format!("# {doc}\n{key} = {value}\n"));
    }
    out
}
