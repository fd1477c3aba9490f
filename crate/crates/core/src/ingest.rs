//! File ingestion: platform catalogues (TOML) and counter dumps (CSV).
//!
//! Counter dumps are plain `kernel,counter,value` CSV, the shape `perf stat
//! -x,` output reduces to. Parsers reject rather than coerce; every error
//! carries the offending line or key.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::cpi::{is_known_counter, PmuSample};
use crate::error::{Error, Result};
use crate::nmc::NmcConfig;
use crate::roofline::MachineSpec;

/// The platform catalogue shipped with the crate.
pub const DEFAULT_PLATFORMS_TOML: &str = include_str!("../data/platforms.toml");

/// Parse a `kernel,counter,value` dump into validated per-kernel samples,
/// preserving first-seen kernel order. Blank lines and `#` comments are
/// skipped; an empty file yields an empty list.
pub fn parse_counter_dump(text: &str) -> Result<Vec<PmuSample>> {
    let mut order: Vec<String> = Vec::new();
    let mut grouped: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    let mut saw_header = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != "kernel,counter,value" {
                return Err(Error::ParseLine {
                    line: line_no,
                    message: format!("expected header `kernel,counter,value`, got `{line}`"),
                });
            }
            saw_header = true;
            continue;
        }

        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::ParseLine {
                line: line_no,
                message: format!("expected 3 comma-separated fields, got {}", fields.len()),
            });
        }
        let (kernel, counter, value) = (fields[0], fields[1], fields[2]);
        if kernel.is_empty() {
            return Err(Error::ParseLine {
                line: line_no,
                message: "empty kernel name".to_string(),
            });
        }
        if !is_known_counter(counter) {
            return Err(Error::UnknownCounter {
                line: line_no,
                name: counter.to_string(),
            });
        }
        let value: u64 = value.parse().map_err(|_| Error::ParseLine {
            line: line_no,
            message: format!("invalid counter value `{value}`"),
        })?;

        let counters = grouped.entry(kernel.to_string()).or_insert_with(|| {
            order.push(kernel.to_string());
            BTreeMap::new()
        });
        if counters.insert(counter.to_string(), value).is_some() {
            return Err(Error::ParseLine {
                line: line_no,
                message: format!("duplicate counter {counter} for kernel `{kernel}`"),
            });
        }
    }

    order
        .into_iter()
        .map(|kernel| {
            let counters = grouped.remove(&kernel).unwrap();
            PmuSample::new(kernel, counters)
        })
        .collect()
}

/// Machines and memory configs loaded from one catalogue file.
#[derive(Debug, Clone)]
pub struct SpecFile {
    pub machines: Vec<MachineSpec>,
    pub nmc_configs: Vec<NmcConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpecFile {
    #[serde(rename = "machine", default)]
    machines: Vec<MachineSpec>,
    #[serde(rename = "nmc", default)]
    nmc_configs: Vec<NmcConfig>,
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawSpecFile =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let spec = SpecFile {
            machines: raw.machines,
            nmc_configs: raw.nmc_configs,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// The built-in catalogue (also shipped as `data/platforms.toml`).
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_PLATFORMS_TOML).expect("built-in catalogue must parse")
    }

    pub fn machine(&self, name: &str) -> Result<&MachineSpec> {
        self.machines
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| Error::UnknownName {
                kind: "machine",
                name: name.to_string(),
            })
    }

    pub fn nmc_config(&self, name: &str) -> Result<&NmcConfig> {
        self.nmc_configs
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownName {
                kind: "nmc config",
                name: name.to_string(),
            })
    }

    fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for machine in &self.machines {
            machine.validate()?;
            if !seen.insert(machine.name.clone()) {
                return Err(Error::DuplicateName {
                    kind: "machine",
                    name: machine.name.clone(),
                });
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for cfg in &self.nmc_configs {
            cfg.validate()?;
            if !seen.insert(cfg.name.clone()) {
                return Err(Error::DuplicateName {
                    kind: "nmc config",
                    name: cfg.name.clone(),
                });
            }
        }
        Ok(())
    }
}
