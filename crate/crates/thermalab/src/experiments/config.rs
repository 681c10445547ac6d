//! Experiment configuration: a sectioned key-value text format with
//! line-anchored diagnostics.
//!
//! Physical quantities carry explicit unit annotations in their key
//! names (`eta_energy`, `beta_inv_energy`, `v_over_delta`, ...) because
//! unit confusion is the dominant failure mode in bound checks.
//!
//! ```text
//! [experiment]
//! kind = theorem1
//! seed = 42
//!
//! [theorem1]
//! instances = 50
//! epsilon_points = 32
//! ```

use std::collections::BTreeMap;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Theorem1,
    Counting,
    Algorithm,
    OracleCompare,
    Dynamics,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "theorem1" => Some(Self::Theorem1),
            "counting" => Some(Self::Counting),
            "algorithm" => Some(Self::Algorithm),
            "oracle-compare" => Some(Self::OracleCompare),
            "dynamics" => Some(Self::Dynamics),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Theorem1 => "theorem1",
            Self::Counting => "counting",
            Self::Algorithm => "algorithm",
            Self::OracleCompare => "oracle-compare",
            Self::Dynamics => "dynamics",
        }
    }
}

/// Parsed sections: `section -> key -> (line, value)`.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, (usize, String)>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, (usize, String)>> = BTreeMap::new();
        let mut current = String::from("");
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line
                .split_once('#')
                .map(|(content, _)| content)
                .unwrap_or(raw_line)
                .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or(Error::Parse {
                    line: line_no,
                    message: "unterminated section header".into(),
                })?;
                current = name.trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::Parse {
                line: line_no,
                message: format!("expected `key = value`, got {line:?}"),
            })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "empty key".into(),
                });
            }
            let entry = sections.entry(current.clone()).or_default();
            if entry.contains_key(&key) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("duplicate key {key:?} in section [{current}]"),
                });
            }
            entry.insert(key, (line_no, value.trim().to_string()));
        }
        Ok(Self { sections })
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(|(_, v)| v.as_str())
    }

    /// Set (or override) a value programmatically, e.g. from CLI flags.
    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), (0, value.to_string()));
    }

    /// Iterate sections and their `key = value` entries.
    pub fn sections(&self) -> impl Iterator<Item = (&str, Vec<(&str, &str)>)> {
        self.sections.iter().map(|(name, entries)| {
            (
                name.as_str(),
                entries
                    .iter()
                    .map(|(k, (_, v))| (k.as_str(), v.as_str()))
                    .collect(),
            )
        })
    }

    fn typed<T: std::str::FromStr>(&self, section: &str, key: &str, what: &str) -> Result<Option<T>> {
        match self.sections.get(section).and_then(|s| s.get(key)) {
            None => Ok(None),
            Some((line, value)) => value.parse::<T>().map(Some).map_err(|_| Error::Parse {
                line: *line,
                message: format!("key {key:?} must be {what}, got {value:?}"),
            }),
        }
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.typed(section, key, "a number")
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        self.typed(section, key, "a nonnegative integer")
    }

    pub fn get_u64(&self, section: &str, key: &str) -> Result<Option<u64>> {
        self.typed(section, key, "a nonnegative integer")
    }

    pub fn get_u32(&self, section: &str, key: &str) -> Result<Option<u32>> {
        self.typed(section, key, "a nonnegative integer")
    }

    pub fn get_bool(&self, section: &str, key: &str) -> Result<Option<bool>> {
        self.typed(section, key, "true or false")
    }

    /// Comma-separated list of values.
    pub fn get_list<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>> {
        match self.sections.get(section).and_then(|s| s.get(key)) {
            None => Ok(None),
            Some((line, value)) => {
                let items: std::result::Result<Vec<T>, _> =
                    value.split(',').map(|v| v.trim().parse::<T>()).collect();
                items.map(Some).map_err(|_| Error::Parse {
                    line: *line,
                    message: format!("key {key:?} must be a comma-separated list, got {value:?}"),
                })
            }
        }
    }
}

/// A fully identified experiment: kind, root seed, and raw parameters.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub raw: RawConfig,
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let raw = RawConfig::parse(text)?;
        let kind_str = raw.get("experiment", "kind").ok_or(Error::Parse {
            line: 0,
            message: "missing [experiment] kind".into(),
        })?;
        let kind = ExperimentKind::parse(kind_str).ok_or_else(|| Error::Parse {
            line: 0,
            message: format!(
                "unknown experiment kind {kind_str:?} (expected theorem1, counting, algorithm, oracle-compare, or dynamics)"
            ),
        })?;
        let seed = raw.get_u64("experiment", "seed")?.unwrap_or(42);
        Ok(Self { kind, seed, raw })
    }
}
