//! Versioned JSON snapshots of a flow state. Every float is written as `{:.16e}`
//! (17 significant digits) so a save/load cycle returns the same bits.

use anyhow::{anyhow, bail, Context, Result};
use helegraph::evolution::DiagRecord;
use helegraph::{FlowState, GraphInterface};
use serde::ser::Error as _;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;
use std::path::Path;

pub const SNAPSHOT_VERSION: &str = "helegraph-snapshot/1";

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub version: String,
    pub t: f64,
    pub period: f64,
    pub strip_height: f64,
    pub samples: Vec<f64>,
    pub diagnostics: Option<DiagRecord>,
}

struct Sci(f64);

impl Serialize for Sci {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(S::Error::custom(format!("non-finite value {} in snapshot", self.0)));
        }
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(S::Error::custom)?;
        raw.serialize(s)
    }
}

#[derive(Serialize)]
struct DiagWire {
    t: Sci,
    min_f: Sci,
    max_f: Sci,
    lip: Sci,
    holder: Vec<Sci>,
    member: bool,
}

#[derive(Serialize)]
struct Wire<'a> {
    version: &'a str,
    t: Sci,
    period: Sci,
    strip_height: Sci,
    samples: Vec<Sci>,
    diagnostics: Option<DiagWire>,
}

#[derive(Deserialize)]
struct Head {
    version: Option<String>,
}

impl Snapshot {
    pub fn from_state(s: &FlowState) -> Self {
        Self {
            version: SNAPSHOT_VERSION.into(),
            t: s.t,
            period: s.f.period(),
            strip_height: s.f.strip_height(),
            samples: s.f.samples().to_vec(),
            diagnostics: s.diagnostics.back().cloned(),
        }
    }

    pub fn interface(&self) -> Result<GraphInterface> {
        Ok(GraphInterface::new(self.samples.clone(), self.period, self.strip_height)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let d = self.diagnostics.as_ref().map(|d| DiagWire {
            t: Sci(d.t),
            min_f: Sci(d.min_f),
            max_f: Sci(d.max_f),
            lip: Sci(d.lip),
            holder: d.holder.iter().map(|&h| Sci(h)).collect(),
            member: d.member,
        });
        let w = Wire {
            version: &self.version,
            t: Sci(self.t),
            period: Sci(self.period),
            strip_height: Sci(self.strip_height),
            samples: self.samples.iter().map(|&v| Sci(v)).collect(),
            diagnostics: d,
        };
        Ok(serde_json::to_string_pretty(&w)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let head: Head = serde_json::from_str(text).map_err(|e| anyhow!("malformed or truncated snapshot: {e}"))?;
        match head.version.as_deref() {
            Some(SNAPSHOT_VERSION) => {}
            Some(v) => bail!("unsupported snapshot version {v:?}, expected {SNAPSHOT_VERSION:?}"),
            None => bail!("snapshot has no version tag, expected {SNAPSHOT_VERSION:?}"),
        }
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| anyhow!("invalid snapshot field {}: {}", e.path(), e.inner()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("loading {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Snapshot {
        Snapshot {
            version: SNAPSHOT_VERSION.into(),
            t: 0.1 + 0.2,
            period: std::f64::consts::TAU,
            strip_height: 2.0,
            samples: (0..16).map(|j| 1.0 + 0.3 * (j as f64).sin() / 7.0).collect(),
            diagnostics: None,
        }
    }

    #[test]
    fn seventeen_digits() {
        let s = sample().to_json().unwrap();
        assert!(s.contains("3.0000000000000004e-1"), "{s}");
    }

    #[test]
    fn rejects_nan() {
        let mut s = sample();
        s.samples[3] = f64::NAN;
        assert!(s.to_json().is_err());
    }
}
