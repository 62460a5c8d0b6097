use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use cmin_core::gallery::{make_flow, FlowOptions, GalleryEntry, GalleryParams};
use cmin_core::IntegratorConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub flow: String,
    #[serde(default)]
    pub options: FlowOptions,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    pub output_dir: PathBuf,
    pub params: GalleryParams,
}

impl RunConfig {
    /// Gallery defaults for `flow`.
    pub fn defaults(flow: &str, options: &FlowOptions, output_dir: PathBuf) -> Result<Self> {
        let entry = make_flow(flow, options)?;
        Ok(Self {
            flow: flow.to_string(),
            options: options.clone(),
            integrator: entry.flow.integrator,
            output_dir,
            params: entry.params,
        })
    }

    pub fn entry(&self) -> Result<GalleryEntry> {
        let mut e = make_flow(&self.flow, &self.options)?;
        e.flow = e.flow.with_integrator(self.integrator);
        e.params = self.params.clone();
        Ok(e)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        digest_of(self)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(&Value::try_from(self)?)?)
    }
}

pub fn digest_of<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable value");
    hex::encode(Sha256::digest(bytes))
}

/// Recursively overlay `top` onto `base`; tables merge, everything else is
/// replaced.
pub fn deep_merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => deep_merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Set `path` (dotted) in `table`, creating intermediate tables.
pub fn set_path(table: &mut Table, path: &str, value: Value) {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().expect("non-empty path");
    let mut t = table;
    for p in parts {
        t = t
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .expect("intermediate value is a table");
    }
    t.insert(last.to_string(), value);
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.parse::<Table>()
        .with_context(|| format!("parsing {}", path.display()))
}

/// Layer the config: `base`, then flag overrides, then the config file.
///
/// The flow selection is taken from the file, then the flags, then `base`;
/// when it differs from `base` the gallery defaults of the selected flow are
/// used as the bottom layer instead.
pub fn resolve(base: Option<&RunConfig>, flags: Table, file: Option<&Path>) -> Result<RunConfig> {
    let file_table = file.map(read_table).transpose()?;
    let pick = |key: &str| -> Option<Value> {
        file_table
            .as_ref()
            .and_then(|t| t.get(key).cloned())
            .or_else(|| flags.get(key).cloned())
    };
    let flow = match pick("flow") {
        Some(Value::String(s)) => s,
        Some(other) => bail!("`flow` must be a string, got {other}"),
        None => base.map(|b| b.flow.clone()).ok_or_else(|| {
            anyhow!("no flow selected: pass --flow or set `flow` in the config file")
        })?,
    };
    let options: FlowOptions = match pick("options") {
        Some(v) => deserialize(v).context("in `options`")?,
        None => base.map(|b| b.options.clone()).unwrap_or_default(),
    };
    let mut merged = match base {
        Some(b) if b.flow == flow && b.options == options => Value::try_from(b)?,
        _ => Value::try_from(RunConfig::defaults(
            &flow,
            &options,
            base.map(|b| b.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("cmin-out")),
        )?)?,
    };
    let m = merged.as_table_mut().expect("config is a table");
    deep_merge(m, flags);
    if let Some(t) = file_table {
        deep_merge(m, t);
    }
    deserialize(merged)
}

/// Deserialize, naming the offending field on failure.
pub fn deserialize<T: serde::de::DeserializeOwned>(v: Value) -> Result<T> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        anyhow!("invalid config at `{path}`: {}", e.into_inner())
    })
}
