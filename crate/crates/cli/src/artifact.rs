use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const TOOL: &str = "cmin";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub config_digest: String,
    /// The only field that differs between identical runs.
    pub generated_at: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document<T> {
    pub header: Header,
    pub body: T,
}

impl<T> Document<T> {
    pub fn new(kind: &str, config_digest: &str, body: T) -> Self {
        Self {
            header: Header {
                tool: TOOL.into(),
                version: env!("CARGO_PKG_VERSION").into(),
                kind: kind.into(),
                config_digest: config_digest.into(),
                generated_at: chrono::Utc::now()
                    .to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            },
            body,
        }
    }
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| anyhow!("writing {}: {}", path.display(), e.error))?;
    Ok(())
}

pub fn write_document<T: Serialize>(path: &Path, doc: &Document<T>) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(doc)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Shipped JSON schema of an artifact kind, if it has one.
pub fn schema_for(kind: &str) -> Option<&'static str> {
    Some(match kind {
        "cmin-space" => include_str!("../../../docs/schemas/cmin-space.schema.json"),
        "classified-space" => include_str!("../../../docs/schemas/classified-space.schema.json"),
        "diagnostics" => include_str!("../../../docs/schemas/diagnostics.schema.json"),
        "confusion-report" => include_str!("../../../docs/schemas/confusion-report.schema.json"),
        _ => return None,
    })
}

/// Read and validate a document of the given kind. Violations name the
/// offending field.
pub fn read_document<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<Document<T>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let violation = |e: serde_path_to_error::Error<serde_json::Error>| {
        let at = e.path().to_string();
        anyhow!(
            "{}: schema violation at `{at}`: {}",
            path.display(),
            e.into_inner()
        )
    };
    let peek: Peek =
        serde_path_to_error::deserialize(&mut serde_json::Deserializer::from_str(&text))
            .map_err(violation)?;
    if peek.header.tool != TOOL {
        bail!(
            "{}: not a {TOOL} document (tool `{}`)",
            path.display(),
            peek.header.tool
        );
    }
    if peek.header.kind != kind {
        bail!(
            "{}: expected a `{kind}` document, found `{}`",
            path.display(),
            peek.header.kind
        );
    }
    if let Some(schema) = schema_for(kind) {
        let schema: serde_json::Value =
            serde_json::from_str(schema).expect("shipped schemas are valid JSON");
        let validator =
            jsonschema::validator_for(&schema).map_err(|e| anyhow!("schema for `{kind}`: {e}"))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let first = validator
            .iter_errors(&value)
            .next()
            .map(|e| format!("schema violation at `{}`: {e}", e.instance_path));
        if let Some(msg) = first {
            bail!("{}: {msg}", path.display());
        }
    }
    serde_path_to_error::deserialize(&mut serde_json::Deserializer::from_str(&text))
        .map_err(violation)
}

/// The header alone, so the kind is checked before the body is read.
#[derive(Deserialize)]
struct Peek {
    header: Header,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_schemas_compile() {
        for kind in [
            "cmin-space",
            "classified-space",
            "diagnostics",
            "confusion-report",
        ] {
            let schema: serde_json::Value =
                serde_json::from_str(schema_for(kind).unwrap()).unwrap();
            jsonschema::validator_for(&schema).unwrap();
        }
        let header: serde_json::Value =
            serde_json::from_str(include_str!("../../../docs/schemas/header.schema.json")).unwrap();
        let doc = Document::new("x", &"0".repeat(64), ());
        assert!(jsonschema::is_valid(
            &header,
            &serde_json::to_value(&doc.header).unwrap()
        ));
    }
}
