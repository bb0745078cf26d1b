//! Versioned JSON model files, JSON-lines result export, and atomic writes.
//!
//! All floats are printed with 17 significant digits (`{:.16e}`), enough for
//! `f64` round trips to be bit-exact, and the writers are fully
//! deterministic for byte-identical reruns.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::classifier::ClassifierModel;
use crate::error::{Error, Result};
use crate::methods::CounterfactualResult;
use crate::vae::VaeModel;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// serde_json formatter printing every float with 17 significant digits.
struct Precision17;

impl serde_json::ser::Formatter for Precision17 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes to compact JSON with bit-exact float formatting.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Precision17);
    value.serialize(&mut ser)?;
    Ok(out)
}

pub fn from_json_reader<T: DeserializeOwned, R: Read>(reader: R) -> Result<T> {
    Ok(serde_json::from_reader(reader)?)
}

/// Writes bytes to `path` via a temp file in the same directory plus rename,
/// so readers never observe a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".to_string()),
        std::process::id()
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// One trained model with its version tag and role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "model")]
pub enum ModelPayload {
    Classifier(ClassifierModel),
    Vae(VaeModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ModelDocument {
    pub format_version: u32,
    #[serde(flatten)]
    pub payload: ModelPayload,
}

impl ModelDocument {
    pub fn classifier(model: ClassifierModel) -> Self {
        ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            payload: ModelPayload::Classifier(model),
        }
    }

    pub fn vae(model: VaeModel) -> Self {
        ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            payload: ModelPayload::Vae(model),
        }
    }
}

pub fn save_model(path: &Path, doc: &ModelDocument) -> Result<()> {
    atomic_write(path, &to_json_bytes(doc)?)
}

pub fn load_model(path: &Path) -> Result<ModelDocument> {
    let file = std::fs::File::open(path)?;
    let doc: ModelDocument = from_json_reader(BufReader::new(file))?;
    if doc.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::contract(format!(
            "unsupported model format version {} (expected {})",
            doc.format_version, MODEL_FORMAT_VERSION
        )));
    }
    Ok(doc)
}

/// One result per line, floats at 17 significant digits.
pub fn write_results_jsonl<W: Write>(
    mut writer: W,
    results: &[CounterfactualResult],
) -> Result<()> {
    for r in results {
        writer.write_all(&to_json_bytes(r)?)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_results_jsonl<R: Read>(reader: R) -> Result<Vec<CounterfactualResult>> {
    let mut out = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
