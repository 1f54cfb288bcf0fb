//! Durable formats: the native dataset document plus VIA import, SRT
//! captions and cut-list export.

pub mod cutlist;
pub mod srt;
pub mod via;

use crate::error::{Error, Result};
use crate::model::{validate_dataset, Dataset, FORMAT_VERSION};

pub use cutlist::{export_cutlist, CutKind, CutRow};
pub use srt::{export_srt, SrtOptions};
pub use via::{export_via, import_via, ViaImport};

/// Serializes a dataset as pretty-printed UTF-8 JSON with a trailing newline.
///
/// Key order is fixed (`version, revision, tracks, types, labels`, then any
/// preserved unknown keys in sorted order) so the output is byte-stable.
pub fn save_dataset(d: &Dataset) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(d).expect("dataset serialization is infallible");
    out.push(b'\n');
    out
}

/// Parses and validates a native dataset document.
pub fn load_dataset(bytes: &[u8]) -> Result<Dataset> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| Error::MalformedDocument(e.to_string()))?;
    match value.get("version").and_then(|v| v.as_str()) {
        Some(FORMAT_VERSION) => {}
        Some(other) => return Err(Error::UnsupportedVersion(other.to_string())),
        None => return Err(Error::MalformedDocument("missing `version`".into())),
    }
    let d: Dataset =
        serde_json::from_value(value).map_err(|e| Error::MalformedDocument(e.to_string()))?;
    validate_dataset(&d).into_result()?;
    Ok(d)
}
