//! Meta-model file format: a single JSON document with topology, selected
//! inputs and row-major weight arrays. Floats are written in scientific
//! notation with 17 significant digits, which reproduces every `f64`
//! exactly on reload.

use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::{Error, Result};
use crate::metamodel::MetaModel;

struct Sci17Formatter;

impl Formatter for Sci17Formatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        if !value.is_finite() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                "non-finite weight cannot be serialized",
            ));
        }
        write!(writer, "{value:.16e}")
    }
}

/// Serializes a meta-model to its on-disk JSON form.
pub fn meta_to_json(meta: &MetaModel) -> Result<String> {
    let mut buffer = Vec::new();
    let mut serializer = serde_json::Serializer::with_formatter(&mut buffer, Sci17Formatter);
    meta.serialize(&mut serializer)?;
    Ok(String::from_utf8(buffer).expect("serde_json emits UTF-8"))
}

/// Parses and re-validates a meta-model (weight shapes, input universe).
pub fn meta_from_json(text: &str) -> Result<MetaModel> {
    let meta: MetaModel = serde_json::from_str(text)?;
    meta.check()?;
    Ok(meta)
}

pub fn save_meta(meta: &MetaModel, path: &Path) -> Result<()> {
    std::fs::write(path, meta_to_json(meta)?)?;
    Ok(())
}

pub fn load_meta(path: &Path) -> Result<MetaModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read meta-model '{}': {e}", path.display())))?;
    meta_from_json(&text)
}
