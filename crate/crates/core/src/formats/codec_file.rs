use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{check_version, FORMAT_VERSION};
use crate::codec::{Codec, Feature};
use crate::error::{Error, Result};

pub const CODEC_FORMAT: &str = "chanimg-codec";

/// Fitted codec with its provenance. Scaler arrays follow the matrix row
/// order listed in `features`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodecFile {
    pub format: String,
    pub version: String,
    pub seed: u64,
    pub features: Vec<String>,
    pub codec: Codec,
}

impl CodecFile {
    pub fn new(codec: Codec, seed: u64) -> Self {
        Self {
            format: CODEC_FORMAT.into(),
            version: FORMAT_VERSION.into(),
            seed,
            features: Feature::ALL.iter().map(|f| f.name().to_string()).collect(),
            codec,
        }
    }
}

pub fn write_codec<W: Write>(mut w: W, file: &CodecFile) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, file).map_err(|e| Error::format("codec", e))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_codec<R: Read>(r: R) -> Result<CodecFile> {
    const WHAT: &str = "codec";
    let value: serde_json::Value = serde_json::from_reader(r).map_err(|e| Error::format(WHAT, e))?;
    let field = |k: &str| value.get(k).and_then(|v| v.as_str()).map(str::to_string);
    if field("format").as_deref() != Some(CODEC_FORMAT) {
        return Err(Error::format(WHAT, "not a codec file"));
    }
    check_version(WHAT, &field("version").unwrap_or_default())?;
    let file: CodecFile = serde_json::from_value(value).map_err(|e| Error::format(WHAT, e))?;
    let expected: Vec<String> = Feature::ALL.iter().map(|f| f.name().to_string()).collect();
    if file.features != expected {
        return Err(Error::format(WHAT, "feature order differs from the matrix rows"));
    }
    file.codec.params.validate()?;
    crate::codec::FeatureScaler::from_bounds(file.codec.scaler.min, file.codec.scaler.max)
        .map_err(|e| Error::format(WHAT, e))?;
    Ok(file)
}
