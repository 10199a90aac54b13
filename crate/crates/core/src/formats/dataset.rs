use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{check_version, FORMAT_VERSION};
use crate::channel::LinkRecord;
use crate::error::{Error, Result};

pub const DATASET_FORMAT: &str = "chanimg-links";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub version: String,
    pub seed: u64,
    pub count: usize,
    pub units: BTreeMap<String, String>,
    /// Free-form provenance, e.g. the generator configuration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<serde_json::Value>,
}

impl DatasetHeader {
    pub fn new(seed: u64, count: usize) -> Self {
        let units = [
            ("tx", "m"),
            ("rx", "m"),
            ("carrier_freq_hz", "Hz"),
            ("pathloss_db", "dB"),
            ("delay_s", "s"),
            ("aod_deg", "deg"),
            ("zod_deg", "deg"),
            ("aoa_deg", "deg"),
            ("zoa_deg", "deg"),
            ("phase_deg", "deg"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        Self {
            format: DATASET_FORMAT.into(),
            version: FORMAT_VERSION.into(),
            seed,
            count,
            units,
            source: None,
        }
    }
}

pub fn write_dataset<W: Write>(mut w: W, header: &DatasetHeader, links: &[LinkRecord]) -> Result<()> {
    let header = DatasetHeader {
        count: links.len(),
        ..header.clone()
    };
    writeln!(w, "# {}", serde_json::to_string(&header).expect("header serializes"))?;
    for link in links {
        serde_json::to_writer(&mut w, link).map_err(|e| Error::format("link dataset", e))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads and validates every record.
pub fn read_dataset<R: BufRead>(r: R) -> Result<(DatasetHeader, Vec<LinkRecord>)> {
    const WHAT: &str = "link dataset";
    let mut lines = r.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::format(WHAT, "missing header line"))??;
    let json = first
        .strip_prefix('#')
        .ok_or_else(|| Error::format(WHAT, "first line must be a `#` header"))?;
    let header: DatasetHeader =
        serde_json::from_str(json.trim()).map_err(|e| Error::format(WHAT, format!("header: {e}")))?;
    if header.format != DATASET_FORMAT {
        return Err(Error::format(WHAT, format!("unexpected format `{}`", header.format)));
    }
    check_version(WHAT, &header.version)?;

    let mut links = Vec::with_capacity(header.count);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = i + 2;
        let link: LinkRecord =
            serde_json::from_str(&line).map_err(|e| Error::format(WHAT, format!("line {lineno}: {e}")))?;
        link.validate()
            .map_err(|e| Error::format(WHAT, format!("line {lineno}: {e}")))?;
        links.push(link);
    }
    if links.len() != header.count {
        return Err(Error::format(
            WHAT,
            format!("header announces {} links, found {}", header.count, links.len()),
        ));
    }
    Ok((header, links))
}
