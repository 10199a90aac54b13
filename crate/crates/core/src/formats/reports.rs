//! CSV reports. Each file opens with `#` comment lines naming the report,
//! its format version and the seed, followed by a header row.

use std::io::{BufRead, Write};

use crate::channel::LinkRecord;
use crate::error::{Error, Result};
use crate::genmodel::TrainingLog;
use crate::stats::{BinnedPdf2D, FeatureKs, LinkStateComparison, RmsSpreadReport, UniformityRow};

use super::{check_version, FORMAT_VERSION};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// A report writer: comments first, then CSV rows.
pub struct ReportWriter<W: Write> {
    csv: csv::Writer<W>,
}

impl<W: Write> ReportWriter<W> {
    pub fn new(mut w: W, report: &str, seed: u64, extra: &[(&str, String)], header: &[&str]) -> Result<Self> {
        write!(w, "# report={report} version={FORMAT_VERSION} seed={seed}")?;
        for (k, v) in extra {
            write!(w, " {k}={v}")?;
        }
        writeln!(w)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(header).map_err(csv_err)?;
        Ok(Self { csv })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.csv.write_record(fields).map_err(csv_err)
    }

    pub fn finish(mut self) -> Result<()> {
        self.csv.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::format("csv report", format!("{other:?}")),
    }
}

pub fn write_training_log<W: Write>(w: W, log: &TrainingLog, seed: u64) -> Result<()> {
    let extra = [
        ("generator_params", log.generator_params.to_string()),
        ("critic_params", log.critic_params.to_string()),
    ];
    let mut out = ReportWriter::new(
        w,
        "training-log",
        seed,
        &extra,
        &["step", "epoch", "critic_loss", "gen_loss", "gp_term"],
    )?;
    for e in &log.entries {
        out.row([
            e.step.to_string(),
            e.epoch.to_string(),
            e.critic_loss.to_string(),
            e.gen_loss.to_string(),
            e.gp_term.to_string(),
        ])?;
    }
    out.finish()
}

pub fn write_feature_ks<W: Write>(w: W, rows: &[FeatureKs], seed: u64) -> Result<()> {
    let mut out = ReportWriter::new(
        w,
        "feature-ks",
        seed,
        &[],
        &["height_m", "feature", "n_model", "n_data", "ks"],
    )?;
    for r in rows {
        out.row([
            r.height.to_string(),
            r.feature.name().to_string(),
            r.n_model.to_string(),
            r.n_data.to_string(),
            opt(r.ks),
        ])?;
    }
    out.finish()
}

pub fn write_link_states<W: Write>(w: W, rows: &[LinkStateComparison], seed: u64) -> Result<()> {
    let mut out = ReportWriter::new(
        w,
        "link-state",
        seed,
        &[],
        &[
            "height_m",
            "dist_lo_m",
            "dist_hi_m",
            "n_model",
            "n_data",
            "p_los_model",
            "p_los_data",
            "p_outage_model",
            "p_outage_data",
        ],
    )?;
    for r in rows {
        out.row([
            r.height.to_string(),
            r.lower.to_string(),
            r.upper.to_string(),
            r.n_model.to_string(),
            r.n_data.to_string(),
            opt(r.p_los_model),
            opt(r.p_los_data),
            opt(r.p_outage_model),
            opt(r.p_outage_data),
        ])?;
    }
    out.finish()
}

pub fn write_uniformity<W: Write>(w: W, rows: &[UniformityRow], seed: u64) -> Result<()> {
    let mut out = ReportWriter::new(w, "uniformity", seed, &[], &["height_m", "feature", "n", "ks_uniform"])?;
    for r in rows {
        out.row([
            r.height.to_string(),
            r.feature.name().to_string(),
            r.n.to_string(),
            opt(r.ks),
        ])?;
    }
    out.finish()
}

/// Heatmap as `(distance bin, angle bin, density)` triples.
pub fn write_heatmap<W: Write>(w: W, pdf: &BinnedPdf2D, name: &str, height: f64, seed: u64) -> Result<()> {
    let extra = [("angle", name.to_string()), ("height_m", height.to_string())];
    let mut out = ReportWriter::new(
        w,
        "relative-zenith-pdf",
        seed,
        &extra,
        &["dist_lo_m", "dist_hi_m", "angle_center_deg", "density"],
    )?;
    for d in 0..pdf.distance.len() {
        let (lo, hi) = pdf.distance.bounds(d);
        for a in 0..pdf.angle.len() {
            out.row([
                lo.to_string(),
                hi.to_string(),
                pdf.angle.center(a).to_string(),
                pdf.density[d][a].to_string(),
            ])?;
        }
    }
    out.finish()
}

/// Per-link RMS spreads; outage links are skipped.
pub fn write_spreads<W: Write>(w: W, links: &[LinkRecord], seed: u64) -> Result<()> {
    let mut out = ReportWriter::new(
        w,
        "rms-spread",
        seed,
        &[],
        &[
            "link", "height_m", "dist2d_m", "delay_s", "aoa_deg", "aod_deg", "zoa_deg", "zod_deg",
        ],
    )?;
    for (i, link) in links.iter().enumerate() {
        let Some(r) = RmsSpreadReport::from_link(link)? else {
            continue;
        };
        let d = link.geometry().distances()?;
        out.row([
            i.to_string(),
            link.height().to_string(),
            d.dist2d.to_string(),
            r.delay.to_string(),
            r.aoa.to_string(),
            r.aod.to_string(),
            r.zoa.to_string(),
            r.zod.to_string(),
        ])?;
    }
    out.finish()
}

/// A parsed report.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    /// `key=value` pairs from the comment lines.
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn read_report<R: BufRead>(r: R) -> Result<Report> {
    const WHAT: &str = "csv report";
    let mut meta = Vec::new();
    let mut body = String::new();
    for line in r.lines() {
        let line = line?;
        if let Some(c) = line.strip_prefix('#') {
            for kv in c.split_whitespace() {
                if let Some((k, v)) = kv.split_once('=') {
                    meta.push((k.to_string(), v.to_string()));
                }
            }
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let version = meta
        .iter()
        .find(|(k, _)| k == "version")
        .map(|(_, v)| v.clone())
        .ok_or_else(|| Error::format(WHAT, "missing version comment"))?;
    check_version(WHAT, &version)?;
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()
        .map_err(csv_err)?;
    Ok(Report { meta, header, rows })
}
