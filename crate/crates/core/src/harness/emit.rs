use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::curve::CurveResult;
use crate::error::{invalid_config, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(invalid_config(format!("unknown format `{s}` (expected csv or json)"))),
        }
    }
}

pub const CSV_HEADER: [&str; 10] =
    ["axis", "T", "P_D", "stderr", "trials", "config_hash", "estimator", "time_ms", "mean_detect_slots", "censored"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per (curve, T), header first.
pub fn write_csv<W: Write>(results: &[CurveResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for c in results {
        let mean = opt(c.mean_detect_slots);
        let censored = opt(c.censored);
        let trials = c.trials.to_string();
        for k in 0..c.t.len() {
            w.write_record([
                c.axis.as_str(),
                &c.t[k].to_string(),
                &c.p_d[k].to_string(),
                &c.stderr[k].to_string(),
                &trials,
                &c.config_hash,
                &c.estimator,
                &(c.t[k] as f64 * c.frame_ms).to_string(),
                &mean,
                &censored,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(results: &[CurveResult], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, results)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_json(text: &str) -> Result<Vec<CurveResult>> {
    Ok(serde_json::from_str(text)?)
}

pub fn to_string(results: &[CurveResult], format: OutputFormat) -> Result<String> {
    let mut buf = Vec::new();
    match format {
        OutputFormat::Csv => write_csv(results, &mut buf)?,
        OutputFormat::Json => write_json(results, &mut buf)?,
    }
    Ok(String::from_utf8(buf).expect("csv and json output are utf-8"))
}

pub fn emit_results(results: &[CurveResult], format: OutputFormat, path: &Path) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        OutputFormat::Csv => write_csv(results, file),
        OutputFormat::Json => write_json(results, file),
    }
}
