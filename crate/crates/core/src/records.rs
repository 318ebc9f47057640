//! Run records: ingestion, serialization, grid checks and loss units.
//!
//! A run is one trained model annotated with its compute budget `C`,
//! compression rate `T` (bytes per token), latent parameter count `N`,
//! training bytes `B` and evaluation loss in bits per byte.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed CSV column order used when writing records.
pub const CSV_COLUMNS: [&str; 10] = [
    "family",
    "budget_flops",
    "compression",
    "scale",
    "latent_params",
    "total_params",
    "bytes",
    "loss_bpb",
    "language",
    "dataset",
];

pub const DEFAULT_LANGUAGE: &str = "eng";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    LatentEntropy,
    LatentFixed,
    Subword,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::LatentEntropy => "latent-entropy",
            Family::LatentFixed => "latent-fixed",
            Family::Subword => "subword",
        }
    }

    pub fn is_latent(&self) -> bool {
        !matches!(self, Family::Subword)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "latent-entropy" | "latent" => Ok(Family::LatentEntropy),
            "latent-fixed" => Ok(Family::LatentFixed),
            "subword" => Ok(Family::Subword),
            other => Err(Error::validation(
                "family",
                format!("unknown family `{other}` (expected latent-entropy, latent-fixed or subword)"),
            )),
        }
    }
}

/// Input format accepted by [`parse_runs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

/// One training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub family: Family,
    /// Total training compute `C` in FLOPs.
    pub budget_flops: f64,
    /// Bytes per token `T`.
    pub compression: f64,
    pub scale: Option<u32>,
    /// Parameters of the global (latent) module only.
    pub latent_params: f64,
    pub total_params: Option<f64>,
    pub bytes: f64,
    pub loss_bpb: f64,
    pub language: String,
    pub dataset: Option<String>,
    /// Unknown columns, kept in input order.
    pub extra: Vec<(String, String)>,
}

impl RunRecord {
    /// Bytes per parameter `B / N`.
    pub fn bytes_per_param(&self) -> f64 {
        self.bytes / self.latent_params
    }

    pub fn total_params_required(&self) -> Result<f64> {
        self.total_params
            .ok_or_else(|| Error::MissingField("total_params".into()))
    }

    pub fn scale_required(&self) -> Result<u32> {
        self.scale.ok_or_else(|| Error::MissingField("scale".into()))
    }

    fn validate(&self, line: usize) -> Result<()> {
        let positive = [
            ("budget_flops", self.budget_flops),
            ("bytes", self.bytes),
            ("loss_bpb", self.loss_bpb),
            ("latent_params", self.latent_params),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::validation(
                    field,
                    format!("line {line}: must be positive and finite, got {value}"),
                ));
            }
        }
        if !(self.compression.is_finite() && self.compression >= 1.0) {
            return Err(Error::validation(
                "compression",
                format!("line {line}: must be >= 1, got {}", self.compression),
            ));
        }
        if let Some(total) = self.total_params {
            if !(total.is_finite() && total > 0.0) {
                return Err(Error::validation(
                    "total_params",
                    format!("line {line}: must be positive, got {total}"),
                ));
            }
        }
        if self.scale == Some(0) {
            return Err(Error::validation("scale", format!("line {line}: must be >= 1")));
        }
        Ok(())
    }
}

/// Parses run records from CSV (header row) or JSON lines.
///
/// Row order is preserved. Every record is validated before it is returned.
pub fn parse_runs<R: Read>(source: R, format: Format) -> Result<Vec<RunRecord>> {
    match format {
        Format::Csv => parse_csv(source),
        Format::Jsonl => parse_jsonl(source),
    }
}

/// Parses a file, picking the format from its extension (`.jsonl`/`.json` or CSV).
pub fn read_runs(path: &std::path::Path) -> Result<Vec<RunRecord>> {
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("json") => Format::Jsonl,
        _ => Format::Csv,
    };
    let file = std::fs::File::open(path)?;
    parse_runs(std::io::BufReader::new(file), format)
}

fn parse_number(line: usize, field: &str, raw: &str) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        field: field.to_string(),
        message: format!("not a number: `{raw}`"),
    })
}

fn parse_csv<R: Read>(source: R) -> Result<Vec<RunRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    // empty stream: no header row at all
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    let column = |name: &str| headers.iter().position(|h| h == name);
    let required = ["family", "budget_flops", "compression", "latent_params", "bytes", "loss_bpb"];
    for name in required {
        if column(name).is_none() {
            return Err(Error::MissingField(name.to_string()));
        }
    }
    let extra_columns: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !CSV_COLUMNS.contains(h))
        .map(|(i, h)| (i, h.to_string()))
        .collect();

    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let get = |name: &str| -> Option<&str> {
            column(name)
                .and_then(|i| row.get(i))
                .filter(|s| !s.is_empty())
        };
        let need = |name: &str| -> Result<&str> {
            get(name).ok_or_else(|| Error::Parse {
                line,
                field: name.to_string(),
                message: "empty value".into(),
            })
        };
        let family = need("family")?.parse::<Family>().map_err(|_| Error::Parse {
            line,
            field: "family".into(),
            message: format!("unknown family `{}`", get("family").unwrap_or("")),
        })?;
        let scale = match get("scale") {
            Some(raw) => Some(raw.parse::<u32>().map_err(|_| Error::Parse {
                line,
                field: "scale".into(),
                message: format!("not a positive integer: `{raw}`"),
            })?),
            None => None,
        };
        let total_params = match get("total_params") {
            Some(raw) => Some(parse_number(line, "total_params", raw)?),
            None => None,
        };
        let record = RunRecord {
            family,
            budget_flops: parse_number(line, "budget_flops", need("budget_flops")?)?,
            compression: parse_number(line, "compression", need("compression")?)?,
            scale,
            latent_params: parse_number(line, "latent_params", need("latent_params")?)?,
            total_params,
            bytes: parse_number(line, "bytes", need("bytes")?)?,
            loss_bpb: parse_number(line, "loss_bpb", need("loss_bpb")?)?,
            language: get("language").unwrap_or(DEFAULT_LANGUAGE).to_string(),
            dataset: get("dataset").map(str::to_string),
            extra: extra_columns
                .iter()
                .map(|(i, name)| (name.clone(), row.get(*i).unwrap_or("").to_string()))
                .collect(),
        };
        record.validate(line)?;
        out.push(record);
    }
    Ok(out)
}

fn json_number(line: usize, field: &str, value: &serde_json::Value) -> Result<f64> {
    match value {
        serde_json::Value::Number(n) => n.as_f64().ok_or_else(|| Error::Parse {
            line,
            field: field.to_string(),
            message: "number out of range".into(),
        }),
        serde_json::Value::String(s) => parse_number(line, field, s),
        other => Err(Error::Parse {
            line,
            field: field.to_string(),
            message: format!("expected a number, got {other}"),
        }),
    }
}

fn json_string(value: &serde_json::Value) -> String {
    match value {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn parse_jsonl<R: Read>(mut source: R) -> Result<Vec<RunRecord>> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(raw).map_err(|e| Error::Parse {
            line,
            field: "<line>".into(),
            message: e.to_string(),
        })?;
        let obj = value.as_object().ok_or_else(|| Error::Parse {
            line,
            field: "<line>".into(),
            message: "expected a JSON object".into(),
        })?;
        let get = |name: &str| obj.get(name).filter(|v| !v.is_null());
        let need = |name: &str| {
            get(name).ok_or_else(|| Error::Parse {
                line,
                field: name.to_string(),
                message: "missing".into(),
            })
        };
        let family = json_string(need("family")?)
            .parse::<Family>()
            .map_err(|e| Error::Parse {
                line,
                field: "family".into(),
                message: e.to_string(),
            })?;
        let scale = match get("scale") {
            Some(v) => {
                let x = json_number(line, "scale", v)?;
                if x.fract() != 0.0 || x < 0.0 || x > u32::MAX as f64 {
                    return Err(Error::Parse {
                        line,
                        field: "scale".into(),
                        message: format!("not a positive integer: {x}"),
                    });
                }
                Some(x as u32)
            }
            None => None,
        };
        let total_params = match get("total_params") {
            Some(v) => Some(json_number(line, "total_params", v)?),
            None => None,
        };
        let record = RunRecord {
            family,
            budget_flops: json_number(line, "budget_flops", need("budget_flops")?)?,
            compression: json_number(line, "compression", need("compression")?)?,
            scale,
            latent_params: json_number(line, "latent_params", need("latent_params")?)?,
            total_params,
            bytes: json_number(line, "bytes", need("bytes")?)?,
            loss_bpb: json_number(line, "loss_bpb", need("loss_bpb")?)?,
            language: get("language")
                .map(json_string)
                .unwrap_or_else(|| DEFAULT_LANGUAGE.to_string()),
            dataset: get("dataset").map(json_string),
            extra: obj
                .iter()
                .filter(|(k, _)| !CSV_COLUMNS.contains(&k.as_str()))
                .map(|(k, v)| (k.clone(), json_string(v)))
                .collect(),
        };
        record.validate(line)?;
        out.push(record);
    }
    Ok(out)
}

/// Formats a float so that parsing it back yields the identical value.
pub(crate) fn fmt_float(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-3..1e7).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Writes records as CSV using the fixed column order; extra columns follow.
pub fn write_csv<W: Write>(records: &[RunRecord], sink: W) -> Result<()> {
    let mut extra_names: Vec<String> = Vec::new();
    for r in records {
        for (k, _) in &r.extra {
            if !extra_names.contains(k) {
                extra_names.push(k.clone());
            }
        }
    }
    let mut writer = csv::Writer::from_writer(sink);
    let mut header: Vec<String> = CSV_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(extra_names.iter().cloned());
    writer.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.family.to_string(),
            fmt_float(r.budget_flops),
            fmt_float(r.compression),
            r.scale.map(|s| s.to_string()).unwrap_or_default(),
            fmt_float(r.latent_params),
            r.total_params.map(fmt_float).unwrap_or_default(),
            fmt_float(r.bytes),
            fmt_float(r.loss_bpb),
            r.language.clone(),
            r.dataset.clone().unwrap_or_default(),
        ];
        for name in &extra_names {
            let value = r
                .extra
                .iter()
                .find(|(k, _)| k == name)
                .map(|(_, v)| v.clone())
                .unwrap_or_default();
            row.push(value);
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes records as JSON lines with the same keys as the CSV header.
pub fn write_jsonl<W: Write>(records: &[RunRecord], mut sink: W) -> Result<()> {
    for r in records {
        let mut obj = serde_json::Map::new();
        obj.insert("family".into(), r.family.as_str().into());
        obj.insert("budget_flops".into(), r.budget_flops.into());
        obj.insert("compression".into(), r.compression.into());
        if let Some(s) = r.scale {
            obj.insert("scale".into(), s.into());
        }
        obj.insert("latent_params".into(), r.latent_params.into());
        if let Some(t) = r.total_params {
            obj.insert("total_params".into(), t.into());
        }
        obj.insert("bytes".into(), r.bytes.into());
        obj.insert("loss_bpb".into(), r.loss_bpb.into());
        obj.insert("language".into(), r.language.clone().into());
        if let Some(d) = &r.dataset {
            obj.insert("dataset".into(), d.clone().into());
        }
        for (k, v) in &r.extra {
            obj.insert(k.clone(), v.clone().into());
        }
        serde_json::to_writer(&mut sink, &obj)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

/// Consistency of a run grid against the `C ≈ 6·N·B/T` approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub n_records: usize,
    pub budgets: Vec<f64>,
    pub compressions: Vec<f64>,
    /// Max over records of `|C − 6·N·B/T| / C`.
    pub max_flops_discrepancy: f64,
    pub offending_records: Vec<usize>,
}

pub(crate) fn sorted_distinct(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Reports records whose approximate compute deviates from the declared budget
/// by more than `tolerance` (relative). Never corrects anything.
pub fn validate_grid(records: &[RunRecord], tolerance: f64) -> GridReport {
    let mut max_disc: f64 = 0.0;
    let mut offending = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let approx = crate::recipes::approx_compute_unchecked(r.latent_params, r.bytes, r.compression);
        let disc = (r.budget_flops - approx).abs() / r.budget_flops;
        max_disc = max_disc.max(disc);
        if disc > tolerance {
            offending.push(i);
        }
    }
    GridReport {
        n_records: records.len(),
        budgets: sorted_distinct(records.iter().map(|r| r.budget_flops)),
        compressions: sorted_distinct(records.iter().map(|r| r.compression)),
        max_flops_discrepancy: max_disc,
        offending_records: offending,
    }
}

/// Converts a summed negative log-likelihood in nats to bits per byte.
pub fn bpb_from_nats(total_nll_nats: f64, n_bytes: u64) -> Result<f64> {
    if n_bytes == 0 {
        return Err(Error::Domain("n_bytes must be positive".into()));
    }
    if !(total_nll_nats >= 0.0) {
        return Err(Error::Domain(format!(
            "total_nll_nats must be nonnegative, got {total_nll_nats}"
        )));
    }
    Ok(total_nll_nats / (std::f64::consts::LN_2 * n_bytes as f64))
}
