//! Sweep result tables and their CSV/JSON files.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::decoders::DecoderKind;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 8] = ["decoder", "ebn0_db", "ka", "p_md", "p_fa", "p_err", "trials", "seconds"];

/// One decoder at one grid point. `p_err = p_md + p_fa`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub decoder: DecoderKind,
    pub ebn0_db: f64,
    pub ka: usize,
    pub p_md: f64,
    pub p_fa: f64,
    pub p_err: f64,
    /// Trials that completed.
    pub trials: usize,
    /// Wall-clock time of the whole grid point.
    pub seconds: f64,
    #[serde(skip)]
    pub failed: usize,
}

impl MetricsRow {
    pub fn new(
        decoder: DecoderKind,
        ebn0_db: f64,
        ka: usize,
        p_md: f64,
        p_fa: f64,
        trials: usize,
        seconds: f64,
    ) -> Self {
        Self {
            decoder,
            ebn0_db,
            ka,
            p_md,
            p_fa,
            p_err: p_md + p_fa,
            trials,
            seconds,
            failed: 0,
        }
    }

    fn rounded(&self) -> Self {
        Self {
            ebn0_db: round_sig(self.ebn0_db),
            p_md: round_sig(self.p_md),
            p_fa: round_sig(self.p_fa),
            p_err: round_sig(self.p_err),
            seconds: round_sig(self.seconds),
            ..self.clone()
        }
    }
}

/// Rounds to six significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    /// Guesses from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Parse(format!("unknown output format `{other}`"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
}

impl MetricsTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(CSV_HEADER).map_err(err)?;
        for r in &self.rows {
            let r = r.rounded();
            w.write_record([
                r.decoder.to_string(),
                r.ebn0_db.to_string(),
                r.ka.to_string(),
                r.p_md.to_string(),
                r.p_fa.to_string(),
                r.p_err.to_string(),
                r.trials.to_string(),
                r.seconds.to_string(),
            ])
            .map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let headers = r.headers().map_err(|e| Error::Parse(e.to_string()))?;
        if headers.iter().ne(CSV_HEADER) {
            return Err(Error::Parse(format!(
                "unexpected CSV header `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let rows = r
            .deserialize()
            .collect::<std::result::Result<Vec<MetricsRow>, _>>()
            .map_err(|e| Error::Parse(e.to_string()))?;
        Ok(Self { rows })
    }

    pub fn to_json(&self) -> Result<String> {
        let rows: Vec<MetricsRow> = self.rows.iter().map(MetricsRow::rounded).collect();
        serde_json::to_string_pretty(&rows).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rows = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(Self { rows })
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }

    pub fn parse(text: &str, format: OutputFormat) -> Result<Self> {
        match format {
            OutputFormat::Csv => Self::from_csv(text),
            OutputFormat::Json => Self::from_json(text),
        }
    }
}

pub fn write_results(table: &MetricsTable, path: &Path, format: OutputFormat) -> Result<()> {
    let text = table.render(format)?;
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_results(path: &Path, format: OutputFormat) -> Result<MetricsTable> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    MetricsTable::parse(&text, format)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> MetricsTable {
        MetricsTable {
            rows: vec![
                MetricsRow::new(DecoderKind::Traditional, 2.5, 50, 0.0123456789, 0.25, 100, 12.3456789),
                MetricsRow::new(DecoderKind::Soft, -1.0, 150, 0.0, 1.0 / 3.0, 7, 0.001),
            ],
        }
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(round_sig(0.0123456789), 0.0123457);
        assert_eq!(round_sig(123456789.0), 123457000.0);
        assert_eq!(round_sig(0.0), 0.0);
        let csv = table().to_csv().unwrap();
        assert!(csv.starts_with("decoder,ebn0_db,ka,p_md,p_fa,p_err,trials,seconds\n"));
        assert!(csv.contains("traditional,2.5,50,0.0123457,0.25,0.262346,100,12.3457"));
    }

    #[test]
    fn csv_and_json_round_trip() {
        let t = table();
        let expect = MetricsTable {
            rows: t.rows.iter().map(MetricsRow::rounded).collect(),
        };
        for f in [OutputFormat::Csv, OutputFormat::Json] {
            let text = t.render(f).unwrap();
            let back = MetricsTable::parse(&text, f).unwrap();
            assert_eq!(back, expect, "{f}");
            assert_eq!(back.render(f).unwrap(), text);
        }
    }

    #[test]
    fn json_keys_match_csv_header() {
        let v: serde_json::Value = serde_json::from_str(&table().to_json().unwrap()).unwrap();
        let obj = v[0].as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        let mut header = CSV_HEADER.to_vec();
        keys.sort();
        header.sort();
        assert_eq!(keys, header);
    }

    #[test]
    fn files_and_bad_input() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        assert_eq!(OutputFormat::from_path(&path), OutputFormat::Json);
        write_results(&table(), &path, OutputFormat::Json).unwrap();
        assert_eq!(read_results(&path, OutputFormat::Json).unwrap().rows.len(), 2);
        assert!(MetricsTable::from_csv("a,b\n1,2\n").is_err());
        assert!(read_results(&dir.path().join("missing.csv"), OutputFormat::Csv).is_err());
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
