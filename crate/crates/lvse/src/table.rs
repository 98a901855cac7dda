//! CSV plumbing shared by every artifact: ISO-8601 timestamps, shortest
//! round-trip float formatting and leading `# key: value` metadata lines
//! (config and data hashes).

use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};
use lvse_core::time::{Timestamp, REFERENCE_YEAR};
use serde::Serialize;

use crate::Error;

const ISO: &str = "%Y-%m-%dT%H:%M:%S";

fn epoch() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(REFERENCE_YEAR, 1, 1).and_then(|d| d.and_hms_opt(0, 0, 0)).expect("valid date")
}

pub fn format_timestamp(t: Timestamp) -> String {
    (epoch() + Duration::minutes(t.minutes() as i64)).format(ISO).to_string()
}

pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    let dt = NaiveDateTime::parse_from_str(s, ISO).ok()?;
    if dt.second() != 0 {
        return None;
    }
    u32::try_from((dt - epoch()).num_minutes()).ok().map(Timestamp)
}

/// Shortest representation that parses back to the same bits.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub type Meta<'a> = &'a [(&'a str, &'a str)];

/// Writes metadata lines, a header and rows of already formatted fields.
pub fn write_csv<I, R, S>(path: &Path, meta: Meta<'_>, header: &[String], rows: I) -> Result<(), Error>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    if let Some(dir) = path.parent() {
        ensure_dir(dir)?;
    }
    let mut file = std::io::BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for (k, v) in meta {
        writeln!(file, "# {k}: {v}").map_err(|e| Error::io(path, e))?;
    }
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        ensure_dir(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// A parsed CSV file with typed column access.
pub struct Table {
    path: std::path::PathBuf,
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<csv::StringRecord>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut meta = Vec::new();
        let mut body = text.as_str();
        while let Some(rest) = body.strip_prefix("# ") {
            let (line, tail) = rest.split_once('\n').unwrap_or((rest, ""));
            let (k, v) = line
                .split_once(": ")
                .ok_or_else(|| Error::format(path, format!("malformed metadata line `{line}`")))?;
            meta.push((k.to_string(), v.to_string()));
            body = tail;
        }
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let header = r.headers().map_err(|e| Error::csv(path, e))?.iter().map(String::from).collect();
        let rows = r.records().collect::<Result<Vec<_>, _>>().map_err(|e| Error::csv(path, e))?;
        Ok(Table { path: path.to_path_buf(), meta, header, rows })
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Fails unless metadata `key` is present and equal to `expected`.
    pub fn expect_meta(&self, key: &str, expected: &str) -> Result<(), Error> {
        match self.meta(key) {
            Some(v) if v == expected => Ok(()),
            found => Err(Error::HashMismatch {
                path: self.path.clone(),
                expected: expected.into(),
                found: found.unwrap_or("<none>").into(),
            }),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize, Error> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::format(&self.path, format!("missing column `{name}`")))
    }

    pub fn expect_header(&self, expected: &[String]) -> Result<(), Error> {
        if self.header != expected {
            return Err(Error::format(&self.path, format!("unexpected header {:?}", self.header)));
        }
        Ok(())
    }

    pub fn f64_column(&self, col: usize) -> Result<Vec<f64>, Error> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.get(col)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::format(&self.path, format!("row {}: bad number in column {col}", i + 1)))
            })
            .collect()
    }

    pub fn bool_column(&self, col: usize) -> Result<Vec<bool>, Error> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| match r.get(col) {
                Some("1") => Ok(true),
                Some("0") => Ok(false),
                _ => Err(Error::format(&self.path, format!("row {}: expected 0/1 in column {col}", i + 1))),
            })
            .collect()
    }

    pub fn timestamps(&self) -> Result<Vec<Timestamp>, Error> {
        let col = self.column_index("timestamp")?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.get(col)
                    .and_then(parse_timestamp)
                    .ok_or_else(|| Error::format(&self.path, format!("row {}: bad timestamp", i + 1)))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iso_timestamps_round_trip() {
        assert_eq!(format_timestamp(Timestamp(0)), "2018-01-01T00:00:00");
        assert_eq!(format_timestamp(Timestamp::from_day_step(31, 12)), "2018-02-01T01:00:00");
        for m in [0, 5, 1440 * 200 + 35, 1440 * 364 + 1435] {
            assert_eq!(parse_timestamp(&format_timestamp(Timestamp(m))), Some(Timestamp(m)));
        }
        assert_eq!(parse_timestamp("2017-12-31T23:55:00"), None);
        assert_eq!(parse_timestamp("garbage"), None);
    }

    #[test]
    fn metadata_lines_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let header = vec!["a".to_string(), "b".to_string()];
        write_csv(&path, &[("config_hash", "abc"), ("note", "x: y")], &header, [["1", "0.5"]]).unwrap();
        let t = Table::read(&path).unwrap();
        assert_eq!(t.meta("config_hash"), Some("abc"));
        assert_eq!(t.meta("note"), Some("x: y"));
        assert_eq!(t.header, header);
        assert_eq!(t.f64_column(1).unwrap(), vec![0.5]);
        assert!(t.expect_meta("config_hash", "abc").is_ok());
        assert!(matches!(t.expect_meta("config_hash", "zzz"), Err(Error::HashMismatch { .. })));
    }

    #[test]
    fn floats_round_trip_exactly() {
        for v in [0.1 + 0.2, 1.0 / 3.0, 0.9812345678901234, -4.5e-17, 1e300] {
            assert_eq!(num(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
