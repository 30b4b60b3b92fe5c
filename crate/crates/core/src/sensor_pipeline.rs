//! Sensor trace ingestion: parse raw wavelength records, merge many small
//! files into one file per year, and extract temperature readings.
//!
//! A trace line holds year, month, day, hour, minute and a raw wavelength
//! reading, separated by runs of spaces or tabs. Anything after the sixth
//! column is ignored. Blank lines are skipped.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SensorRecord {
    pub year: u16,
    pub month: u8,
    pub day: u8,
    pub hour: u8,
    pub minute: u8,
    pub wavelength: u64,
}

impl SensorRecord {
    fn time_key(&self) -> (u8, u8, u8, u8) {
        (self.month, self.day, self.hour, self.minute)
    }
}

impl std::fmt::Display for SensorRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:04}\t{:02}\t{:02}\t{:02}\t{:02}\t{}",
            self.year, self.month, self.day, self.hour, self.minute, self.wavelength
        )
    }
}

const FIELDS: [(&str, u64, u64); 6] = [
    ("year", 1000, 9999),
    ("month", 1, 12),
    ("day", 1, 31),
    ("hour", 0, 23),
    ("minute", 0, 59),
    ("wavelength", 1, u64::MAX),
];

/// Parses one trace line. Errors report line 1 and the 1-based character
/// column of the offending field.
pub fn parse_record(line: &str) -> Result<SensorRecord> {
    parse_line(line, 1)
}

fn parse_line(line: &str, line_no: usize) -> Result<SensorRecord> {
    let parse_err = |column: usize, message: String| Error::Parse {
        path: None,
        line: line_no,
        column,
        message,
    };
    let mut values = [0u64; 6];
    let mut fields = fields_with_columns(line);
    for (slot, &(name, lo, hi)) in values.iter_mut().zip(FIELDS.iter()) {
        let Some((column, text)) = fields.next() else {
            return Err(parse_err(
                line.chars().count() + 1,
                format!("missing {name} field"),
            ));
        };
        if !text.bytes().all(|b| b.is_ascii_digit()) {
            return Err(parse_err(
                column,
                format!("{name} `{text}` is not an unsigned integer"),
            ));
        }
        let v: u64 = text
            .parse()
            .map_err(|_| parse_err(column, format!("{name} `{text}` is out of range")))?;
        if v < lo || v > hi {
            return Err(parse_err(
                column,
                format!("{name} {v} outside [{lo}, {hi}]"),
            ));
        }
        *slot = v;
    }
    Ok(SensorRecord {
        year: values[0] as u16,
        month: values[1] as u8,
        day: values[2] as u8,
        hour: values[3] as u8,
        minute: values[4] as u8,
        wavelength: values[5],
    })
}

fn fields_with_columns(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = line.char_indices().peekable();
    std::iter::from_fn(move || {
        while rest.next_if(|(_, c)| *c == ' ' || *c == '\t').is_some() {}
        let (start, _) = *rest.peek()?;
        let column = line[..start].chars().count() + 1;
        let mut end = line.len();
        for (i, c) in rest.by_ref() {
            if c == ' ' || c == '\t' {
                end = i;
                break;
            }
        }
        Some((column, line[start..end].trim_end_matches('\r')))
    })
}

/// Reads every record of a trace file in file order.
pub fn read_trace(path: &Path) -> Result<Vec<SensorRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text).map_err(|e| e.with_path(path))
}

/// Parses trace text, skipping blank lines.
pub fn parse_trace(text: &str) -> Result<Vec<SensorRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_line(l, i + 1))
        .collect()
}

pub fn write_trace<W: Write>(records: &[SensorRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        writeln!(out, "{r}")?;
    }
    out.flush()
}

/// Merges trace files into `out_dir/{year}.txt`, one file per distinct year.
///
/// Records within a year are ordered by month, day, hour and minute; equal
/// timestamps keep input order (file order, then line order). Every input is
/// parsed before anything is written, and if writing fails the files already
/// written by this call are removed.
pub fn merge_by_year(inputs: &[PathBuf], out_dir: &Path) -> Result<BTreeMap<u16, PathBuf>> {
    let parsed: Vec<Vec<SensorRecord>> = inputs
        .par_iter()
        .map(|p| read_trace(p))
        .collect::<Result<_>>()?;

    let mut by_year: BTreeMap<u16, Vec<SensorRecord>> = BTreeMap::new();
    for r in parsed.into_iter().flatten() {
        by_year.entry(r.year).or_default().push(r);
    }
    for records in by_year.values_mut() {
        records.sort_by_key(SensorRecord::time_key);
    }

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = BTreeMap::new();
    for (year, records) in &by_year {
        let path = out_dir.join(format!("{year}.txt"));
        let result = fs::File::create(&path).and_then(|f| write_trace(records, BufWriter::new(f)));
        if let Err(e) = result {
            let _ = fs::remove_file(&path);
            for p in written.values() {
                let _ = fs::remove_file(p);
            }
            return Err(Error::io(path, e));
        }
        written.insert(*year, path);
    }
    Ok(written)
}

/// Linear map between raw wavelength readings and temperature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Raw reading at the reference temperature.
    pub lambda0: f64,
    /// Raw units per degree Celsius.
    pub slope: f64,
    /// Reference temperature in degrees Celsius.
    pub t0: f64,
}

impl Calibration {
    pub fn new(lambda0: f64, slope: f64, t0: f64) -> Result<Self> {
        let c = Calibration { lambda0, slope, t0 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0.is_finite() && self.t0.is_finite()) {
            return Err(Error::invalid("calibration lambda0 and t0 must be finite"));
        }
        if !self.slope.is_finite() || self.slope == 0.0 {
            return Err(Error::invalid(format!(
                "calibration slope must be finite and nonzero, got {}",
                self.slope
            )));
        }
        Ok(())
    }
}

pub fn wavelength_to_temperature(wavelength: f64, cal: &Calibration) -> f64 {
    cal.t0 + (wavelength - cal.lambda0) / cal.slope
}

pub fn temperature_to_wavelength(temp_c: f64, cal: &Calibration) -> f64 {
    cal.lambda0 + (temp_c - cal.t0) * cal.slope
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractedRow {
    pub year: u16,
    pub month: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub day: Option<u8>,
    pub hour: u8,
    pub minute: u8,
    pub temp_c: f64,
}

pub fn extract_records(
    records: &[SensorRecord],
    cal: &Calibration,
    keep_day: bool,
) -> Vec<ExtractedRow> {
    records
        .iter()
        .map(|r| ExtractedRow {
            year: r.year,
            month: r.month,
            day: keep_day.then_some(r.day),
            hour: r.hour,
            minute: r.minute,
            temp_c: wavelength_to_temperature(r.wavelength as f64, cal),
        })
        .collect()
}

/// Reads a merged file and converts each record, dropping the day.
pub fn extract(path: &Path, cal: &Calibration) -> Result<Vec<ExtractedRow>> {
    cal.validate()?;
    Ok(extract_records(&read_trace(path)?, cal, false))
}

/// Writes `year,month,hour,minute,temp_c`, with a `day` column after
/// `month` when `with_day` is set.
pub fn write_extracted_csv<W: Write>(rows: &[ExtractedRow], with_day: bool, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if with_day {
        w.write_record(["year", "month", "day", "hour", "minute", "temp_c"])?;
    } else {
        w.write_record(["year", "month", "hour", "minute", "temp_c"])?;
    }
    for r in rows {
        let mut rec = vec![r.year.to_string(), r.month.to_string()];
        if with_day {
            rec.push(r.day.map(|d| d.to_string()).unwrap_or_default());
        }
        rec.extend([
            r.hour.to_string(),
            r.minute.to_string(),
            r.temp_c.to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<extracted csv>", e))?;
    Ok(())
}

/// Random but valid records spread over `years`, for fixtures and benches.
pub fn synthetic_records(count: usize, years: &[u16], seed: u64) -> Vec<SensorRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| SensorRecord {
            year: years[rng.gen_range(0..years.len())],
            month: rng.gen_range(1..=12),
            day: rng.gen_range(1..=28),
            hour: rng.gen_range(0..24),
            minute: rng.gen_range(0..60),
            wavelength: rng.gen_range(154_000..155_200),
        })
        .collect()
}
