//! `index,space` CSV files for space profiles.

use std::io::{Read, Write};

use thiserror::Error;

use crate::model::{ModelError, SpaceProfile};

pub const HEADER: [&str; 2] = ["index", "space"];

#[derive(Debug, Error)]
pub enum ProfileCsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("expected header index,space, got {0}")]
    Header(String),
    #[error("row {row}: expected index {expected}, got {got:?}")]
    Index {
        row: usize,
        expected: usize,
        got: String,
    },
    #[error("row {row}: bad space value {got:?}")]
    Space { row: usize, got: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Formats `x` like C's `%.{digits}g`: `digits` significant digits, trailing
/// zeros removed, scientific notation outside `[1e-4, 10^digits)`.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_profile<W: Write>(out: W, values: &[f64]) -> Result<(), ProfileCsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), format_sig(*v, 12)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn profile_to_csv(values: &[f64]) -> String {
    let mut buf = Vec::new();
    write_profile(&mut buf, values).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

pub fn read_profile<R: Read>(input: R) -> Result<SpaceProfile, ProfileCsvError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(ProfileCsvError::Header(
            header.iter().collect::<Vec<_>>().join(","),
        ));
    }
    let mut values = Vec::new();
    for (row, record) in r.records().enumerate() {
        let record = record?;
        let index = &record[0];
        if index.parse::<usize>().ok() != Some(row) {
            return Err(ProfileCsvError::Index {
                row,
                expected: row,
                got: index.to_string(),
            });
        }
        let space = &record[1];
        values.push(space.parse::<f64>().map_err(|_| ProfileCsvError::Space {
            row,
            got: space.to_string(),
        })?);
    }
    Ok(SpaceProfile::new(values)?)
}
