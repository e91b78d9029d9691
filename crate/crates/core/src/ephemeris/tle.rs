//! Two-line element set parsing and formatting.

use chrono::{DateTime, Duration, TimeZone, Utc};

use super::EphemerisError;

pub const TLE_LINE_LEN: usize = 69;

#[derive(Debug, Clone, PartialEq)]
pub struct TleRecord {
    pub name: Option<String>,
    pub catalog_number: u32,
    pub classification: char,
    pub intl_designator: String,
    /// Two-digit epoch year as written (57..99 → 19xx, otherwise 20xx).
    pub epoch_year: u32,
    /// Fractional day of year, 1-based.
    pub epoch_day: f64,
    pub epoch: DateTime<Utc>,
    /// First derivative of mean motion divided by two (rev/day²).
    pub mean_motion_dot: f64,
    /// Second derivative of mean motion divided by six (rev/day³).
    pub mean_motion_ddot: f64,
    pub bstar: f64,
    pub ephemeris_type: u8,
    pub element_set_number: u32,
    pub inclination_deg: f64,
    pub raan_deg: f64,
    pub eccentricity: f64,
    pub arg_perigee_deg: f64,
    pub mean_anomaly_deg: f64,
    pub mean_motion_rev_per_day: f64,
    pub revolution_number: u32,
}

impl TleRecord {
    /// Identifier used in track files: the catalog number.
    pub fn sat_id(&self) -> String {
        self.catalog_number.to_string()
    }

    pub fn period_s(&self) -> f64 {
        86_400.0 / self.mean_motion_rev_per_day
    }
}

/// Mod-10 checksum over the first 68 characters: digits count at face
/// value, each minus sign counts 1, everything else 0.
pub fn tle_checksum(line: &str) -> u32 {
    line.chars()
        .take(TLE_LINE_LEN - 1)
        .map(|c| match c {
            '0'..='9' => c as u32 - '0' as u32,
            '-' => 1,
            _ => 0,
        })
        .sum::<u32>()
        % 10
}

fn epoch_from(year2: u32, day: f64) -> DateTime<Utc> {
    let year = if year2 >= 57 { 1900 + year2 } else { 2000 + year2 } as i32;
    let jan1 = Utc.with_ymd_and_hms(year, 1, 1, 0, 0, 0).unwrap();
    let micros = ((day - 1.0) * 86_400e6).round() as i64;
    jan1 + Duration::microseconds(micros)
}

fn field<'a>(line: &'a str, lineno: usize, name: &'static str, a: usize, b: usize) -> Result<&'a str, EphemerisError> {
    line.get(a - 1..b).ok_or_else(|| EphemerisError::Field {
        line: lineno,
        field: name,
        value: String::new(),
    })
}

fn parse_num<T: std::str::FromStr>(s: &str, lineno: usize, name: &'static str) -> Result<T, EphemerisError> {
    s.trim().parse::<T>().map_err(|_| EphemerisError::Field {
        line: lineno,
        field: name,
        value: s.to_string(),
    })
}

/// Decode the implied-decimal exponent notation, e.g. `" 25302-4"` → 0.25302e-4.
fn parse_exp_field(s: &str, lineno: usize, name: &'static str) -> Result<f64, EphemerisError> {
    let bad = || EphemerisError::Field {
        line: lineno,
        field: name,
        value: s.to_string(),
    };
    let t = s.trim();
    if t.is_empty() {
        return Ok(0.0);
    }
    let (sign, rest) = match t.as_bytes()[0] {
        b'-' => ("-", &t[1..]),
        b'+' => ("", &t[1..]),
        _ => ("", t),
    };
    let pos = rest.rfind(['-', '+']).ok_or_else(bad)?;
    let (mant, exp) = rest.split_at(pos);
    if mant.is_empty() || !mant.bytes().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let exp: i32 = exp.parse().map_err(|_| bad())?;
    format!("{sign}0.{mant}e{exp}").parse().map_err(|_| bad())
}

fn format_exp_field(v: f64) -> String {
    if v == 0.0 {
        return " 00000-0".to_string();
    }
    let sign = if v < 0.0 { '-' } else { ' ' };
    // "d.dddde±x" carries exactly the five significant digits we need
    let s = format!("{:.4e}", v.abs());
    let (m, e) = s.split_once('e').expect("exponent notation");
    let digits: String = m.chars().filter(|c| c.is_ascii_digit()).collect();
    let exp: i32 = e.parse::<i32>().expect("integer exponent") + 1;
    let esign = if exp < 0 { '-' } else { '+' };
    format!("{sign}{digits}{esign}{}", exp.abs())
}

fn format_ndot(v: f64) -> String {
    let sign = if v < 0.0 { '-' } else { ' ' };
    let s = format!("{:.8}", v.abs());
    format!("{sign}{}", s.strip_prefix('0').unwrap_or(&s))
}

fn check_line(line: &str, lineno: usize, expect: char) -> Result<(), EphemerisError> {
    let len = line.chars().count();
    if len != TLE_LINE_LEN || !line.is_ascii() {
        return Err(EphemerisError::LineLength { line: lineno, len });
    }
    if !line.starts_with(expect) || line.as_bytes()[1] != b' ' {
        return Err(EphemerisError::Field {
            line: lineno,
            field: "line number",
            value: line[..2].to_string(),
        });
    }
    let found = line.as_bytes()[68];
    let expected = tle_checksum(line);
    if !found.is_ascii_digit() || (found - b'0') as u32 != expected {
        return Err(EphemerisError::Checksum {
            line: lineno,
            expected,
            found: found as char,
        });
    }
    Ok(())
}

/// Parse one record from its two element lines. `first_line` is the
/// 1-based input line number of `l1`, used in error reports.
pub fn parse_record(name: Option<&str>, l1: &str, l2: &str, first_line: usize) -> Result<TleRecord, EphemerisError> {
    let n1 = first_line;
    let n2 = first_line + 1;
    check_line(l1, n1, '1')?;
    check_line(l2, n2, '2')?;

    let catalog_number: u32 = parse_num(field(l1, n1, "catalog number", 3, 7)?, n1, "catalog number")?;
    let cat2: u32 = parse_num(field(l2, n2, "catalog number", 3, 7)?, n2, "catalog number")?;
    if cat2 != catalog_number {
        return Err(EphemerisError::Field {
            line: n2,
            field: "catalog number",
            value: cat2.to_string(),
        });
    }
    let classification = l1.as_bytes()[7] as char;
    let intl_designator = field(l1, n1, "international designator", 10, 17)?.trim_end().to_string();
    let epoch_year: u32 = parse_num(field(l1, n1, "epoch year", 19, 20)?, n1, "epoch year")?;
    let epoch_day: f64 = parse_num(field(l1, n1, "epoch day", 21, 32)?, n1, "epoch day")?;
    if !(1.0..367.0).contains(&epoch_day) {
        return Err(EphemerisError::Field {
            line: n1,
            field: "epoch day",
            value: epoch_day.to_string(),
        });
    }
    let mean_motion_dot: f64 = parse_num(field(l1, n1, "mean motion dot", 34, 43)?, n1, "mean motion dot")?;
    let mean_motion_ddot = parse_exp_field(field(l1, n1, "mean motion ddot", 45, 52)?, n1, "mean motion ddot")?;
    let bstar = parse_exp_field(field(l1, n1, "bstar", 54, 61)?, n1, "bstar")?;
    let ephemeris_type: u8 = parse_num(field(l1, n1, "ephemeris type", 63, 63)?, n1, "ephemeris type")?;
    let element_set_number: u32 = parse_num(field(l1, n1, "element set number", 65, 68)?, n1, "element set number")?;

    let inclination_deg: f64 = parse_num(field(l2, n2, "inclination", 9, 16)?, n2, "inclination")?;
    let raan_deg: f64 = parse_num(field(l2, n2, "raan", 18, 25)?, n2, "raan")?;
    let ecc_digits = field(l2, n2, "eccentricity", 27, 33)?;
    if !ecc_digits.bytes().all(|c| c.is_ascii_digit()) {
        return Err(EphemerisError::Field {
            line: n2,
            field: "eccentricity",
            value: ecc_digits.to_string(),
        });
    }
    let eccentricity: f64 = parse_num(&format!("0.{ecc_digits}"), n2, "eccentricity")?;
    let arg_perigee_deg: f64 = parse_num(field(l2, n2, "argument of perigee", 35, 42)?, n2, "argument of perigee")?;
    let mean_anomaly_deg: f64 = parse_num(field(l2, n2, "mean anomaly", 44, 51)?, n2, "mean anomaly")?;
    let mean_motion_rev_per_day: f64 = parse_num(field(l2, n2, "mean motion", 53, 63)?, n2, "mean motion")?;
    if !(mean_motion_rev_per_day > 0.0) {
        return Err(EphemerisError::Field {
            line: n2,
            field: "mean motion",
            value: mean_motion_rev_per_day.to_string(),
        });
    }
    let revolution_number: u32 = parse_num(field(l2, n2, "revolution number", 64, 68)?, n2, "revolution number")?;

    Ok(TleRecord {
        name: name.map(|s| s.trim().to_string()).filter(|s| !s.is_empty()),
        catalog_number,
        classification,
        intl_designator,
        epoch_year,
        epoch_day,
        epoch: epoch_from(epoch_year, epoch_day),
        mean_motion_dot,
        mean_motion_ddot,
        bstar,
        ephemeris_type,
        element_set_number,
        inclination_deg,
        raan_deg,
        eccentricity,
        arg_perigee_deg,
        mean_anomaly_deg,
        mean_motion_rev_per_day,
        revolution_number,
    })
}

/// Parse every record, collecting per-record errors instead of stopping at
/// the first one. A malformed group is skipped up to the next line that
/// could start a record.
pub fn parse_tle_lenient(text: &str) -> (Vec<TleRecord>, Vec<EphemerisError>) {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let (ln, l) = lines[i];
        let is_l1 = l.starts_with("1 ") && l.len() == TLE_LINE_LEN;
        let (name, start) = if is_l1 { (None, i) } else { (Some(l), i + 1) };
        if start + 1 >= lines.len() {
            errors.push(EphemerisError::MissingLine { line: ln });
            break;
        }
        let (l1n, l1) = lines[start];
        let (_, l2) = lines[start + 1];
        match parse_record(name, l1, l2, l1n) {
            Ok(r) => records.push(r),
            Err(e) => errors.push(e),
        }
        i = start + 2;
    }
    (records, errors)
}

/// Strict parse: the first malformed record aborts with its error.
pub fn parse_tle(text: &str) -> Result<Vec<TleRecord>, EphemerisError> {
    let (records, mut errors) = parse_tle_lenient(text);
    if errors.is_empty() {
        Ok(records)
    } else {
        Err(errors.swap_remove(0))
    }
}

fn with_checksum(mut body: String) -> String {
    debug_assert_eq!(body.len(), TLE_LINE_LEN - 1);
    let c = tle_checksum(&body);
    body.push(char::from_digit(c, 10).unwrap());
    body
}

/// The two element lines of a record, with fresh checksums.
pub fn format_lines(r: &TleRecord) -> (String, String) {
    let l1 = format!(
        "1 {:05}{} {:<8} {:02}{:012.8} {} {} {} {} {:>4}",
        r.catalog_number,
        r.classification,
        r.intl_designator,
        r.epoch_year,
        r.epoch_day,
        format_ndot(r.mean_motion_dot),
        format_exp_field(r.mean_motion_ddot),
        format_exp_field(r.bstar),
        r.ephemeris_type,
        r.element_set_number,
    );
    let ecc = format!("{:.7}", r.eccentricity);
    let l2 = format!(
        "2 {:05} {:>8.4} {:>8.4} {} {:>8.4} {:>8.4} {:>11.8}{:>5}",
        r.catalog_number,
        r.inclination_deg,
        r.raan_deg,
        &ecc[2..],
        r.arg_perigee_deg,
        r.mean_anomaly_deg,
        r.mean_motion_rev_per_day,
        r.revolution_number,
    );
    (with_checksum(l1), with_checksum(l2))
}

/// Records as TLE text (3-line groups when a name is present).
pub fn format_tle(records: &[TleRecord]) -> String {
    let mut out = String::new();
    for r in records {
        if let Some(name) = &r.name {
            out.push_str(name);
            out.push('\n');
        }
        let (l1, l2) = format_lines(r);
        out.push_str(&l1);
        out.push('\n');
        out.push_str(&l2);
        out.push('\n');
    }
    out
}
