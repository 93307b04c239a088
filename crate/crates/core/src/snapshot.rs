//! Plain-text sphere field format.
//!
//! ```text
//! nullflow-field 1
//! mode full
//! n_theta 16
//! n_phi 32
//! theta_layout cell-centred
//! phi_layout periodic-from-zero
//! meta t 1.25e0
//! fields omega omega0
//! data
//! <one row per node in storage order, one column per field>
//! ```
//!
//! Numbers are written in the shortest exponent form that parses back to
//! the same `f64`, so a write/read cycle is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{GridMode, SphereGrid};

pub const FIELD_FORMAT: &str = "nullflow-field";
pub const FORMAT_VERSION: u32 = 1;
const THETA_LAYOUT: &str = "cell-centred";
const PHI_LAYOUT: &str = "periodic-from-zero";

/// Header shared by the field snapshot and the tabulated background.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Header {
    pub format: String,
    pub grid: SphereGrid,
    pub entries: Vec<(String, String)>,
    pub fields: Vec<String>,
}

impl Header {
    pub fn write(&self, out: &mut String) {
        let _ = writeln!(out, "{} {FORMAT_VERSION}", self.format);
        let _ = writeln!(out, "mode {}", self.grid.mode());
        let _ = writeln!(out, "n_theta {}", self.grid.n_theta());
        let _ = writeln!(out, "n_phi {}", self.grid.n_phi());
        let _ = writeln!(out, "theta_layout {THETA_LAYOUT}");
        let _ = writeln!(out, "phi_layout {PHI_LAYOUT}");
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} {v}");
        }
        let _ = writeln!(out, "fields {}", self.fields.join(" "));
    }

    /// Reads header lines up to and including `fields`.
    pub fn read(lines: &mut impl Iterator<Item = Result<(usize, String)>>, format: &str) -> Result<Self> {
        let (_, first) = lines.next().ok_or_else(|| Error::Parse("empty file".into()))??;
        let mut it = first.split_whitespace();
        if it.next() != Some(format) {
            return Err(Error::Parse(format!("expected a '{format}' file, found '{first}'")));
        }
        let version: u32 = parse_token(it.next(), 1, "format version")?;
        if version != FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported format version {version}")));
        }
        let mut mode = None;
        let mut n_theta = None;
        let mut n_phi = None;
        let mut entries = Vec::new();
        loop {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::Parse("header ended before 'fields'".into()))??;
            let (key, rest) = line.split_once(' ').unwrap_or((line.as_str(), ""));
            match key {
                "mode" => mode = Some(rest.trim().parse::<GridMode>()?),
                "n_theta" => n_theta = Some(parse_token(Some(rest.trim()), ln, "n_theta")?),
                "n_phi" => n_phi = Some(parse_token(Some(rest.trim()), ln, "n_phi")?),
                "theta_layout" if rest.trim() != THETA_LAYOUT => {
                    return Err(Error::Parse(format!("line {ln}: unsupported theta layout")))
                }
                "phi_layout" if rest.trim() != PHI_LAYOUT => {
                    return Err(Error::Parse(format!("line {ln}: unsupported phi layout")))
                }
                "theta_layout" | "phi_layout" => {}
                "fields" => {
                    let fields: Vec<String> = rest.split_whitespace().map(str::to_owned).collect();
                    if fields.is_empty() {
                        return Err(Error::Parse(format!("line {ln}: no fields listed")));
                    }
                    let grid = match (mode, n_theta, n_phi) {
                        (Some(m), Some(nt), Some(np)) => SphereGrid::new(m, nt, np)?,
                        _ => return Err(Error::Parse("header lacks grid dimensions".into())),
                    };
                    return Ok(Self {
                        format: format.to_owned(),
                        grid,
                        entries,
                        fields,
                    });
                }
                _ => entries.push((key.to_owned(), rest.trim().to_owned())),
            }
        }
    }

    pub fn entry(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self
            .entry(key)
            .ok_or_else(|| Error::Parse(format!("header lacks '{key}'")))?;
        v.parse()
            .map_err(|_| Error::Parse(format!("invalid value '{v}' for '{key}'")))
    }
}

pub(crate) fn parse_token<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse(format!("line {line}: missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::Parse(format!("line {line}: invalid {what} '{tok}'")))
}

/// Non-empty, non-comment lines with their 1-based line numbers.
pub(crate) fn content_lines(reader: impl BufRead) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l.trim().to_owned())).map_err(Error::from))
        .filter(|r| !matches!(r, Ok((_, l)) if l.is_empty() || l.starts_with('#')))
}

/// Appends one row of values.
pub(crate) fn write_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{v:e}");
    }
    out.push('\n');
}

/// Reads `rows` rows of `width` values each, column-major output.
pub(crate) fn read_rows(
    lines: &mut impl Iterator<Item = Result<(usize, String)>>,
    rows: usize,
    width: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut cols = vec![Vec::with_capacity(rows); width];
    for r in 0..rows {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("data ended after {r} of {rows} rows")))??;
        let mut count = 0;
        for (c, tok) in line.split_whitespace().enumerate() {
            if c >= width {
                return Err(Error::Parse(format!("line {ln}: more than {width} values")));
            }
            cols[c].push(parse_token::<f64>(Some(tok), ln, "value")?);
            count += 1;
        }
        if count != width {
            return Err(Error::Parse(format!("line {ln}: expected {width} values, found {count}")));
        }
    }
    Ok(cols)
}

/// Named nodal fields on a common grid with free-form metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub grid: SphereGrid,
    pub meta: Vec<(String, String)>,
    pub fields: Vec<(String, Vec<f64>)>,
}

impl FieldSnapshot {
    pub fn new(grid: SphereGrid) -> Self {
        Self {
            grid,
            meta: Vec::new(),
            fields: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_owned(), value.to_string()));
        self
    }

    pub fn with_field(mut self, name: &str, f: &ScalarField) -> Result<Self> {
        if f.grid() != &self.grid {
            return Err(Error::Shape(format!("field '{name}' is on a different grid")));
        }
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::Parameter(format!("invalid field name '{name}'")));
        }
        self.fields.push((name.to_owned(), f.values().to_vec()));
        Ok(self)
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Metadata value parsed as f64.
    pub fn meta_f64(&self, key: &str) -> Result<f64> {
        let v = self
            .meta(key)
            .ok_or_else(|| Error::Parse(format!("snapshot lacks metadata '{key}'")))?;
        v.parse()
            .map_err(|_| Error::Parse(format!("invalid metadata value '{v}' for '{key}'")))
    }

    pub fn field(&self, name: &str) -> Result<ScalarField> {
        let (_, v) = self
            .fields
            .iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| Error::Parse(format!("snapshot has no field '{name}'")))?;
        ScalarField::new(self.grid, v.clone())
    }

    pub fn to_text(&self) -> String {
        let header = Header {
            format: FIELD_FORMAT.to_owned(),
            grid: self.grid,
            entries: self
                .meta
                .iter()
                .map(|(k, v)| (format!("meta {k}"), v.clone()))
                .collect(),
            fields: self.fields.iter().map(|(n, _)| n.clone()).collect(),
        };
        let mut out = String::new();
        header.write(&mut out);
        out.push_str("data\n");
        for n in 0..self.grid.len() {
            write_row(&mut out, self.fields.iter().map(|(_, v)| v[n]));
        }
        out
    }

    pub fn read_from(reader: impl BufRead) -> Result<Self> {
        let mut lines = content_lines(reader);
        let header = Header::read(&mut lines, FIELD_FORMAT)?;
        let mut meta = Vec::new();
        for (k, v) in &header.entries {
            match k.as_str() {
                "meta" => {
                    let (mk, mv) = v.split_once(' ').unwrap_or((v.as_str(), ""));
                    meta.push((mk.to_owned(), mv.trim().to_owned()));
                }
                other => return Err(Error::Parse(format!("unknown header key '{other}'"))),
            }
        }
        match lines.next() {
            Some(Ok((_, l))) if l == "data" => {}
            _ => return Err(Error::Parse("expected 'data' after the field list".into())),
        }
        let cols = read_rows(&mut lines, header.grid.len(), header.fields.len())?;
        if let Some(extra) = lines.next() {
            let (ln, _) = extra?;
            return Err(Error::Parse(format!("line {ln}: unexpected trailing data")));
        }
        Ok(Self {
            grid: header.grid,
            meta,
            fields: header.fields.into_iter().zip(cols).collect(),
        })
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let grid = SphereGrid::full(6, 8).unwrap();
        let a = ScalarField::from_fn(grid, |t, p| (t * 1.234567).sin() / 3.0 + p.cos() * 1e-300);
        let b = ScalarField::from_fn(grid, |t, _| t.exp() * 1e17);
        let snap = FieldSnapshot::new(grid)
            .with_meta("t", 0.1 + 0.2)
            .with_field("a", &a)
            .unwrap()
            .with_field("b", &b)
            .unwrap();
        let back = FieldSnapshot::read_from(snap.to_text().as_bytes()).unwrap();
        assert_eq!(back, snap);
        for (x, y) in back.field("a").unwrap().values().iter().zip(a.values()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(back.meta_f64("t").unwrap(), 0.1 + 0.2);
    }

    #[test]
    fn truncated_data_is_rejected() {
        let grid = SphereGrid::axisymmetric(4).unwrap();
        let snap = FieldSnapshot::new(grid)
            .with_field("w", &ScalarField::constant(grid, 1.0))
            .unwrap();
        let text = snap.to_text();
        let cut = &text[..text.len() - 6];
        assert!(matches!(FieldSnapshot::read_from(cut.as_bytes()), Err(Error::Parse(_))));
    }
}
