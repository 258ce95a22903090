//! Line-oriented model file.
//!
//! ```text
//! ffmte-model v1
//! d=4
//! fields=e_n:8,p_e:10,p_m:11,d_r:7,c_t:4,r_c:6,d_c:7
//! w0=<real>
//! w <feature> <real>                       (one per feature)
//! v <feature> <field> <c0> ... <c(d-1)>    (one per feature and field)
//! ```
//!
//! Reals are written with 17 significant digits, so a round trip is exact.

use std::fmt::Write as _;
use std::path::Path;

use super::FfmModel;
use crate::error::{Error, Result};
use crate::fsutil;
use crate::schema::{VariableSchema, CASE_VARIABLES, NUM_CASE_VARS};

pub const MODEL_MAGIC: &str = "ffmte-model";
const VERSION: &str = "v1";

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn model_to_string(model: &FfmModel) -> String {
    let mut out = format!("{MODEL_MAGIC} {VERSION}\n");
    let _ = writeln!(out, "d={}", model.embed_dim());
    let fields: Vec<String> = CASE_VARIABLES
        .iter()
        .zip(model.schema().case_cardinalities())
        .map(|(n, c)| format!("{n}:{c}"))
        .collect();
    let _ = writeln!(out, "fields={}", fields.join(","));
    let _ = writeln!(out, "w0={}", real(model.w0));
    for (i, w) in model.w.iter().enumerate() {
        let _ = writeln!(out, "w {i} {}", real(*w));
    }
    for feature in 0..model.num_features() {
        for field in 0..NUM_CASE_VARS {
            let _ = write!(out, "v {feature} {field}");
            for c in model.latent(feature, field) {
                let _ = write!(out, " {}", real(*c));
            }
            out.push('\n');
        }
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: u64,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<(u64, &'a str)> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i as u64 + 1;
                Ok((self.last, l))
            }
            None => Err(Error::CorruptFile {
                line: self.last + 1,
                message: "unexpected end of file".into(),
            }),
        }
    }
}

fn corrupt(line: u64, message: impl Into<String>) -> Error {
    Error::CorruptFile {
        line,
        message: message.into(),
    }
}

fn parse_real(s: &str, line: u64) -> Result<f64> {
    let x: f64 = s
        .parse()
        .map_err(|_| corrupt(line, format!("bad number `{s}`")))?;
    if !x.is_finite() {
        return Err(corrupt(line, "non-finite parameter"));
    }
    Ok(x)
}

fn parse_index(s: Option<&str>, line: u64, expected: usize, what: &str) -> Result<()> {
    match s.and_then(|x| x.parse::<usize>().ok()) {
        Some(i) if i == expected => Ok(()),
        _ => Err(corrupt(line, format!("expected {what} {expected}"))),
    }
}

pub fn model_from_str(text: &str) -> Result<FfmModel> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (n, magic) = lines.next_line()?;
    let version = magic
        .strip_prefix(MODEL_MAGIC)
        .map(str::trim)
        .ok_or_else(|| corrupt(n, "missing ffmte-model header"))?;
    if version != VERSION {
        return Err(Error::VersionMismatch {
            found: version.to_string(),
        });
    }
    let (n, l) = lines.next_line()?;
    let d: usize = l
        .strip_prefix("d=")
        .and_then(|v| v.parse().ok())
        .filter(|&d| d >= 1)
        .ok_or_else(|| corrupt(n, "expected d=<int>"))?;
    let (n, l) = lines.next_line()?;
    let list = l
        .strip_prefix("fields=")
        .ok_or_else(|| corrupt(n, "expected fields="))?;
    let mut cards = [0u8; NUM_CASE_VARS];
    let entries: Vec<&str> = list.split(',').collect();
    if entries.len() != NUM_CASE_VARS {
        return Err(corrupt(n, "expected 7 fields"));
    }
    for ((entry, name), slot) in entries.iter().zip(CASE_VARIABLES).zip(cards.iter_mut()) {
        let (got, card) = entry
            .split_once(':')
            .ok_or_else(|| corrupt(n, "expected name:card"))?;
        if got != name {
            return Err(corrupt(n, format!("expected field {name}, got {got}")));
        }
        *slot = card.parse().map_err(|_| corrupt(n, "bad cardinality"))?;
    }
    let schema =
        VariableSchema::with_case_cardinalities(cards).map_err(|e| corrupt(n, e.to_string()))?;
    let mut model = FfmModel::zeros(&schema, d);
    let (n, l) = lines.next_line()?;
    model.w0 = parse_real(
        l.strip_prefix("w0=")
            .ok_or_else(|| corrupt(n, "expected w0="))?,
        n,
    )?;
    for i in 0..model.num_features() {
        let (n, l) = lines.next_line()?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some("w") {
            return Err(corrupt(n, "expected w line"));
        }
        parse_index(parts.next(), n, i, "feature")?;
        let value = parts.next().ok_or_else(|| corrupt(n, "missing weight"))?;
        model.w[i] = parse_real(value, n)?;
        if parts.next().is_some() {
            return Err(corrupt(n, "trailing data"));
        }
    }
    for feature in 0..model.num_features() {
        for field in 0..NUM_CASE_VARS {
            let (n, l) = lines.next_line()?;
            let mut parts = l.split_whitespace();
            if parts.next() != Some("v") {
                return Err(corrupt(n, "expected v line"));
            }
            parse_index(parts.next(), n, feature, "feature")?;
            parse_index(parts.next(), n, field, "field")?;
            let comps: Vec<&str> = parts.collect();
            if comps.len() != d {
                return Err(corrupt(
                    n,
                    format!("expected {d} components, got {}", comps.len()),
                ));
            }
            let dst = model.latent_index(feature, field);
            for (c, s) in comps.iter().enumerate() {
                model.v[dst + c] = parse_real(s, n)?;
            }
        }
    }
    if let Some((i, extra)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
        return Err(corrupt(
            i as u64 + 1,
            format!("unexpected content `{extra}`"),
        ));
    }
    Ok(model)
}

pub fn save_model(model: &FfmModel, path: impl AsRef<Path>) -> Result<()> {
    fsutil::write_atomic(path.as_ref(), model_to_string(model).as_bytes())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<FfmModel> {
    let bytes = fsutil::read(path.as_ref())?;
    let text = String::from_utf8(bytes).map_err(|_| corrupt(0, "not UTF-8"))?;
    model_from_str(&text)
}
