//! Serialization helpers: JSON and CSV with 17 significant digits, PGM masks
//! and raw `f32` rasters.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use super::cache::write_file;
use super::CliError;
use crate::grid::{BoolGrid, Grid};

/// Pretty JSON whose floats carry 17 significant digits.
struct Digits17<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
    }
}

/// `d.dddddddddddddddde±x`; non-finite values as `inf`, `-inf`, `nan`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

pub fn to_json(value: &impl Serialize) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).expect("serializable value");
    out.push(b'\n');
    String::from_utf8(out).expect("utf-8 json")
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    write_file(path, to_json(value).as_bytes())
}

/// CSV with a header row; every cell is pre-formatted text.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::io(path, io::Error::other(e));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io(path, io::Error::other(e.to_string())))?;
    write_file(path, &bytes)
}

/// Binary PGM (`P5`), 0/255 per cell, first row = top of the window.
pub fn pgm_bytes(mask: &BoolGrid) -> Vec<u8> {
    let n = mask.size();
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    for j in (0..n).rev() {
        for i in 0..n {
            out.push(if *mask.get(i, j) { 255 } else { 0 });
        }
    }
    out
}

pub fn parse_pgm(bytes: &[u8]) -> Option<BoolGrid> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).ok()?.to_string());
    }
    pos += 1;
    let n: usize = fields[1].parse().ok()?;
    if fields[0] != "P5" || fields[2].parse::<usize>().ok()? != n || bytes.len() != pos + n * n {
        return None;
    }
    let data = &bytes[pos..];
    Some(Grid::from_fn(n, |i, j| data[(n - 1 - j) * n + i] != 0))
}

/// Little-endian `f32` raster in the same row order as [`pgm_bytes`].
pub fn f32_raster(values: &Grid<f64>) -> Vec<u8> {
    let n = values.size();
    let mut out = Vec::with_capacity(n * n * 4);
    for j in (0..n).rev() {
        for i in 0..n {
            out.extend_from_slice(&(*values.get(i, j) as f32).to_le_bytes());
        }
    }
    out
}
