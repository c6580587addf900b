//! Deterministic JSON and CSV rendering.
//!
//! Every float is printed in scientific notation with 17 significant digits
//! so that identical values always produce identical bytes.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

/// Canonical text form of a float: `{:.16e}`, with `-0` printed as `0`.
pub fn format_float(value: f64) -> String {
    if value == 0.0 {
        return format!("{:.16e}", 0.0);
    }
    format!("{value:.16e}")
}

/// Pretty JSON with fixed-precision floats.
struct FixedFloatFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for FixedFloatFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

/// Renders `value` as pretty JSON followed by a newline.
pub fn to_json<T: Serialize>(value: &T) -> io::Result<Vec<u8>> {
    let mut buffer = Vec::new();
    let formatter = FixedFloatFormatter { inner: PrettyFormatter::with_indent(b"  ") };
    let mut serializer = serde_json::Serializer::with_formatter(&mut buffer, formatter);
    value.serialize(&mut serializer).map_err(io::Error::from)?;
    buffer.push(b'\n');
    Ok(buffer)
}

/// Minimal CSV writer for numeric tables; no field ever needs quoting.
pub struct CsvTable {
    buffer: Vec<u8>,
}

impl CsvTable {
    pub fn new(header: &[String]) -> Self {
        let mut table = Self { buffer: Vec::new() };
        table.row(header);
        table
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        for (i, field) in fields.iter().enumerate() {
            if i > 0 {
                self.buffer.push(b',');
            }
            self.buffer.extend_from_slice(field.as_ref().as_bytes());
        }
        self.buffer.push(b'\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buffer
    }
}
