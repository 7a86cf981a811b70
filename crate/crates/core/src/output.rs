//! Artifact writers shared by the solvers and the command-line front-end.
//!
//! Every file starts with a schema-version line. CSV numbers use Rust's
//! shortest round-trip `Display` format for `f64`.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

pub fn write_schema_line<W: Write>(w: &mut W, kind: &str) -> Result<()> {
    writeln!(w, "# towpde schema_version={SCHEMA_VERSION} kind={kind}")?;
    Ok(())
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    schema_version: u32,
    kind: &'a str,
    payload: &'a T,
}

/// Single-line JSON document starting with `{"schema_version":1,`.
pub fn write_json<W: Write, T: Serialize>(mut w: W, kind: &str, payload: &T) -> Result<()> {
    let body = Envelope {
        schema_version: SCHEMA_VERSION,
        kind,
        payload,
    };
    serde_json::to_writer(&mut w, &body)?;
    writeln!(w)?;
    Ok(())
}

/// Writes a CSV table: schema line, header row, data rows.
pub fn write_csv_table<W: Write>(mut w: W, kind: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    write_schema_line(&mut w, kind)?;
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}
