use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A finished result, rendered once and written in one go.
pub struct Rendered(pub Vec<u8>);

pub fn json<T: Serialize>(value: &T) -> Result<Rendered, Failure> {
    let mut bytes = serde_json::to_vec(value).map_err(|e| Failure::Numerical(format!("serializing output: {e}")))?;
    bytes.push(b'\n');
    Ok(Rendered(bytes))
}

pub fn csv<R, I>(header: &[&str], rows: I) -> Result<Rendered, Failure>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| Failure::Numerical(format!("writing CSV: {e}"));
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(r).map_err(wrap)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Numerical(format!("writing CSV: {e}")))?;
    Ok(Rendered(bytes))
}

pub fn emit(out: Option<&Path>, r: Rendered) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, &r.0).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(&r.0).and_then(|_| stdout.flush()) {
                // a reader that stops early (`| head`) is not our failure
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Usage(format!("cannot write to stdout: {e}"))),
                _ => Ok(()),
            }
        }
    }
}

/// `%.17g`-style round-trip formatting used in CSV cells.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}
