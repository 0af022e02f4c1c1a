//! Number formatting and output sinks.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use aderdg_core::Scalar;

use crate::error::CliError;

/// Scalars the CLI can print.
pub trait Emit: Scalar {
    /// Shortest text that parses back to the same value (binary64), or the
    /// type's full digit count for software floats.
    fn text(self) -> String;
}

fn non_finite(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[cfg(feature = "extended")]
fn finite<S: Scalar>(x: S) -> bool {
    x.is_finite()
}

impl Emit for f64 {
    fn text(self) -> String {
        if self.is_finite() {
            format!("{self:?}")
        } else {
            non_finite(self)
        }
    }
}

#[cfg(feature = "extended")]
impl Emit for aderdg_core::scalar::Extended {
    fn text(self) -> String {
        if finite(self) {
            self.to_string()
        } else {
            non_finite(self.to_f64_lossy())
        }
    }
}

pub fn open(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match out {
        Some(path) => {
            let f = File::create(path).map_err(|e| io_err(path, e))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

pub fn io_err(path: &Path, source: io::Error) -> CliError {
    CliError::Io {
        context: format!("writing {}", path.display()),
        source,
    }
}

/// Writes `text` to `out` (or standard output) and flushes.
pub fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    let mut w = open(out)?;
    let wrap = |e| match out {
        Some(p) => io_err(p, e),
        None => CliError::Io {
            context: "writing standard output".into(),
            source: e,
        },
    };
    w.write_all(text.as_bytes()).map_err(wrap)?;
    w.flush().map_err(wrap)
}

/// A CSV line from already formatted fields.
pub fn csv_line(fields: impl IntoIterator<Item = String>) -> String {
    let mut s = fields.into_iter().collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}
