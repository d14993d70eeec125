//! Deterministic text output: number formatting and `#` metadata headers.

use std::io::{self, Write};

/// Nine significant digits in scientific notation, e.g. `2.39000000e-1`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 {
        // fold -0.0 into 0.0
        format!("{:.8e}", 0.0)
    } else {
        format!("{x:.8e}")
    }
}

/// `#`-prefixed header lines that make an output file self-describing.
#[derive(Debug, Clone, Default)]
pub struct Metadata {
    lines: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(command: &str, seed: u64) -> Self {
        let mut m = Self::default();
        m.push("command", command);
        m.push("version", env!("CARGO_PKG_VERSION"));
        m.push("seed", seed.to_string());
        m
    }

    pub fn push(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        let value: String = value.into();
        // keep each entry on one line
        self.lines.push((key.to_string(), value.replace('\n', " ")));
        self
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for (k, v) in &self.lines {
            writeln!(w, "# {k}: {v}")?;
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("metadata is valid UTF-8")
    }
}
