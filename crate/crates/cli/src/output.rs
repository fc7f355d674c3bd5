use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    /// JSON with a versioned `schema` field.
    Structured,
}

pub struct Sink {
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Sink {
    pub fn emit(&self, body: &str) -> Result<()> {
        match &self.out {
            Some(p) => std::fs::write(p, body).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut so = std::io::stdout().lock();
                so.write_all(body.as_bytes())?;
                so.flush()?;
                Ok(())
            }
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

pub fn structured<T: Serialize>(schema: &str, body: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Envelope { schema, body })?;
    s.push('\n');
    Ok(s)
}

pub fn csv_rows<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Fixed-width text table.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = cells
            .iter()
            .zip(&width)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        s.push('\n');
        s
    };
    let mut out = line(header.to_vec());
    for r in rows {
        out += &line(r.iter().map(String::as_str).collect());
    }
    out
}

pub fn mb(bytes: impl Into<f64>) -> String {
    format!("{:.2}", bytes.into() / 1e6)
}

pub fn us(seconds: f64) -> String {
    format!("{:.2}", seconds * 1e6)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_right_aligns() {
        let t = table(&["a", "bb"], &[vec!["100".into(), "1".into()]]);
        assert_eq!(t, "  a  bb\n100   1\n");
    }

    #[test]
    fn structured_carries_schema() {
        #[derive(Serialize)]
        struct B {
            x: u32,
        }
        let s = structured("t/1", &B { x: 3 }).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["schema"], "t/1");
        assert_eq!(v["x"], 3);
    }

    #[test]
    fn csv_has_header() {
        #[derive(Serialize)]
        struct R {
            a: u32,
            b: f64,
        }
        assert_eq!(csv_rows(&[R { a: 1, b: 0.5 }]).unwrap(), "a,b\n1,0.5\n");
        assert_eq!(mb(12_582_912u32), "12.58");
        assert_eq!(us(2.5e-6), "2.50");
    }
}
