//! Tab-separated series output.

use std::borrow::Cow;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliResult, Context};

pub struct TsvWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

/// Tabs and line breaks inside a field are written as `\t`, `\n`, `\r`;
/// backslashes are doubled.
pub fn escape(field: &str) -> Cow<'_, str> {
    if !field.contains(['\t', '\n', '\r', '\\']) {
        return Cow::Borrowed(field);
    }
    let mut s = String::with_capacity(field.len() + 4);
    for c in field.chars() {
        match c {
            '\t' => s.push_str("\\t"),
            '\n' => s.push_str("\\n"),
            '\r' => s.push_str("\\r"),
            '\\' => s.push_str("\\\\"),
            c => s.push(c),
        }
    }
    Cow::Owned(s)
}

/// Empty for `None`.
pub fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl TsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> CliResult<Self> {
        let out = BufWriter::new(File::create(path).at(path)?);
        let mut w = Self {
            path: path.to_owned(),
            out,
        };
        w.write_line(header.iter().copied())?;
        Ok(w)
    }

    fn write_line<'a>(&mut self, fields: impl IntoIterator<Item = &'a str>) -> CliResult<()> {
        let mut first = true;
        for f in fields {
            if !first {
                self.out.write_all(b"\t").at(&self.path)?;
            }
            first = false;
            self.out.write_all(escape(f).as_bytes()).at(&self.path)?;
        }
        self.out.write_all(b"\n").at(&self.path)
    }

    pub fn row(&mut self, fields: &[String]) -> CliResult<()> {
        self.write_line(fields.iter().map(String::as_str))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.out.flush().at(&self.path)
    }
}
