use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

/// Full round-trip precision.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Buffered text output with `#` comment headers and comma-separated rows.
pub struct Table {
    lines: Vec<String>,
}

impl Table {
    pub fn new(title: &str, params: &[(String, String)]) -> Self {
        let mut lines = vec![format!("# qthermo {title}")];
        lines.extend(params.iter().map(|(k, v)| format!("# {k} = {v}")));
        Self { lines }
    }

    pub fn comment(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push(format!("# {key} = {value}"));
    }

    pub fn line(&mut self, text: String) {
        self.lines.push(text);
    }

    pub fn columns(&mut self, names: &[&str]) {
        self.lines.push(names.join(","));
    }

    pub fn row(&mut self, values: &[f64]) {
        self.lines.push(values.iter().map(|&v| num(v)).collect::<Vec<_>>().join(","));
    }

    pub fn write_to(&self, path: Option<&Path>) -> io::Result<()> {
        match path {
            Some(p) => {
                let mut w = BufWriter::new(File::create(p)?);
                self.emit(&mut w)?;
                w.flush()
            }
            None => {
                let stdout = io::stdout();
                let mut w = stdout.lock();
                self.emit(&mut w)
            }
        }
    }

    fn emit(&self, w: &mut impl Write) -> io::Result<()> {
        for line in &self.lines {
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}
