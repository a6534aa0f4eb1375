//! Run manifests: one `key = value` line per entry, parseable as TOML.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{write_file, Result};

#[derive(Debug, Clone, Default)]
pub struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.text("command", command);
        let argv: Vec<String> = std::env::args().collect();
        m.text("command_line", &argv.join(" "));
        m
    }

    pub fn text(&mut self, key: &str, value: &str) {
        self.lines
            .push((key.into(), toml::Value::String(value.into()).to_string()));
    }

    pub fn path(&mut self, key: &str, value: &Path) {
        self.text(key, &value.display().to_string());
    }

    pub fn int(&mut self, key: &str, value: impl Into<i128>) {
        self.lines.push((key.into(), value.into().to_string()));
    }

    /// Seeds span all of u64, so they are written as hex strings.
    pub fn seed(&mut self, key: &str, value: u64) {
        self.text(key, &format!("{value:#018x}"));
    }

    pub fn real(&mut self, key: &str, value: f64) {
        self.lines
            .push((key.into(), toml::Value::Float(value).to_string()));
    }

    pub fn flag(&mut self, key: &str, value: bool) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn reals(&mut self, key: &str, values: &[f64]) {
        let items: Vec<String> = values
            .iter()
            .map(|&v| toml::Value::Float(v).to_string())
            .collect();
        self.lines
            .push((key.into(), format!("[{}]", items.join(", "))));
    }

    pub fn ints(&mut self, key: &str, values: impl IntoIterator<Item = u64>) {
        let items: Vec<String> = values.into_iter().map(|v| v.to_string()).collect();
        self.lines
            .push((key.into(), format!("[{}]", items.join(", "))));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Print to stdout and, if given, write to `path`.
    pub fn emit(&self, path: Option<&Path>) -> Result<()> {
        let text = self.render();
        print!("{text}");
        if let Some(p) = path {
            write_file(p, text.as_bytes())?;
        }
        Ok(())
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_valid_toml() {
        let mut m = Manifest::new("compress");
        m.text("input", "a \"quoted\" name.png");
        m.int("blocks", 12u32);
        m.real("psnr_db", f64::INFINITY);
        m.real("bpp", 0.25);
        m.reals("block_kl_bits", &[15.5, 16.0]);
        m.ints("widths", [16, 17]);
        m.flag("histogram", false);
        m.seed("seed_noise", u64::MAX);
        let t: toml::Table = m.render().parse().unwrap();
        assert_eq!(t["input"].as_str(), Some("a \"quoted\" name.png"));
        assert_eq!(t["blocks"].as_integer(), Some(12));
        assert_eq!(t["psnr_db"].as_float(), Some(f64::INFINITY));
        assert_eq!(t["block_kl_bits"].as_array().unwrap().len(), 2);
        assert_eq!(t["seed_noise"].as_str(), Some("0xffffffffffffffff"));
        assert_eq!(hex(&[0, 171]), "00ab");
    }
}
