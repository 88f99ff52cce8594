//! Output files: CSV tables, 16-bit PGM rasters, plain-text configs and
//! run manifests with SHA-256 checksums.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// In-memory CSV table written with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|h| h.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::Config(format!(
                "row has {} fields, header has {}",
                row.len(),
                self.header.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    /// Column values of `name`, if present.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Formats a float with the shortest round-tripping representation.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Comma-joined coordinates, quoted by the CSV writer when needed.
pub fn point(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";")
}

/// Row-major 16-bit grayscale image, row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u16>,
}

impl Raster {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0; width * height],
        }
    }

    /// Sets the pixel at column `i`, row `j` counted from the bottom.
    pub fn set_from_bottom(&mut self, i: usize, j: usize, v: u16) {
        let row = self.height - 1 - j;
        self.pixels[row * self.width + i] = v;
    }

    /// Binary PGM (P5) with maxval 65535, big-endian samples.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 2);
        for p in &self.pixels {
            out.extend_from_slice(&p.to_be_bytes());
        }
        out
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_pgm())?;
        Ok(())
    }

    /// Parses a P5 16-bit image as written by [`Raster::to_pgm`].
    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let bad = || Error::Config("not a 16-bit P5 image".into());
        // Header: four whitespace-separated tokens, then one whitespace byte.
        let mut tokens = Vec::new();
        let mut pos = 0;
        while tokens.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad());
            }
            tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad())?);
        }
        pos += 1;
        if tokens[0] != "P5" || tokens[3] != "65535" {
            return Err(bad());
        }
        let width: usize = tokens[1].parse().map_err(|_| bad())?;
        let height: usize = tokens[2].parse().map_err(|_| bad())?;
        let data = bytes.get(pos..).ok_or_else(bad)?;
        if data.len() != width * height * 2 {
            return Err(bad());
        }
        let pixels = data.chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
        Ok(Self {
            width,
            height,
            pixels,
        })
    }
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", i + 1)));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Run manifest: ordered `key=value` entries plus checksummed output files.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    entries: Vec<(String, String)>,
    files: Vec<PathBuf>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn add_file(&mut self, path: impl Into<PathBuf>) {
        self.files.push(path.into());
    }

    /// Renders the manifest; file names are relative to `dir`.
    pub fn render(&self, dir: &Path) -> Result<String> {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(&format!("{k}={v}\n"));
        }
        for f in &self.files {
            let bytes = fs::read(f)?;
            let name = f.strip_prefix(dir).unwrap_or(f).display().to_string();
            out.push_str(&format!("file.{name}=sha256:{}\n", sha256_hex(&bytes)));
        }
        Ok(out)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.txt");
        let text = self.render(dir)?;
        fs::File::create(&path)?.write_all(text.as_bytes())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let mut r = Raster::new(3, 2);
        r.set_from_bottom(0, 0, 65535);
        r.set_from_bottom(2, 1, 258);
        let bytes = r.to_pgm();
        assert!(bytes.starts_with(b"P5\n3 2\n65535\n"));
        // top row holds the j = 1 pixel
        assert_eq!(&bytes[bytes.len() - 12 + 4..bytes.len() - 12 + 6], &[1, 2]);
        assert_eq!(Raster::from_pgm(&bytes).unwrap(), r);
    }

    #[test]
    fn config_parsing() {
        let c = parse_config("# preset\nlevel = 6\n\nalpha=0.5\n").unwrap();
        assert_eq!(c["level"], "6");
        assert_eq!(c["alpha"], "0.5");
        assert!(parse_config("oops").is_err());
        assert!(parse_config("=3").is_err());
    }

    #[test]
    fn table_rejects_ragged_rows() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "2".into()]).unwrap();
        assert!(t.push(vec!["1".into()]).is_err());
        assert_eq!(t.to_csv_string().unwrap(), "a,b\n1,2\n");
        assert_eq!(t.column("b").unwrap(), vec!["2"]);
    }

    #[test]
    fn manifest_lists_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("x.csv");
        fs::write(&f, b"abc").unwrap();
        let mut m = Manifest::new();
        m.set("command", "degree");
        m.set("command", "construct");
        m.add_file(&f);
        let text = m.render(dir.path()).unwrap();
        assert_eq!(
            text,
            "command=construct\nfile.x.csv=sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad\n"
        );
    }
}
