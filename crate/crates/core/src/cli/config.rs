use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{MaError, Result};

/// Keys accepted in a config file.
const KNOWN_KEYS: &[&str] = &[
    "command",
    "dim",
    "periods",
    "resolution",
    "a",
    "b",
    "c",
    "f",
    "g",
    "tol",
    "max_newton",
    "armijo",
    "max_halvings",
    "width",
    "anchor",
    "continuation",
    "continuation_fallback",
    "domain",
    "h",
    "h_list",
    "sample",
    "provenance",
    "k",
    "inner",
    "lambdas",
    "target_h",
    "radii",
    "boxes",
    "doubling_levels",
    "criteria",
    "seed",
    "out",
    "threads",
];

/// Keys that never change results and stay out of the digest.
const UNHASHED: &[&str] = &["out", "threads"];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    /// Line in the config file; 0 for command-line overrides.
    line: usize,
}

/// Flat `key = value` run configuration with `#` comments.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    entries: BTreeMap<String, Entry>,
    base_dir: PathBuf,
}

fn perr<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(MaError::Parse { line, message: message.into() })
}

impl RunConfig {
    /// Parses config text; relative paths inside it resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return perr(line, format!("expected `key = value`, found `{content}`"));
            };
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return perr(line, format!("unknown key `{key}`"));
            }
            let entry = Entry { value: value.trim().to_string(), line };
            if entries.insert(key.to_string(), entry).is_some() {
                return perr(line, format!("duplicate key `{key}`"));
            }
        }
        Ok(Self { entries, base_dir: base_dir.to_path_buf() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn empty() -> Self {
        Self { entries: BTreeMap::new(), base_dir: PathBuf::from(".") }
    }

    /// Sets a key, replacing any value from the file.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return perr(0, format!("unknown key `{key}`"));
        }
        self.entries.insert(key.to_string(), Entry { value: value.into(), line: 0 });
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }

    /// Parse error attributed to the line defining `key`.
    pub fn error<T>(&self, key: &str, message: impl Into<String>) -> Result<T> {
        perr(self.line_of(key), format!("`{key}`: {}", message.into()))
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().or_else(|_| self.error(key, format!("cannot parse `{v}`"))),
        }
    }

    pub fn list<T: FromStr + Clone>(&self, key: &str, default: &[T]) -> Result<Vec<T>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some("") => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<T>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .or_else(|_| self.error(key, format!("cannot parse list `{v}`"))),
        }
    }

    pub fn flag(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => self.error(key, format!("expected true or false, found `{v}`")),
        }
    }

    /// Resolves a path value and checks that it exists.
    pub fn path(&self, key: &str) -> Result<Option<PathBuf>> {
        let Some(raw) = self.raw(key) else { return Ok(None) };
        let p = Path::new(raw);
        let full = if p.is_absolute() { p.to_path_buf() } else { self.base_dir.join(p) };
        if !full.exists() {
            return self.error(key, format!("file `{raw}` does not exist"));
        }
        Ok(Some(full))
    }

    pub fn resolve(&self, raw: &str) -> PathBuf {
        let p = Path::new(raw);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Canonical `key = value` listing of every result-affecting entry.
    pub fn canonical(&self) -> String {
        self.entries
            .iter()
            .filter(|(k, _)| !UNHASHED.contains(&k.as_str()))
            .map(|(k, e)| format!("{k} = {}\n", e.value))
            .collect()
    }

    /// SHA-256 of [`RunConfig::canonical`].
    pub fn digest(&self) -> String {
        sha256_hex(self.canonical().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_reports_lines() {
        let cfg = RunConfig::parse("# header\nresolution = 64 # nodes\n\nb = 0.5, -1\n", Path::new(".")).unwrap();
        assert_eq!(cfg.get::<usize>("resolution", 0).unwrap(), 64);
        assert_eq!(cfg.list::<f64>("b", &[]).unwrap(), vec![0.5, -1.0]);
        assert_eq!(cfg.line_of("b"), 4);
        match RunConfig::parse("dim = 2\nwidht = 3\n", Path::new(".")) {
            Err(MaError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match RunConfig::parse("dim 2\n", Path::new(".")) {
            Err(MaError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        let cfg = RunConfig::parse("\n\ntol = abc\n", Path::new(".")).unwrap();
        match cfg.get::<f64>("tol", 1.0) {
            Err(MaError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn digest_ignores_output_location() {
        let mut a = RunConfig::parse("dim = 2\nout = x\n", Path::new(".")).unwrap();
        let b = RunConfig::parse("dim = 2\n", Path::new(".")).unwrap();
        assert_eq!(a.digest(), b.digest());
        a.set("dim", "1").unwrap();
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
