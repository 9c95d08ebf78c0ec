//! Sectioned `key = value` files. `#` starts a comment; blank lines are ignored.

use std::fmt;

use anyhow::{bail, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Loc {
    Line(usize),
    Override,
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Loc::Line(n) => write!(f, "line {n}"),
            Loc::Override => f.write_str("command-line override"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Entry {
    pub section: String,
    pub key: String,
    pub value: String,
    pub loc: Loc,
}

impl Entry {
    pub fn name(&self) -> String {
        format!("{}.{}", self.section, self.key)
    }

    pub fn fail<T>(&self, message: impl fmt::Display) -> Result<T> {
        bail!("{}: {}: {message}", self.loc, self.name())
    }

    pub fn parse<T: std::str::FromStr>(&self, what: &str) -> Result<T> {
        match self.value.parse() {
            Ok(v) => Ok(v),
            Err(_) => self.fail(format!("expected {what}, found {:?}", self.value)),
        }
    }

    pub fn f64(&self) -> Result<f64> {
        let x: f64 = self.parse("a number")?;
        if !x.is_finite() {
            return self.fail(format!("must be finite, got {}", self.value));
        }
        Ok(x)
    }

    pub fn positive(&self) -> Result<f64> {
        let x = self.f64()?;
        if x <= 0.0 {
            return self.fail(format!("must be positive, got {}", self.value));
        }
        Ok(x)
    }

    pub fn bool(&self) -> Result<bool> {
        self.parse("true or false")
    }
}

/// Which keys a section accepts.
pub struct Schema {
    pub sections: &'static [(&'static str, &'static [&'static str])],
    /// Sections whose keys may also start with this prefix (e.g. `range.`).
    pub open_prefix: Option<(&'static str, &'static str)>,
}

impl Schema {
    fn accepts(&self, section: &str, key: &str) -> Option<bool> {
        let (_, keys) = self.sections.iter().find(|(s, _)| *s == section)?;
        let open = self
            .open_prefix
            .is_some_and(|(s, p)| s == section && key.starts_with(p) && key.len() > p.len());
        Some(keys.contains(&key) || open)
    }
}

#[derive(Debug, Default)]
pub struct Document {
    entries: Vec<Entry>,
    headers: Vec<(String, usize)>,
}

impl Document {
    pub fn parse(text: &str, schema: &Schema) -> Result<Self> {
        let mut doc = Document::default();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']').map(str::trim) else {
                    bail!("line {n}: malformed section header {line:?}");
                };
                if schema.accepts(name, "").is_none() {
                    bail!("line {n}: unknown section [{name}]");
                }
                if doc.headers.iter().any(|(s, _)| s == name) {
                    bail!("line {n}: section [{name}] appears twice");
                }
                doc.headers.push((name.to_string(), n));
                section = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {n}: expected `key = value`, found {line:?}");
            };
            let Some(sec) = &section else {
                bail!("line {n}: key {:?} appears before any section", key.trim());
            };
            doc.insert(sec, key.trim(), value.trim(), Loc::Line(n), schema)?;
        }
        Ok(doc)
    }

    fn insert(&mut self, section: &str, key: &str, value: &str, loc: Loc, schema: &Schema) -> Result<()> {
        if schema.accepts(section, key) != Some(true) {
            bail!("{loc}: unknown key {section}.{key}");
        }
        if value.is_empty() {
            bail!("{loc}: {section}.{key}: empty value");
        }
        if let Some(e) = self.entries.iter_mut().find(|e| e.section == section && e.key == key) {
            if loc != Loc::Override {
                bail!("{loc}: {section}.{key} is already set at {}", e.loc);
            }
            e.value = value.to_string();
            e.loc = loc;
            return Ok(());
        }
        self.entries.push(Entry {
            section: section.to_string(),
            key: key.to_string(),
            value: value.to_string(),
            loc,
        });
        Ok(())
    }

    /// Applies `section.key=value`, replacing any value from the file.
    pub fn apply_override(&mut self, spec: &str, schema: &Schema) -> Result<()> {
        let Some((name, value)) = spec.split_once('=') else {
            bail!("override {spec:?} is not of the form section.key=value");
        };
        let Some((section, key)) = name.trim().split_once('.') else {
            bail!("override {spec:?} does not name a section");
        };
        self.insert(section, key, value.trim(), Loc::Override, schema)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.section == section && e.key == key)
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&Entry> {
        match self.get(section, key) {
            Some(e) => Ok(e),
            None => match self.headers.iter().find(|(s, _)| s == section) {
                Some((_, n)) => bail!("line {n}: missing required key {section}.{key}"),
                None => bail!("missing required key {section}.{key} (no [{section}] section)"),
            },
        }
    }

    pub fn entries_in<'a>(&'a self, section: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.section == section)
    }
}
