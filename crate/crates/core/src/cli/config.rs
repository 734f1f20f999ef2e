//! Flat `key = value` configuration with `[section]` headers.
//!
//! ```text
//! # comment
//! [problem] n = 3  R = 1.0  m = 12.566370614359172
//! [limit]
//! eps_seq = 1e-2, 1e-3, 1e-4
//! ```
//!
//! Several pairs may share a line; lists are comma separated. Every entry
//! remembers its line so that value errors can point at it.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<(String, String), Entry>,
    sections: Vec<String>,
}

fn err(line: Option<usize>, key: Option<String>, msg: impl Into<String>) -> Error {
    Error::Config { line, key, msg: msg.into() }
}

/// Joins `key = value` into `key=value` and `a, b` into `a,b`.
fn normalize(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '=' || c == ',' {
            while out.ends_with(char::is_whitespace) {
                out.pop();
            }
            out.push(c);
            while chars.peek().is_some_and(|c| c.is_whitespace()) {
                chars.next();
            }
        } else {
            out.push(c);
        }
    }
    out
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = Some(idx + 1);
            let mut line = raw.split(['#', ';']).next().unwrap_or("").trim().to_string();
            if line.starts_with('[') {
                let close = line.find(']').ok_or_else(|| err(line_no, None, "unterminated section header"))?;
                let name = line[1..close].trim().to_string();
                if name.is_empty() {
                    return Err(err(line_no, None, "empty section name"));
                }
                if cfg.sections.contains(&name) {
                    return Err(err(line_no, None, format!("section [{name}] appears twice")));
                }
                cfg.sections.push(name.clone());
                section = Some(name);
                line = line[close + 1..].trim().to_string();
            }
            for token in normalize(&line).split_whitespace() {
                let (key, value) = token
                    .split_once('=')
                    .ok_or_else(|| err(line_no, Some(token.to_string()), "expected `key = value`"))?;
                let sec = section
                    .clone()
                    .ok_or_else(|| err(line_no, Some(key.to_string()), "key outside any section"))?;
                let full = format!("{sec}.{key}");
                if key.is_empty() {
                    return Err(err(line_no, None, "empty key"));
                }
                let entry = Entry { value: value.to_string(), line: line_no };
                if cfg.entries.insert((sec, key.to_string()), entry).is_some() {
                    return Err(err(line_no, Some(full), "duplicate key"));
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(None, None, format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.iter().any(|s| s == section)
    }

    /// Sets or replaces a value (sweep overrides).
    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        if !self.has_section(section) {
            self.sections.push(section.to_string());
        }
        self.entries.insert((section.into(), key.into()), Entry { value: value.into(), line: None });
    }

    /// Rejects keys of `section` that are not in `known`.
    pub fn check_keys(&self, section: &str, known: &[&str]) -> Result<()> {
        for ((sec, key), e) in &self.entries {
            if sec == section && !known.contains(&key.as_str()) {
                return Err(err(e.line, Some(format!("{sec}.{key}")), "unknown key"));
            }
        }
        Ok(())
    }

    pub fn sections(&self) -> &[String] {
        &self.sections
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.entries.get(&(section.into(), key.into())).map(|e| e.value.as_str())
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(section.into(), key.into()))
    }

    pub fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.entry(section, key) {
            None => Ok(None),
            Some(e) => e.value.parse().map(Some).map_err(|_| {
                err(e.line, Some(format!("{section}.{key}")), format!("cannot parse `{}`", e.value))
            }),
        }
    }

    pub fn get_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T> {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<T> {
        self.get(section, key)?.ok_or_else(|| err(None, Some(format!("{section}.{key}")), "missing required key"))
    }

    /// Comma-separated list; an empty value is an empty list.
    pub fn list<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>> {
        let Some(e) = self.entry(section, key) else { return Ok(None) };
        e.value
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|_| err(e.line, Some(format!("{section}.{key}")), format!("cannot parse list item `{s}`")))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    /// A config error pointing at `section.key`.
    pub fn invalid(&self, section: &str, key: &str, msg: impl Into<String>) -> Error {
        err(self.entry(section, key).and_then(|e| e.line), Some(format!("{section}.{key}")), msg)
    }
}
