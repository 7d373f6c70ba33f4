//! Line-oriented `key = value` configuration files with `[section]` headers.
//!
//! Blank lines and lines starting with `#` are ignored. Keys that appear
//! before any header belong to the unnamed section `""`. Every key must be
//! consumed by a reader; [`KvFile::finish`] reports the ones that were not.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum KvError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("[{section}] {key}: cannot parse `{value}`")]
    Value {
        section: String,
        key: String,
        value: String,
    },
    #[error("[{section}] {key}: required key missing")]
    Missing { section: String, key: String },
    #[error("unknown keys: {0}")]
    Unknown(String),
}

#[derive(Debug, Default)]
pub struct KvFile {
    sections: BTreeMap<String, BTreeMap<String, String>>,
    used: RefCell<BTreeSet<(String, String)>>,
}

impl KvFile {
    pub fn read(path: &Path) -> Result<Self, KvError> {
        let text = std::fs::read_to_string(path).map_err(|source| KvError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| KvError::Syntax {
                    line: i + 1,
                    msg: "unterminated section header".into(),
                })?;
                current = name.trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| KvError::Syntax {
                line: i + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(KvError::Syntax {
                    line: i + 1,
                    msg: "empty key".into(),
                });
            }
            let entry = sections.entry(current.clone()).or_default();
            if entry.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(KvError::Syntax {
                    line: i + 1,
                    msg: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(KvFile {
            sections,
            used: RefCell::default(),
        })
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        let v = self.sections.get(section)?.get(key)?;
        self.used
            .borrow_mut()
            .insert((section.to_string(), key.to_string()));
        Some(v.as_str())
    }

    pub fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, KvError> {
        match self.raw(section, key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| KvError::Value {
                section: section.into(),
                key: key.into(),
                value: v.into(),
            }),
        }
    }

    pub fn get_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T, KvError> {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<T, KvError> {
        self.get(section, key)?.ok_or_else(|| KvError::Missing {
            section: section.into(),
            key: key.into(),
        })
    }

    /// Errors if any key was never read.
    pub fn finish(&self) -> Result<(), KvError> {
        let used = self.used.borrow();
        let unknown: Vec<String> = self
            .sections
            .iter()
            .flat_map(|(s, kv)| kv.keys().map(move |k| (s.clone(), k.clone())))
            .filter(|sk| !used.contains(sk))
            .map(|(s, k)| format!("[{s}] {k}"))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(KvError::Unknown(unknown.join(", ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_comments_and_lookup() {
        let kv = KvFile::parse("top = 1\n# comment\n[a]\nx = 2.5\n y=hello \n").unwrap();
        assert_eq!(kv.get::<i32>("", "top").unwrap(), Some(1));
        assert_eq!(kv.get::<f64>("a", "x").unwrap(), Some(2.5));
        assert_eq!(kv.raw("a", "y"), Some("hello"));
        assert!(kv.finish().is_ok());
    }

    #[test]
    fn reports_unread_and_bad_keys() {
        let kv = KvFile::parse("[a]\nx = nope\nz = 1\n").unwrap();
        assert!(matches!(kv.get::<f64>("a", "x"), Err(KvError::Value { .. })));
        let err = kv.finish().unwrap_err().to_string();
        assert!(err.contains("[a] z"), "{err}");
    }

    #[test]
    fn syntax_errors_name_the_line() {
        let err = KvFile::parse("[a]\nno equals sign\n").unwrap_err();
        assert!(matches!(err, KvError::Syntax { line: 2, .. }));
        assert!(KvFile::parse("[a]\nx=1\nx=2\n").is_err());
    }
}
