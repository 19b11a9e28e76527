//! Sectioned key-value config: `[section]` headers over `key = value` lines,
//! `#` or `;` comments. Kept deliberately small; every parse failure names the
//! offending line.

use std::collections::BTreeMap;

#[derive(Debug, Clone, Default)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| format!("line {}: unterminated section header {raw:?}", idx + 1))?
                    .trim()
                    .to_string();
                if name.is_empty() {
                    return Err(format!("line {}: empty section name", idx + 1));
                }
                sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`, got {raw:?}", idx + 1))?;
            let section = current
                .clone()
                .ok_or_else(|| format!("line {}: key before any [section] header", idx + 1))?;
            sections
                .entry(section)
                .or_default()
                .insert(key.trim().to_string(), value.trim().to_string());
        }
        if sections.is_empty() {
            return Err("config is empty: expected at least a [model] section".into());
        }
        Ok(Self { sections })
    }

    pub fn section(&self, name: &str) -> Option<&BTreeMap<String, String>> {
        self.sections.get(name)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str, String> {
        self.get(section, key)
            .ok_or_else(|| format!("missing key {key:?} in section [{section}]"))
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>, String> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| format!("[{section}] {key} = {v:?} is not a number")),
        }
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>, String> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| format!("[{section}] {key} = {v:?} is not a nonnegative integer")),
        }
    }

    pub fn get_u64(&self, section: &str, key: &str) -> Result<Option<u64>, String> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|_| format!("[{section}] {key} = {v:?} is not a nonnegative integer")),
        }
    }

    pub fn get_bool(&self, section: &str, key: &str) -> Result<Option<bool>, String> {
        match self.get(section, key) {
            None => Ok(None),
            Some("true") | Some("1") | Some("yes") => Ok(Some(true)),
            Some("false") | Some("0") | Some("no") => Ok(Some(false)),
            Some(v) => Err(format!("[{section}] {key} = {v:?} is not a boolean")),
        }
    }
}
