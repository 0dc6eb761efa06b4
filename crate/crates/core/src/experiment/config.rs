//! `key = value` files split into `[section]`s. Blank lines and `#`
//! comments are ignored; every key must belong to a known section.

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "train",
        &[
            "epochs",
            "learning_rate",
            "beta1",
            "beta2",
            "epsilon",
            "lambda",
            "embedding_dim",
            "hidden_dim",
        ],
    ),
    ("synth", &["n", "g", "density_low", "density_high"]),
    (
        "sweep",
        &[
            "seed",
            "seeds",
            "overlaps",
            "featureless",
            "variants",
            "tasks",
            "node_scoring",
        ],
    ),
    ("real", &["seed", "seeds", "variants", "features", "node_scoring"]),
    ("verify", &["seed", "instances"]),
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, (String, usize)>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        let mut current: Option<String> = None;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError { line, message };
            if let Some(name) = body.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(format!("malformed section header '{body}'")))?
                    .trim();
                if !SECTIONS.iter().any(|(s, _)| *s == name) {
                    return Err(err(format!("unknown section '{name}'")));
                }
                cfg.sections.entry(name.to_string()).or_default();
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| err(format!("expected 'key = value', got '{body}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let section = current
                .as_deref()
                .ok_or_else(|| err(format!("key '{key}' appears before any [section]")))?;
            let known = SECTIONS
                .iter()
                .find(|(s, _)| *s == section)
                .map(|(_, keys)| keys.contains(&key))
                .unwrap_or(false);
            if !known {
                return Err(err(format!("unknown key '{key}' in [{section}]")));
            }
            if value.is_empty() {
                return Err(err(format!("key '{key}' has no value")));
            }
            let entries = cfg.sections.get_mut(section).expect("section registered");
            if entries.insert(key.to_string(), (value.to_string(), line)).is_some() {
                return Err(err(format!("duplicate key '{key}' in [{section}]")));
            }
        }
        Ok(cfg)
    }

    fn raw(&self, section: &str, key: &str) -> Option<&(String, usize)> {
        self.sections.get(section)?.get(key)
    }

    /// Parsed value of `key` in `section`, if present.
    pub fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|e| ConfigError {
                line: *line,
                message: format!("invalid value '{v}' for {key}: {e}"),
            }),
        }
    }

    /// Comma-separated list value.
    pub fn get_list<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let Some((v, line)) = self.raw(section, key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|item| {
                item.trim().parse().map_err(|e| ConfigError {
                    line: *line,
                    message: format!("invalid item '{}' in {key}: {e}", item.trim()),
                })
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }

    /// Line of `key` for error reporting; 0 when absent.
    pub fn line_of(&self, section: &str, key: &str) -> usize {
        self.raw(section, key).map_or(0, |(_, l)| *l)
    }
}

/// `on`/`off` (also `true`/`false`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Switch(pub bool);

impl FromStr for Switch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "on" | "true" => Ok(Switch(true)),
            "off" | "false" => Ok(Switch(false)),
            other => Err(format!("expected on or off, got '{other}'")),
        }
    }
}
