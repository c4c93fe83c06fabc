//! `key = value` run configuration.
//!
//! ```text
//! # comments start with '#'
//! window = 20
//! reversed = true
//! algorithms = point,path,dtw
//! out_dir = runs/today
//! ```
//!
//! Each key names a flag of the invoked subcommand (underscores for dashes).
//! Flags given on the command line win over the file. Boolean keys accept
//! `true`/`false`.

use std::ffi::OsString;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("config line {line}: key `{key}` may not be set from a config file")]
    Forbidden { line: usize, key: String },
    #[error("config line {line}: `{value}` is not a boolean")]
    NotBool { line: usize, value: String },
}

/// Parsed entries in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub entries: Vec<(String, String)>,
}

const BOOL_KEYS: [&str; 4] = ["reversed", "parallel", "paper_shape", "tilted"];

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1 });
            }
            if k == "config" {
                return Err(ConfigError::Forbidden {
                    line: i + 1,
                    key: k.to_string(),
                });
            }
            if BOOL_KEYS.contains(&k) && !matches!(v, "true" | "false") {
                return Err(ConfigError::NotBool {
                    line: i + 1,
                    value: v.to_string(),
                });
            }
            entries.push((k.to_string(), v.to_string()));
        }
        Ok(Self { entries })
    }

    /// The entries as command-line tokens (`window = 20` → `--window 20`).
    /// Unknown keys become unknown flags, which the argument parser rejects.
    pub fn to_args(&self) -> Vec<OsString> {
        let mut out = Vec::new();
        for (k, v) in &self.entries {
            let flag = format!("--{}", k.replace('_', "-"));
            if BOOL_KEYS.contains(&k.as_str()) {
                if v == "true" {
                    out.push(flag.into());
                }
            } else {
                out.push(flag.into());
                out.push(v.into());
            }
        }
        out
    }
}

/// Locates the `--config` value (anywhere in `argv`) and the subcommand
/// token, given the global options that take a value.
pub fn scan_args(argv: &[OsString], valued_globals: &[&str]) -> (Option<OsString>, Option<usize>) {
    let mut config = None;
    for (i, tok) in argv.iter().enumerate().skip(1) {
        let tok = tok.to_string_lossy();
        if let Some(v) = tok.strip_prefix("--config=") {
            config = Some(OsString::from(v));
        } else if tok == "--config" {
            config = argv.get(i + 1).cloned();
        }
    }
    let mut i = 1;
    while i < argv.len() {
        let tok = argv[i].to_string_lossy();
        if valued_globals.contains(&tok.as_ref()) {
            i += 1;
        } else if !tok.starts_with('-') {
            return (config, Some(i));
        }
        i += 1;
    }
    (config, None)
}
