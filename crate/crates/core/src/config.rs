//! Flat `key = value` configuration files and config hashing.
//!
//! A config file is a list of command-line flags written one per line:
//! `samples = 2` becomes `--samples 2`, `white-bg = true` becomes `--white-bg`
//! and `false` drops the flag. Flags given on the command line win because
//! the file's flags are spliced in before them.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn parse_flat_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let k = k.trim().trim_start_matches("--").replace('_', "-");
        if k.is_empty() || k == "config" {
            return Err(Error::Config(format!("line {}: invalid key {k:?}", i + 1)));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

pub fn config_flags(pairs: &[(String, String)]) -> Vec<OsString> {
    let mut out = Vec::new();
    for (k, v) in pairs {
        match v.as_str() {
            "true" => out.push(format!("--{k}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{k}").into());
                out.push(v.into());
            }
        }
    }
    out
}

/// Removes `--config F` from `argv` and splices the file's flags in right
/// after the first occurrence of one of `subcommands`.
pub fn expand_config_args(argv: Vec<OsString>, subcommands: &[&str]) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut config = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            let f = it
                .next()
                .ok_or_else(|| Error::Config("--config needs a file argument".into()))?;
            config = Some(f);
        } else if let Some(f) = s.strip_prefix("--config=") {
            config = Some(OsString::from(f));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let path = Path::new(&path);
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let flags = config_flags(&parse_flat_config(&text)?);
    let at = rest
        .iter()
        .position(|a| subcommands.iter().any(|s| a == s))
        .map(|i| i + 1)
        .unwrap_or(rest.len());
    rest.splice(at..at, flags);
    Ok(rest)
}

/// First 8 bytes of SHA-256 over the JSON form of `value`, as hex.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config serialize");
    hex::encode(&Sha256::digest(&json)[..8])
}
