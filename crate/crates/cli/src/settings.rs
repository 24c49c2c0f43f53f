//! Flat `key = value` manifests merged with command-line flags.
//!
//! Every long flag of a subcommand is also a manifest key. A flag given on
//! the command line wins over the manifest, which wins over the built-in
//! default.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::parser::ValueSource;
use clap::{ArgMatches, Command};

pub const CONFIG_FLAG: &str = "config";

pub fn parse_manifest(text: &str, origin: &Path) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected `key = value`", origin.display(), n + 1))?;
        let key = k.trim().replace('_', "-");
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            bail!("{}:{}: duplicate key `{key}`", origin.display(), n + 1);
        }
    }
    Ok(map)
}

/// Effective settings of one subcommand invocation.
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn resolve(command: &Command, matches: &ArgMatches) -> Result<Self> {
        let known: Vec<String> = command
            .get_arguments()
            .map(|a| a.get_id().as_str().to_string())
            .filter(|id| id != CONFIG_FLAG && id != "help")
            .collect();
        let manifest = match matches.get_one::<String>(CONFIG_FLAG) {
            Some(path) => {
                let path = PathBuf::from(path);
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading manifest {}", path.display()))?;
                parse_manifest(&text, &path)?
            }
            None => BTreeMap::new(),
        };
        if let Some(bad) = manifest.keys().find(|k| !known.contains(k)) {
            bail!(
                "unknown manifest key `{bad}` (accepted: {})",
                known.join(", ")
            );
        }
        let mut values = BTreeMap::new();
        for id in &known {
            let from_flag = matches.value_source(id) == Some(ValueSource::CommandLine);
            let value = match (from_flag, manifest.get(id)) {
                (false, Some(v)) => Some(v.clone()),
                _ => matches.get_raw(id).map(|vals| {
                    vals.map(|v| v.to_string_lossy().into_owned())
                        .collect::<Vec<_>>()
                        .join(",")
                }),
            };
            if let Some(v) = value {
                values.insert(id.clone(), v);
            }
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .filter(|v| !v.is_empty())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self
            .raw(key)
            .ok_or_else(|| anyhow!("missing required setting `{key}`"))?;
        raw.parse()
            .map_err(|e| anyhow!("invalid value `{raw}` for `{key}`: {e}"))
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key).map(|_| self.get(key)).transpose()
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self
            .raw(key)
            .ok_or_else(|| anyhow!("missing required setting `{key}`"))?;
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| anyhow!("invalid number `{s}` in `{key}`: {e}"))
            })
            .collect()
    }

    pub fn path(&self, key: &str) -> Result<PathBuf> {
        self.get::<String>(key).map(PathBuf::from)
    }

    pub fn to_manifest(&self, command: &str) -> String {
        let mut out = format!("# effective settings of `noisy-rnn {command}`\n");
        for (k, v) in &self.values {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lines() {
        let m =
            parse_manifest("# c\n\nsigma_train = 0.5\narch=lstm-rows\n", Path::new("m")).unwrap();
        assert_eq!(m["sigma-train"], "0.5");
        assert_eq!(m["arch"], "lstm-rows");
        assert!(parse_manifest("nokey\n", Path::new("m")).is_err());
        assert!(parse_manifest("a=1\na=2\n", Path::new("m")).is_err());
    }
}
