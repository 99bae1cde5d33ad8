//! Flat `key = value` configuration shared by config files and flags.
//!
//! Every subcommand resolves its parameters in the order defaults, then the
//! `--config` file, then command-line flags. The resolved set is written back
//! as `config.txt` in the output directory and can be fed to `--config`
//! unchanged.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::CliError;

/// Parameters that can be set from strings and listed back.
pub trait Params {
    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError>;
    fn pairs(&self) -> Vec<(&'static str, String)>;
}

/// Parses `key = value` lines. `#` starts a comment; blank lines are ignored.
pub fn parse_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_text(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
        out.push((k.trim().replace('-', "_"), v.trim().to_owned()));
    }
    Ok(out)
}

pub fn render(command: &str, pairs: &[(&'static str, String)]) -> String {
    let mut s = format!("# ahtsgd {command}\n");
    for (k, v) in pairs {
        s.push_str(&format!("{k} = {v}\n"));
    }
    s
}

/// Writes `config.txt` into `dir`, creating the directory.
pub fn echo(dir: &Path, command: &str, params: &dyn Params) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join("config.txt");
    std::fs::write(&path, render(command, &params.pairs())).map_err(|e| CliError::io(&path, e))
}

pub fn apply_all<P: Params + ?Sized>(p: &mut P, pairs: &[(String, String)]) -> Result<(), CliError> {
    for (k, v) in pairs {
        p.set(k, v)?;
    }
    Ok(())
}

pub fn unknown(key: &str) -> CliError {
    CliError::Config(format!("unknown key `{key}`"))
}

fn bad(key: &str, value: &str, what: &str) -> CliError {
    CliError::Config(format!("`{key}`: cannot parse {value:?} as {what}"))
}

pub fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| bad(key, value, std::any::type_name::<T>()))
}

/// Non-negative integer, also accepting exact float notation such as `1e6`.
pub fn parse_count(key: &str, value: &str) -> Result<u64, CliError> {
    if let Ok(n) = value.parse::<u64>() {
        return Ok(n);
    }
    match value.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= 9.007_199_254_740_992e15 => Ok(x as u64),
        _ => Err(bad(key, value, "a non-negative integer")),
    }
}

pub fn parse_usize(key: &str, value: &str) -> Result<usize, CliError> {
    parse_count(key, value).map(|n| n as usize)
}

pub fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, value, "a boolean")),
    }
}

/// Comma-separated list.
pub fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

/// Seed list: `3`, `0,2,5`, `0-14`, or a mix such as `0-4,10`.
pub fn parse_seeds(key: &str, value: &str) -> Result<Vec<u64>, CliError> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = part.split_once('-') {
            let (a, b) = (parse_count(key, a.trim())?, parse_count(key, b.trim())?);
            if b < a {
                return Err(bad(key, part, "an increasing range"));
            }
            out.extend(a..=b);
        } else {
            out.push(parse_count(key, part)?);
        }
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("`{key}`: empty seed list")));
    }
    Ok(out)
}

pub fn render_seeds(seeds: &[u64]) -> String {
    if seeds.len() > 1 && seeds.windows(2).all(|w| w[1] == w[0] + 1) {
        format!("{}-{}", seeds[0], seeds[seeds.len() - 1])
    } else {
        join(seeds)
    }
}

pub fn join<T: Display>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

pub fn opt<T: Display>(x: &Option<T>) -> String {
    x.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn path(value: &str) -> PathBuf {
    PathBuf::from(value)
}
