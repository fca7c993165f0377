//! `key = value` run files: reading, merging under the command line, echoing.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgMatches, Command};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// Pairs of a `key = value` file in order. `#` starts a comment; keys may use
/// `_` or `-`.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: idx + 1,
            message: format!("expected key = value, got '{line}'"),
        })?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key.chars().any(char::is_whitespace) {
            return Err(ConfigError::Syntax {
                line: idx + 1,
                message: format!("invalid key '{}'", key.trim()),
            });
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

pub fn read(path: &Path) -> Result<Vec<(String, String)>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text)
}

/// Command line with the file entries inserted after the subcommand name,
/// skipping keys already given as flags.
pub fn merge(
    argv: &[OsString],
    subcommand: &str,
    command: &Command,
    matches: &ArgMatches,
    entries: &[(String, String)],
) -> Result<Vec<OsString>, ConfigError> {
    let mut extra: Vec<OsString> = Vec::new();
    for (line, (key, value)) in entries.iter().enumerate() {
        if key == "config" {
            continue;
        }
        let arg = command
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| ConfigError::Syntax {
                line: line + 1,
                message: format!("unknown key '{key}' for {subcommand}"),
            })?;
        let id = arg.get_id().as_str();
        if matches.value_source(id) == Some(ValueSource::CommandLine) {
            continue;
        }
        let flag = OsString::from(format!("--{key}"));
        if arg.get_action().takes_values() {
            extra.push(flag);
            extra.push(value.into());
        } else {
            match value.as_str() {
                "true" => extra.push(flag),
                "false" => {}
                other => {
                    return Err(ConfigError::Syntax {
                        line: line + 1,
                        message: format!("'{key}' takes true or false, got '{other}'"),
                    })
                }
            }
        }
    }
    let at = argv
        .iter()
        .position(|a| a == subcommand)
        .map_or(argv.len(), |p| p + 1);
    let mut out = argv[..at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[at..]);
    Ok(out)
}

/// Effective settings as a `key = value` file that reproduces the run.
pub fn echo(command: &Command, matches: &ArgMatches) -> String {
    let mut text = String::new();
    let mut positional = vec![command.get_name().to_string()];
    let mut lines = Vec::new();
    for arg in command.get_arguments() {
        let id = arg.get_id().as_str();
        if matches!(id, "help" | "version" | "config" | "verbose") {
            continue;
        }
        let Some(raw) = matches.get_raw(id) else {
            continue;
        };
        let values: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
        match arg.get_long() {
            None => positional.extend(values),
            Some(long) => lines.push(format!("{long} = {}", values.join(","))),
        }
    }
    let _ = writeln!(text, "# gfdm {}", positional.join(" "));
    for l in lines {
        let _ = writeln!(text, "{l}");
    }
    text
}
