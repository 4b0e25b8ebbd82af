//! Settings resolution: command-line flag, then `--config` file, then default.
//!
//! Config files are plain `key=value` lines; `#` starts a comment. The
//! manifest written next to every output uses the same format, so a run can
//! be repeated with `--config <dir>/manifest.txt`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use cfo_core::io::key_value_text;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file or parameter values (exit 2).
    Config(String),
    /// Factorization or time-stepping failure (exit 3).
    Numeric(String),
    /// Reading inputs or writing outputs failed (exit 1).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<cfo_core::CfoError> for CliError {
    fn from(e: cfo_core::CfoError) -> Self {
        use cfo_core::CfoError::*;
        match e {
            InvalidMesh(_) | UnsupportedDegree(_) | InvalidProblem(_) | InvalidConfig(_) | Parse(_) => {
                CliError::Config(e.to_string())
            }
            Factorization(_) | InaccurateSolve { .. } | CflViolation { .. } | SaturationOutOfRange { .. } => {
                CliError::Numeric(e.to_string())
            }
            Io(m) => CliError::Io(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// A value that can live in a config file.
pub trait Setting: Sized {
    fn parse(s: &str) -> Result<Self, String>;
    fn show(&self) -> String;
}

macro_rules! from_str_setting {
    ($($t:ty),*) => {$(
        impl Setting for $t {
            fn parse(s: &str) -> Result<Self, String> {
                s.parse().map_err(|e| format!("{e}"))
            }
            fn show(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

from_str_setting!(usize, u64, f64, bool, String);

impl Setting for PathBuf {
    fn parse(s: &str) -> Result<Self, String> {
        Ok(PathBuf::from(s))
    }
    fn show(&self) -> String {
        self.display().to_string()
    }
}

impl<T: Setting> Setting for Vec<T> {
    fn parse(s: &str) -> Result<Self, String> {
        if s.trim().is_empty() {
            return Ok(Vec::new());
        }
        s.split(',').map(|p| T::parse(p.trim())).collect()
    }
    fn show(&self) -> String {
        self.iter().map(T::show).collect::<Vec<_>>().join(",")
    }
}

impl<T: Setting> Setting for Option<T> {
    fn parse(s: &str) -> Result<Self, String> {
        if s == "none" {
            Ok(None)
        } else {
            T::parse(s).map(Some)
        }
    }
    fn show(&self) -> String {
        self.as_ref().map_or_else(|| "none".into(), T::show)
    }
}

pub fn parse_key_values(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key=value, got {raw:?}", i + 1)))?;
        if out.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key {:?}", i + 1, k.trim())));
        }
    }
    Ok(out)
}

/// Resolves settings for one command and records what was used.
pub struct Resolver {
    command: &'static str,
    file: BTreeMap<String, String>,
    resolved: Vec<(String, String)>,
    notes: Vec<String>,
}

impl Resolver {
    pub fn new(command: &'static str, config: Option<&Path>, allowed: &[&str]) -> CliResult<Self> {
        let file = match config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                parse_key_values(&text)?
            }
            None => BTreeMap::new(),
        };
        for key in file.keys() {
            match key.as_str() {
                "command" => {
                    if file[key] != command {
                        return Err(CliError::Config(format!(
                            "config file is for command {:?}, not {command:?}",
                            file[key]
                        )));
                    }
                }
                "version" => {}
                k if allowed.contains(&k) => {}
                k => return Err(CliError::Config(format!("unknown config key {k:?} for {command}"))),
            }
        }
        Ok(Resolver { command, file, resolved: Vec::new(), notes: Vec::new() })
    }

    pub fn get<T: Setting>(&mut self, key: &str, flag: Option<T>, default: T) -> CliResult<T> {
        let value = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(s) => T::parse(s).map_err(|e| CliError::Config(format!("config key {key}: {e}")))?,
                None => default,
            },
        };
        self.resolved.push((key.to_string(), value.show()));
        Ok(value)
    }

    /// Comment line placed at the top of the manifest.
    pub fn note(&mut self, text: &str) {
        self.notes.push(text.to_string());
    }

    /// Manifest text: notes, command, version, then every resolved setting.
    pub fn manifest(&self) -> String {
        let notes: String = self.notes.iter().map(|n| format!("# {n}\n")).collect();
        let mut entries = vec![
            ("command".to_string(), self.command.to_string()),
            ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ];
        entries.extend(self.resolved.iter().cloned());
        notes + &key_value_text(&entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        use cfo_core::CfoError;
        assert_eq!(CliError::from(CfoError::InvalidConfig("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(CfoError::UnsupportedDegree(5)).exit_code(), 2);
        assert_eq!(CliError::from(CfoError::InaccurateSolve { residual: 1.0, tolerance: 0.1 }).exit_code(), 3);
        assert_eq!(CliError::from(CfoError::Factorization("singular".into())).exit_code(), 3);
        assert_eq!(CliError::from(CfoError::CflViolation { dt: 1.0, suggested: 0.5 }).exit_code(), 3);
    }

    #[test]
    fn key_values() {
        let m = parse_key_values("# run\nk = 2\nsizes=8,16 # trailing\n\n").unwrap();
        assert_eq!(m["k"], "2");
        assert_eq!(m["sizes"], "8,16");
        assert!(parse_key_values("k").is_err());
        assert!(parse_key_values("k=1\nk=2").is_err());
    }

    #[test]
    fn lists_and_options() {
        assert_eq!(Vec::<usize>::parse("8, 16,32").unwrap(), vec![8, 16, 32]);
        assert!(Vec::<f64>::parse("").unwrap().is_empty());
        assert_eq!(Option::<f64>::parse("none").unwrap(), None);
        assert_eq!(Option::<f64>::parse("0.5").unwrap().show(), "0.5");
        assert!(usize::parse("x").is_err());
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let dir = std::env::temp_dir().join(format!("cfo-cli-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("c.txt");
        std::fs::write(&p, "k=2\nn=16\n").unwrap();
        let mut r = Resolver::new("solve", Some(&p), &["k", "n", "beta"]).unwrap();
        assert_eq!(r.get("k", Some(3usize), 1).unwrap(), 3);
        assert_eq!(r.get("n", None, 8usize).unwrap(), 16);
        assert_eq!(r.get("beta", None, 1.0f64).unwrap(), 1.0);
        assert!(r.manifest().contains("command=solve\n"));
        std::fs::write(&p, "bogus=1\n").unwrap();
        assert!(matches!(Resolver::new("solve", Some(&p), &["k"]), Err(CliError::Config(_))));
        std::fs::write(&p, "command=converge\n").unwrap();
        assert!(Resolver::new("solve", Some(&p), &["k"]).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
