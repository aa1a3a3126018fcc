use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cfrank::config::RunConfig;

use crate::args::{all_keys, GLOBAL_KEYS};
use crate::error::{usage, CliError, Result};

/// The environment variable carrying `key`: `CFRANK_` + upper snake case.
pub fn env_var(key: &str) -> String {
    format!("CFRANK_{}", key.to_uppercase().replace('-', "_"))
}

/// Merges, lowest precedence first: config file, environment, flags. Only
/// keys relevant to the command are kept; a config key no command knows is a
/// usage error.
pub fn resolve(
    config_path: Option<&Path>,
    command_keys: &[&str],
    flags: &[RunConfig],
    env: impl Fn(&str) -> Option<String>,
) -> Result<RunConfig> {
    let wanted = |k: &str| GLOBAL_KEYS.contains(&k) || command_keys.contains(&k);
    let mut out = RunConfig::new();
    if let Some(path) = config_path {
        let file = RunConfig::read(open(path)?)?;
        for key in file.keys() {
            if !all_keys().any(|k| k == key) {
                return Err(usage(format!("{}: unknown key '{key}'", path.display())));
            }
            if wanted(key) {
                out.set(key, file.get(key).unwrap_or_default());
            }
        }
    }
    for key in GLOBAL_KEYS.iter().chain(command_keys) {
        if let Some(v) = env(&env_var(key)) {
            out.set(key, v);
        }
    }
    for layer in flags {
        for key in layer.keys() {
            out.set(key, layer.get(key).unwrap_or_default());
        }
    }
    Ok(out)
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| CliError::File {
        path: path.to_path_buf(),
        source,
    })
}

pub fn create(path: &Path) -> Result<std::io::BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    File::create(path).map(std::io::BufWriter::new).map_err(|source| CliError::File {
        path: path.to_path_buf(),
        source,
    })
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::File {
        path: dir.to_path_buf(),
        source,
    })
}

/// Typed access to a resolved configuration.
pub struct Settings(pub RunConfig);

impl Settings {
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        Ok(self.0.parse(key)?)
    }

    pub fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn required<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| usage(format!("--{key} is required")))
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.0.get(key).map(PathBuf::from)
    }

    pub fn required_path(&self, key: &str) -> Result<PathBuf> {
        self.path(key).ok_or_else(|| usage(format!("--{key} is required")))
    }

    /// Comma-separated list under `key`, or `default`.
    pub fn list<T: FromStr>(&self, key: &str, default: &str) -> Result<Vec<T>> {
        let raw = self.0.get(key).unwrap_or(default);
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| usage(format!("bad entry '{s}' in --{key}"))))
            .collect()
    }

    pub fn seed(&self) -> Result<u64> {
        self.or("seed", 0)
    }
}
