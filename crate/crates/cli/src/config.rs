//! Optional TOML config file; keys are the long flag names.

use std::path::{Path, PathBuf};

use crate::error::{read_file, CliError, Result};

pub trait FromToml: Sized {
    fn from_toml(v: &toml::Value) -> Option<Self>;
}

impl FromToml for f64 {
    fn from_toml(v: &toml::Value) -> Option<Self> {
        v.as_float().or_else(|| v.as_integer().map(|i| i as f64))
    }
}

impl FromToml for u64 {
    fn from_toml(v: &toml::Value) -> Option<Self> {
        v.as_integer().and_then(|i| u64::try_from(i).ok())
    }
}

impl FromToml for usize {
    fn from_toml(v: &toml::Value) -> Option<Self> {
        v.as_integer().and_then(|i| usize::try_from(i).ok())
    }
}

impl FromToml for bool {
    fn from_toml(v: &toml::Value) -> Option<Self> {
        v.as_bool()
    }
}

impl FromToml for String {
    fn from_toml(v: &toml::Value) -> Option<Self> {
        v.as_str().map(str::to_owned)
    }
}

impl FromToml for PathBuf {
    fn from_toml(v: &toml::Value) -> Option<Self> {
        v.as_str().map(PathBuf::from)
    }
}

#[derive(Debug, Default)]
pub struct ConfigFile {
    table: toml::Table,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let bytes = read_file(path).map_err(|e| CliError::usage(format!("config file {e}")))?;
        let text =
            String::from_utf8(bytes).map_err(|_| CliError::usage("config file is not UTF-8"))?;
        let table = text
            .parse::<toml::Table>()
            .map_err(|e| CliError::usage(format!("config file {}: {e}", path.display())))?;
        Ok(Self { table })
    }

    /// Reject keys the command does not understand.
    pub fn check_keys(&self, known: &[&str]) -> Result<()> {
        for key in self.table.keys() {
            if !known.contains(&key.as_str()) {
                return Err(CliError::usage(format!("unknown config key `{key}`")));
            }
        }
        Ok(())
    }

    /// The flag value if given, else the config value.
    pub fn pick<T: FromToml>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.table.get(key) {
            None => Ok(None),
            Some(v) => T::from_toml(v)
                .map(Some)
                .ok_or_else(|| CliError::usage(format!("config key `{key}` has the wrong type"))),
        }
    }

    pub fn pick_or<T: FromToml>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    /// A boolean switch: set if the flag is present or the config says so.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }

    pub fn require<T: FromToml>(&self, flag: Option<T>, key: &str) -> Result<T> {
        self.pick(flag, key)?
            .ok_or_else(|| CliError::usage(format!("--{key} is required (flag or config key)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> ConfigFile {
        ConfigFile {
            table: text.parse().unwrap(),
        }
    }

    #[test]
    fn flags_win_over_file() {
        let c = config("beta = 0.5\nkappa = 16\nfrozen-noise = true");
        assert_eq!(c.pick(Some(0.1), "beta").unwrap(), Some(0.1));
        assert_eq!(c.pick::<f64>(None, "beta").unwrap(), Some(0.5));
        assert_eq!(c.pick::<f64>(None, "kappa").unwrap(), Some(16.0));
        assert_eq!(c.pick_or::<usize>(None, "epochs", 3).unwrap(), 3);
        assert!(c.switch(false, "frozen-noise").unwrap());
        assert!(c.require::<u64>(None, "seed").is_err());
    }

    #[test]
    fn wrong_types_and_unknown_keys_are_usage_errors() {
        let c = config("seed = -4\nlayrs = 3");
        assert!(matches!(
            c.pick::<u64>(None, "seed"),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(c.check_keys(&["seed"]), Err(CliError::Usage(_))));
    }
}
