use std::collections::BTreeSet;
use std::path::Path;

use super::CliError;

/// Flat `key = value` settings file. Keys are the long flag names with
/// dashes, e.g. `seed = 7` or `resolution = "512x928"`.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    table: toml::Table,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::input(e.to_string()))?;
        Ok(Self { table })
    }

    /// Rejects keys the command does not understand.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), CliError> {
        let allowed: BTreeSet<&str> = allowed.iter().copied().collect();
        match self.table.keys().find(|k| !allowed.contains(k.as_str())) {
            Some(k) => Err(CliError::input(format!("unknown config key {k:?}"))),
            None => Ok(()),
        }
    }

    fn bad(key: &str, want: &str) -> CliError {
        CliError::input(format!("config key {key:?} must be {want}"))
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(v) => v.as_integer().and_then(|i| u64::try_from(i).ok()).map(Some).ok_or_else(|| Self::bad(key, "a non-negative integer")),
        }
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        Ok(self.u64(key)?.map(|v| v as usize))
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(f)) => Ok(Some(*f)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(Self::bad(key, "a number")),
        }
    }

    pub fn string(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(v) => v.as_str().map(|s| Some(s.to_string())).ok_or_else(|| Self::bad(key, "a string")),
        }
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>, CliError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(v) => v.as_bool().map(Some).ok_or_else(|| Self::bad(key, "true or false")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typed_lookups() {
        let c = ConfigFile::parse("seed = 7\nsigma = 0.3\nresolution = \"32x64\"\nsynthetic = true\nframes = 2").unwrap();
        assert_eq!(c.u64("seed").unwrap(), Some(7));
        assert_eq!(c.f64("sigma").unwrap(), Some(0.3));
        assert_eq!(c.f64("frames").unwrap(), Some(2.0));
        assert_eq!(c.string("resolution").unwrap().as_deref(), Some("32x64"));
        assert_eq!(c.bool("synthetic").unwrap(), Some(true));
        assert_eq!(c.u64("missing").unwrap(), None);
        assert!(c.u64("sigma").is_err());
        assert!(c.check_keys(&["seed"]).is_err());
        assert!(c.check_keys(&["seed", "sigma", "resolution", "synthetic", "frames"]).is_ok());
        assert!(ConfigFile::parse("seed = ").is_err());
        assert!(ConfigFile::parse("seed = -1").unwrap().u64("seed").is_err());
    }
}
