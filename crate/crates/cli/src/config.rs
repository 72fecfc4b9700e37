//! Flat key=value configuration files.
//!
//! Keys use the long flag names without the leading dashes (for example
//! `p-grid=0.2,0.4`). Values from the file fill in flags the user did not
//! pass; explicit flags always win.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

#[derive(Debug, Default, Clone)]
pub struct ConfigMap {
    values: HashMap<String, String>,
}

impl ConfigMap {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut values = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {} is not key=value: '{line}'", idx + 1);
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigMap { values })
    }

    /// Fills `slot` from the config when the flag was not given.
    pub fn apply<T: std::str::FromStr>(&self, slot: &mut Option<T>, key: &str) -> Result<()>
    where
        T::Err: std::fmt::Display,
    {
        if slot.is_none() {
            if let Some(raw) = self.values.get(key) {
                match raw.parse::<T>() {
                    Ok(v) => *slot = Some(v),
                    Err(e) => bail!("config key '{key}': {e}"),
                }
            }
        }
        Ok(())
    }

    pub fn apply_flag(&self, slot: &mut bool, key: &str) -> Result<()> {
        if !*slot {
            if let Some(raw) = self.values.get(key) {
                match raw.parse::<bool>() {
                    Ok(v) => *slot = v,
                    Err(e) => bail!("config key '{key}': {e}"),
                }
            }
        }
        Ok(())
    }
}

/// Comma-separated list of values, e.g. `0.2,0.4,0.8`.
#[derive(Debug, Clone)]
pub struct NumList<T>(pub Vec<T>);

impl<T: std::str::FromStr> std::str::FromStr for NumList<T>
where
    T::Err: std::fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut out = Vec::new();
        for tok in s.split(',') {
            let tok = tok.trim();
            if tok.is_empty() {
                continue;
            }
            out.push(tok.parse::<T>().map_err(|e| format!("'{tok}': {e}"))?);
        }
        if out.is_empty() {
            return Err("empty list".into());
        }
        Ok(NumList(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_merges() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# comment\nsigma=0.25\np-grid=0.2, 0.4\n").unwrap();
        let cfg = ConfigMap::load(&path).unwrap();

        let mut sigma: Option<f64> = None;
        cfg.apply(&mut sigma, "sigma").unwrap();
        assert_eq!(sigma, Some(0.25));

        // explicit flag wins
        let mut sigma: Option<f64> = Some(1.0);
        cfg.apply(&mut sigma, "sigma").unwrap();
        assert_eq!(sigma, Some(1.0));

        let mut grid: Option<NumList<f64>> = None;
        cfg.apply(&mut grid, "p-grid").unwrap();
        assert_eq!(grid.unwrap().0, vec![0.2, 0.4]);
    }

    #[test]
    fn rejects_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.conf");
        std::fs::write(&path, "sigma 0.25\n").unwrap();
        assert!(ConfigMap::load(&path).is_err());
    }
}
