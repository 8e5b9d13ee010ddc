//! Run settings: command-line flags win over `GEOFORM_*` environment
//! variables, which win over `geoform.conf` in the working directory.
//!
//! The config file is `key = value` per line; `#` starts a comment. Keys
//! are the long flag names (`seed`, `samples`, `tol`, `angle-tol`, `model`,
//! `dim`, `solver`, `solver-timeout`). The environment variable for a key
//! is `GEOFORM_` followed by the key in upper case with `-` as `_`.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use geoform_core::models::ModelKind;

pub const CONFIG_FILE: &str = "geoform.conf";

pub const KEYS: &[&str] = &["seed", "samples", "tol", "angle-tol", "model", "dim", "solver", "solver-timeout"];

/// Values given on the command line, before merging.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    pub angle_tol: Option<f64>,
    pub model: Option<String>,
    pub dim: Option<usize>,
    pub solver: Option<String>,
    pub solver_timeout: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
    pub angle_tol: f64,
    /// None when no source named a model.
    pub model: Option<ModelKind>,
    pub dim: usize,
    pub solver: Option<String>,
    pub solver_timeout: Duration,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            samples: 10_000,
            tol: 1e-9,
            angle_tol: 1e-6,
            model: None,
            dim: 2,
            solver: None,
            solver_timeout: Duration::from_secs(60),
        }
    }
}

pub fn env_name(key: &str) -> String {
    format!("GEOFORM_{}", key.to_ascii_uppercase().replace('-', "_"))
}

/// Parse the config file format. Unknown keys are errors so typos are not
/// silently ignored.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("{CONFIG_FILE}:{}: expected key = value", i + 1))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(format!("{CONFIG_FILE}:{}: unknown key '{k}'", i + 1));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Accepts `cartesian2`, `cartesian3`, ..., `disk`, and plain `cartesian`
/// (dimension from `dim`).
pub fn parse_model(s: &str, dim: usize) -> Result<ModelKind, String> {
    if s == "cartesian" || s == "cartesianN" {
        return ModelKind::from_label(&format!("cartesian{dim}")).ok_or_else(|| format!("bad dimension {dim}"));
    }
    ModelKind::from_label(s).ok_or_else(|| format!("unknown model '{s}' (cartesian2, cartesianN, disk)"))
}

fn value<T: FromStr>(key: &str, raw: &str, source: &str) -> Result<T, String> {
    raw.parse().map_err(|_| format!("{source}: bad value '{raw}' for {key}"))
}

/// Merge the three sources. `env` is passed in so tests can supply it.
pub fn resolve(
    flags: &Overrides,
    env: &dyn Fn(&str) -> Option<String>,
    dir: &Path,
) -> Result<RunConfig, String> {
    let file = match std::fs::read_to_string(dir.join(CONFIG_FILE)) {
        Ok(text) => parse_config(&text)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
        Err(e) => return Err(format!("{CONFIG_FILE}: {e}")),
    };
    // Lowest-precedence raw value for a key, with its source label.
    let lower = |key: &str| -> Option<(String, String)> {
        let name = env_name(key);
        if let Some(v) = env(&name).filter(|v| !v.trim().is_empty()) {
            return Some((v, name));
        }
        file.get(key).map(|v| (v.clone(), CONFIG_FILE.to_string()))
    };
    fn pick<T: FromStr + Clone>(
        flag: &Option<T>,
        key: &str,
        lower: &dyn Fn(&str) -> Option<(String, String)>,
    ) -> Result<Option<T>, String> {
        if let Some(v) = flag {
            return Ok(Some(v.clone()));
        }
        lower(key).map(|(raw, src)| value(key, &raw, &src)).transpose()
    }
    let d = RunConfig::default();
    let dim = pick(&flags.dim, "dim", &lower)?.unwrap_or(d.dim);
    if dim < 2 {
        return Err(format!("dimension must be at least 2, got {dim}"));
    }
    let model = pick(&flags.model, "model", &lower)?.map(|m: String| parse_model(&m, dim)).transpose()?;
    let cfg = RunConfig {
        seed: pick(&flags.seed, "seed", &lower)?.unwrap_or(d.seed),
        samples: pick(&flags.samples, "samples", &lower)?.unwrap_or(d.samples),
        tol: pick(&flags.tol, "tol", &lower)?.unwrap_or(d.tol),
        angle_tol: pick(&flags.angle_tol, "angle-tol", &lower)?.unwrap_or(d.angle_tol),
        model,
        dim,
        solver: pick(&flags.solver, "solver", &lower)?,
        solver_timeout: Duration::from_secs(pick(&flags.solver_timeout, "solver-timeout", &lower)?.unwrap_or(60)),
    };
    if cfg.samples == 0 {
        return Err("samples must be at least 1".into());
    }
    if cfg.tol.is_nan() || cfg.tol <= 0.0 || cfg.angle_tol.is_nan() || cfg.angle_tol <= 0.0 {
        return Err("tolerances must be positive".into());
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_env(_: &str) -> Option<String> {
        None
    }

    #[test]
    fn defaults_without_any_source() {
        let dir = tempfile::tempdir().unwrap();
        let c = resolve(&Overrides::default(), &no_env, dir.path()).unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn flags_beat_env_beat_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(CONFIG_FILE), "seed = 1\nsamples = 5 # comment\ntol=0.5\nmodel = disk\n").unwrap();
        let env = |k: &str| match k {
            "GEOFORM_SEED" => Some("2".to_string()),
            "GEOFORM_SAMPLES" => Some("6".to_string()),
            _ => None,
        };
        let flags = Overrides { seed: Some(3), ..Overrides::default() };
        let c = resolve(&flags, &env, dir.path()).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.samples, 6);
        assert_eq!(c.tol, 0.5);
        assert_eq!(c.model, Some(ModelKind::Disk));
    }

    #[test]
    fn bad_values_are_reported_with_their_source() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(CONFIG_FILE), "samples = many\n").unwrap();
        let e = resolve(&Overrides::default(), &no_env, dir.path()).unwrap_err();
        assert!(e.contains("geoform.conf") && e.contains("many"), "{e}");
        std::fs::write(dir.path().join(CONFIG_FILE), "colour = red\n").unwrap();
        assert!(resolve(&Overrides::default(), &no_env, dir.path()).unwrap_err().contains("unknown key"));
        std::fs::write(dir.path().join(CONFIG_FILE), "samples = 0\n").unwrap();
        assert!(resolve(&Overrides::default(), &no_env, dir.path()).is_err());
    }

    #[test]
    fn plain_cartesian_uses_the_dimension() {
        assert_eq!(parse_model("cartesian", 4), Ok(ModelKind::Cartesian(4)));
        assert_eq!(parse_model("cartesian3", 2), Ok(ModelKind::Cartesian(3)));
        assert!(parse_model("sphere", 2).is_err());
    }
}
