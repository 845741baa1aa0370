use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use super::RunConfig;
use crate::error::{Error, Result};
use crate::scenarios::{CaseId, Problem, ScenarioSpec};

/// Flat option map keyed by CLI flag name without the leading dashes.
pub type ConfigMap = BTreeMap<String, String>;

const KEYS: &[&str] = &[
    "problem",
    "case",
    "nx",
    "ny",
    "tf",
    "tol",
    "integrator",
    "method",
    "controller",
    "spectrum-interval",
    "reference",
    "output",
    "seed",
    "sweep",
    "mu",
    "eta",
    "kappa",
    "checkpoint-every",
    "max-steps",
    "max-wall",
    "dt",
];

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<ConfigMap> {
    let mut map = ConfigMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value", n + 1)))?;
        let key = k.trim().trim_start_matches("--").to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key '{key}'", n + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

/// Parses "tol=1e-3,1e-4" (the `tol=` prefix is optional).
pub fn parse_sweep(s: &str) -> Result<Vec<f64>> {
    let body = s.trim();
    let body = match body.split_once('=') {
        Some((k, v)) if k.trim() == "tol" => v,
        Some((k, _)) => return Err(Error::Config(format!("can only sweep tol, not '{k}'"))),
        None => body,
    };
    body.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<f64>().map_err(|_| Error::Config(format!("bad tolerance '{x}'"))))
        .collect()
}

fn value<T: FromStr>(map: &ConfigMap, key: &str) -> Result<Option<T>> {
    map.get(key)
        .map(|v| v.parse::<T>().map_err(|_| Error::Config(format!("bad value '{v}' for {key}"))))
        .transpose()
}

impl RunConfig {
    /// Builds a configuration from a preset plus overrides. Unset keys keep the preset
    /// (khi-III when no case is given).
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let problem: Option<Problem> = map.get("problem").map(|p| p.parse()).transpose()?;
        let case: Option<CaseId> = map.get("case").map(|c| c.parse()).transpose()?;
        let preset_case = match (problem, case) {
            (_, Some(c)) if c != CaseId::Custom => c,
            (Some(Problem::Reconnection), _) => CaseId::VI,
            _ => CaseId::III,
        };
        let mut spec = ScenarioSpec::preset(preset_case)?;
        if let Some(p) = problem {
            if p != spec.problem {
                return Err(Error::UnknownCase(format!("{p}-{preset_case}")));
            }
        }
        if case == Some(CaseId::Custom) {
            spec.case_id = CaseId::Custom;
        }
        if let Some(nx) = value(map, "nx")? {
            spec.nx = nx;
        }
        if let Some(ny) = value(map, "ny")? {
            spec.ny = ny;
        }
        if let Some(tf) = value(map, "tf")? {
            spec.t_final = tf;
        }
        if let Some(mu) = value(map, "mu")? {
            spec.params.mu = mu;
        }
        if let Some(eta) = value(map, "eta")? {
            spec.params.eta = eta;
        }
        if let Some(kappa) = value(map, "kappa")? {
            spec.params.kappa = kappa;
        }
        if let Some(tol) = value(map, "tol")? {
            spec.tol = tol;
        }
        let mut cfg = RunConfig::new(spec);
        if let Some(s) = value(map, "integrator")? {
            cfg.scheme = s;
        }
        if let Some(m) = value(map, "method")? {
            cfg.method = m;
        }
        if let Some(c) = value(map, "controller")? {
            cfg.controller = c;
        }
        if let Some(n) = value(map, "spectrum-interval")? {
            cfg.spectrum_interval = n;
        }
        cfg.reference = map.get("reference").map(PathBuf::from);
        cfg.output_dir = map.get("output").map(PathBuf::from);
        if let Some(s) = value(map, "seed")? {
            cfg.rng_seed = s;
        }
        cfg.checkpoint_every = value(map, "checkpoint-every")?;
        if let Some(n) = value(map, "max-steps")? {
            cfg.max_steps = n;
        }
        if let Some(w) = value(map, "max-wall")? {
            cfg.max_wall_seconds = w;
        }
        cfg.fixed_dt = value(map, "dt")?;
        cfg.validate()?;
        Ok(cfg)
    }
}
