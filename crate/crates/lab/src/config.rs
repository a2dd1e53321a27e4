//! Flat experiment configuration: a TOML file overlaid with command-line
//! flags, resolved into a validated [`ExperimentConfig`].

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use sde_tv_core::model::{builtin_model, SdeModel};
use sde_tv_core::romberg::MAX_ORDER;
use sde_tv_core::Error as CoreError;

use crate::error::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Weights,
    Counterexample,
    TvCurve,
    W1Curve,
    SmoothingOrder,
    FokkerPlanck,
    Envelope,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Weights,
        Experiment::Counterexample,
        Experiment::TvCurve,
        Experiment::W1Curve,
        Experiment::SmoothingOrder,
        Experiment::FokkerPlanck,
        Experiment::Envelope,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::Weights => "weights",
            Experiment::Counterexample => "counterexample",
            Experiment::TvCurve => "tv-curve",
            Experiment::W1Curve => "w1-curve",
            Experiment::SmoothingOrder => "smoothing-order",
            Experiment::FokkerPlanck => "fokker-planck",
            Experiment::Envelope => "envelope",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.id() == id)
    }

    fn needs_model(self) -> bool {
        matches!(
            self,
            Experiment::TvCurve | Experiment::W1Curve | Experiment::FokkerPlanck | Experiment::Envelope
        )
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// One layer of settings. Every key is optional; the same struct is read
/// from the config file and from the flags, and the flags win.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    /// Must agree with the subcommand when given in a file.
    #[arg(skip)]
    pub experiment: Option<String>,
    /// Catalog model: gbm, ou, brownian-drift, sine-diffusion, clamped-gbm.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Model parameters, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub params: Option<Vec<f64>>,
    /// Second model of the pair; defaults to the Euler proxy of `model`.
    #[arg(long, global = true)]
    pub model_y: Option<String>,
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub params_y: Option<Vec<f64>>,
    /// Start point.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x: Option<f64>,
    /// Volatility of the counterexample GBM.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Dyadic time grid `t = 2^-k`, `k = k_min..=k_max`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub k_min: Option<i32>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub k_max: Option<i32>,
    /// Explicit time grid, overriding `k_min`/`k_max`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub t_list: Option<Vec<f64>>,
    /// Single time for `fokker-planck` and `envelope`.
    #[arg(long, global = true)]
    pub t: Option<f64>,
    /// Dyadic smoothing grid `eps = 2^-j`, `j = j_min..=j_max`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub j_min: Option<i32>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub j_max: Option<i32>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub eps_list: Option<Vec<f64>>,
    /// Extrapolation order.
    #[arg(long, global = true)]
    pub r: Option<usize>,
    /// `indicator` or `sign`.
    #[arg(long, global = true)]
    pub test_function: Option<String>,
    /// Indicator threshold `a` in `1{y <= a}`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub law_mean: Option<f64>,
    #[arg(long, global = true)]
    pub law_var: Option<f64>,
    /// `closed-form` or `fokker-planck`.
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// `auto` or `coupled`.
    #[arg(long, global = true)]
    pub w1_method: Option<String>,
    #[arg(long, global = true)]
    pub n_paths: Option<usize>,
    /// Target step of the fine simulation grid.
    #[arg(long, global = true)]
    pub fine_h: Option<f64>,
    #[arg(long, global = true)]
    pub min_steps: Option<usize>,
    /// Monte Carlo samples of the histogram oracle (0 disables it).
    #[arg(long, global = true)]
    pub gate_samples: Option<usize>,
    #[arg(long, global = true)]
    pub gate_tol: Option<f64>,
    #[arg(long, global = true)]
    pub n_cells: Option<usize>,
    #[arg(long, global = true)]
    pub n_time_steps: Option<usize>,
    #[arg(long, global = true)]
    pub half_width_sigmas: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub domain_lo: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub domain_hi: Option<f64>,
    #[arg(long, global = true)]
    pub mass_tol: Option<f64>,
    /// Largest-t points left out of the slope fit.
    #[arg(long, global = true)]
    pub fit_skip: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// CSV output path; the manifest goes next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),* $(,)?) => {
        RawConfig {
            $($field: $top.$field.or($base.$field),)*
        }
    };
}

impl RawConfig {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        toml::from_str(text).map_err(|e| LabError::Config(format!("config: {}", e.message().trim())))
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|source| LabError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            LabError::Config(msg) => LabError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Keys set in `top` replace those in `self`.
    pub fn overlay(self, top: RawConfig) -> RawConfig {
        let base = self;
        overlay!(base, top;
            experiment, model, params, model_y, params_y, x, sigma, k_min, k_max,
            t_list, t, j_min, j_max, eps_list, r, test_function, threshold,
            law_mean, law_var, method, w1_method, n_paths, fine_h, min_steps,
            gate_samples, gate_tol, n_cells, n_time_steps, half_width_sigmas,
            domain_lo, domain_hi, mass_tol, fit_skip, seed, out, threads,
        )
    }
}

/// Fully resolved settings; serializes back to a config file that
/// reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub params: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_y: Option<String>,
    pub params_y: Vec<f64>,
    pub x: f64,
    pub sigma: f64,
    pub k_min: i32,
    pub k_max: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_list: Option<Vec<f64>>,
    pub t: f64,
    pub j_min: i32,
    pub j_max: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
    pub r: usize,
    pub test_function: String,
    pub threshold: f64,
    pub law_mean: f64,
    pub law_var: f64,
    pub method: String,
    pub w1_method: String,
    pub n_paths: usize,
    pub fine_h: f64,
    pub min_steps: usize,
    pub gate_samples: usize,
    pub gate_tol: f64,
    pub n_cells: usize,
    pub n_time_steps: usize,
    pub half_width_sigmas: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain_hi: Option<f64>,
    pub mass_tol: f64,
    pub fit_skip: usize,
    pub seed: u64,
    pub out: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub kind: Option<Experiment>,
}

fn invalid(key: &str, reason: impl fmt::Display) -> LabError {
    LabError::Config(format!("invalid value for key `{key}`: {reason}"))
}

fn positive(key: &str, v: f64) -> Result<f64, LabError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(key, format!("{v} must be finite and > 0")))
    }
}

fn at_least(key: &str, v: usize, min: usize) -> Result<usize, LabError> {
    if v >= min {
        Ok(v)
    } else {
        Err(invalid(key, format!("{v} must be >= {min}")))
    }
}

fn one_of(key: &str, v: String, allowed: &[&str]) -> Result<String, LabError> {
    if allowed.contains(&v.as_str()) {
        Ok(v)
    } else {
        Err(invalid(
            key,
            format!("`{v}` is not one of {}", allowed.join(", ")),
        ))
    }
}

fn positive_list(key: &str, v: Option<Vec<f64>>) -> Result<Option<Vec<f64>>, LabError> {
    match v {
        Some(list) if list.is_empty() => Err(invalid(key, "list is empty")),
        Some(list) => {
            for &x in &list {
                positive(key, x)?;
            }
            Ok(Some(list))
        }
        None => Ok(None),
    }
}

/// Builds a catalog model, attributing failures to `name_key`/`params_key`.
pub fn catalog_model(
    name_key: &str,
    params_key: &str,
    name: &str,
    params: &[f64],
) -> Result<SdeModel, LabError> {
    builtin_model(name, params).map_err(|e| match e {
        CoreError::UnknownModel { .. } => invalid(name_key, e),
        other => invalid(params_key, other),
    })
}

impl ExperimentConfig {
    /// Fills defaults for `experiment` and validates every key.
    pub fn resolve(experiment: Experiment, raw: RawConfig) -> Result<Self, LabError> {
        if let Some(id) = &raw.experiment {
            match Experiment::from_id(id) {
                None => {
                    let ids: Vec<&str> = Experiment::ALL.iter().map(|e| e.id()).collect();
                    return Err(invalid(
                        "experiment",
                        format!("unknown experiment `{id}`; expected one of {}", ids.join(", ")),
                    ));
                }
                Some(e) if e != experiment => {
                    return Err(invalid(
                        "experiment",
                        format!("config names `{id}` but the command is `{experiment}`"),
                    ));
                }
                Some(_) => {}
            }
        }
        let (k_min, k_max) = match experiment {
            Experiment::Counterexample => (8, 20),
            Experiment::W1Curve => (4, 10),
            _ => (6, 14),
        };
        let model = raw.model;
        if experiment.needs_model() && model.is_none() {
            return Err(LabError::Config(format!(
                "missing required key `model` for `{experiment}`"
            )));
        }
        let params = raw.params.unwrap_or_default();
        let params_y = raw.params_y.unwrap_or_default();
        if let Some(name) = &model {
            catalog_model("model", "params", name, &params)?;
        }
        if let Some(name) = &raw.model_y {
            catalog_model("model_y", "params_y", name, &params_y)?;
        }
        let cfg = ExperimentConfig {
            experiment: experiment.id().to_string(),
            model,
            params,
            model_y: raw.model_y,
            params_y,
            x: raw.x.unwrap_or(1.0),
            sigma: positive("sigma", raw.sigma.unwrap_or(1.0))?,
            k_min: raw.k_min.unwrap_or(k_min),
            k_max: raw.k_max.unwrap_or(k_max),
            t_list: positive_list("t_list", raw.t_list)?,
            t: positive("t", raw.t.unwrap_or(0.05))?,
            j_min: raw.j_min.unwrap_or(3),
            j_max: raw.j_max.unwrap_or(10),
            eps_list: positive_list("eps_list", raw.eps_list)?,
            r: raw
                .r
                .unwrap_or(if experiment == Experiment::Weights { 3 } else { 2 }),
            test_function: one_of(
                "test_function",
                raw.test_function.unwrap_or_else(|| "indicator".into()),
                &["indicator", "sign"],
            )?,
            threshold: raw.threshold.unwrap_or(0.3),
            law_mean: raw.law_mean.unwrap_or(0.0),
            law_var: positive("law_var", raw.law_var.unwrap_or(1.0))?,
            method: one_of(
                "method",
                raw.method.unwrap_or_else(|| "closed-form".into()),
                &["closed-form", "fokker-planck"],
            )?,
            w1_method: one_of(
                "w1_method",
                raw.w1_method.unwrap_or_else(|| "auto".into()),
                &["auto", "coupled"],
            )?,
            n_paths: at_least("n_paths", raw.n_paths.unwrap_or(100_000), 1)?,
            fine_h: positive("fine_h", raw.fine_h.unwrap_or(1.0 / 4096.0))?,
            min_steps: at_least("min_steps", raw.min_steps.unwrap_or(64), 1)?,
            gate_samples: raw.gate_samples.unwrap_or(4_000_000),
            gate_tol: positive("gate_tol", raw.gate_tol.unwrap_or(0.01))?,
            n_cells: at_least("n_cells", raw.n_cells.unwrap_or(4000), 16)?,
            n_time_steps: at_least("n_time_steps", raw.n_time_steps.unwrap_or(800), 1)?,
            half_width_sigmas: positive("half_width_sigmas", raw.half_width_sigmas.unwrap_or(10.0))?,
            domain_lo: raw.domain_lo,
            domain_hi: raw.domain_hi,
            mass_tol: positive("mass_tol", raw.mass_tol.unwrap_or(1e-6))?,
            fit_skip: raw.fit_skip.unwrap_or(2),
            seed: raw.seed.unwrap_or(0),
            out: raw
                .out
                .unwrap_or_else(|| PathBuf::from(format!("{}.csv", experiment.id()))),
            threads: raw.threads.map(|n| at_least("threads", n, 1)).transpose()?,
            kind: Some(experiment),
        };
        if !cfg.x.is_finite() {
            return Err(invalid("x", "must be finite"));
        }
        if cfg.k_min > cfg.k_max {
            return Err(invalid("k_max", format!("{} < k_min = {}", cfg.k_max, cfg.k_min)));
        }
        if cfg.j_min > cfg.j_max {
            return Err(invalid("j_max", format!("{} < j_min = {}", cfg.j_max, cfg.j_min)));
        }
        if cfg.r == 0 || cfg.r > MAX_ORDER {
            return Err(invalid("r", format!("{} is outside 1..={MAX_ORDER}", cfg.r)));
        }
        match (cfg.domain_lo, cfg.domain_hi) {
            (Some(lo), Some(hi)) if !(lo < hi && lo.is_finite() && hi.is_finite()) => {
                return Err(invalid(
                    "domain_hi",
                    format!("need domain_lo < domain_hi, got [{lo}, {hi}]"),
                ));
            }
            (Some(_), None) => {
                return Err(LabError::Config(
                    "missing required key `domain_hi` (domain_lo is set)".into(),
                ))
            }
            (None, Some(_)) => {
                return Err(LabError::Config(
                    "missing required key `domain_lo` (domain_hi is set)".into(),
                ))
            }
            _ => {}
        }
        Ok(cfg)
    }

    pub fn experiment(&self) -> Experiment {
        self.kind
            .or_else(|| Experiment::from_id(&self.experiment))
            .expect("resolved configs carry a valid experiment")
    }

    /// TOML text that `--config` accepts and that reproduces this run.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_counterexample() {
        let raw = RawConfig::from_toml(
            "experiment = \"counterexample\"\nx = 1\nsigma = 1\nk_min = 8\nk_max = 20\n",
        )
        .unwrap();
        let cfg = ExperimentConfig::resolve(Experiment::Counterexample, raw).unwrap();
        assert_eq!((cfg.k_min, cfg.k_max), (8, 20));
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.out, PathBuf::from("counterexample.csv"));
    }

    #[test]
    fn unknown_model_names_the_key() {
        let raw = RawConfig {
            model: Some("gmb".into()),
            ..RawConfig::default()
        };
        let err = ExperimentConfig::resolve(Experiment::TvCurve, raw)
            .unwrap_err()
            .to_string();
        assert!(
            err.contains("`model`") && err.contains("gbm") && err.contains("sine-diffusion"),
            "{err}"
        );
    }

    #[test]
    fn flags_override_file() {
        let file = RawConfig::from_toml("seed = 3\nx = 2.0").unwrap();
        let flags = RawConfig {
            seed: Some(7),
            ..RawConfig::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.seed, Some(7));
        assert_eq!(merged.x, Some(2.0));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let err = RawConfig::from_toml("sedd = 3").unwrap_err().to_string();
        assert!(err.contains("sedd"), "{err}");
        assert!(RawConfig::from_toml("x = \"one\"").is_err());
        let missing = ExperimentConfig::resolve(Experiment::TvCurve, RawConfig::default()).unwrap_err();
        assert!(missing.to_string().contains("missing required key `model`"));
        let bad = RawConfig {
            n_paths: Some(0),
            ..RawConfig::default()
        };
        assert!(ExperimentConfig::resolve(
            Experiment::W1Curve,
            RawConfig {
                model: Some("ou".into()),
                params: Some(vec![1.0, 1.0]),
                ..bad
            }
        )
        .unwrap_err()
        .to_string()
        .contains("`n_paths`"));
    }

    #[test]
    fn experiment_key_must_match_command() {
        let raw = RawConfig::from_toml("experiment = \"weights\"").unwrap();
        assert!(ExperimentConfig::resolve(Experiment::Counterexample, raw).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let raw = RawConfig {
            model: Some("clamped-gbm".into()),
            params: Some(vec![1.0, 0.1]),
            t_list: Some(vec![0.1, 0.05]),
            seed: Some(11),
            ..RawConfig::default()
        };
        let cfg = ExperimentConfig::resolve(Experiment::TvCurve, raw).unwrap();
        let again = RawConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(
            ExperimentConfig::resolve(Experiment::TvCurve, again).unwrap(),
            cfg
        );
    }
}
