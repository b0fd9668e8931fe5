//! Experiment configuration: JSON file plus flag overrides, flags winning.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use capsim_core::bounds::REGIME_GUARD;
use capsim_core::channel::{ChannelParams, FadingModel};
use capsim_core::traffic::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Fully resolved configuration; every command validates it against the
/// module preconditions before any work starts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: String,
    pub d: f64,
    pub n: Vec<usize>,
    pub trials: usize,
    pub fading: String,
    pub alpha: f64,
    pub w: f64,
    pub gamma_cap: f64,
    pub k: f64,
    pub eta: f64,
    pub p0: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub formats: Vec<Format>,
    pub workers: usize,
    pub strict: bool,
    pub dry_run: bool,
}

/// The JSON-file side of the configuration: all fields optional so flags can
/// fill the gaps.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: Option<String>,
    pub d: Option<f64>,
    pub n: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub fading: Option<String>,
    pub alpha: Option<f64>,
    pub w: Option<f64>,
    pub gamma_cap: Option<f64>,
    pub k: Option<f64>,
    pub eta: Option<f64>,
    pub p0: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
    pub workers: Option<usize>,
}

pub struct UsageError(pub String);

impl ExperimentConfig {
    /// Merges file values and flag overrides; flags win, defaults fill the
    /// rest. `d` and `n` have no defaults.
    #[allow(clippy::too_many_arguments)]
    pub fn resolve(
        file: ConfigFile,
        model: Option<String>,
        d: Option<f64>,
        n: Option<Vec<usize>>,
        trials: Option<usize>,
        fading: Option<String>,
        alpha: Option<f64>,
        w: Option<f64>,
        gamma_cap: Option<f64>,
        seed: Option<u64>,
        out: Option<PathBuf>,
        formats: Option<Vec<Format>>,
        workers: Option<usize>,
        strict: bool,
        dry_run: bool,
    ) -> Result<Self, UsageError> {
        let d = d
            .or(file.d)
            .ok_or_else(|| UsageError("missing required parameter 'd' (flag --d or config)".into()))?;
        let n = n
            .or(file.n)
            .ok_or_else(|| UsageError("missing required parameter 'n' (flag --n or config)".into()))?;
        if n.is_empty() {
            return Err(UsageError("the n grid must not be empty".into()));
        }
        let config = ExperimentConfig {
            model: model.or(file.model).unwrap_or_else(|| "asymmetric".into()),
            d,
            n,
            trials: trials.or(file.trials).unwrap_or(1),
            fading: fading.or(file.fading).unwrap_or_else(|| "trivial".into()),
            alpha: alpha.or(file.alpha).unwrap_or(4.0),
            w: w.or(file.w).unwrap_or(1.0),
            gamma_cap: gamma_cap.or(file.gamma_cap).unwrap_or(1.0),
            k: file.k.unwrap_or(1.0),
            eta: file.eta.unwrap_or(1e-6),
            p0: file.p0.unwrap_or(1.0),
            seed: seed.or(file.seed).unwrap_or(0),
            out: out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            formats: formats.or(file.formats).unwrap_or_else(|| vec![Format::Csv, Format::Json]),
            workers: workers.or(file.workers).unwrap_or(0),
            strict,
            dry_run,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), UsageError> {
        self.parsed_model()?;
        self.fading_model()?;
        self.channel_params()?;
        if !(0.0 < self.d && self.d < 1.0) {
            return Err(UsageError(format!("d must lie in (0, 1), got {}", self.d)));
        }
        if self.trials == 0 {
            return Err(UsageError("trials must be at least 1".into()));
        }
        for &n in &self.n {
            if n < 2 {
                return Err(UsageError(format!("every n must be at least 2, got {n}")));
            }
        }
        Ok(())
    }

    pub fn parsed_model(&self) -> Result<Model, UsageError> {
        self.model.parse().map_err(|e| UsageError(format!("{e}")))
    }

    pub fn fading_model(&self) -> Result<FadingModel<f64>, UsageError> {
        FadingModel::from_name(&self.fading).map_err(|e| UsageError(format!("{e}")))
    }

    pub fn channel_params(&self) -> Result<ChannelParams<f64>, UsageError> {
        ChannelParams::new(self.k, self.alpha, self.eta, self.p0, self.w, self.gamma_cap)
            .map_err(|e| UsageError(format!("{e}")))
    }

    /// The asymmetric closed forms refuse the band around d = 1/2; surface
    /// that as a configuration error for the commands that evaluate them.
    pub fn check_regime_for_bounds(&self) -> Result<(), UsageError> {
        if self.model == "asymmetric" && (self.d - 0.5).abs() + 1e-12 < REGIME_GUARD {
            return Err(UsageError(format!(
                "asymmetric bounds are undefined for |d - 1/2| < {REGIME_GUARD}: d = {}",
                self.d
            )));
        }
        Ok(())
    }

    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }
}
