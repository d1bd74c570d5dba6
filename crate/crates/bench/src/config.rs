//! Run configuration with the defaults < file < flags override chain.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Fully resolved settings for a run. Defaults follow the evaluation
/// protocol: 5 seeds, 10,000 samples each, 5,000 samples per constraint.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    pub scheme: String,
    pub notation: String,
    pub order: usize,
    pub discount: f64,
    pub temperature: f64,
    pub max_tokens: usize,
    pub samples: usize,
    pub seeds: usize,
    pub samples_per_constraint: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scheme: "brics".to_string(),
            notation: "safe".to_string(),
            order: 6,
            discount: 0.75,
            temperature: 1.0,
            max_tokens: 256,
            samples: 10_000,
            seeds: 5,
            samples_per_constraint: 5_000,
            seed: 0,
        }
    }
}

/// Partial overrides loaded from a TOML config file or supplied as CLI
/// flags; unset fields fall through to the previous layer.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ConfigOverlay {
    pub scheme: Option<String>,
    pub notation: Option<String>,
    pub order: Option<usize>,
    pub discount: Option<f64>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<usize>,
    pub samples: Option<usize>,
    pub seeds: Option<usize>,
    pub samples_per_constraint: Option<usize>,
    pub seed: Option<u64>,
}

impl RunConfig {
    /// defaults < config file < flags.
    pub fn resolve(file: Option<&Path>, flags: &ConfigOverlay) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            let overlay: ConfigOverlay = toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))?;
            cfg.apply(&overlay);
        }
        cfg.apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, overlay: &ConfigOverlay) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &overlay.$field { self.$field = v.clone(); })*
            };
        }
        take!(
            scheme,
            notation,
            order,
            discount,
            temperature,
            max_tokens,
            samples,
            seeds,
            samples_per_constraint,
            seed
        );
    }

    fn validate(&self) -> Result<(), CliError> {
        if safekit::fragmenter::FragmentationScheme::parse(&self.scheme).is_none() {
            return Err(CliError::Config(format!("unknown scheme {:?}", self.scheme)));
        }
        if safekit::clm::Notation::parse(&self.notation).is_none() {
            return Err(CliError::Config(format!(
                "unknown notation {:?}",
                self.notation
            )));
        }
        if !(2..=8).contains(&self.order) {
            return Err(CliError::Config(format!(
                "n-gram order must be in 2..=8, got {}",
                self.order
            )));
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(CliError::Config(format!(
                "discount must be in (0, 1), got {}",
                self.discount
            )));
        }
        if self.temperature < 0.0 {
            return Err(CliError::Config("temperature must be >= 0".to_string()));
        }
        Ok(())
    }

    pub fn scheme(&self) -> safekit::fragmenter::FragmentationScheme {
        safekit::fragmenter::FragmentationScheme::parse(&self.scheme).expect("validated")
    }

    pub fn notation(&self) -> safekit::clm::Notation {
        safekit::clm::Notation::parse(&self.notation).expect("validated")
    }

    /// Writes the resolved configuration beside an output.
    pub fn write_sidecar(&self, output: &Path) -> Result<(), CliError> {
        let path = sidecar_path(output, "config.json");
        ensure_parent(&path)?;
        let json = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(&path, json + "\n")
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}

/// `<output>.<suffix>` for files, `<output>/<suffix>` for directories.
pub fn sidecar_path(output: &Path, suffix: &str) -> PathBuf {
    if output.is_dir() {
        output.join(suffix)
    } else {
        let mut name = output
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        name.push('.');
        name.push_str(suffix);
        output.with_file_name(name)
    }
}

/// Relative outputs resolve under `SAFEKIT_OUTPUT_ROOT` when it is set.
pub fn resolve_output(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os("SAFEKIT_OUTPUT_ROOT") {
        Some(root) => PathBuf::from(root).join(path),
        None => path.to_path_buf(),
    }
}

/// Creates the parent directory of a file output if needed.
pub fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| {
                CliError::Data(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }
    Ok(())
}
