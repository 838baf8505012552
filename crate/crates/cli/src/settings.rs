use std::path::Path;

use irtune::ml::GaConfig;
use irtune::nn::ModelConfig;
use irtune::pipeline::HybridConfig;
use serde::Deserialize;

use crate::error::{CliError, Result};

/// Contents of the `--config` file. Every table and key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub model: ModelConfig,
    pub hybrid: HybridConfig,
    pub flag_ga: GaConfig,
    pub eval: EvalSettings,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub folds: usize,
    pub labels: usize,
    pub flag_coverage: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings { folds: 10, labels: 13, flag_coverage: 0.99 }
    }
}

impl Settings {
    pub fn load(path: Option<&Path>, seed: Option<u64>) -> Result<Self> {
        let mut s = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", p.display())))?
            }
            None => Settings::default(),
        };
        if let Some(seed) = seed {
            s.model.seed = seed;
            s.hybrid.ga.seed = seed;
            s.flag_ga.seed = seed;
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_tables_keep_defaults() {
        let s: Settings = toml::from_str("[model]\nepochs = 3\n[hybrid]\nthreshold = 0.5\nerror_source = \"inner_split\"\n").unwrap();
        assert_eq!(s.model.epochs, 3);
        assert_eq!(s.model.hidden_dim, ModelConfig::default().hidden_dim);
        assert_eq!(s.hybrid.threshold, 0.5);
        assert_eq!(s.eval.folds, 10);
        assert!(toml::from_str::<Settings>("[modle]\n").is_err());
    }
}
