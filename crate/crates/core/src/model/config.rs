use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture hyperparameters shared by the generator and the critic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    /// Width of Z and W.
    pub latent_dim: usize,
    /// Width of a class embedding row. Defaults to the number of classes.
    pub embed_dim: Option<usize>,
    /// Number of conditions. 0 trains an unconditional model.
    pub classes: usize,
    pub mapping_depth: usize,
    pub max_resolution: usize,
    /// Feature channels at each resolution of both networks.
    pub channels: BTreeMap<usize, usize>,
    pub noise_enabled: bool,
    pub equalized_lr: bool,
    pub pixel_norm: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            latent_dim: 64,
            embed_dim: None,
            classes: 0,
            mapping_depth: 4,
            max_resolution: 32,
            channels: BTreeMap::from([(4, 64), (8, 32), (16, 16), (32, 16)]),
            noise_enabled: true,
            equalized_lr: true,
            pixel_norm: true,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let r = self.max_resolution;
        if r < 8 || !r.is_power_of_two() {
            return bad(format!("max_resolution must be a power of two ≥ 8, got {r}"));
        }
        if self.latent_dim == 0 {
            return bad("latent_dim must be ≥ 1".into());
        }
        if self.mapping_depth == 0 {
            return bad("mapping_depth must be ≥ 1".into());
        }
        if self.classes > 0 && self.embed_dim == Some(0) {
            return bad("embed_dim must be ≥ 1".into());
        }
        for res in self.resolutions() {
            match self.channels.get(&res) {
                Some(&c) if c > 0 => {}
                _ => return bad(format!("no channel count for resolution {res}")),
            }
        }
        Ok(())
    }

    /// 4, 8, …, max_resolution.
    pub fn resolutions(&self) -> Vec<usize> {
        std::iter::successors(Some(4usize), |r| Some(r * 2)).take_while(|&r| r <= self.max_resolution).collect()
    }

    pub fn max_phase(&self) -> usize {
        self.resolutions().len() - 1
    }

    pub fn channels_at(&self, res: usize) -> usize {
        self.channels[&res]
    }

    /// Class-embedding width actually used: 0 when unconditional.
    pub fn embedding_width(&self) -> usize {
        if self.classes == 0 {
            0
        } else {
            self.embed_dim.unwrap_or(self.classes)
        }
    }
}

pub fn resolution_of(phase: usize) -> usize {
    4 << phase
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = GeneratorConfig::default();
        c.validate().unwrap();
        assert_eq!(c.resolutions(), vec![4, 8, 16, 32]);
        assert_eq!(c.max_phase(), 3);
    }

    #[test]
    fn rejects_bad_resolution() {
        for r in [4, 12, 0] {
            let c = GeneratorConfig { max_resolution: r, ..Default::default() };
            assert!(c.validate().is_err(), "{r}");
        }
        let c = GeneratorConfig { max_resolution: 64, ..Default::default() };
        assert!(c.validate().is_err(), "missing channels at 64");
    }

    #[test]
    fn json_rejects_unknown_keys() {
        assert!(serde_json::from_str::<GeneratorConfig>(r#"{"latent_dim": 8, "bogus": 1}"#).is_err());
        let c: GeneratorConfig = serde_json::from_str(r#"{"latent_dim": 8, "channels": {"4": 8, "8": 4}, "max_resolution": 8}"#).unwrap();
        assert_eq!(c.channels_at(8), 4);
        c.validate().unwrap();
    }
}
