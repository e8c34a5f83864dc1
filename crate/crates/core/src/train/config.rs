use std::path::PathBuf;

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::imaging::{Augment, Degradation, SampleConfig};
use crate::network::Preset;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub preset: Preset,
    pub scale: usize,
    pub iterations: u64,
    pub lr_initial: f64,
    pub lr_drop_at: u64,
    pub lr_drop_factor: f64,
    pub batch: usize,
    pub crop_hr: usize,
    pub augment: Augment,
    pub degradation: Degradation,
    pub seed: u64,
    pub train_dir: Option<PathBuf>,
    pub test_dir: Option<PathBuf>,
    /// Iterations between loss log lines.
    pub log_every: u64,
    /// Iterations between test-set evaluations; 0 disables them.
    pub eval_every: u64,
    /// Iterations between checkpoints; the final state is always saved.
    pub checkpoint_every: u64,
}

impl TrainConfig {
    /// Small-network protocol: 1e5 iterations, drop at 5e4, batch 2,
    /// 40x40 HR crops at scale 4, flips and rotations.
    pub fn toy(kind: ActivationKind, width: usize) -> Self {
        TrainConfig {
            preset: Preset::toy(kind, width),
            scale: 4,
            iterations: 100_000,
            lr_initial: 1e-4,
            lr_drop_at: 50_000,
            lr_drop_factor: 10.0,
            batch: 2,
            crop_hr: 40,
            augment: Augment {
                flip: true,
                mirror: false,
                rotate: true,
                intensity: None,
            },
            degradation: Degradation::Bicubic,
            seed: 0,
            train_dir: None,
            test_dir: None,
            log_every: 100,
            eval_every: 0,
            checkpoint_every: 10_000,
        }
    }

    /// Full-size protocol: 1e6 iterations, drop at 5e5, batch 4, 75x75
    /// (scale 3) or 76x76 (scale 4) crops, every augmentation.
    pub fn main(preset: Preset, scale: usize) -> Self {
        TrainConfig {
            preset,
            scale,
            iterations: 1_000_000,
            lr_drop_at: 500_000,
            batch: 4,
            crop_hr: if scale == 3 { 75 } else { 19 * scale },
            augment: Augment::ALL,
            ..Self::toy(ActivationKind::Maxout, 16)
        }
    }

    pub fn sample_config(&self) -> SampleConfig {
        SampleConfig {
            batch: self.batch,
            crop_hr: self.crop_hr,
            augment: self.augment,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.lr_initial > 0.0 && self.lr_initial.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.lr_initial));
        }
        if !(self.lr_drop_factor > 0.0 && self.lr_drop_factor.is_finite()) {
            return bad(format!("learning rate drop factor must be positive, got {}", self.lr_drop_factor));
        }
        if self.batch == 0 {
            return bad("batch must be at least 1".into());
        }
        if self.scale == 0 || self.crop_hr == 0 || !self.crop_hr.is_multiple_of(self.scale) {
            return bad(format!("crop {} is not a positive multiple of scale {}", self.crop_hr, self.scale));
        }
        if self.log_every == 0 {
            return bad("log interval must be at least 1".into());
        }
        Ok(())
    }
}

/// Learning rate for iteration `iter` (0-based).
pub fn lr_at(iter: u64, cfg: &TrainConfig) -> f64 {
    if iter < cfg.lr_drop_at {
        cfg.lr_initial
    } else {
        cfg.lr_initial / cfg.lr_drop_factor
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_schedule() {
        let cfg = TrainConfig::toy(ActivationKind::Maxout, 16);
        assert_eq!(lr_at(0, &cfg), 1e-4);
        assert_eq!(lr_at(49_999, &cfg), 1e-4);
        assert!((lr_at(50_000, &cfg) - 1e-5).abs() < 1e-20);
    }

    #[test]
    fn main_schedule() {
        let cfg = TrainConfig::main(Preset::Dnsr, 4);
        assert_eq!(lr_at(499_999, &cfg), 1e-4);
        assert!((lr_at(500_000, &cfg) - 1e-5).abs() < 1e-20);
        assert_eq!(cfg.crop_hr, 76);
        assert_eq!(TrainConfig::main(Preset::VdsrMu, 3).crop_hr, 75);
    }

    #[test]
    fn invalid_configs() {
        let ok = TrainConfig::toy(ActivationKind::Relu, 12);
        assert!(ok.validate().is_ok());
        for cfg in [
            TrainConfig { lr_initial: 0.0, ..ok.clone() },
            TrainConfig { batch: 0, ..ok.clone() },
            TrainConfig { crop_hr: 42, ..ok.clone() },
        ] {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        }
    }
}
