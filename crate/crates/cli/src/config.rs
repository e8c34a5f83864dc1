//! Flat `key = value` run configuration, merged with command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use maxsr::imaging::{Augment, Degradation};
use maxsr::network::PresetName;
use maxsr::train::TrainConfig;
use maxsr::ActivationKind;

use crate::CliError;

pub const KEYS: &[&str] = &[
    "preset",
    "activation",
    "width",
    "depth",
    "scale",
    "train-dir",
    "test-dir",
    "iters",
    "batch",
    "crop",
    "seed",
    "threads",
    "deterministic",
    "out",
    "lr",
    "lr-drop-at",
    "lr-drop-factor",
    "degradation",
    "augment",
    "log-every",
    "eval-every",
    "checkpoint-every",
];

/// Raw settings, later values replacing earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Parses `key = value` lines; `#` starts a comment. Keys may also be
    /// written with underscores.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut s = Settings::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{origin}:{}: expected key = value", n + 1)))?;
            s.set(k.trim(), v.trim())
                .map_err(|e| CliError::Usage(format!("{origin}:{}: {e}", n + 1)))?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let key = key.replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(format!("unknown config key '{key}'"));
        }
        self.values.insert(key, value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn merge(&mut self, other: &Settings) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("invalid value '{v}' for {key}: {e}")))
            })
            .transpose()
    }

    fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(false),
            Some("true" | "1" | "yes" | "on" | "") => Ok(true),
            Some("false" | "0" | "no" | "off") => Ok(false),
            Some(v) => Err(CliError::Usage(format!("invalid value '{v}' for {key}: expected true or false"))),
        }
    }
}

pub fn parse_augment(s: &str) -> Result<Augment, CliError> {
    let mut a = Augment::NONE;
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part {
            "none" => {}
            "all" => a = Augment::ALL,
            "flip" => a.flip = true,
            "mirror" => a.mirror = true,
            "rotate" => a.rotate = true,
            "intensity" => a.intensity = Augment::ALL.intensity,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown augmentation '{other}' (flip, mirror, rotate, intensity, all, none)"
                )))
            }
        }
    }
    Ok(a)
}

/// Fully resolved options shared by every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub threads: Option<usize>,
    pub deterministic: bool,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> Result<Self, CliError> {
        let usage = |e: maxsr::Error| CliError::Usage(e.to_string());
        let name: PresetName = s.parsed("preset")?.unwrap_or(PresetName::Toy);
        let kind: ActivationKind = s.parsed("activation")?.unwrap_or(ActivationKind::Maxout);
        let width: Option<usize> = s.parsed("width")?;
        let depth: Option<usize> = s.parsed("depth")?;
        if name != PresetName::Toy && (width.is_some() || depth.is_some() || s.get("activation").is_some()) {
            return Err(CliError::Usage(
                "--activation, --width and --depth only apply to the toy preset".into(),
            ));
        }
        let preset = name.resolve(kind, width, depth);
        let scale: usize = s.parsed("scale")?.unwrap_or(4);
        let mut t = match name {
            PresetName::Toy => TrainConfig {
                preset,
                scale,
                ..TrainConfig::toy(kind, 0)
            },
            _ => TrainConfig::main(preset, scale),
        };
        if let Some(v) = s.parsed("iters")? {
            t.iterations = v;
        }
        if let Some(v) = s.parsed("batch")? {
            t.batch = v;
        }
        if let Some(v) = s.parsed("crop")? {
            t.crop_hr = v;
        }
        if let Some(v) = s.parsed("seed")? {
            t.seed = v;
        }
        if let Some(v) = s.parsed("lr")? {
            t.lr_initial = v;
        }
        if let Some(v) = s.parsed("lr-drop-at")? {
            t.lr_drop_at = v;
        }
        if let Some(v) = s.parsed("lr-drop-factor")? {
            t.lr_drop_factor = v;
        }
        if let Some(v) = s.get("degradation") {
            t.degradation = v.parse::<Degradation>().map_err(usage)?;
        }
        if let Some(v) = s.get("augment") {
            t.augment = parse_augment(v)?;
        }
        if let Some(v) = s.parsed("log-every")? {
            t.log_every = v;
        }
        if let Some(v) = s.parsed("eval-every")? {
            t.eval_every = v;
        }
        if let Some(v) = s.parsed("checkpoint-every")? {
            t.checkpoint_every = v;
        }
        t.train_dir = s.get("train-dir").map(PathBuf::from);
        t.test_dir = s.get("test-dir").map(PathBuf::from);
        t.validate().map_err(usage)?;
        maxsr::NetworkSpec::for_preset(t.preset, t.scale).map_err(usage)?;

        let threads: Option<usize> = s.parsed("threads")?;
        if threads == Some(0) {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        Ok(RunConfig {
            train: t,
            threads,
            deterministic: s.flag("deterministic")?,
            out: s.get("out").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out")),
        })
    }

    /// `key = value` lines describing the resolved run, for the reports directory.
    pub fn describe(&self) -> String {
        let t = &self.train;
        let aug = &t.augment;
        let mut parts = Vec::new();
        for (on, name) in [(aug.flip, "flip"), (aug.mirror, "mirror"), (aug.rotate, "rotate")] {
            if on {
                parts.push(name.to_string());
            }
        }
        if let Some((lo, hi)) = aug.intensity {
            parts.push(format!("intensity({lo},{hi})"));
        }
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        format!(
            "preset = {}\nscale = {}\niters = {}\nlr = {:e}\nlr-drop-at = {}\nlr-drop-factor = {}\nbatch = {}\n\
             crop = {}\naugment = {}\ndegradation = {}\nseed = {}\ntrain-dir = {}\ntest-dir = {}\n\
             deterministic = {}\n",
            t.preset,
            t.scale,
            t.iterations,
            t.lr_initial,
            t.lr_drop_at,
            t.lr_drop_factor,
            t.batch,
            t.crop_hr,
            if parts.is_empty() { "none".into() } else { parts.join(",") },
            t.degradation,
            t.seed,
            path(&t.train_dir),
            path(&t.test_dir),
            self.deterministic,
        )
    }
}
