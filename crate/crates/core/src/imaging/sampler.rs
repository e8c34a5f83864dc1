//! Datasets of image pairs and random aligned crops with augmentation.

use std::path::{Path, PathBuf};

use rand::Rng;

use crate::error::{Error, Result};
use crate::imaging::image::{load_image, Image};
use crate::imaging::pair::{make_pair, Degradation, ImagePair};
use crate::tensor::Tensor4;

const EXTENSIONS: [&str; 5] = ["png", "bmp", "pgm", "ppm", "pnm"];

/// Subtracted from LR crops before they enter the network.
pub const INPUT_SHIFT: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub names: Vec<String>,
    pub pairs: Vec<ImagePair>,
    pub scale: usize,
}

/// Image files named by `path`: a directory (scanned for supported
/// extensions, sorted by name) or a manifest listing one path per line,
/// relative to the manifest. Blank lines and `#` comments are skipped.
pub fn list_images(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_dir() {
        let mut files = Vec::new();
        for entry in std::fs::read_dir(path).map_err(|e| Error::io(path, e))? {
            let p = entry.map_err(|e| Error::io(path, e))?.path();
            let ext = p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
            if p.is_file() && ext.is_some_and(|e| EXTENSIONS.contains(&e.as_str())) {
                files.push(p);
            }
        }
        files.sort();
        return Ok(files);
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let root = path.parent().unwrap_or(Path::new("."));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| root.join(l))
        .collect())
}

impl Dataset {
    pub fn from_images(named: Vec<(String, Image)>, r: usize, degradation: Degradation) -> Result<Self> {
        if named.is_empty() {
            return Err(Error::Data("dataset is empty".into()));
        }
        let mut names = Vec::with_capacity(named.len());
        let mut pairs = Vec::with_capacity(named.len());
        for (name, img) in named {
            let pair = make_pair(&img, r, degradation).map_err(|e| Error::Data(format!("{name}: {e}")))?;
            names.push(name);
            pairs.push(pair);
        }
        Ok(Dataset { names, pairs, scale: r })
    }

    pub fn load(path: impl AsRef<Path>, r: usize, degradation: Degradation) -> Result<Self> {
        let path = path.as_ref();
        let files = list_images(path)?;
        if files.is_empty() {
            return Err(Error::Data(format!("no images found in {}", path.display())));
        }
        let mut named = Vec::with_capacity(files.len());
        for f in files {
            let name = f.file_stem().and_then(|s| s.to_str()).unwrap_or("?").to_string();
            named.push((name, load_image(&f)?));
        }
        Self::from_images(named, r, degradation)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Smallest HR side over all images.
    pub fn min_side(&self) -> usize {
        self.pairs
            .iter()
            .map(|p| p.hr_y.height().min(p.hr_y.width()))
            .min()
            .unwrap_or(0)
    }

    /// Keeps only the first `n` images.
    pub fn truncate(&mut self, n: usize) {
        self.names.truncate(n);
        self.pairs.truncate(n);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Augment {
    /// Upside-down flip.
    pub flip: bool,
    /// Left-right mirror.
    pub mirror: bool,
    /// Rotation by a multiple of 90 degrees.
    pub rotate: bool,
    /// Intensity multiplier range.
    pub intensity: Option<(f64, f64)>,
}

impl Augment {
    pub const NONE: Augment = Augment {
        flip: false,
        mirror: false,
        rotate: false,
        intensity: None,
    };
    pub const ALL: Augment = Augment {
        flip: true,
        mirror: true,
        rotate: true,
        intensity: Some((0.8, 1.2)),
    };
}

/// One drawn augmentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub flip: bool,
    pub mirror: bool,
    /// Counter-clockwise quarter turns.
    pub quarter_turns: u8,
    pub intensity: f64,
}

impl Transform {
    pub const IDENTITY: Transform = Transform {
        flip: false,
        mirror: false,
        quarter_turns: 0,
        intensity: 1.0,
    };

    pub fn draw(aug: &Augment, rng: &mut impl Rng) -> Self {
        Transform {
            flip: aug.flip && rng.gen::<bool>(),
            mirror: aug.mirror && rng.gen::<bool>(),
            quarter_turns: if aug.rotate { rng.gen_range(0..4) } else { 0 },
            intensity: aug.intensity.map_or(1.0, |(lo, hi)| rng.gen_range(lo..hi)),
        }
    }

    /// Applies the transform to a square single-channel image.
    pub fn apply(&self, img: &Image) -> Result<Image> {
        let n = img.height();
        if img.width() != n || img.channels() != 1 {
            return Err(Error::Dimension("augmentation expects square single-channel crops".into()));
        }
        Image::from_fn(n, n, img.space(), |_, y, x| {
            // map the output position back to the source
            let (mut sy, mut sx) = (y, x);
            for _ in 0..self.quarter_turns {
                // inverse of one counter-clockwise turn
                (sy, sx) = (sx, n - 1 - sy);
            }
            if self.mirror {
                sx = n - 1 - sx;
            }
            if self.flip {
                sy = n - 1 - sy;
            }
            (img.get(0, sy, sx) * self.intensity).clamp(0.0, 1.0)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleConfig {
    pub batch: usize,
    pub crop_hr: usize,
    pub augment: Augment,
}

impl SampleConfig {
    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        let r = dataset.scale;
        if self.batch == 0 {
            return Err(Error::Config("batch must be at least 1".into()));
        }
        if self.crop_hr == 0 || !self.crop_hr.is_multiple_of(r) {
            return Err(Error::Config(format!(
                "crop {} is not a positive multiple of scale {r}",
                self.crop_hr
            )));
        }
        if self.crop_hr > dataset.min_side() {
            return Err(Error::Config(format!(
                "crop {} exceeds the smallest training image side {}",
                self.crop_hr,
                dataset.min_side()
            )));
        }
        if let Some((lo, hi)) = self.augment.intensity {
            if !(lo > 0.0 && lo < hi) {
                return Err(Error::Config(format!("bad intensity range ({lo}, {hi})")));
            }
        }
        Ok(())
    }
}

/// Aligned crops of one pair, before the input shift.
#[derive(Debug, Clone, PartialEq)]
pub struct Crop {
    pub lr: Image,
    pub base: Image,
    pub hr: Image,
    pub transform: Transform,
}

pub fn sample_crop(dataset: &Dataset, cfg: &SampleConfig, rng: &mut impl Rng) -> Result<Crop> {
    let r = dataset.scale;
    let pair = &dataset.pairs[rng.gen_range(0..dataset.len())];
    let crop_lr = cfg.crop_hr / r;
    let ly = rng.gen_range(0..=pair.lr_y.height() - crop_lr);
    let lx = rng.gen_range(0..=pair.lr_y.width() - crop_lr);
    let lr = pair.lr_y.crop(ly, lx, crop_lr, crop_lr)?;
    let base = pair.base_hr_y.crop(ly * r, lx * r, cfg.crop_hr, cfg.crop_hr)?;
    let hr = pair.hr_y.crop(ly * r, lx * r, cfg.crop_hr, cfg.crop_hr)?;
    let t = Transform::draw(&cfg.augment, rng);
    Ok(Crop {
        lr: t.apply(&lr)?,
        base: t.apply(&base)?,
        hr: t.apply(&hr)?,
        transform: t,
    })
}

/// Network-ready batch: `lr` already carries the `-0.5` shift.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub lr: Tensor4,
    pub base: Tensor4,
    pub hr: Tensor4,
}

pub fn sample_batch(dataset: &Dataset, cfg: &SampleConfig, rng: &mut impl Rng) -> Result<Batch> {
    cfg.validate(dataset)?;
    let mut lr = Vec::with_capacity(cfg.batch);
    let mut base = Vec::with_capacity(cfg.batch);
    let mut hr = Vec::with_capacity(cfg.batch);
    for _ in 0..cfg.batch {
        let c = sample_crop(dataset, cfg, rng)?;
        lr.push(c.lr.to_tensor().map(|v| v - INPUT_SHIFT));
        base.push(c.base.to_tensor());
        hr.push(c.hr.to_tensor());
    }
    Ok(Batch {
        lr: Tensor4::stack(&lr)?,
        base: Tensor4::stack(&base)?,
        hr: Tensor4::stack(&hr)?,
    })
}
