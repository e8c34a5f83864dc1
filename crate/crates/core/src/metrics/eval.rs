//! Dataset-level PSNR/SSIM reports for networks and interpolation baselines.

use std::fmt::Write as _;
use std::path::Path;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::{list_images, load_image, make_pair, upscale, Dataset, Degradation, Image, ImagePair, Method};
use crate::metrics::quality::{psnr, shave, ssim};
use crate::network::Network;
use crate::upscale::super_resolve_luma;

#[derive(Debug, Clone, PartialEq)]
pub struct ImageScore {
    pub name: String,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    /// What produced the SR images, e.g. `bicubic` or a preset name.
    pub method: String,
    pub scale: usize,
    pub shave: usize,
    pub images: Vec<ImageScore>,
    /// Images that could not be scored, with the reason.
    pub failures: Vec<(String, String)>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for x in xs {
        sum += x;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

impl EvalReport {
    /// Arithmetic mean; infinite if any image matched exactly.
    pub fn mean_psnr(&self) -> f64 {
        mean(self.images.iter().map(|s| s.psnr))
    }

    pub fn mean_ssim(&self) -> f64 {
        mean(self.images.iter().map(|s| s.ssim))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} on {} x{} (Y channel, shave {})",
            self.method, self.dataset, self.scale, self.shave
        );
        for s in &self.images {
            let _ = writeln!(out, "  {:<20} psnr {:>8.4} dB  ssim {:.4}", s.name, s.psnr, s.ssim);
        }
        for (name, why) in &self.failures {
            let _ = writeln!(out, "  {name:<20} FAILED: {why}");
        }
        let _ = writeln!(
            out,
            "  {:<20} psnr {:>8.4} dB  ssim {:.4}",
            "mean",
            self.mean_psnr(),
            self.mean_ssim()
        );
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,method,scale,image,psnr,ssim\n");
        let mut row = |name: &str, p: f64, s: f64| {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6},{:.6}",
                self.dataset, self.method, self.scale, name, p, s
            );
        };
        for s in &self.images {
            row(&s.name, s.psnr, s.ssim);
        }
        row("mean", self.mean_psnr(), self.mean_ssim());
        out
    }
}

/// PSNR and SSIM of a luma prediction against the ground truth, both with a
/// `border`-pixel shave.
pub fn score(name: &str, pred: &Image, truth: &Image, border: usize) -> Result<ImageScore> {
    let p = psnr(pred, truth, border)?;
    let s = ssim(&shave(pred, border)?, &shave(truth, border)?)?;
    Ok(ImageScore {
        name: name.to_string(),
        psnr: p,
        ssim: s,
    })
}

fn collect<T: Sync>(
    items: &[T],
    f: impl Fn(&T) -> std::result::Result<ImageScore, (String, String)> + Sync + Send,
) -> (Vec<ImageScore>, Vec<(String, String)>) {
    #[cfg(feature = "parallel")]
    let results: Vec<_> = items.par_iter().map(&f).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = items.iter().map(&f).collect();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for r in results {
        match r {
            Ok(s) => ok.push(s),
            Err(e) => failed.push(e),
        }
    }
    (ok, failed)
}

fn predict_pair(net: &Network, pair: &ImagePair) -> Result<Image> {
    let mut net = net.clone();
    super_resolve_luma(&mut net, &pair.lr_y)
}

/// Scores `net` on every pair of `dataset`, in dataset order.
pub fn evaluate(net: &Network, dataset: &Dataset, name: &str) -> Result<EvalReport> {
    if net.scale() != dataset.scale {
        return Err(Error::Config(format!(
            "network scale {} does not match dataset scale {}",
            net.scale(),
            dataset.scale
        )));
    }
    let r = dataset.scale;
    let items: Vec<_> = dataset.names.iter().zip(&dataset.pairs).collect();
    let (images, failures) = collect(&items, |(n, pair)| {
        predict_pair(net, pair)
            .and_then(|sr| score(n, &sr, &pair.hr_y, r))
            .map_err(|e| (n.to_string(), e.to_string()))
    });
    Ok(EvalReport {
        dataset: name.to_string(),
        method: net.spec().preset.to_string(),
        scale: r,
        shave: r,
        images,
        failures,
    })
}

/// Like [`evaluate`], but loads each image itself so unreadable files are
/// reported as failures instead of aborting the run.
pub fn evaluate_path(
    net: &Network,
    path: impl AsRef<Path>,
    degradation: Degradation,
    name: &str,
) -> Result<EvalReport> {
    let r = net.scale();
    let files = list_images(path.as_ref())?;
    let (images, failures) = collect(&files, |f| {
        let n = f.file_stem().and_then(|s| s.to_str()).unwrap_or("?").to_string();
        load_image(f)
            .and_then(|img| make_pair(&img, r, degradation))
            .and_then(|pair| {
                let sr = predict_pair(net, &pair)?;
                score(&n, &sr, &pair.hr_y, r)
            })
            .map_err(|e| (n.clone(), e.to_string()))
    });
    Ok(EvalReport {
        dataset: name.to_string(),
        method: net.spec().preset.to_string(),
        scale: r,
        shave: r,
        images,
        failures,
    })
}

/// Scores plain interpolation of the LR images.
pub fn baseline(dataset: &Dataset, method: Method, name: &str) -> Result<EvalReport> {
    let r = dataset.scale;
    let items: Vec<_> = dataset.names.iter().zip(&dataset.pairs).collect();
    let (images, failures) = collect(&items, |(n, pair)| {
        upscale(&pair.lr_y, r, method)
            .map(|sr| sr.quantized())
            .and_then(|sr| score(n, &sr, &pair.hr_y, r))
            .map_err(|e| (n.to_string(), e.to_string()))
    });
    Ok(EvalReport {
        dataset: name.to_string(),
        method: match method {
            Method::Bicubic => "bicubic".into(),
            Method::Nearest => "nearest".into(),
        },
        scale: r,
        shave: r,
        images,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;
    use crate::imaging::ColorSpace;
    use crate::network::Preset;

    fn dataset(r: usize) -> Dataset {
        let imgs = (0..2)
            .map(|i| {
                let img = Image::from_fn(36, 40, ColorSpace::Rgb, |c, y, x| {
                    0.5 + 0.3 * ((y as f64 * 0.3 + i as f64).sin() * (x as f64 * 0.2 + c as f64).cos())
                })
                .unwrap();
                (format!("im{i}"), img)
            })
            .collect();
        Dataset::from_images(imgs, r, Degradation::Bicubic).unwrap()
    }

    #[test]
    fn zero_network_matches_nearest_baseline() {
        let ds = dataset(4);
        let mut net = Network::build(Preset::toy(ActivationKind::Maxout, 8), 4, 1).unwrap();
        for p in net.params_mut() {
            p.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        let a = evaluate(&net, &ds, "synthetic").unwrap();
        let b = baseline(&ds, Method::Nearest, "synthetic").unwrap();
        assert_eq!(a.images, b.images);
        assert!(a.failures.is_empty());
    }

    #[test]
    fn hr_against_itself_is_infinite() {
        let ds = dataset(2);
        let s = score("x", &ds.pairs[0].hr_y, &ds.pairs[0].hr_y, 2).unwrap();
        assert_eq!(s.psnr, f64::INFINITY);
        assert_eq!(s.ssim, 1.0);
    }

    #[test]
    fn mean_is_arithmetic() {
        let ds = dataset(2);
        let rep = baseline(&ds, Method::Bicubic, "s").unwrap();
        let m = (rep.images[0].psnr + rep.images[1].psnr) / 2.0;
        assert_eq!(rep.mean_psnr(), m);
        assert!(rep.to_csv().lines().count() == 4);
        assert!(rep.to_text().contains("mean"));
    }

    #[test]
    fn bad_files_are_reported_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let ds = dataset(2);
        crate::imaging::save_image(&ds.pairs[0].hr_y, dir.path().join("good.png")).unwrap();
        std::fs::write(dir.path().join("broken.png"), b"not a png").unwrap();
        let net = Network::build(Preset::toy(ActivationKind::Relu, 4), 2, 0).unwrap();
        let rep = evaluate_path(&net, dir.path(), Degradation::Bicubic, "dir").unwrap();
        assert_eq!(rep.images.len(), 1);
        assert_eq!(rep.failures.len(), 1);
        assert_eq!(rep.failures[0].0, "broken");
    }

    #[test]
    fn scale_mismatch() {
        let net = Network::build(Preset::toy(ActivationKind::Relu, 4), 3, 0).unwrap();
        assert!(matches!(evaluate(&net, &dataset(2), "s"), Err(Error::Config(_))));
    }
}
