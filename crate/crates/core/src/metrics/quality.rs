//! Full-reference quality measures on single-channel images in [0, 1].

use crate::error::{Error, Result};
use crate::imaging::Image;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn check_pair(a: &Image, b: &Image) -> Result<()> {
    if a.height() != b.height() || a.width() != b.width() || a.channels() != b.channels() {
        return Err(Error::Dimension(format!(
            "cannot compare {}x{}x{} with {}x{}x{}",
            a.channels(),
            a.height(),
            a.width(),
            b.channels(),
            b.height(),
            b.width()
        )));
    }
    Ok(())
}

/// Drops `shave` pixels from every border.
pub fn shave(img: &Image, shave: usize) -> Result<Image> {
    if 2 * shave >= img.height() || 2 * shave >= img.width() {
        return Err(Error::Dimension(format!(
            "cannot shave {shave} pixels from a {}x{} image",
            img.height(),
            img.width()
        )));
    }
    img.crop(shave, shave, img.height() - 2 * shave, img.width() - 2 * shave)
}

/// Peak signal-to-noise ratio in dB with a peak of 1, after removing a
/// `shave`-pixel border. Identical images give `f64::INFINITY`.
pub fn psnr(a: &Image, b: &Image, border: usize) -> Result<f64> {
    check_pair(a, b)?;
    let (a, b) = (shave(a, border)?, shave(b, border)?);
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.data().len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-10.0 * mse.log10())
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Separable weighted sum over every fully-contained window.
fn filter_valid(src: &[f64], h: usize, w: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (oh, ow) = (h - n + 1, w - n + 1);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..n).map(|i| k[i] * src[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|i| k[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean structural similarity of two single-channel images over all valid
/// 11x11 Gaussian windows (sigma 1.5, K1 0.01, K2 0.03, dynamic range 1).
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    check_pair(a, b)?;
    if a.channels() != 1 {
        return Err(Error::Dimension("ssim expects single-channel images".into()));
    }
    let (h, w) = (a.height(), a.width());
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::Dimension(format!(
            "{h}x{w} image is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window"
        )));
    }
    let k = gaussian_window();
    let (x, y) = (a.data(), b.data());
    let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> { x.iter().zip(y).map(|(&p, &q)| f(p, q)).collect() };
    let mu_x = filter_valid(x, h, w, &k);
    let mu_y = filter_valid(y, h, w, &k);
    let xx = filter_valid(&prod(&|p, _| p * p), h, w, &k);
    let yy = filter_valid(&prod(&|_, q| q * q), h, w, &k);
    let xy = filter_valid(&prod(&|p, q| p * q), h, w, &k);
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let total: f64 = (0..mu_x.len())
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let sx = xx[i] - mx * mx;
            let sy = yy[i] - my * my;
            let sxy = xy[i] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sx + sy + c2))
        })
        .sum();
    Ok(total / mu_x.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::ColorSpace;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(h: usize, w: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(h, w, ColorSpace::Gray, |_, _, _| rng.gen_range(0.0..1.0)).unwrap()
    }

    #[test]
    fn identical_images_are_infinite() {
        let a = random(10, 10, 1);
        assert_eq!(psnr(&a, &a, 2).unwrap(), f64::INFINITY);
    }

    #[test]
    fn one_level_difference() {
        let a = Image::gray(8, 8, vec![100.0 / 255.0; 64]).unwrap();
        let b = Image::gray(8, 8, vec![101.0 / 255.0; 64]).unwrap();
        let p = psnr(&a, &b, 1).unwrap();
        assert!((p - 20.0 * 255f64.log10()).abs() < 1e-9);
        assert!((p - 48.1308).abs() < 1e-4);
    }

    #[test]
    fn psnr_is_symmetric_and_monotone_in_noise() {
        let a = random(16, 16, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let base = a.data().iter().map(|v| 0.25 + 0.5 * v).collect::<Vec<_>>();
        let a = Image::gray(16, 16, base.clone()).unwrap();
        let mut last = f64::INFINITY;
        for amp in [0.01, 0.05, 0.2] {
            let b = Image::gray(16, 16, base.iter().zip(&noise).map(|(v, n)| v + amp * n).collect()).unwrap();
            let p = psnr(&a, &b, 0).unwrap();
            assert_eq!(p, psnr(&b, &a, 0).unwrap());
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn shave_is_applied() {
        let a = Image::gray(6, 6, vec![0.5; 36]).unwrap();
        let mut d = vec![0.5; 36];
        d[0] = 0.0;
        let b = Image::gray(6, 6, d).unwrap();
        assert!(psnr(&a, &b, 0).unwrap().is_finite());
        assert_eq!(psnr(&a, &b, 1).unwrap(), f64::INFINITY);
        assert!(psnr(&a, &b, 3).is_err());
    }

    #[test]
    fn ssim_identity_and_symmetry() {
        let a = random(20, 17, 4);
        let b = random(20, 17, 5);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        assert_eq!(ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
    }

    #[test]
    fn ssim_of_inverted_binary_image_is_negative() {
        let a = Image::from_fn(16, 16, ColorSpace::Gray, |_, y, x| ((y / 2 + x / 3) % 2) as f64).unwrap();
        let b = Image::from_fn(16, 16, ColorSpace::Gray, |_, y, x| -a.get(0, y, x) + 1.0).unwrap();
        assert!(ssim(&a, &b).unwrap() < 0.0);
    }

    #[test]
    fn errors() {
        let a = random(10, 10, 1);
        let b = random(10, 12, 1);
        assert!(matches!(psnr(&a, &b, 0), Err(Error::Dimension(_))));
        assert!(matches!(ssim(&a, &a), Err(Error::Dimension(_))));
    }

    #[test]
    fn window_is_normalised() {
        let w = gaussian_window();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(w[0], w[10]);
    }
}
