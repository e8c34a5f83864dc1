//! Separable nearest-neighbour and bicubic resizing with pixel-centre alignment.
//!
//! Output pixel `d` of an axis resized from `n_in` to `n_out` samples the
//! input at `u = (d + 0.5) * n_in / n_out - 0.5`. Bicubic uses the Keys
//! kernel with `a = -0.5`; when shrinking, the kernel is stretched by
//! `n_in / n_out` so it also low-passes (the behaviour of MATLAB's
//! `imresize`, which the published bicubic baselines were produced with).
//! Taps outside the image are mirrored (`-1 -> 0`, `n -> n-1`).

use crate::error::{Error, Result};
use crate::imaging::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Nearest,
    Bicubic,
}

/// Keys cubic convolution kernel, `a = -0.5`.
pub fn cubic(x: f64) -> f64 {
    let a = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    } else {
        0.0
    }
}

/// Sparse interpolation matrix of one axis: per output sample, `(index, weight)` taps.
#[derive(Debug, Clone)]
pub struct AxisWeights {
    pub taps: Vec<Vec<(usize, f64)>>,
}

fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

pub fn axis_weights(n_in: usize, n_out: usize, method: Method) -> AxisWeights {
    let scale = n_out as f64 / n_in as f64;
    let taps = (0..n_out)
        .map(|d| match method {
            Method::Nearest => {
                let src = (((d as f64 + 0.5) * n_in as f64 / n_out as f64).floor() as usize).min(n_in - 1);
                vec![(src, 1.0)]
            }
            Method::Bicubic => {
                let u = (d as f64 + 0.5) / scale - 0.5;
                let stretch = if scale < 1.0 { scale } else { 1.0 };
                let half_width = 2.0 / stretch;
                let first = (u - half_width).ceil() as isize;
                let last = (u + half_width).floor() as isize;
                let mut taps: Vec<(usize, f64)> = Vec::new();
                let mut total = 0.0;
                for i in first..=last {
                    let wgt = stretch * cubic(stretch * (u - i as f64));
                    if wgt == 0.0 {
                        continue;
                    }
                    total += wgt;
                    let src = mirror(i, n_in);
                    match taps.iter_mut().find(|(s, _)| *s == src) {
                        Some(t) => t.1 += wgt,
                        None => taps.push((src, wgt)),
                    }
                }
                for t in &mut taps {
                    t.1 /= total;
                }
                taps
            }
        })
        .collect();
    AxisWeights { taps }
}

/// Resizes every channel to `out_h x out_w`; results are clamped to [0, 1].
pub fn resample(img: &Image, out_h: usize, out_w: usize, method: Method) -> Result<Image> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::Dimension(format!("cannot resize to {out_h}x{out_w}")));
    }
    let (h, w) = (img.height(), img.width());
    let rows = axis_weights(h, out_h, method);
    let cols = axis_weights(w, out_w, method);
    let mut data = Vec::with_capacity(img.channels() * out_h * out_w);
    let mut tmp = vec![0.0; h * out_w];
    for c in 0..img.channels() {
        let plane = img.plane(c);
        // horizontal pass: h x out_w
        for y in 0..h {
            let src = &plane[y * w..(y + 1) * w];
            for (x, taps) in cols.taps.iter().enumerate() {
                tmp[y * out_w + x] = taps.iter().map(|&(i, wt)| src[i] * wt).sum();
            }
        }
        // vertical pass
        for taps in &rows.taps {
            for x in 0..out_w {
                let v: f64 = taps.iter().map(|&(i, wt)| tmp[i * out_w + x] * wt).sum();
                data.push(v);
            }
        }
    }
    Image::new(out_h, out_w, img.space(), data)
}

/// Integer-factor upscale by `r`.
pub fn upscale(img: &Image, r: usize, method: Method) -> Result<Image> {
    resample(img, img.height() * r, img.width() * r, method)
}

/// Integer-factor downscale by `r`; dimensions must be divisible by `r`.
pub fn downscale(img: &Image, r: usize, method: Method) -> Result<Image> {
    if r == 0 || !img.height().is_multiple_of(r) || !img.width().is_multiple_of(r) {
        return Err(Error::Dimension(format!(
            "{}x{} is not divisible by {r}",
            img.height(),
            img.width()
        )));
    }
    resample(img, img.height() / r, img.width() / r, method)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::image::ColorSpace;

    fn img(h: usize, w: usize, vals: &[f64]) -> Image {
        Image::gray(h, w, vals.to_vec()).unwrap()
    }

    #[test]
    fn kernel_shape() {
        assert_eq!(cubic(0.0), 1.0);
        assert_eq!(cubic(1.0), 0.0);
        assert_eq!(cubic(2.0), 0.0);
        assert!((cubic(0.5) - 0.5625).abs() < 1e-15);
        assert!((cubic(1.5) + 0.0625).abs() < 1e-15);
    }

    #[test]
    fn same_size_is_identity() {
        let mut s = 3u32;
        let a = Image::from_fn(7, 5, ColorSpace::Rgb, |_, _, _| {
            s = s.wrapping_mul(747796405).wrapping_add(2891336453);
            (s >> 8) as f64 / (1u32 << 24) as f64
        })
        .unwrap();
        for m in [Method::Nearest, Method::Bicubic] {
            let b = resample(&a, 7, 5, m).unwrap();
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn nearest_doubling() {
        let a = img(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b = upscale(&a, 2, Method::Nearest).unwrap();
        #[rustfmt::skip]
        let expect = [
            1.0, 1.0, 0.0, 0.0,
            1.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 1.0,
            0.0, 0.0, 1.0, 1.0,
        ];
        assert_eq!(b.data(), &expect);
    }

    #[test]
    fn nearest_downscale_picks_block_centres() {
        // floor((d + 0.5) * 3) = 3d + 1
        let a = Image::from_fn(6, 6, ColorSpace::Gray, |_, y, x| (y * 6 + x) as f64 / 35.0).unwrap();
        let b = downscale(&a, 3, Method::Nearest).unwrap();
        assert_eq!(b.get(0, 1, 0), a.get(0, 4, 1));
    }

    #[test]
    fn weights_sum_to_one_and_constants_survive() {
        for (n_in, n_out) in [(12, 3), (12, 4), (5, 20), (7, 3)] {
            let w = axis_weights(n_in, n_out, Method::Bicubic);
            for taps in &w.taps {
                let s: f64 = taps.iter().map(|t| t.1).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
        let a = Image::gray(8, 8, vec![0.3; 64]).unwrap();
        let b = downscale(&a, 4, Method::Bicubic).unwrap();
        assert!(b.data().iter().all(|v| (v - 0.3).abs() < 1e-12));
    }

    #[test]
    fn downscale_needs_divisible_dims() {
        let a = Image::gray(5, 4, vec![0.0; 20]).unwrap();
        assert!(downscale(&a, 2, Method::Bicubic).is_err());
    }

    #[test]
    fn mirror_indexing() {
        assert_eq!(mirror(-1, 4), 0);
        assert_eq!(mirror(-2, 4), 1);
        assert_eq!(mirror(4, 4), 3);
        assert_eq!(mirror(5, 4), 2);
        assert_eq!(mirror(2, 4), 2);
    }
}
