//! BT.601 studio-swing YCbCr, as used by the usual SR evaluation scripts.
//!
//! On an 8-bit scale with `R, G, B` in [0, 1]:
//!
//! ```text
//! Y  =  16 + 65.481 R + 128.553 G +  24.966 B
//! Cb = 128 - 37.797 R -  74.203 G + 112.0   B
//! Cr = 128 + 112.0  R -  93.786 G -  18.214 B
//! ```

use crate::error::{Error, Result};
use crate::imaging::image::{ColorSpace, Image};

const OFFSET: [f64; 3] = [16.0, 128.0, 128.0];
const FORWARD: [[f64; 3]; 3] = [
    [65.481, 128.553, 24.966],
    [-37.797, -74.203, 112.0],
    [112.0, -93.786, -18.214],
];

fn inverse(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            // cofactor of m[j][i]
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            *v = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
        }
    }
    inv
}

/// Luma of one RGB pixel, in [0, 1].
#[inline]
pub fn luma(r: f64, g: f64, b: f64) -> f64 {
    (OFFSET[0] + FORWARD[0][0] * r + FORWARD[0][1] * g + FORWARD[0][2] * b) / 255.0
}

pub fn rgb_to_ycbcr(img: &Image) -> Result<Image> {
    if img.space() != ColorSpace::Rgb {
        return Err(Error::Dimension(format!("expected an RGB image, got {:?}", img.space())));
    }
    Image::from_fn(img.height(), img.width(), ColorSpace::YCbCr, |c, y, x| {
        let rgb = [img.get(0, y, x), img.get(1, y, x), img.get(2, y, x)];
        let m = FORWARD[c];
        (OFFSET[c] + m[0] * rgb[0] + m[1] * rgb[1] + m[2] * rgb[2]) / 255.0
    })
}

pub fn ycbcr_to_rgb(img: &Image) -> Result<Image> {
    if img.space() != ColorSpace::YCbCr {
        return Err(Error::Dimension(format!("expected a YCbCr image, got {:?}", img.space())));
    }
    let inv = inverse(&FORWARD);
    Image::from_fn(img.height(), img.width(), ColorSpace::Rgb, |c, y, x| {
        let d: Vec<f64> = (0..3).map(|k| img.get(k, y, x) * 255.0 - OFFSET[k]).collect();
        inv[c][0] * d[0] + inv[c][1] * d[1] + inv[c][2] * d[2]
    })
}

/// The luma plane of an RGB image; gray images are returned unchanged.
pub fn extract_luma(img: &Image) -> Result<Image> {
    match img.space() {
        ColorSpace::Gray => Ok(img.clone()),
        ColorSpace::YCbCr => Ok(img.channel(0)),
        ColorSpace::Rgb => Image::from_fn(img.height(), img.width(), ColorSpace::Gray, |_, y, x| {
            luma(img.get(0, y, x), img.get(1, y, x), img.get(2, y, x))
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rgb(r: f64, g: f64, b: f64) -> Image {
        Image::new(1, 1, ColorSpace::Rgb, vec![r, g, b]).unwrap()
    }

    #[test]
    fn black_and_white_luma() {
        let black = rgb_to_ycbcr(&rgb(0.0, 0.0, 0.0)).unwrap();
        assert!((black.get(0, 0, 0) - 16.0 / 255.0).abs() < 1e-15);
        assert!((black.get(1, 0, 0) - 128.0 / 255.0).abs() < 1e-15);
        let white = rgb_to_ycbcr(&rgb(1.0, 1.0, 1.0)).unwrap();
        assert!((white.get(0, 0, 0) - 235.0 / 255.0).abs() < 1e-12);
        assert!((white.get(2, 0, 0) - 128.0 / 255.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_really_inverts() {
        let inv = inverse(&FORWARD);
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| inv[i][k] * FORWARD[k][j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn round_trip() {
        let mut s = 99u64;
        let img = Image::from_fn(9, 11, ColorSpace::Rgb, |_, _, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        })
        .unwrap();
        let back = ycbcr_to_rgb(&rgb_to_ycbcr(&img).unwrap()).unwrap();
        let err = img
            .data()
            .iter()
            .zip(back.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn wrong_channel_count() {
        let g = Image::gray(1, 1, vec![0.5]).unwrap();
        assert!(matches!(rgb_to_ycbcr(&g), Err(Error::Dimension(_))));
        assert!(matches!(ycbcr_to_rgb(&g), Err(Error::Dimension(_))));
    }
}
