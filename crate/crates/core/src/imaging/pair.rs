use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imaging::color::extract_luma;
use crate::imaging::image::Image;
use crate::imaging::resample::{downscale, upscale, Method};

/// How LR images are produced from HR ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Degradation {
    #[default]
    Bicubic,
    Nearest,
}

impl Degradation {
    pub fn method(self) -> Method {
        match self {
            Degradation::Bicubic => Method::Bicubic,
            Degradation::Nearest => Method::Nearest,
        }
    }
}

impl fmt::Display for Degradation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Degradation::Bicubic => "bicubic",
            Degradation::Nearest => "nearest",
        })
    }
}

impl FromStr for Degradation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bicubic" => Ok(Degradation::Bicubic),
            "nearest" => Ok(Degradation::Nearest),
            other => Err(Error::Config(format!("unknown degradation '{other}' (bicubic, nearest)"))),
        }
    }
}

/// Ground-truth luma, its LR version and the nearest-neighbour upscale of
/// the LR used as the residual base.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePair {
    pub hr_y: Image,
    pub lr_y: Image,
    pub base_hr_y: Image,
    pub scale: usize,
}

/// Largest centred crop whose sides are multiples of `r`.
pub fn crop_to_multiple(img: &Image, r: usize) -> Result<Image> {
    if r == 0 {
        return Err(Error::Config("scale must be at least 1".into()));
    }
    let (h, w) = (img.height(), img.width());
    if h < r || w < r {
        return Err(Error::Data(format!("{h}x{w} image is too small for scale {r}")));
    }
    let (ch, cw) = (h - h % r, w - w % r);
    img.crop((h - ch) / 2, (w - cw) / 2, ch, cw)
}

/// Builds the training/evaluation pair of an RGB or gray image.
///
/// Luma is rounded to 8 bits, the same as the Y plane of an 8-bit YCbCr
/// image; the LR image is rounded likewise.
pub fn make_pair(hr: &Image, r: usize, degradation: Degradation) -> Result<ImagePair> {
    let hr = crop_to_multiple(hr, r)?;
    let hr_y = extract_luma(&hr)?.quantized();
    let lr_y = downscale(&hr_y, r, degradation.method())?.quantized();
    let base_hr_y = upscale(&lr_y, r, Method::Nearest)?;
    Ok(ImagePair {
        hr_y,
        lr_y,
        base_hr_y,
        scale: r,
    })
}
