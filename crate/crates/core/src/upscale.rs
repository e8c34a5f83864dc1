//! Applying a trained network to whole images.

use crate::error::Result;
use crate::imaging::{rgb_to_ycbcr, upscale, ycbcr_to_rgb, ColorSpace, Image, Method, INPUT_SHIFT};
use crate::network::Network;

/// Super-resolves a luma plane; the result is rounded to 8-bit levels.
pub fn super_resolve_luma(net: &mut Network, lr_y: &Image) -> Result<Image> {
    let r = net.scale();
    let base = upscale(lr_y, r, Method::Nearest)?;
    let input = lr_y.to_tensor().map(|v| v - INPUT_SHIFT);
    let out = net.predict(&input, &base.to_tensor())?;
    Ok(Image::from_tensor(&out, 0, ColorSpace::Gray)?.quantized())
}

/// Full-colour upscale: the network handles luma, chroma is upscaled bicubically.
/// Gray inputs give gray outputs.
pub fn super_resolve(net: &mut Network, lr: &Image) -> Result<Image> {
    match lr.space() {
        ColorSpace::Gray => super_resolve_luma(net, lr),
        ColorSpace::Rgb | ColorSpace::YCbCr => {
            let ycc = if lr.space() == ColorSpace::Rgb {
                rgb_to_ycbcr(lr)?
            } else {
                lr.clone()
            };
            let y = super_resolve_luma(net, &ycc.channel(0).quantized())?;
            let cb = upscale(&ycc.channel(1), net.scale(), Method::Bicubic)?;
            let cr = upscale(&ycc.channel(2), net.scale(), Method::Bicubic)?;
            let out = Image::from_planes(ColorSpace::YCbCr, &[y, cb, cr])?;
            if lr.space() == ColorSpace::Rgb {
                ycbcr_to_rgb(&out)
            } else {
                Ok(out)
            }
        }
    }
}
