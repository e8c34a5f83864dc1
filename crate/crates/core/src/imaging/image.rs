use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};
use crate::tensor::Tensor4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorSpace {
    /// One channel: grayscale or luma.
    Gray,
    Rgb,
    YCbCr,
}

impl ColorSpace {
    pub fn channels(self) -> usize {
        match self {
            ColorSpace::Gray => 1,
            ColorSpace::Rgb | ColorSpace::YCbCr => 3,
        }
    }
}

/// Planar image with values in [0, 1]: channel `c` occupies
/// `data[c*h*w .. (c+1)*h*w]`, rows top to bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    space: ColorSpace,
    data: Vec<f64>,
}

impl Image {
    /// Values are clamped into [0, 1]; non-finite values are rejected.
    pub fn new(height: usize, width: usize, space: ColorSpace, mut data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Dimension(format!("empty image {height}x{width}")));
        }
        if data.len() != height * width * space.channels() {
            return Err(Error::Dimension(format!(
                "{} values for a {height}x{width} {space:?} image",
                data.len()
            )));
        }
        for v in &mut data {
            if !v.is_finite() {
                return Err(Error::Data("non-finite pixel value".into()));
            }
            *v = v.clamp(0.0, 1.0);
        }
        Ok(Image {
            height,
            width,
            space,
            data,
        })
    }

    pub fn gray(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(height, width, ColorSpace::Gray, data)
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        space: ColorSpace,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * space.channels());
        for c in 0..space.channels() {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Self::new(height, width, space, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn space(&self) -> ColorSpace {
        self.space
    }
    pub fn channels(&self) -> usize {
        self.space.channels()
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let len = self.height * self.width;
        &self.data[c * len..(c + 1) * len]
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    /// Single-channel image of channel `c`.
    pub fn channel(&self, c: usize) -> Image {
        Image {
            height: self.height,
            width: self.width,
            space: ColorSpace::Gray,
            data: self.plane(c).to_vec(),
        }
    }

    pub fn with_space(mut self, space: ColorSpace) -> Result<Self> {
        if space.channels() != self.channels() {
            return Err(Error::Dimension(format!(
                "cannot relabel a {}-channel image as {space:?}",
                self.channels()
            )));
        }
        self.space = space;
        Ok(self)
    }

    pub fn from_planes(space: ColorSpace, planes: &[Image]) -> Result<Self> {
        if planes.len() != space.channels() {
            return Err(Error::Dimension(format!(
                "{space:?} needs {} planes, got {}",
                space.channels(),
                planes.len()
            )));
        }
        let (h, w) = (planes[0].height, planes[0].width);
        let mut data = Vec::with_capacity(h * w * planes.len());
        for p in planes {
            if p.channels() != 1 || p.height != h || p.width != w {
                return Err(Error::Dimension("planes differ in size or channel count".into()));
            }
            data.extend_from_slice(&p.data);
        }
        Self::new(h, w, space, data)
    }

    /// Rows `[y0, y0+h)` and columns `[x0, x0+w)`.
    pub fn crop(&self, y0: usize, x0: usize, h: usize, w: usize) -> Result<Image> {
        if y0 + h > self.height || x0 + w > self.width || h == 0 || w == 0 {
            return Err(Error::Dimension(format!(
                "crop {h}x{w} at ({y0}, {x0}) exceeds {}x{}",
                self.height, self.width
            )));
        }
        Image::from_fn(h, w, self.space, |c, y, x| self.get(c, y0 + y, x0 + x))
    }

    /// Round every value to the nearest multiple of 1/255.
    pub fn quantized(&self) -> Image {
        Image {
            data: self.data.iter().map(|v| quantize(*v)).collect(),
            ..self.clone()
        }
    }

    /// Batch-of-one tensor `(1, channels, h, w)` holding the same values.
    pub fn to_tensor(&self) -> Tensor4 {
        Tensor4::from_vec(1, self.channels(), self.height, self.width, self.data.clone())
            .expect("image shape is valid")
    }

    /// Item `b` of a tensor as an image, clamping to [0, 1].
    pub fn from_tensor(t: &Tensor4, b: usize, space: ColorSpace) -> Result<Image> {
        if t.c() != space.channels() {
            return Err(Error::Dimension(format!(
                "tensor with {} channels is not a {space:?} image",
                t.c()
            )));
        }
        Image::new(t.h(), t.w(), space, t.item(b).to_vec())
    }
}

pub fn quantize(v: f64) -> f64 {
    (v.clamp(0.0, 1.0) * 255.0).round() / 255.0
}

fn format_for(path: &Path) -> Result<ImageFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "png" => Ok(ImageFormat::Png),
        "bmp" => Ok(ImageFormat::Bmp),
        "pgm" | "ppm" | "pnm" => Ok(ImageFormat::Pnm),
        _ => Err(Error::format(path, format!("unsupported image format '.{ext}'"))),
    }
}

/// Reads PNG, BMP, PGM or PPM. Gray inputs give [`ColorSpace::Gray`], anything
/// else [`ColorSpace::Rgb`]; alpha is dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let format = format_for(path)?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory_with_format(&bytes, format)
        .map_err(|e| Error::format(path, e.to_string()))?;
    decode(img).map_err(|e| Error::format(path, e.to_string()))
}

fn decode(img: DynamicImage) -> Result<Image> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let is_gray = !img.color().has_color();
    let sixteen = img.color().bytes_per_pixel() / img.color().channel_count() > 1;
    if is_gray {
        let data: Vec<f64> = if sixteen {
            img.to_luma16().pixels().map(|p| p.0[0] as f64 / 65535.0).collect()
        } else {
            img.to_luma8().pixels().map(|p| p.0[0] as f64 / 255.0).collect()
        };
        return Image::gray(h, w, data);
    }
    let mut data = vec![0.0; 3 * h * w];
    let plane = h * w;
    if sixteen {
        for (i, p) in img.to_rgb16().pixels().enumerate() {
            for c in 0..3 {
                data[c * plane + i] = p.0[c] as f64 / 65535.0;
            }
        }
    } else {
        for (i, p) in img.to_rgb8().pixels().enumerate() {
            for c in 0..3 {
                data[c * plane + i] = p.0[c] as f64 / 255.0;
            }
        }
    }
    Image::new(h, w, ColorSpace::Rgb, data)
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes an 8-bit file. YCbCr images are written as their raw channels.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = format_for(path)?;
    let (w, h) = (img.width as u32, img.height as u32);
    let plane = img.height * img.width;
    let dynamic = if img.channels() == 1 {
        let buf: Vec<u8> = img.data.iter().map(|&v| to_u8(v)).collect();
        DynamicImage::ImageLuma8(image::GrayImage::from_raw(w, h, buf).expect("buffer size"))
    } else {
        let mut buf = Vec::with_capacity(3 * plane);
        for i in 0..plane {
            for c in 0..3 {
                buf.push(to_u8(img.data[c * plane + i]));
            }
        }
        DynamicImage::ImageRgb8(image::RgbImage::from_raw(w, h, buf).expect("buffer size"))
    };
    dynamic
        .save_with_format(path, format)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::format(path, other.to_string()),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn black_and_white_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("px.png");
        image::GrayImage::from_raw(2, 1, vec![0, 255]).unwrap().save(&p).unwrap();
        let img = load_image(&p).unwrap();
        assert_eq!(img.space(), ColorSpace::Gray);
        assert_eq!(img.data(), &[0.0, 1.0]);
    }

    #[test]
    fn round_trips_every_format() {
        let dir = tempfile::tempdir().unwrap();
        let mut state = 12345u32;
        let mut next = || {
            state = state.wrapping_mul(1664525).wrapping_add(1013904223);
            (state >> 24) as f64 / 255.0
        };
        let rgb = Image::from_fn(5, 7, ColorSpace::Rgb, |_, _, _| next()).unwrap();
        let gray = Image::from_fn(6, 3, ColorSpace::Gray, |_, _, _| next()).unwrap();
        for (img, ext) in [(&rgb, "png"), (&rgb, "bmp"), (&rgb, "ppm"), (&gray, "png"), (&gray, "pgm")] {
            let p = dir.path().join(format!("a.{ext}"));
            save_image(img, &p).unwrap();
            let back = load_image(&p).unwrap();
            assert_eq!(&back, img, "{ext}");
            let first = std::fs::read(&p).unwrap();
            save_image(&back, &p).unwrap();
            assert_eq!(std::fs::read(&p).unwrap(), first, "{ext}");
        }
    }

    #[test]
    fn errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.png");
        let err = load_image(&missing).unwrap_err();
        assert!(err.to_string().contains("nope.png"));

        let bad = dir.path().join("x.gif");
        assert!(matches!(load_image(&bad), Err(Error::Format { .. })));

        let trunc = dir.path().join("t.png");
        let img = Image::gray(4, 4, vec![0.5; 16]).unwrap();
        save_image(&img, &trunc).unwrap();
        let bytes = std::fs::read(&trunc).unwrap();
        std::fs::write(&trunc, &bytes[..bytes.len() / 2]).unwrap();
        let err = load_image(&trunc).unwrap_err();
        assert!(err.to_string().contains("t.png"));
    }

    #[test]
    fn values_are_clamped() {
        let img = Image::gray(1, 2, vec![-0.5, 1.5]).unwrap();
        assert_eq!(img.data(), &[0.0, 1.0]);
        assert!(Image::gray(1, 1, vec![f64::NAN]).is_err());
    }
}
