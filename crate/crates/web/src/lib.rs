//! WebAssembly bindings for the in-browser demo: interpolation, a toy
//! network trained on one image, and its activation sparsity grid.

use maxsr::imaging::{
    crop_to_multiple, downscale, extract_luma, resample, rgb_to_ycbcr, ColorSpace, Dataset, Degradation, Image,
    Method,
};
use maxsr::metrics::{baseline, evaluate, sparsity_map};
use maxsr::train::{TrainConfig, Trainer};
use maxsr::upscale::super_resolve;
use maxsr::{ActivationKind, Error, Result};
use wasm_bindgen::prelude::*;

const DEMO_SCALE: usize = 3;
const DEMO_CROP: usize = 36;

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

/// 8-bit RGBA pixels, row-major.
#[wasm_bindgen]
pub struct Rgba {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

#[wasm_bindgen]
impl Rgba {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }

    #[wasm_bindgen(getter)]
    pub fn data(&self) -> Vec<u8> {
        self.data.clone()
    }
}

pub fn from_rgba(rgba: &[u8], width: usize, height: usize) -> Result<Image> {
    if rgba.len() != width * height * 4 {
        return Err(Error::Dimension(format!(
            "{} bytes for a {width}x{height} RGBA image",
            rgba.len()
        )));
    }
    let plane = width * height;
    let mut data = vec![0.0; 3 * plane];
    for (i, px) in rgba.chunks_exact(4).enumerate() {
        for c in 0..3 {
            data[c * plane + i] = px[c] as f64 / 255.0;
        }
    }
    Image::new(height, width, ColorSpace::Rgb, data)
}

pub fn to_rgba(img: &Image) -> Rgba {
    let (h, w) = (img.height(), img.width());
    let mut data = Vec::with_capacity(h * w * 4);
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let ch = if img.channels() == 1 { 0 } else { c };
                data.push((img.get(ch, y, x).clamp(0.0, 1.0) * 255.0).round() as u8);
            }
            data.push(255);
        }
    }
    Rgba {
        width: w,
        height: h,
        data,
    }
}

fn method(name: &str) -> Result<Method> {
    match name {
        "bicubic" => Ok(Method::Bicubic),
        "nearest" => Ok(Method::Nearest),
        other => Err(Error::Config(format!("unknown method '{other}'"))),
    }
}

/// Resizes an RGBA image to `out_width` x `out_height`.
#[wasm_bindgen]
pub fn resample_rgba(
    rgba: &[u8],
    width: usize,
    height: usize,
    out_width: usize,
    out_height: usize,
    method_name: &str,
) -> std::result::Result<Rgba, JsError> {
    let img = from_rgba(rgba, width, height).map_err(js)?;
    let m = method(method_name).map_err(js)?;
    Ok(to_rgba(&resample(&img, out_height, out_width, m).map_err(js)?))
}

/// A toy network trained at scale 3 on crops of a single image.
#[wasm_bindgen]
pub struct DemoTrainer {
    trainer: Trainer,
    data: Dataset,
    lr_rgb: Image,
}

impl DemoTrainer {
    pub fn build(kind: &str, width: usize, rgba: &[u8], img_width: usize, img_height: usize, seed: u64) -> Result<Self> {
        let kind: ActivationKind = kind.parse()?;
        let rgb = crop_to_multiple(&from_rgba(rgba, img_width, img_height)?, DEMO_SCALE)?;
        let data = Dataset::from_images(vec![("image".into(), extract_luma(&rgb_to_ycbcr(&rgb)?)?)], DEMO_SCALE, Degradation::Bicubic)?;
        let cfg = TrainConfig {
            scale: DEMO_SCALE,
            crop_hr: DEMO_CROP,
            lr_initial: 1e-3,
            lr_drop_at: u64::MAX,
            seed,
            ..TrainConfig::toy(kind, width)
        };
        cfg.sample_config().validate(&data)?;
        let lr_rgb = downscale(&rgb, DEMO_SCALE, Method::Bicubic)?.quantized();
        Ok(DemoTrainer {
            trainer: Trainer::new(&cfg)?,
            data,
            lr_rgb,
        })
    }

    pub fn train(&mut self, iterations: u32) -> Result<f64> {
        let mut sum = 0.0;
        for _ in 0..iterations {
            sum += self.trainer.step(&self.data)?;
        }
        Ok(sum / iterations.max(1) as f64)
    }

    pub fn network_psnr(&self) -> Result<f64> {
        Ok(evaluate(self.trainer.network(), &self.data, "image")?.mean_psnr())
    }

    pub fn bicubic_psnr(&self) -> Result<f64> {
        Ok(baseline(&self.data, Method::Bicubic, "image")?.mean_psnr())
    }

    pub fn sparsity(&self, cell: usize) -> Result<Image> {
        let mut net = self.trainer.network().clone();
        sparsity_map(&mut net, &self.data.pairs[0])?.to_image(cell)
    }

    pub fn preview(&self) -> Result<Image> {
        let mut net = self.trainer.network().clone();
        super_resolve(&mut net, &self.lr_rgb)
    }
}

#[wasm_bindgen]
impl DemoTrainer {
    /// `kind` is an activation name such as `relu`, `mu` or `mu-d`.
    #[wasm_bindgen(constructor)]
    pub fn new(
        kind: &str,
        width: usize,
        rgba: &[u8],
        img_width: usize,
        img_height: usize,
        seed: u32,
    ) -> std::result::Result<DemoTrainer, JsError> {
        Self::build(kind, width, rgba, img_width, img_height, seed as u64).map_err(js)
    }

    /// Runs `n` iterations and returns their mean loss.
    pub fn step(&mut self, n: u32) -> std::result::Result<f64, JsError> {
        self.train(n).map_err(js)
    }

    #[wasm_bindgen(getter)]
    pub fn iteration(&self) -> f64 {
        self.trainer.iteration() as f64
    }

    #[wasm_bindgen(getter, js_name = paramCount)]
    pub fn param_count(&self) -> usize {
        self.trainer.network().count_params()
    }

    /// Luma PSNR of the network on the whole training image.
    pub fn psnr(&self) -> std::result::Result<f64, JsError> {
        self.network_psnr().map_err(js)
    }

    #[wasm_bindgen(js_name = bicubicPsnr)]
    pub fn bicubic_psnr_js(&self) -> std::result::Result<f64, JsError> {
        self.bicubic_psnr().map_err(js)
    }

    /// Channel-by-layer grid of nonzero ratios.
    #[wasm_bindgen(js_name = sparsityImage)]
    pub fn sparsity_image(&self, cell: usize) -> std::result::Result<Rgba, JsError> {
        self.sparsity(cell).map(|i| to_rgba(&i)).map_err(js)
    }

    /// The downscaled image upscaled by the current network.
    #[wasm_bindgen(js_name = upscalePreview)]
    pub fn upscale_preview(&self) -> std::result::Result<Rgba, JsError> {
        self.preview().map(|i| to_rgba(&i)).map_err(js)
    }
}
