//! Image I/O, colour conversion, resampling and training data.

mod color;
mod image;
mod pair;
mod resample;
mod sampler;

pub use color::{extract_luma, luma, rgb_to_ycbcr, ycbcr_to_rgb};
pub use image::{load_image, quantize, save_image, ColorSpace, Image};
pub use pair::{crop_to_multiple, make_pair, Degradation, ImagePair};
pub use resample::{axis_weights, cubic, downscale, resample, upscale, AxisWeights, Method};
pub use sampler::{
    list_images, sample_batch, sample_crop, Augment, Batch, Crop, Dataset, SampleConfig, Transform, INPUT_SHIFT,
};
