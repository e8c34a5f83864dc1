//! Quality metrics, evaluation reports, sparsity maps and sweeps.

mod eval;
mod quality;
mod sparsity;
mod sweep;

pub use eval::{baseline, evaluate, evaluate_path, score, EvalReport, ImageScore};
pub use quality::{psnr, shave, ssim, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW};
pub use sparsity::{channel_ratios, sparsity_map, sparsity_of, LayerSparsity, SparsityMap};
pub use sweep::{median, sweep, sweep_csv, sweep_plot_data, SweepRow};
