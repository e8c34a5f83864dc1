//! Per-channel activation ratios of every activation layer.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::imaging::{ColorSpace, Image, ImagePair, INPUT_SHIFT};
use crate::network::{Mode, Network, Output};
use crate::tensor::Tensor4;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSparsity {
    /// Activation layer label, e.g. `mu` or `relu`.
    pub kind: String,
    /// Fraction of strictly nonzero outputs per channel.
    pub ratios: Vec<f64>,
    /// Maxout layers: fraction of outputs won by the first operand, per
    /// output channel of the first comparison.
    pub first_wins: Option<Vec<f64>>,
}

impl LayerSparsity {
    pub fn mean_ratio(&self) -> f64 {
        self.ratios.iter().sum::<f64>() / self.ratios.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsityMap {
    pub layers: Vec<LayerSparsity>,
}

/// Ratio of nonzero values per channel, over all batch items and positions.
pub fn channel_ratios(t: &Tensor4) -> Vec<f64> {
    let total = (t.n() * t.h() * t.w()) as f64;
    (0..t.c())
        .map(|c| {
            let nz: usize = (0..t.n())
                .map(|b| t.plane(b, c).iter().filter(|&&v| v != 0.0).count())
                .sum();
            nz as f64 / total
        })
        .collect()
}

/// Runs one training-mode forward pass and measures every activation layer.
pub fn sparsity_of(net: &mut Network, lr_input: &Tensor4, base: &Tensor4) -> Result<SparsityMap> {
    net.forward(lr_input, base, Mode::Training, Output::Clamped)?;
    let acts = net
        .recorded_activations()
        .ok_or_else(|| Error::State("forward pass recorded nothing".into()))?;
    let traces = net.recorded_traces();
    let layers = acts
        .iter()
        .zip(&traces)
        .map(|(a, tr)| {
            let first_wins = tr.winner_masks().first().map(|mask| {
                let [n, c_in, h, w] = tr.input_shape();
                let half = c_in / 2;
                let plane = h * w;
                (0..half)
                    .map(|c| {
                        let won: usize = (0..n)
                            .map(|b| {
                                let start = (b * half + c) * plane;
                                mask[start..start + plane].iter().filter(|&&m| m).count()
                            })
                            .sum();
                        won as f64 / (n * plane) as f64
                    })
                    .collect()
            });
            LayerSparsity {
                kind: tr.kind().to_string(),
                ratios: channel_ratios(a),
                first_wins,
            }
        })
        .collect();
    net.clear_tape();
    Ok(SparsityMap { layers })
}

/// Sparsity for one image pair.
pub fn sparsity_map(net: &mut Network, pair: &ImagePair) -> Result<SparsityMap> {
    let input = pair.lr_y.to_tensor().map(|v| v - INPUT_SHIFT);
    sparsity_of(net, &input, &pair.base_hr_y.to_tensor())
}

impl SparsityMap {
    pub fn max_channels(&self) -> usize {
        self.layers.iter().map(|l| l.ratios.len()).max().unwrap_or(0)
    }

    /// Gray grid: one column per layer, one row per channel, each cell a
    /// `cell x cell` block (white = always active). Missing channels are black.
    pub fn to_image(&self, cell: usize) -> Result<Image> {
        let (rows, cols) = (self.max_channels(), self.layers.len());
        if rows == 0 || cell == 0 {
            return Err(Error::Dimension("empty sparsity map".into()));
        }
        Image::from_fn(rows * cell, cols * cell, ColorSpace::Gray, |_, y, x| {
            self.layers[x / cell].ratios.get(y / cell).copied().unwrap_or(0.0)
        })
    }

    /// One line per layer: index, kind, mean ratio, then every channel ratio.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, l) in self.layers.iter().enumerate() {
            let _ = write!(out, "layer {i} {} mean {:.4} ratios", l.kind, l.mean_ratio());
            for r in &l.ratios {
                let _ = write!(out, " {r:.4}");
            }
            if let Some(fw) = &l.first_wins {
                let _ = write!(out, " first_wins");
                for r in fw {
                    let _ = write!(out, " {r:.4}");
                }
            }
            out.push('\n');
        }
        out
    }
}
