//! Layer stacks built from presets, with residual learning on top of a
//! nearest-neighbour upscale of the input.
//!
//! A forward pass computes `base + pixel_shuffle(convs(lr))`. In training
//! mode every intermediate needed by [`Network::backward`] is kept on the
//! network until the next forward pass or [`Network::clear_tape`].

pub mod checkpoint;
mod shuffle;
mod spec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use shuffle::{pixel_shuffle, pixel_unshuffle};
pub use spec::{LayerSpec, NetworkSpec, Preset, PresetName, TOY_DEPTH};

use crate::activation::{self, ActivationTrace};
use crate::conv::{conv2d_backward, conv2d_forward, ConvParams};
use crate::error::{Error, Result};
use crate::tensor::Tensor4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Inference,
    Training,
}

/// How the residual sum is returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    /// `clamp(base + residual, 0, 1)`
    Clamped,
    /// `base + residual`, used for the training loss.
    Raw,
}

#[derive(Debug, Clone)]
enum Saved {
    ConvInput(Tensor4),
    Activation(ActivationTrace),
    Shuffle,
}

#[derive(Debug, Clone)]
struct Tape {
    saved: Vec<Saved>,
    /// Post-activation tensors in layer order.
    activations: Vec<Tensor4>,
    /// `true` where the clamped output lies strictly inside (0, 1).
    clamp_pass: Option<Vec<bool>>,
    input_shape: [usize; 4],
}

/// Parameter gradients in conv order, plus gradients of both inputs.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub convs: Vec<ParamGrads>,
    pub input: Tensor4,
    pub base: Tensor4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Gradients {
    pub fn flat_params(&self) -> impl Iterator<Item = f64> + '_ {
        self.convs
            .iter()
            .flat_map(|g| g.weights.iter().chain(&g.bias).copied())
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    spec: NetworkSpec,
    params: Vec<ConvParams>,
    tape: Option<Tape>,
}

impl Network {
    /// Builds the preset and draws weights uniformly from
    /// `[-sqrt(3 / fan_in), sqrt(3 / fan_in)]`; biases start at zero.
    pub fn build(preset: Preset, scale: usize, seed: u64) -> Result<Self> {
        let spec = NetworkSpec::for_preset(preset, scale)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::new();
        for (k, c_in, c_out) in spec.convs() {
            let mut p = ConvParams::zeros(c_out, c_in, k)?;
            let limit = (3.0 / p.fan_in() as f64).sqrt();
            for w in &mut p.weights {
                *w = rng.gen_range(-limit..=limit);
            }
            params.push(p);
        }
        Ok(Network {
            spec,
            params,
            tape: None,
        })
    }

    pub fn from_parts(spec: NetworkSpec, params: Vec<ConvParams>) -> Result<Self> {
        spec.validate()?;
        let convs: Vec<_> = spec.convs().collect();
        if convs.len() != params.len() {
            return Err(Error::Spec(format!(
                "spec has {} convs but {} parameter sets were given",
                convs.len(),
                params.len()
            )));
        }
        for (i, ((k, c_in, c_out), p)) in convs.iter().zip(&params).enumerate() {
            if (p.k(), p.c_in(), p.c_out()) != (*k, *c_in, *c_out) {
                return Err(Error::Spec(format!(
                    "conv {i}: parameters are {}x{}x{}x{}, spec wants {c_out}x{c_in}x{k}x{k}",
                    p.c_out(),
                    p.c_in(),
                    p.k(),
                    p.k()
                )));
            }
        }
        Ok(Network {
            spec,
            params,
            tape: None,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn scale(&self) -> usize {
        self.spec.scale
    }

    pub fn params(&self) -> &[ConvParams] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [ConvParams] {
        &mut self.params
    }

    /// Total scalar parameters, counted from the instantiated tensors.
    pub fn count_params(&self) -> usize {
        self.params.iter().map(ConvParams::num_params).sum()
    }

    pub fn clear_tape(&mut self) {
        self.tape = None;
    }

    /// Copy with the skip connections of every residual unit removed.
    pub fn without_skips(&self) -> Network {
        let mut spec = self.spec.clone();
        spec.residual_units.clear();
        Network {
            spec,
            params: self.params.clone(),
            tape: None,
        }
    }

    /// Post-activation tensors from the last training-mode forward pass.
    pub fn recorded_activations(&self) -> Option<&[Tensor4]> {
        self.tape.as_ref().map(|t| t.activations.as_slice())
    }

    /// Activation traces from the last training-mode forward pass, in layer order.
    pub fn recorded_traces(&self) -> Vec<&ActivationTrace> {
        self.tape
            .iter()
            .flat_map(|t| t.saved.iter())
            .filter_map(|s| match s {
                Saved::Activation(tr) => Some(tr),
                _ => None,
            })
            .collect()
    }

    /// Runs the conv stack and pixel shuffle on a mean-shifted LR plane.
    pub fn residual(&mut self, lr_y: &Tensor4, mode: Mode) -> Result<Tensor4> {
        if lr_y.c() != 1 {
            return Err(Error::Dimension(format!(
                "network input must have one channel, got {}",
                lr_y.c()
            )));
        }
        let training = mode == Mode::Training;
        let mut saved = Vec::new();
        let mut activations = Vec::new();
        let mut skip_inputs: Vec<Tensor4> = Vec::new();
        let mut x = lr_y.clone();
        let mut conv_idx = 0;
        for (i, layer) in self.spec.layers.iter().enumerate() {
            if self.spec.residual_units.iter().any(|u| u.start == i) {
                skip_inputs.push(x.clone());
            }
            x = match *layer {
                LayerSpec::Conv { .. } => {
                    let p = &self.params[conv_idx];
                    conv_idx += 1;
                    let y = conv2d_forward(&x, p)?;
                    if training {
                        saved.push(Saved::ConvInput(x));
                    }
                    y
                }
                LayerSpec::Activation(kind) => {
                    let (a, trace) = activation::forward(kind, &x)?;
                    if training {
                        saved.push(Saved::Activation(trace));
                        activations.push(a.clone());
                    }
                    a
                }
                LayerSpec::PixelShuffle(r) => {
                    if training {
                        saved.push(Saved::Shuffle);
                    }
                    pixel_shuffle(&x, r)?
                }
            };
            if self.spec.residual_units.iter().any(|u| u.end == i + 1) {
                let skip = skip_inputs.pop().expect("unit start precedes end");
                x.add_assign(&skip)?;
            }
        }
        self.tape = training.then(|| Tape {
            saved,
            activations,
            clamp_pass: None,
            input_shape: lr_y.shape(),
        });
        Ok(x)
    }

    /// `base_hr_y + residual`, clamped to [0, 1] unless `output` is [`Output::Raw`].
    pub fn forward(
        &mut self,
        lr_y: &Tensor4,
        base_hr_y: &Tensor4,
        mode: Mode,
        output: Output,
    ) -> Result<Tensor4> {
        let r = self.spec.scale;
        if base_hr_y.shape() != [lr_y.n(), 1, lr_y.h() * r, lr_y.w() * r] {
            return Err(Error::Dimension(format!(
                "residual base {:?} is not {r}x the input {:?}",
                base_hr_y.shape(),
                lr_y.shape()
            )));
        }
        let mut sum = self.residual(lr_y, mode)?;
        sum.add_assign(base_hr_y)?;
        if output == Output::Clamped {
            if let Some(tape) = self.tape.as_mut() {
                tape.clamp_pass = Some(sum.data().iter().map(|&v| v > 0.0 && v < 1.0).collect());
            }
            sum = sum.map(|v| v.clamp(0.0, 1.0));
        }
        Ok(sum)
    }

    /// Inference-mode clamped forward pass.
    pub fn predict(&mut self, lr_y: &Tensor4, base_hr_y: &Tensor4) -> Result<Tensor4> {
        let out = self.forward(lr_y, base_hr_y, Mode::Inference, Output::Clamped)?;
        Ok(out)
    }

    /// Reverse pass for the last training-mode forward. `grad_sr` is the
    /// gradient of the loss with respect to the forward output.
    pub fn backward(&self, grad_sr: &Tensor4) -> Result<Gradients> {
        let tape = self
            .tape
            .as_ref()
            .ok_or_else(|| Error::State("backward called without a training-mode forward pass".into()))?;
        let [n, _, h, w] = tape.input_shape;
        let r = self.spec.scale;
        if grad_sr.shape() != [n, 1, h * r, w * r] {
            return Err(Error::Dimension(format!(
                "output gradient {:?} does not match output shape {:?}",
                grad_sr.shape(),
                [n, 1, h * r, w * r]
            )));
        }
        let mut g = match &tape.clamp_pass {
            Some(mask) => {
                let mut g = grad_sr.clone();
                for (v, &pass) in g.data_mut().iter_mut().zip(mask) {
                    if !pass {
                        *v = 0.0;
                    }
                }
                g
            }
            None => grad_sr.clone(),
        };
        let base = g.clone();

        let mut conv_grads: Vec<ParamGrads> = Vec::with_capacity(self.params.len());
        let mut conv_idx = self.params.len();
        let mut skip_grads: Vec<Tensor4> = Vec::new();
        for (i, (layer, saved)) in self.spec.layers.iter().zip(&tape.saved).enumerate().rev() {
            if self.spec.residual_units.iter().any(|u| u.end == i + 1) {
                skip_grads.push(g.clone());
            }
            g = match (layer, saved) {
                (LayerSpec::Conv { .. }, Saved::ConvInput(x)) => {
                    conv_idx -= 1;
                    let cg = conv2d_backward(x, &self.params[conv_idx], &g)?;
                    conv_grads.push(ParamGrads {
                        weights: cg.weights,
                        bias: cg.bias,
                    });
                    cg.input
                }
                (LayerSpec::Activation(kind), Saved::Activation(trace)) => {
                    activation::backward(*kind, trace, &g)?
                }
                (LayerSpec::PixelShuffle(r), Saved::Shuffle) => pixel_unshuffle(&g, *r)?,
                _ => return Err(Error::State(format!("tape entry {i} does not match its layer"))),
            };
            if self.spec.residual_units.iter().any(|u| u.start == i) {
                let skip = skip_grads.pop().expect("unit end precedes start in reverse");
                g.add_assign(&skip)?;
            }
        }
        conv_grads.reverse();
        Ok(Gradients {
            convs: conv_grads,
            input: g,
            base,
        })
    }
}
