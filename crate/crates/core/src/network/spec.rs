use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::activation::ActivationKind;
use crate::error::{Error, Result};

/// Default conv count of the toy networks.
pub const TOY_DEPTH: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// `depth` 3x3 convs of constant filter count `width`, the unit after every
    /// conv but the last, last conv producing `r*r` channels.
    Toy {
        kind: ActivationKind,
        width: usize,
        depth: usize,
    },
    /// 5x5x64, MU, 3x3x32, MU, 3x3x(r*r).
    EspcnMu,
    /// 20 3x3 convs with 64 filters, MU after each but the last.
    VdsrMu,
    /// 30 3x3 convs with 32 filters and MU, convs 2..=29 paired into
    /// identity-skip residual units.
    Dnsr,
}

impl Preset {
    pub fn toy(kind: ActivationKind, width: usize) -> Self {
        Preset::Toy {
            kind,
            width,
            depth: TOY_DEPTH,
        }
    }

    /// Filter count used for each toy activation in the activation comparison:
    /// 12 for the rectifiers and MU-S, 16 for MU and MU-M, 24 for MU-D and MU-R.
    pub fn toy_default_width(kind: ActivationKind) -> usize {
        match kind {
            ActivationKind::Relu
            | ActivationKind::LeakyRelu { .. }
            | ActivationKind::Elu { .. }
            | ActivationKind::MaxoutSort => 12,
            ActivationKind::Maxout | ActivationKind::MaxoutMin => 16,
            ActivationKind::MaxoutDiff | ActivationKind::MaxoutRecursive { .. } => 24,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Toy { .. } => "toy",
            Preset::EspcnMu => "espcn-mu",
            Preset::VdsrMu => "vdsr-mu",
            Preset::Dnsr => "dnsr",
        }
    }

    pub fn code(&self) -> u32 {
        match self {
            Preset::Toy { .. } => 0,
            Preset::EspcnMu => 1,
            Preset::VdsrMu => 2,
            Preset::Dnsr => 3,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Toy { kind, width, depth } => {
                write!(f, "toy({kind}, width {width}, depth {depth})")
            }
            other => f.write_str(other.name()),
        }
    }
}

/// Preset family name as used on the command line; toy parameters come separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    Toy,
    EspcnMu,
    VdsrMu,
    Dnsr,
}

impl FromStr for PresetName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "toy" => Ok(PresetName::Toy),
            "espcn-mu" => Ok(PresetName::EspcnMu),
            "vdsr-mu" => Ok(PresetName::VdsrMu),
            "dnsr" => Ok(PresetName::Dnsr),
            other => Err(Error::Config(format!("unknown preset '{other}'"))),
        }
    }
}

impl PresetName {
    pub fn resolve(self, kind: ActivationKind, width: Option<usize>, depth: Option<usize>) -> Preset {
        match self {
            PresetName::Toy => Preset::Toy {
                kind,
                width: width.unwrap_or_else(|| Preset::toy_default_width(kind)),
                depth: depth.unwrap_or(TOY_DEPTH),
            },
            PresetName::EspcnMu => Preset::EspcnMu,
            PresetName::VdsrMu => Preset::VdsrMu,
            PresetName::Dnsr => Preset::Dnsr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerSpec {
    Conv { k: usize, c_in: usize, c_out: usize },
    Activation(ActivationKind),
    PixelShuffle(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub preset: Preset,
    pub scale: usize,
    pub layers: Vec<LayerSpec>,
    /// Layer index ranges whose input is added to their output.
    pub residual_units: Vec<Range<usize>>,
}

impl NetworkSpec {
    pub fn for_preset(preset: Preset, scale: usize) -> Result<Self> {
        if !(1..=8).contains(&scale) {
            return Err(Error::Config(format!("unsupported scale factor {scale}")));
        }
        let rr = scale * scale;
        let mut b = Builder::default();
        let mut residual_units = Vec::new();
        match preset {
            Preset::Toy { kind, width, depth } => {
                if depth < 2 {
                    return Err(Error::Spec(format!("toy depth {depth} must be at least 2")));
                }
                if width == 0 {
                    return Err(Error::Spec("toy width must be positive".into()));
                }
                b.conv(3, width);
                b.act(kind)?;
                for _ in 0..depth - 2 {
                    b.conv(3, width);
                    b.act(kind)?;
                }
                b.conv(3, rr);
            }
            Preset::EspcnMu => {
                b.conv(5, 64);
                b.act(ActivationKind::Maxout)?;
                b.conv(3, 32);
                b.act(ActivationKind::Maxout)?;
                b.conv(3, rr);
            }
            Preset::VdsrMu => {
                for _ in 0..19 {
                    b.conv(3, 64);
                    b.act(ActivationKind::Maxout)?;
                }
                b.conv(3, rr);
            }
            Preset::Dnsr => {
                b.conv(3, 32);
                b.act(ActivationKind::Maxout)?;
                for _ in 0..14 {
                    let start = b.layers.len();
                    for _ in 0..2 {
                        b.conv(3, 32);
                        b.act(ActivationKind::Maxout)?;
                    }
                    residual_units.push(start..b.layers.len());
                }
                b.conv(3, rr);
            }
        }
        b.layers.push(LayerSpec::PixelShuffle(scale));
        let spec = NetworkSpec {
            preset,
            scale,
            layers: b.layers,
            residual_units,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks every structural invariant: single-channel input, activation
    /// arity, channel continuity, a single trailing pixel shuffle fed by
    /// `r*r` channels, and well-formed residual units.
    pub fn validate(&self) -> Result<()> {
        let spec_err = |m: String| Err(Error::Spec(m));
        let Some(LayerSpec::PixelShuffle(r)) = self.layers.last() else {
            return spec_err("the last layer must be a pixel shuffle".into());
        };
        if *r != self.scale {
            return spec_err(format!("pixel shuffle scale {r} differs from network scale {}", self.scale));
        }
        let shuffles = self
            .layers
            .iter()
            .filter(|l| matches!(l, LayerSpec::PixelShuffle(_)))
            .count();
        if shuffles != 1 {
            return spec_err(format!("expected exactly one pixel shuffle, found {shuffles}"));
        }
        let channels = self.channels_before_each_layer()?;
        match self.layers[self.layers.len() - 2] {
            LayerSpec::Conv { c_out, .. } if c_out == self.scale * self.scale => {}
            _ => {
                return spec_err(format!(
                    "the layer feeding the pixel shuffle must be a conv with {} outputs",
                    self.scale * self.scale
                ))
            }
        }
        let mut prev_end = 0;
        for unit in &self.residual_units {
            if unit.start < prev_end || unit.end <= unit.start || unit.end >= self.layers.len() {
                return spec_err(format!("residual unit {unit:?} is out of order or out of range"));
            }
            if channels[unit.start] != channels[unit.end] {
                return spec_err(format!(
                    "residual unit {unit:?} maps {} channels to {}",
                    channels[unit.start], channels[unit.end]
                ));
            }
            prev_end = unit.end;
        }
        Ok(())
    }

    /// Channel count entering each layer, plus the final output count.
    pub fn channels_before_each_layer(&self) -> Result<Vec<usize>> {
        let mut c = 1usize;
        let mut out = Vec::with_capacity(self.layers.len() + 1);
        for (i, layer) in self.layers.iter().enumerate() {
            out.push(c);
            c = match *layer {
                LayerSpec::Conv { c_in, c_out, .. } => {
                    if c_in != c {
                        return Err(Error::Spec(format!(
                            "layer {i}: conv expects {c_in} channels but receives {c}"
                        )));
                    }
                    c_out
                }
                LayerSpec::Activation(kind) => kind
                    .output_channels(c)
                    .map_err(|e| Error::Spec(format!("layer {i}: {e}")))?,
                LayerSpec::PixelShuffle(r) => {
                    if !c.is_multiple_of(r * r) {
                        return Err(Error::Spec(format!(
                            "layer {i}: pixel shuffle by {r} receives {c} channels"
                        )));
                    }
                    c / (r * r)
                }
            };
        }
        out.push(c);
        Ok(out)
    }

    pub fn convs(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.layers.iter().filter_map(|l| match *l {
            LayerSpec::Conv { k, c_in, c_out } => Some((k, c_in, c_out)),
            _ => None,
        })
    }

    /// Closed-form trainable parameter count: `sum(k*k*c_in*c_out + c_out)`.
    pub fn param_count(&self) -> usize {
        self.convs().map(|(k, ci, co)| k * k * ci * co + co).sum()
    }
}

#[derive(Default)]
struct Builder {
    layers: Vec<LayerSpec>,
    channels: Option<usize>,
}

impl Builder {
    fn conv(&mut self, k: usize, c_out: usize) {
        let c_in = self.channels.unwrap_or(1);
        self.layers.push(LayerSpec::Conv { k, c_in, c_out });
        self.channels = Some(c_out);
    }

    fn act(&mut self, kind: ActivationKind) -> Result<()> {
        let c = self.channels.unwrap_or(1);
        let out = kind
            .output_channels(c)
            .map_err(|e| Error::Spec(e.to_string()))?;
        self.layers.push(LayerSpec::Activation(kind));
        self.channels = Some(out);
        Ok(())
    }
}
