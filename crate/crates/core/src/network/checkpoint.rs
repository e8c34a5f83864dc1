//! Binary checkpoint format.
//!
//! ```text
//! "MXSR1"
//! u32 preset id, u32 scale, u32 conv count          (little endian)
//! per conv: u32 c_out, u32 c_in, u32 k,
//!           f64 weights[c_out][c_in][k][k], f64 bias[c_out]
//! optional:
//! "ADAM1"
//! u64 step, f64 beta1, f64 beta2, f64 epsilon
//! per conv: f64 m.weights, m.bias, v.weights, v.bias
//! ```
//!
//! The preset id packs the architecture: bits 0..8 the preset (0 toy,
//! 1 espcn-mu, 2 vdsr-mu, 3 dnsr); for toy nets bits 8..16 hold the
//! activation code, bits 16..24 the MU-R depth and bits 24..32 the conv
//! count. The toy width is the first conv's `c_out`.

use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::{Network, NetworkSpec, ParamGrads, Preset};
use crate::activation::{ActivationKind, DEFAULT_ELU_ALPHA, DEFAULT_LRELU_SLOPE};
use crate::conv::ConvParams;
use crate::error::{Error, Result};
use crate::train::AdamState;

pub const MAGIC: &[u8; 5] = b"MXSR1";
pub const ADAM_MAGIC: &[u8; 5] = b"ADAM1";

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub network: Network,
    pub optimizer: Option<AdamState>,
}

fn activation_code(kind: ActivationKind) -> Result<(u32, u32)> {
    Ok(match kind {
        ActivationKind::Relu => (0, 0),
        ActivationKind::LeakyRelu { slope } if slope == DEFAULT_LRELU_SLOPE => (1, 0),
        ActivationKind::Elu { alpha } if alpha == DEFAULT_ELU_ALPHA => (2, 0),
        ActivationKind::Maxout => (3, 0),
        ActivationKind::MaxoutDiff => (4, 0),
        ActivationKind::MaxoutMin => (5, 0),
        ActivationKind::MaxoutSort => (6, 0),
        ActivationKind::MaxoutRecursive { depth } if depth < 256 => (7, depth),
        other => {
            return Err(Error::Config(format!(
                "activation {other} cannot be stored in a checkpoint header"
            )))
        }
    })
}

fn activation_from_code(code: u32, depth: u32) -> Result<ActivationKind> {
    Ok(match code {
        0 => ActivationKind::Relu,
        1 => ActivationKind::lrelu(),
        2 => ActivationKind::elu(),
        3 => ActivationKind::Maxout,
        4 => ActivationKind::MaxoutDiff,
        5 => ActivationKind::MaxoutMin,
        6 => ActivationKind::MaxoutSort,
        7 => ActivationKind::MaxoutRecursive { depth },
        _ => return Err(Error::Data(format!("unknown activation code {code}"))),
    })
}

pub fn preset_id(preset: &Preset) -> Result<u32> {
    let base = preset.code();
    match *preset {
        Preset::Toy { kind, depth, .. } => {
            let (code, mu_depth) = activation_code(kind)?;
            if depth > 255 {
                return Err(Error::Config(format!("toy depth {depth} exceeds 255")));
            }
            Ok(base | code << 8 | mu_depth << 16 | (depth as u32) << 24)
        }
        _ => Ok(base),
    }
}

fn preset_from_id(id: u32, first_width: usize) -> Result<Preset> {
    Ok(match id & 0xff {
        0 => Preset::Toy {
            kind: activation_from_code((id >> 8) & 0xff, (id >> 16) & 0xff)?,
            width: first_width,
            depth: (id >> 24) as usize,
        },
        1 => Preset::EspcnMu,
        2 => Preset::VdsrMu,
        3 => Preset::Dnsr,
        other => return Err(Error::Data(format!("unknown preset id {other}"))),
    })
}

fn write_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for &v in values {
        out.write_f64::<LE>(v).expect("vec write");
    }
}

pub fn encode(net: &Network, optimizer: Option<&AdamState>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.write_u32::<LE>(preset_id(&net.spec().preset)?).expect("vec write");
    out.write_u32::<LE>(net.scale() as u32).expect("vec write");
    out.write_u32::<LE>(net.params().len() as u32).expect("vec write");
    for p in net.params() {
        for d in [p.c_out(), p.c_in(), p.k()] {
            out.write_u32::<LE>(d as u32).expect("vec write");
        }
        write_f64s(&mut out, &p.weights);
        write_f64s(&mut out, &p.bias);
    }
    if let Some(state) = optimizer {
        if state.m.len() != net.params().len() {
            return Err(Error::State("optimizer state does not match the network".into()));
        }
        out.extend_from_slice(ADAM_MAGIC);
        out.write_u64::<LE>(state.step).expect("vec write");
        for v in [state.beta1, state.beta2, state.epsilon] {
            out.write_f64::<LE>(v).expect("vec write");
        }
        for (m, v) in state.m.iter().zip(&state.v) {
            write_f64s(&mut out, &m.weights);
            write_f64s(&mut out, &m.bias);
            write_f64s(&mut out, &v.weights);
            write_f64s(&mut out, &v.bias);
        }
    }
    Ok(out)
}

fn read_f64s(cur: &mut Cursor<&[u8]>, n: usize) -> std::io::Result<Vec<f64>> {
    let mut v = vec![0.0; n];
    cur.read_f64_into::<LE>(&mut v)?;
    Ok(v)
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    let truncated = |e: std::io::Error| Error::Data(format!("truncated checkpoint: {e}"));
    let mut cur = Cursor::new(bytes);
    let mut magic = [0u8; 5];
    cur.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Data("not a checkpoint (bad magic)".into()));
    }
    let id = cur.read_u32::<LE>().map_err(truncated)?;
    let scale = cur.read_u32::<LE>().map_err(truncated)? as usize;
    let count = cur.read_u32::<LE>().map_err(truncated)? as usize;
    let mut params = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let c_out = cur.read_u32::<LE>().map_err(truncated)? as usize;
        let c_in = cur.read_u32::<LE>().map_err(truncated)? as usize;
        let k = cur.read_u32::<LE>().map_err(truncated)? as usize;
        let remaining = bytes.len() - cur.position() as usize;
        let need = (c_out.saturating_mul(c_in).saturating_mul(k * k)).saturating_add(c_out);
        if need.saturating_mul(8) > remaining {
            return Err(Error::Data("truncated checkpoint: layer data".into()));
        }
        let weights = read_f64s(&mut cur, c_out * c_in * k * k).map_err(truncated)?;
        let bias = read_f64s(&mut cur, c_out).map_err(truncated)?;
        params.push(ConvParams::from_parts(c_out, c_in, k, k.saturating_sub(1) / 2, weights, bias)?);
    }
    let first_width = params.first().map_or(0, ConvParams::c_out);
    let preset = preset_from_id(id, first_width)?;
    let spec = NetworkSpec::for_preset(preset, scale)?;
    let network = Network::from_parts(spec, params)?;

    let optimizer = if (cur.position() as usize) < bytes.len() {
        let mut magic = [0u8; 5];
        cur.read_exact(&mut magic).map_err(truncated)?;
        if &magic != ADAM_MAGIC {
            return Err(Error::Data("unexpected trailing data in checkpoint".into()));
        }
        let step = cur.read_u64::<LE>().map_err(truncated)?;
        let beta1 = cur.read_f64::<LE>().map_err(truncated)?;
        let beta2 = cur.read_f64::<LE>().map_err(truncated)?;
        let epsilon = cur.read_f64::<LE>().map_err(truncated)?;
        let mut state = AdamState::with_hyperparams(network.params(), beta1, beta2, epsilon);
        state.step = step;
        for (p, (m, v)) in network.params().iter().zip(state.m.iter_mut().zip(state.v.iter_mut())) {
            let (nw, nb) = (p.weights.len(), p.bias.len());
            *m = ParamGrads {
                weights: read_f64s(&mut cur, nw).map_err(truncated)?,
                bias: read_f64s(&mut cur, nb).map_err(truncated)?,
            };
            *v = ParamGrads {
                weights: read_f64s(&mut cur, nw).map_err(truncated)?,
                bias: read_f64s(&mut cur, nb).map_err(truncated)?,
            };
        }
        if (cur.position() as usize) != bytes.len() {
            return Err(Error::Data("unexpected trailing data after optimizer state".into()));
        }
        Some(state)
    } else {
        None
    };
    Ok(Checkpoint { network, optimizer })
}

pub fn save(path: impl AsRef<Path>, net: &Network, optimizer: Option<&AdamState>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(net, optimizer)?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::Data(m) | Error::Spec(m) | Error::Config(m) | Error::Dimension(m) => {
            Error::format(path, m)
        }
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::adam_step;

    #[test]
    fn header_layout_is_exact() {
        let net = Network::build(Preset::toy(ActivationKind::Maxout, 4), 2, 0).unwrap();
        let bytes = encode(&net, None).unwrap();
        assert_eq!(&bytes[..5], b"MXSR1");
        assert_eq!(&bytes[5..9], &(3u32 << 8 | 6 << 24).to_le_bytes());
        assert_eq!(&bytes[9..13], &2u32.to_le_bytes());
        assert_eq!(&bytes[13..17], &6u32.to_le_bytes());
        assert_eq!(&bytes[17..29], &[4, 0, 0, 0, 1, 0, 0, 0, 3, 0, 0, 0]);
        let w0 = net.params()[0].weights[0];
        assert_eq!(&bytes[29..37], &w0.to_le_bytes());
        let total: usize = 17 + net.params().len() * 12 + net.count_params() * 8;
        assert_eq!(bytes.len(), total);
    }

    #[test]
    fn round_trip_with_optimizer() {
        let mut net = Network::build(Preset::toy(ActivationKind::MaxoutRecursive { depth: 2 }, 8), 3, 4).unwrap();
        let mut state = AdamState::new(net.params());
        let grads: Vec<ParamGrads> = net
            .params()
            .iter()
            .map(|p| ParamGrads {
                weights: vec![0.5; p.weights.len()],
                bias: vec![-0.25; p.bias.len()],
            })
            .collect();
        adam_step(net.params_mut(), &grads, &mut state, 1e-3).unwrap();
        let bytes = encode(&net, Some(&state)).unwrap();
        let ck = decode(&bytes).unwrap();
        assert_eq!(ck.network.params(), net.params());
        assert_eq!(ck.network.spec(), net.spec());
        assert_eq!(ck.optimizer.as_ref(), Some(&state));
        assert_eq!(encode(&ck.network, ck.optimizer.as_ref()).unwrap(), bytes);
    }

    #[test]
    fn all_presets_round_trip() {
        for preset in [Preset::EspcnMu, Preset::Dnsr] {
            let net = Network::build(preset, 4, 1).unwrap();
            let ck = decode(&encode(&net, None).unwrap()).unwrap();
            assert_eq!(ck.network.params(), net.params());
            assert!(ck.optimizer.is_none());
        }
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let net = Network::build(Preset::toy(ActivationKind::Relu, 4), 2, 0).unwrap();
        let bytes = encode(&net, None).unwrap();
        assert!(decode(&bytes[..bytes.len() - 3]).is_err());
        assert!(decode(b"NOPE1").is_err());
        let mut extra = bytes.clone();
        extra.extend_from_slice(b"xyz12");
        assert!(decode(&extra).is_err());
    }

    #[test]
    fn nondefault_slope_is_refused() {
        let net = Network::build(Preset::toy(ActivationKind::LeakyRelu { slope: 0.2 }, 4), 2, 0).unwrap();
        assert!(matches!(encode(&net, None), Err(Error::Config(_))));
    }
}
