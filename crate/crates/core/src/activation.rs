//! Rectifier and maxout activation units.
//!
//! Maxout variants split the channel axis into contiguous blocks: for an
//! input with `C` channels, `x1` is channels `[0, C/2)` and `x2` is
//! `[C/2, C)` (quarters for MU-D). On an exact tie the first operand is
//! selected, for both `max` and `min`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tensor::Tensor4;

pub const DEFAULT_LRELU_SLOPE: f64 = 0.01;
pub const DEFAULT_ELU_ALPHA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationKind {
    Relu,
    LeakyRelu { slope: f64 },
    Elu { alpha: f64 },
    /// `max(x1, x2)`
    Maxout,
    /// `max(x1, x2) - max(x3, x4)`
    MaxoutDiff,
    /// `min(x1, x2)`
    MaxoutMin,
    /// `cat(max(x1, x2), min(x1, x2))`
    MaxoutSort,
    /// Maxout applied `depth` times in a row.
    MaxoutRecursive { depth: u32 },
}

impl ActivationKind {
    pub fn lrelu() -> Self {
        ActivationKind::LeakyRelu {
            slope: DEFAULT_LRELU_SLOPE,
        }
    }

    pub fn elu() -> Self {
        ActivationKind::Elu {
            alpha: DEFAULT_ELU_ALPHA,
        }
    }

    /// The eight units compared in the toy experiments, with default parameters.
    pub fn all() -> [ActivationKind; 8] {
        [
            ActivationKind::Relu,
            ActivationKind::lrelu(),
            ActivationKind::elu(),
            ActivationKind::Maxout,
            ActivationKind::MaxoutDiff,
            ActivationKind::MaxoutMin,
            ActivationKind::MaxoutSort,
            ActivationKind::MaxoutRecursive { depth: 2 },
        ]
    }

    /// Input channels must be a multiple of this.
    pub fn channel_divisor(&self) -> usize {
        match *self {
            ActivationKind::Relu
            | ActivationKind::LeakyRelu { .. }
            | ActivationKind::Elu { .. } => 1,
            ActivationKind::Maxout | ActivationKind::MaxoutMin | ActivationKind::MaxoutSort => 2,
            ActivationKind::MaxoutDiff => 4,
            ActivationKind::MaxoutRecursive { depth } => 1usize << depth.min(63),
        }
    }

    pub fn is_maxout(&self) -> bool {
        !matches!(
            self,
            ActivationKind::Relu | ActivationKind::LeakyRelu { .. } | ActivationKind::Elu { .. }
        )
    }

    pub fn output_channels(&self, c_in: usize) -> Result<usize> {
        if let ActivationKind::MaxoutRecursive { depth } = *self {
            if depth == 0 || depth > 16 {
                return Err(Error::Arity(format!("{self}: recursion depth must be in 1..=16")));
            }
        }
        let d = self.channel_divisor();
        if c_in == 0 || !c_in.is_multiple_of(d) {
            return Err(Error::Arity(format!(
                "{self} needs a channel count divisible by {d}, got {c_in}"
            )));
        }
        Ok(match self {
            ActivationKind::Relu
            | ActivationKind::LeakyRelu { .. }
            | ActivationKind::Elu { .. }
            | ActivationKind::MaxoutSort => c_in,
            ActivationKind::Maxout | ActivationKind::MaxoutMin => c_in / 2,
            ActivationKind::MaxoutDiff => c_in / 4,
            ActivationKind::MaxoutRecursive { .. } => c_in / d,
        })
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ActivationKind::Relu => f.write_str("relu"),
            ActivationKind::LeakyRelu { slope } if slope == DEFAULT_LRELU_SLOPE => {
                f.write_str("lrelu")
            }
            ActivationKind::LeakyRelu { slope } => write!(f, "lrelu:{slope}"),
            ActivationKind::Elu { alpha } if alpha == DEFAULT_ELU_ALPHA => f.write_str("elu"),
            ActivationKind::Elu { alpha } => write!(f, "elu:{alpha}"),
            ActivationKind::Maxout => f.write_str("mu"),
            ActivationKind::MaxoutDiff => f.write_str("mu-d"),
            ActivationKind::MaxoutMin => f.write_str("mu-m"),
            ActivationKind::MaxoutSort => f.write_str("mu-s"),
            ActivationKind::MaxoutRecursive { depth } => write!(f, "mu-r:{depth}"),
        }
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    /// Accepts `relu`, `lrelu[:slope]`, `elu[:alpha]`, `mu`, `mu-d`, `mu-m`, `mu-s`, `mu-r:<n>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s.as_str(), None),
        };
        let bad = || Error::Config(format!("unknown activation '{s}'"));
        let real = |a: &str| a.parse::<f64>().map_err(|_| bad());
        let kind = match (name, arg) {
            ("relu", None) => ActivationKind::Relu,
            ("lrelu", None) => ActivationKind::lrelu(),
            ("lrelu", Some(a)) => ActivationKind::LeakyRelu { slope: real(a)? },
            ("elu", None) => ActivationKind::elu(),
            ("elu", Some(a)) => ActivationKind::Elu { alpha: real(a)? },
            ("mu", None) => ActivationKind::Maxout,
            ("mu-d", None) => ActivationKind::MaxoutDiff,
            ("mu-m", None) => ActivationKind::MaxoutMin,
            ("mu-s", None) => ActivationKind::MaxoutSort,
            ("mu-r", Some(a)) => {
                let depth: u32 = a.parse().map_err(|_| bad())?;
                if depth == 0 {
                    return Err(Error::Config("mu-r depth must be at least 1".into()));
                }
                ActivationKind::MaxoutRecursive { depth }
            }
            _ => return Err(bad()),
        };
        Ok(kind)
    }
}

/// State retained by a forward pass for the matching backward pass.
#[derive(Debug, Clone)]
pub struct ActivationTrace {
    kind: ActivationKind,
    input_shape: [usize; 4],
    record: Record,
    margin: f64,
}

#[derive(Debug, Clone)]
enum Record {
    /// Rectifier family: the pre-activation values.
    Input(Tensor4),
    /// One mask per comparison node, `true` where the first operand was selected.
    Winners(Vec<Vec<bool>>),
}

impl ActivationTrace {
    pub fn kind(&self) -> ActivationKind {
        self.kind
    }

    pub fn input_shape(&self) -> [usize; 4] {
        self.input_shape
    }

    /// Smallest distance of any input to a non-differentiable point: `|x|`
    /// for the rectifiers, `|a - b|` over every max/min comparison otherwise.
    pub fn kink_margin(&self) -> f64 {
        self.margin
    }

    /// Per-comparison masks (empty for the rectifier family). For MU-D the
    /// masks are `[max(x1,x2), max(x3,x4)]`; for MU-R one per recursion level.
    pub fn winner_masks(&self) -> &[Vec<bool>] {
        match &self.record {
            Record::Winners(m) => m,
            Record::Input(_) => &[],
        }
    }
}

/// Element-wise comparison of the two contiguous channel halves of `x`.
fn compare_halves(x: &Tensor4, take_max: bool) -> (Tensor4, Tensor4, Vec<bool>, f64) {
    let half = x.c() / 2;
    let plane = x.h() * x.w();
    let len = half * plane;
    let mut winners = Vec::with_capacity(x.n() * len);
    let mut hi = Vec::with_capacity(x.n() * len);
    let mut lo = Vec::with_capacity(x.n() * len);
    let mut margin = f64::INFINITY;
    for b in 0..x.n() {
        let (x1, x2) = x.item(b).split_at(len);
        for (&a, &c) in x1.iter().zip(x2) {
            margin = margin.min((a - c).abs());
            let first = if take_max { a >= c } else { a <= c };
            winners.push(first);
            let (w, l) = if first { (a, c) } else { (c, a) };
            hi.push(w);
            lo.push(l);
        }
    }
    let mk = |d| Tensor4::from_vec(x.n(), half, x.h(), x.w(), d).expect("half shape");
    (mk(hi), mk(lo), winners, margin)
}

/// Scatter two half-size gradients back to the operands of one comparison.
/// `to_winner` goes to the selected operand, `to_loser` to the other.
fn route_halves(
    winners: &[bool],
    to_winner: &Tensor4,
    to_loser: Option<&Tensor4>,
) -> Tensor4 {
    let (n, half, h, w) = (to_winner.n(), to_winner.c(), to_winner.h(), to_winner.w());
    let len = half * h * w;
    let mut out = Tensor4::zeros(n, 2 * half, h, w);
    let data = out.data_mut();
    for b in 0..n {
        let gw = to_winner.item(b);
        let gl = to_loser.map(|t| t.item(b));
        let item = &mut data[b * 2 * len..(b + 1) * 2 * len];
        let (x1, x2) = item.split_at_mut(len);
        for i in 0..len {
            let win = gw[i];
            let lose = gl.map_or(0.0, |g| g[i]);
            if winners[b * len + i] {
                x1[i] = win;
                x2[i] = lose;
            } else {
                x1[i] = lose;
                x2[i] = win;
            }
        }
    }
    out
}

fn split_quarter_pairs(x: &Tensor4) -> (Tensor4, Tensor4) {
    // (x1, x2) are the first two quarters, (x3, x4) the last two
    let parts = crate::tensor::split_channels(x, 2).expect("even channels");
    let mut it = parts.into_iter();
    (it.next().unwrap(), it.next().unwrap())
}

pub fn forward(kind: ActivationKind, x: &Tensor4) -> Result<(Tensor4, ActivationTrace)> {
    kind.output_channels(x.c())?;
    let input_shape = x.shape();
    let abs_margin = || x.data().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let (out, record, margin) = match kind {
        ActivationKind::Relu => (
            x.map(|v| v.max(0.0)),
            Record::Input(x.clone()),
            abs_margin(),
        ),
        ActivationKind::LeakyRelu { slope } => (
            x.map(|v| if v > 0.0 { v } else { slope * v }),
            Record::Input(x.clone()),
            abs_margin(),
        ),
        ActivationKind::Elu { alpha } => (
            x.map(|v| if v > 0.0 { v } else { alpha * v.exp_m1() }),
            Record::Input(x.clone()),
            abs_margin(),
        ),
        ActivationKind::Maxout => {
            let (hi, _, m, gap) = compare_halves(x, true);
            (hi, Record::Winners(vec![m]), gap)
        }
        ActivationKind::MaxoutMin => {
            let (lo, _, m, gap) = compare_halves(x, false);
            (lo, Record::Winners(vec![m]), gap)
        }
        ActivationKind::MaxoutSort => {
            let (hi, lo, m, gap) = compare_halves(x, true);
            (
                crate::tensor::concat_channels(&[hi, lo])?,
                Record::Winners(vec![m]),
                gap,
            )
        }
        ActivationKind::MaxoutDiff => {
            let (a, b) = split_quarter_pairs(x);
            let (m12, _, w12, g12) = compare_halves(&a, true);
            let (m34, _, w34, g34) = compare_halves(&b, true);
            (m12.sub(&m34)?, Record::Winners(vec![w12, w34]), g12.min(g34))
        }
        ActivationKind::MaxoutRecursive { depth } => {
            let mut cur = x.clone();
            let mut masks = Vec::with_capacity(depth as usize);
            let mut margin = f64::INFINITY;
            for _ in 0..depth {
                let (hi, _, m, gap) = compare_halves(&cur, true);
                masks.push(m);
                margin = margin.min(gap);
                cur = hi;
            }
            (cur, Record::Winners(masks), margin)
        }
    };
    Ok((
        out,
        ActivationTrace {
            kind,
            input_shape,
            record,
            margin,
        },
    ))
}

pub fn backward(kind: ActivationKind, trace: &ActivationTrace, grad_a: &Tensor4) -> Result<Tensor4> {
    if trace.kind != kind {
        return Err(Error::State(format!(
            "trace was recorded for {} but backward requested for {kind}",
            trace.kind
        )));
    }
    let [n, c, h, w] = trace.input_shape;
    let expect = [n, kind.output_channels(c)?, h, w];
    if grad_a.shape() != expect {
        return Err(Error::State(format!(
            "{kind}: gradient shape {:?} does not match activation output {expect:?}",
            grad_a.shape()
        )));
    }
    let masks = trace.winner_masks();
    let grad_x = match (kind, &trace.record) {
        (ActivationKind::Relu, Record::Input(x)) => {
            zip_map(x, grad_a, |v, g| if v > 0.0 { g } else { 0.0 })
        }
        (ActivationKind::LeakyRelu { slope }, Record::Input(x)) => {
            zip_map(x, grad_a, |v, g| if v > 0.0 { g } else { slope * g })
        }
        (ActivationKind::Elu { alpha }, Record::Input(x)) => {
            zip_map(x, grad_a, |v, g| if v > 0.0 { g } else { alpha * v.exp() * g })
        }
        (ActivationKind::Maxout | ActivationKind::MaxoutMin, Record::Winners(_)) => {
            route_halves(&masks[0], grad_a, None)
        }
        (ActivationKind::MaxoutSort, Record::Winners(_)) => {
            let parts = crate::tensor::split_channels(grad_a, 2)?;
            route_halves(&masks[0], &parts[0], Some(&parts[1]))
        }
        (ActivationKind::MaxoutDiff, Record::Winners(_)) => {
            let g12 = route_halves(&masks[0], grad_a, None);
            let g34 = route_halves(&masks[1], &grad_a.scale(-1.0), None);
            crate::tensor::concat_channels(&[g12, g34])?
        }
        (ActivationKind::MaxoutRecursive { .. }, Record::Winners(_)) => {
            let mut g = grad_a.clone();
            for m in masks.iter().rev() {
                g = route_halves(m, &g, None);
            }
            g
        }
        _ => return Err(Error::State(format!("{kind}: malformed trace"))),
    };
    Ok(grad_x)
}

fn zip_map(x: &Tensor4, g: &Tensor4, f: impl Fn(f64, f64) -> f64) -> Tensor4 {
    let data = x.data().iter().zip(g.data()).map(|(&v, &d)| f(v, d)).collect();
    Tensor4::from_vec(x.n(), x.c(), x.h(), x.w(), data).expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn t(c: usize, vals: &[f64]) -> Tensor4 {
        Tensor4::from_vec(1, c, 1, vals.len() / c, vals.to_vec()).unwrap()
    }

    #[test]
    fn output_channel_algebra() {
        assert_eq!(ActivationKind::Maxout.output_channels(16).unwrap(), 8);
        assert_eq!(ActivationKind::MaxoutDiff.output_channels(24).unwrap(), 6);
        assert_eq!(ActivationKind::MaxoutSort.output_channels(12).unwrap(), 12);
        assert_eq!(ActivationKind::MaxoutMin.output_channels(16).unwrap(), 8);
        assert_eq!(
            ActivationKind::MaxoutRecursive { depth: 2 }.output_channels(24).unwrap(),
            6
        );
        assert_eq!(ActivationKind::Relu.output_channels(7).unwrap(), 7);
        let err = ActivationKind::MaxoutDiff.output_channels(6).unwrap_err();
        assert!(matches!(err, Error::Arity(ref m) if m.contains("mu-d") && m.contains('6')));
        assert!(ActivationKind::Maxout.output_channels(3).is_err());
        assert!(ActivationKind::MaxoutRecursive { depth: 3 }
            .output_channels(12)
            .is_err());
    }

    #[test]
    fn names_round_trip() {
        for k in ActivationKind::all() {
            assert_eq!(k.to_string().parse::<ActivationKind>().unwrap(), k);
        }
        assert_eq!(
            "mu-r:3".parse::<ActivationKind>().unwrap(),
            ActivationKind::MaxoutRecursive { depth: 3 }
        );
        assert_eq!(
            "lrelu:0.2".parse::<ActivationKind>().unwrap(),
            ActivationKind::LeakyRelu { slope: 0.2 }
        );
        assert!("mu-r".parse::<ActivationKind>().is_err());
        assert!("mu-r:0".parse::<ActivationKind>().is_err());
        assert!("tanh".parse::<ActivationKind>().is_err());
    }

    #[test]
    fn maxout_equal_halves_pass_through() {
        let x = t(2, &[0.3, 0.3]);
        let (a, _) = forward(ActivationKind::Maxout, &x).unwrap();
        assert_eq!(a.data(), &[0.3]);
    }

    #[test]
    fn maxout_diff_direct() {
        let x = t(4, &[2.0, -1.0, 0.0, 0.0]);
        let (a, _) = forward(ActivationKind::MaxoutDiff, &x).unwrap();
        assert_eq!(a.data(), &[2.0]);
    }

    #[test]
    fn maxout_recursive_contiguous_halving() {
        let x = t(4, &[1.0, 5.0, -3.0, 2.0]);
        let (a, _) = forward(ActivationKind::MaxoutRecursive { depth: 2 }, &x).unwrap();
        assert_eq!(a.data(), &[5.0]);
    }

    #[test]
    fn relu_positive_identity_gradient() {
        let x = t(3, &[0.5, 1.0, 2.0]);
        let (_, tr) = forward(ActivationKind::Relu, &x).unwrap();
        let g = t(3, &[1.0, -2.0, 3.0]);
        assert_eq!(backward(ActivationKind::Relu, &tr, &g).unwrap(), g);
    }

    #[test]
    fn maxout_routes_to_winner() {
        let x = t(2, &[3.0, 1.0]);
        let (_, tr) = forward(ActivationKind::Maxout, &x).unwrap();
        let gx = backward(ActivationKind::Maxout, &tr, &t(1, &[7.0])).unwrap();
        assert_eq!(gx.data(), &[7.0, 0.0]);
    }

    #[test]
    fn ties_route_to_first_operand() {
        for kind in [ActivationKind::Maxout, ActivationKind::MaxoutMin] {
            let x = t(2, &[1.0, 1.0]);
            let (_, tr) = forward(kind, &x).unwrap();
            let gx = backward(kind, &tr, &t(1, &[1.0])).unwrap();
            assert_eq!(gx.data(), &[1.0, 0.0]);
        }
    }

    #[test]
    fn backward_checks_trace_and_shape() {
        let x = t(2, &[3.0, 1.0]);
        let (_, tr) = forward(ActivationKind::Maxout, &x).unwrap();
        assert!(matches!(
            backward(ActivationKind::MaxoutMin, &tr, &t(1, &[1.0])),
            Err(Error::State(_))
        ));
        assert!(matches!(
            backward(ActivationKind::Maxout, &tr, &t(2, &[1.0, 1.0])),
            Err(Error::State(_))
        ));
    }

    fn random_away_from_kinks(rng: &mut ChaCha8Rng, n: usize, c: usize, hw: usize) -> Tensor4 {
        // draw from a lattice with spacing 0.01 then jitter by at most 1e-3,
        // keeping every value, and every pairwise gap, at least ~8e-3 from a kink
        let mut x = Tensor4::zeros(n, c, hw, hw);
        let len = x.len();
        let mut used = std::collections::HashSet::new();
        for i in 0..len {
            let mut k: i32;
            loop {
                k = rng.gen_range(-150..150);
                if k != 0 && used.insert(k) {
                    break;
                }
            }
            x.data_mut()[i] = k as f64 * 0.01 + rng.gen_range(-1e-3..1e-3);
        }
        x
    }

    #[test]
    fn backward_matches_finite_differences_for_every_kind() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in ActivationKind::all() {
            let x = random_away_from_kinks(&mut rng, 2, 8, 3);
            let (a, tr) = forward(kind, &x).unwrap();
            let g = Tensor4::from_fn(a.n(), a.c(), a.h(), a.w(), |_, _, _, _| {
                rng.gen_range(-1.0..1.0)
            });
            let gx = backward(kind, &tr, &g).unwrap();
            let eps = 1e-5;
            for i in 0..x.len() {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp.data_mut()[i] += eps;
                xm.data_mut()[i] -= eps;
                let lp = forward(kind, &xp).unwrap().0.dot(&g).unwrap();
                let lm = forward(kind, &xm).unwrap().0.dot(&g).unwrap();
                let num = (lp - lm) / (2.0 * eps);
                let ana = gx.data()[i];
                let err = (ana - num).abs() / ana.abs().max(num.abs()).max(1e-8);
                assert!(err < 1e-6 || (ana - num).abs() < 1e-10, "{kind} elem {i}: {ana} vs {num}");
            }
        }
    }

    #[test]
    fn maxout_selects_exactly_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_away_from_kinks(&mut rng, 1, 8, 4);
        let (a, tr) = forward(ActivationKind::Maxout, &x).unwrap();
        let gx = backward(ActivationKind::Maxout, &tr, &a.map(|_| 1.0)).unwrap();
        let alive = gx.data().iter().filter(|&&v| v != 0.0).count();
        assert_eq!(alive * 2, x.len());
    }
}
