//! Central-difference verification of [`Network::backward`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::network::{Gradients, Mode, Network, Output};
use crate::tensor::Tensor4;

/// Denominator floor for the relative error of near-zero gradients.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// Where the worst error occurred, e.g. `conv 2 weight 17` or `input 3`.
    pub worst: String,
    pub checked: usize,
    /// Closest any pre-activation came to an activation kink at the probe.
    pub kink_margin: f64,
}

pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Fixed inputs of the scalar test loss `L = <forward_raw(probe, base), direction>`.
struct Probe {
    lr: Tensor4,
    base: Tensor4,
    direction: Tensor4,
}

impl Probe {
    fn new(net: &Network, lr: &Tensor4) -> Self {
        let r = net.scale();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let (n, h, w) = (lr.n(), lr.h() * r, lr.w() * r);
        let base = Tensor4::from_fn(n, 1, h, w, |_, _, _, _| rng.gen_range(0.0..1.0));
        let direction = Tensor4::from_fn(n, 1, h, w, |_, _, _, _| rng.gen_range(-1.0..1.0));
        Probe {
            lr: lr.clone(),
            base,
            direction,
        }
    }

    /// Central difference of the loss between two evaluations. The base
    /// term of the loss is constant and cancels, so only the residuals are
    /// differenced, before the dot product, to keep rounding error small.
    fn central_difference(&self, net: &mut Network, plus: &Tensor4, minus: &Tensor4, eps: f64) -> Result<f64> {
        let rp = net.residual(plus, Mode::Inference)?;
        let rm = net.residual(minus, Mode::Inference)?;
        Ok(rp.sub(&rm)?.dot(&self.direction)? / (2.0 * eps))
    }
}

/// Analytic gradients and kink margin of the probe loss.
pub fn analytic_gradients(net: &mut Network, probe: &Tensor4) -> Result<(Gradients, f64)> {
    let p = Probe::new(net, probe);
    net.forward(&p.lr, &p.base, Mode::Training, Output::Raw)?;
    let margin = net
        .recorded_traces()
        .iter()
        .map(|t| t.kink_margin())
        .fold(f64::INFINITY, f64::min);
    let grads = net.backward(&p.direction)?;
    net.clear_tape();
    Ok((grads, margin))
}

fn param(net: &Network, layer: usize, is_bias: bool, j: usize) -> f64 {
    let p = &net.params()[layer];
    if is_bias {
        p.bias[j]
    } else {
        p.weights[j]
    }
}

fn set_param(net: &mut Network, layer: usize, is_bias: bool, j: usize, value: f64) {
    let p = &mut net.params_mut()[layer];
    if is_bias {
        p.bias[j] = value;
    } else {
        p.weights[j] = value;
    }
}

/// Compares `analytic` against central differences of the probe loss for
/// every parameter and every input element.
pub fn compare_gradients(
    net: &mut Network,
    probe: &Tensor4,
    eps: f64,
    analytic: &Gradients,
) -> Result<(f64, String, usize)> {
    compare_subset(net, probe, eps, analytic, None)
}

/// Parameter coordinates `(conv, is_bias, index)` to check: all of them, or
/// `n` drawn without replacement.
fn coordinates(net: &Network, sample: Option<(usize, u64)>) -> Vec<(usize, bool, usize)> {
    let mut all = Vec::new();
    for (li, p) in net.params().iter().enumerate() {
        all.extend((0..p.weights.len()).map(|j| (li, false, j)));
        all.extend((0..p.bias.len()).map(|j| (li, true, j)));
    }
    match sample {
        Some((n, seed)) if n < all.len() => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked: Vec<_> = rand::seq::index::sample(&mut rng, all.len(), n).into_iter().collect();
            picked.sort_unstable();
            picked.into_iter().map(|i| all[i]).collect()
        }
        _ => all,
    }
}

fn compare_subset(
    net: &mut Network,
    probe: &Tensor4,
    eps: f64,
    analytic: &Gradients,
    sample: Option<(usize, u64)>,
) -> Result<(f64, String, usize)> {
    let p = Probe::new(net, probe);
    let mut worst = (0.0f64, String::new());
    let mut checked = 0;
    let mut record = |err: f64, what: &dyn Fn() -> String| {
        checked += 1;
        if err > worst.0 || worst.1.is_empty() {
            worst = (err, what());
        }
    };

    for (li, is_bias, j) in coordinates(net, sample) {
        let orig = param(net, li, is_bias, j);
        set_param(net, li, is_bias, j, orig + eps);
        let rp = net.residual(&p.lr, Mode::Inference)?;
        set_param(net, li, is_bias, j, orig - eps);
        let rm = net.residual(&p.lr, Mode::Inference)?;
        set_param(net, li, is_bias, j, orig);
        let num = rp.sub(&rm)?.dot(&p.direction)? / (2.0 * eps);
        let g = &analytic.convs[li];
        let ana = if is_bias { g.bias[j] } else { g.weights[j] };
        let kind = if is_bias { "bias" } else { "weight" };
        record(rel_error(ana, num), &|| format!("conv {li} {kind} {j}"));
    }
    for i in 0..p.lr.len() {
        let (mut xp, mut xm) = (p.lr.clone(), p.lr.clone());
        xp.data_mut()[i] += eps;
        xm.data_mut()[i] -= eps;
        let num = p.central_difference(net, &xp, &xm, eps)?;
        record(rel_error(analytic.input.data()[i], num), &|| format!("input {i}"));
    }
    Ok((worst.0, worst.1, checked))
}

/// Worst relative error between backprop and central differences over all
/// parameters and input elements of `net` at `probe`.
pub fn grad_check(net: &mut Network, probe: &Tensor4, eps: f64) -> Result<GradCheck> {
    let (grads, kink_margin) = analytic_gradients(net, probe)?;
    let (max_rel_error, worst, checked) = compare_gradients(net, probe, eps, &grads)?;
    Ok(GradCheck {
        max_rel_error,
        worst,
        checked,
        kink_margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    pub eps: f64,
    /// Check only this many randomly chosen parameters (all input elements
    /// are always checked).
    pub max_params: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            eps: 1e-6,
            max_params: None,
            seed: 0,
        }
    }
}

pub fn grad_check_with(net: &mut Network, probe: &Tensor4, opts: &GradCheckOptions) -> Result<GradCheck> {
    let (grads, kink_margin) = analytic_gradients(net, probe)?;
    let sample = opts.max_params.map(|n| (n, opts.seed));
    let (max_rel_error, worst, checked) = compare_subset(net, probe, opts.eps, &grads, sample)?;
    Ok(GradCheck {
        max_rel_error,
        worst,
        checked,
        kink_margin,
    })
}

/// Uniform `[-0.5, 0.5)` probe of shape `(1, 1, h, w)`.
pub fn random_probe(h: usize, w: usize, seed: u64) -> Tensor4 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor4::from_fn(1, 1, h, w, |_, _, _, _| rng.gen_range(-0.5..0.5))
}

/// First probe, over seeds `seed, seed + 1, ...`, whose kink margin is at
/// least `min_margin`. Returns the probe, its margin and the seed used, or
/// `None` after `tries` attempts.
pub fn find_probe(
    net: &mut Network,
    h: usize,
    w: usize,
    seed: u64,
    min_margin: f64,
    tries: u64,
) -> Result<Option<(Tensor4, f64, u64)>> {
    for s in seed..seed.saturating_add(tries) {
        let probe = random_probe(h, w, s);
        let (_, margin) = analytic_gradients(net, &probe)?;
        if margin >= min_margin {
            return Ok(Some((probe, margin, s)));
        }
    }
    Ok(None)
}
