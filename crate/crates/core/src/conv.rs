//! Stride-1, zero-padded 2-D convolution with its analytic backward pass.
//!
//! Both directions lower each batch item to an im2col matrix and hand the
//! products to a dense GEMM. Batch items are processed independently and
//! their weight-gradient partials are reduced in batch order, so results
//! are bitwise identical for any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::Tensor4;

/// Weights `(c_out, c_in, k, k)` in row-major order plus one bias per output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    c_out: usize,
    c_in: usize,
    k: usize,
    pad: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvParams {
    /// Zero-initialized parameters with size-preserving padding.
    pub fn zeros(c_out: usize, c_in: usize, k: usize) -> Result<Self> {
        if k.is_multiple_of(2) {
            return Err(Error::Config(format!("kernel size {k} must be odd")));
        }
        Self::from_parts(
            c_out,
            c_in,
            k,
            (k - 1) / 2,
            vec![0.0; c_out * c_in * k * k],
            vec![0.0; c_out],
        )
    }

    pub fn from_parts(
        c_out: usize,
        c_in: usize,
        k: usize,
        pad: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if c_out == 0 || c_in == 0 || k == 0 {
            return Err(Error::Config(format!(
                "degenerate convolution {c_out}x{c_in}x{k}x{k}"
            )));
        }
        if k.is_multiple_of(2) || pad != (k - 1) / 2 {
            return Err(Error::Config(format!(
                "padding {pad} does not preserve spatial size for kernel {k}"
            )));
        }
        if weights.len() != c_out * c_in * k * k || bias.len() != c_out {
            return Err(Error::Dimension(format!(
                "parameter buffers ({} weights, {} biases) do not match {c_out}x{c_in}x{k}x{k}",
                weights.len(),
                bias.len()
            )));
        }
        Ok(ConvParams {
            c_out,
            c_in,
            k,
            pad,
            weights,
            bias,
        })
    }

    pub fn c_out(&self) -> usize {
        self.c_out
    }
    pub fn c_in(&self) -> usize {
        self.c_in
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn pad(&self) -> usize {
        self.pad
    }

    /// Inputs feeding each output unit, `c_in * k * k`.
    pub fn fan_in(&self) -> usize {
        self.c_in * self.k * self.k
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    #[inline]
    pub fn weight(&self, o: usize, i: usize, dy: usize, dx: usize) -> f64 {
        self.weights[((o * self.c_in + i) * self.k + dy) * self.k + dx]
    }
}

/// Gradients of a scalar loss with respect to one convolution's operands.
#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub input: Tensor4,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Column matrix of shape `(c_in * k * k, h * w)` for one batch item.
fn im2col(item: &[f64], c_in: usize, h: usize, w: usize, k: usize, pad: usize) -> Vec<f64> {
    let hw = h * w;
    let mut col = vec![0.0; c_in * k * k * hw];
    for i in 0..c_in {
        let plane = &item[i * hw..(i + 1) * hw];
        for dy in 0..k {
            for dx in 0..k {
                let row = &mut col[((i * k + dy) * k + dx) * hw..][..hw];
                for y in 0..h {
                    let sy = y as isize + dy as isize - pad as isize;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let src = &plane[sy as usize * w..][..w];
                    let dst = &mut row[y * w..][..w];
                    // valid x range where 0 <= x + dx - pad < w
                    let x0 = pad.saturating_sub(dx);
                    let x1 = (w + pad).saturating_sub(dx).min(w);
                    for x in x0..x1 {
                        dst[x] = src[x + dx - pad];
                    }
                }
            }
        }
    }
    col
}

/// Scatter-add a column-gradient matrix back to image layout.
fn col2im(col: &[f64], c_in: usize, h: usize, w: usize, k: usize, pad: usize, out: &mut [f64]) {
    let hw = h * w;
    for i in 0..c_in {
        let plane = &mut out[i * hw..(i + 1) * hw];
        for dy in 0..k {
            for dx in 0..k {
                let row = &col[((i * k + dy) * k + dx) * hw..][..hw];
                for y in 0..h {
                    let sy = y as isize + dy as isize - pad as isize;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[sy as usize * w..][..w];
                    let src = &row[y * w..][..w];
                    let x0 = pad.saturating_sub(dx);
                    let x1 = (w + pad).saturating_sub(dx).min(w);
                    for x in x0..x1 {
                        dst[x + dx - pad] += src[x];
                    }
                }
            }
        }
    }
}

/// `c (m x n) = alpha * op(a) * op(b) + beta * c`, all row-major with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (isize, isize),
    b: &[f64],
    (rsb, csb): (isize, isize),
    beta: f64,
    c: &mut [f64],
) {
    debug_assert!(c.len() >= m * n);
    // SAFETY: every stride pair addresses only elements inside the slices,
    // which the callers size as (m x k), (k x n) and (m x n) matrices.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

fn check_input(input: &Tensor4, p: &ConvParams) -> Result<()> {
    if input.c() != p.c_in {
        return Err(Error::Dimension(format!(
            "convolution expects {} input channels, got {}",
            p.c_in,
            input.c()
        )));
    }
    Ok(())
}

fn forward_item(item: &[f64], p: &ConvParams, h: usize, w: usize) -> Vec<f64> {
    let hw = h * w;
    let kk = p.c_in * p.k * p.k;
    let col = im2col(item, p.c_in, h, w, p.k, p.pad);
    let mut out = vec![0.0; p.c_out * hw];
    for (o, row) in out.chunks_exact_mut(hw).enumerate() {
        row.fill(p.bias[o]);
    }
    gemm(
        p.c_out,
        kk,
        hw,
        &p.weights,
        (kk as isize, 1),
        &col,
        (hw as isize, 1),
        1.0,
        &mut out,
    );
    out
}

pub fn conv2d_forward(input: &Tensor4, p: &ConvParams) -> Result<Tensor4> {
    check_input(input, p)?;
    let (n, h, w) = (input.n(), input.h(), input.w());
    let items: Vec<Vec<f64>> = {
        #[cfg(feature = "parallel")]
        let it = (0..n).into_par_iter();
        #[cfg(not(feature = "parallel"))]
        let it = 0..n;
        it.map(|b| forward_item(input.item(b), p, h, w)).collect()
    };
    Tensor4::from_vec(n, p.c_out, h, w, items.concat())
}

struct ItemGrads {
    input: Vec<f64>,
    weights: Vec<f64>,
}

fn backward_item(item: &[f64], g: &[f64], p: &ConvParams, h: usize, w: usize) -> ItemGrads {
    let hw = h * w;
    let kk = p.c_in * p.k * p.k;
    let col = im2col(item, p.c_in, h, w, p.k, p.pad);

    // dW = g (c_out x hw) * col^T (hw x kk)
    let mut weights = vec![0.0; p.c_out * kk];
    gemm(
        p.c_out,
        hw,
        kk,
        g,
        (hw as isize, 1),
        &col,
        (1, hw as isize),
        0.0,
        &mut weights,
    );

    // dcol = W^T (kk x c_out) * g (c_out x hw)
    let mut dcol = vec![0.0; kk * hw];
    gemm(
        kk,
        p.c_out,
        hw,
        &p.weights,
        (1, kk as isize),
        g,
        (hw as isize, 1),
        0.0,
        &mut dcol,
    );
    let mut input = vec![0.0; p.c_in * hw];
    col2im(&dcol, p.c_in, h, w, p.k, p.pad, &mut input);
    ItemGrads { input, weights }
}

pub fn conv2d_backward(input: &Tensor4, p: &ConvParams, grad_out: &Tensor4) -> Result<ConvGrads> {
    check_input(input, p)?;
    let (n, h, w) = (input.n(), input.h(), input.w());
    if grad_out.shape() != [n, p.c_out, h, w] {
        return Err(Error::Dimension(format!(
            "upstream gradient shape {:?} does not match convolution output {:?}",
            grad_out.shape(),
            [n, p.c_out, h, w]
        )));
    }
    let items: Vec<ItemGrads> = {
        #[cfg(feature = "parallel")]
        let it = (0..n).into_par_iter();
        #[cfg(not(feature = "parallel"))]
        let it = 0..n;
        it.map(|b| backward_item(input.item(b), grad_out.item(b), p, h, w))
            .collect()
    };

    let mut weights = vec![0.0; p.weights.len()];
    let mut input_grad = Vec::with_capacity(input.len());
    for item in &items {
        for (acc, v) in weights.iter_mut().zip(&item.weights) {
            *acc += v;
        }
        input_grad.extend_from_slice(&item.input);
    }
    let mut bias = vec![0.0; p.c_out];
    for b in 0..n {
        for (o, acc) in bias.iter_mut().enumerate() {
            *acc += grad_out.plane(b, o).iter().sum::<f64>();
        }
    }
    Ok(ConvGrads {
        input: Tensor4::from_vec(n, p.c_in, h, w, input_grad)?,
        weights,
        bias,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct seven-loop convolution, written independently of the im2col path.
    fn naive_conv(x: &Tensor4, p: &ConvParams) -> Tensor4 {
        let (k, pad) = (p.k() as isize, p.pad() as isize);
        Tensor4::from_fn(x.n(), p.c_out(), x.h(), x.w(), |b, o, y, xx| {
            let mut acc = p.bias[o];
            for i in 0..p.c_in() {
                for dy in 0..k {
                    for dx in 0..k {
                        let sy = y as isize + dy - pad;
                        let sx = xx as isize + dx - pad;
                        if sy >= 0 && sx >= 0 && (sy as usize) < x.h() && (sx as usize) < x.w() {
                            acc += p.weight(o, i, dy as usize, dx as usize)
                                * x.get(b, i, sy as usize, sx as usize);
                        }
                    }
                }
            }
            acc
        })
    }

    fn random_tensor(rng: &mut ChaCha8Rng, n: usize, c: usize, h: usize, w: usize) -> Tensor4 {
        Tensor4::from_fn(n, c, h, w, |_, _, _, _| rng.gen_range(-1.0..1.0))
    }

    fn random_params(rng: &mut ChaCha8Rng, c_out: usize, c_in: usize, k: usize) -> ConvParams {
        let mut p = ConvParams::zeros(c_out, c_in, k).unwrap();
        p.weights.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        p.bias.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        p
    }

    fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-300))
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_kernel() {
        let x = Tensor4::full(1, 1, 3, 3, 1.0);
        let mut p = ConvParams::zeros(1, 1, 3).unwrap();
        p.weights[4] = 1.0;
        assert_eq!(conv2d_forward(&x, &p).unwrap(), x);
    }

    #[test]
    fn all_ones_kernel_on_two_by_two() {
        let x = Tensor4::from_vec(1, 1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut p = ConvParams::zeros(1, 1, 3).unwrap();
        p.weights.fill(1.0);
        let y = conv2d_forward(&x, &p).unwrap();
        assert_eq!(y.data(), &[10.0, 10.0, 10.0, 10.0]);
        assert_eq!(naive_conv(&x, &p), y);
    }

    #[test]
    fn matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(k, c_in, c_out, h, w) in &[(3, 4, 5, 8, 8), (5, 1, 3, 7, 9), (3, 2, 1, 1, 1), (5, 3, 2, 2, 3)] {
            let x = random_tensor(&mut rng, 2, c_in, h, w);
            let p = random_params(&mut rng, c_out, c_in, k);
            let fast = conv2d_forward(&x, &p).unwrap();
            let slow = naive_conv(&x, &p);
            assert!(max_rel_err(fast.data(), slow.data()) < 1e-12, "k={k}");
        }
    }

    #[test]
    fn rejects_channel_mismatch_and_bad_padding() {
        let p = ConvParams::zeros(2, 3, 3).unwrap();
        let x = Tensor4::zeros(1, 2, 4, 4);
        assert!(matches!(conv2d_forward(&x, &p), Err(Error::Dimension(_))));
        assert!(matches!(
            ConvParams::from_parts(1, 1, 3, 0, vec![0.0; 9], vec![0.0]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn zero_upstream_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_tensor(&mut rng, 2, 3, 5, 5);
        let p = random_params(&mut rng, 4, 3, 3);
        let g = conv2d_backward(&x, &p, &Tensor4::zeros(2, 4, 5, 5)).unwrap();
        assert!(g.input.data().iter().all(|&v| v == 0.0));
        assert!(g.weights.iter().all(|&v| v == 0.0));
        assert!(g.bias.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bias_gradient_is_upstream_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_tensor(&mut rng, 3, 1, 1, 1);
        let p = random_params(&mut rng, 2, 1, 3);
        let go = random_tensor(&mut rng, 3, 2, 1, 1);
        let g = conv2d_backward(&x, &p, &go).unwrap();
        for o in 0..2 {
            let expect: f64 = (0..3).map(|b| go.get(b, o, 0, 0)).sum();
            assert!((g.bias[o] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_tensor(&mut rng, 2, 2, 4, 5);
        let p = random_params(&mut rng, 3, 2, 3);
        let go = random_tensor(&mut rng, 2, 3, 4, 5);
        let loss = |x: &Tensor4, p: &ConvParams| naive_conv(x, p).dot(&go).unwrap();
        let g = conv2d_backward(&x, &p, &go).unwrap();
        let eps = 1e-5;
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-8);

        for i in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp.data_mut()[i] += eps;
            xm.data_mut()[i] -= eps;
            let num = (loss(&xp, &p) - loss(&xm, &p)) / (2.0 * eps);
            assert!(rel(g.input.data()[i], num) < 1e-6, "input {i}");
        }
        for i in 0..p.weights.len() {
            let (mut pp, mut pm) = (p.clone(), p.clone());
            pp.weights[i] += eps;
            pm.weights[i] -= eps;
            let num = (loss(&x, &pp) - loss(&x, &pm)) / (2.0 * eps);
            assert!(rel(g.weights[i], num) < 1e-6, "weight {i}");
        }
        for i in 0..p.bias.len() {
            let (mut pp, mut pm) = (p.clone(), p.clone());
            pp.bias[i] += eps;
            pm.bias[i] -= eps;
            let num = (loss(&x, &pp) - loss(&x, &pm)) / (2.0 * eps);
            assert!(rel(g.bias[i], num) < 1e-6, "bias {i}");
        }
    }

    #[test]
    fn backward_rejects_wrong_upstream_shape() {
        let p = ConvParams::zeros(2, 1, 3).unwrap();
        let x = Tensor4::zeros(1, 1, 4, 4);
        let bad = Tensor4::zeros(1, 1, 4, 4);
        assert!(matches!(conv2d_backward(&x, &p, &bad), Err(Error::Dimension(_))));
    }
}
