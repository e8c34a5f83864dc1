use crate::conv::ConvParams;
use crate::error::{Error, Result};
use crate::network::ParamGrads;

pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Adam moment estimates, one buffer pair per conv layer.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub m: Vec<ParamGrads>,
    pub v: Vec<ParamGrads>,
}

impl AdamState {
    pub fn new(params: &[ConvParams]) -> Self {
        Self::with_hyperparams(params, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPSILON)
    }

    pub fn with_hyperparams(params: &[ConvParams], beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let zeros = || {
            params
                .iter()
                .map(|p| ParamGrads {
                    weights: vec![0.0; p.weights.len()],
                    bias: vec![0.0; p.bias.len()],
                })
                .collect::<Vec<_>>()
        };
        AdamState {
            beta1,
            beta2,
            epsilon,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    fn check(&self, params: &[ConvParams], grads: &[ParamGrads]) -> Result<()> {
        let ok = params.len() == grads.len()
            && params.len() == self.m.len()
            && params.len() == self.v.len()
            && params.iter().zip(grads).zip(self.m.iter().zip(&self.v)).all(|((p, g), (m, v))| {
                let (nw, nb) = (p.weights.len(), p.bias.len());
                g.weights.len() == nw
                    && g.bias.len() == nb
                    && m.weights.len() == nw
                    && m.bias.len() == nb
                    && v.weights.len() == nw
                    && v.bias.len() == nb
            });
        if ok {
            Ok(())
        } else {
            Err(Error::State(
                "optimizer state, gradients and parameters have different shapes".into(),
            ))
        }
    }
}

/// One bias-corrected Adam update of every parameter, in place.
pub fn adam_step(
    params: &mut [ConvParams],
    grads: &[ParamGrads],
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    state.check(params, grads)?;
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let update = |theta: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
        for i in 0..theta.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            theta[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    };
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        update(&mut p.weights, &g.weights, &mut m.weights, &mut v.weights);
        update(&mut p.bias, &g.bias, &mut m.bias, &mut v.bias);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_param(value: f64) -> Vec<ConvParams> {
        let mut p = ConvParams::zeros(1, 1, 1).unwrap();
        p.weights[0] = value;
        vec![p]
    }

    fn grad(value: f64) -> Vec<ParamGrads> {
        vec![ParamGrads {
            weights: vec![value],
            bias: vec![0.0],
        }]
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = scalar_param(0.25);
        let mut s = AdamState::new(&p);
        adam_step(&mut p, &grad(0.0), &mut s, 1e-3).unwrap();
        assert_eq!(p[0].weights[0], 0.25);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_magnitude() {
        for g in [3.0, -0.02, 1e-6] {
            let mut p = scalar_param(0.0);
            let mut s = AdamState::new(&p);
            adam_step(&mut p, &grad(g), &mut s, 1e-4).unwrap();
            let expect = -1e-4 * g / (g.abs() + 1e-8);
            assert!((p[0].weights[0] - expect).abs() < 1e-18);
        }
    }

    #[test]
    fn three_step_trajectory() {
        // 40-digit reference for theta0 = 0.5, lr = 0.1, g = (1, -1, 1)
        let expect = [0.400_000_001, 0.405_263_158_842_105_25, 0.371_683_823_384_540_67];
        let mut p = scalar_param(0.5);
        let mut s = AdamState::new(&p);
        for (g, e) in [1.0, -1.0, 1.0].into_iter().zip(expect) {
            adam_step(&mut p, &grad(g), &mut s, 0.1).unwrap();
            assert!((p[0].weights[0] - e).abs() < 1e-12, "{} vs {e}", p[0].weights[0]);
        }
    }

    #[test]
    fn shape_mismatch_is_state_error() {
        let mut p = scalar_param(0.0);
        let mut s = AdamState::new(&ConvParams::zeros(2, 1, 1).map(|c| vec![c]).unwrap());
        assert!(matches!(
            adam_step(&mut p, &grad(1.0), &mut s, 1e-3),
            Err(Error::State(_))
        ));
    }
}
