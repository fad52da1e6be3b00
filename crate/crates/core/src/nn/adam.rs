use serde::{Deserialize, Serialize};

use super::layers::LayerParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    /// Coupled L2 coefficient applied to weights, never to biases.
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            weight_decay: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment buffers plus the step counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<LayerParams>,
    pub v: Vec<LayerParams>,
}

impl AdamState {
    pub fn new(params: &[LayerParams]) -> Self {
        let zeros: Vec<_> = params.iter().map(LayerParams::zeros_like).collect();
        Self {
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// True when every buffer has the shape of the matching parameter.
    pub fn matches(&self, params: &[LayerParams]) -> bool {
        let same = |a: &[LayerParams]| {
            a.len() == params.len()
                && a.iter().zip(params).all(|(x, p)| {
                    x.bias.len() == p.bias.len()
                        && x.weights.len() == p.weights.len()
                        && x.weights.iter().zip(&p.weights).all(|(a, b)| a.shape() == b.shape())
                })
        };
        same(&self.m) && same(&self.v)
    }
}

fn update(theta: &mut f64, g: f64, m: &mut f64, v: &mut f64, cfg: &AdamConfig, c1: f64, c2: f64) {
    *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
    *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
    let mhat = *m / c1;
    let vhat = *v / c2;
    *theta -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.eps);
}

/// One bias-corrected Adam update. Shapes must match; callers check with `AdamState::matches`.
pub fn adam_step(params: &mut [LayerParams], grads: &[LayerParams], state: &mut AdamState, cfg: &AdamConfig) {
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (l, p) in params.iter_mut().enumerate() {
        let (g, m, v) = (&grads[l], &mut state.m[l], &mut state.v[l]);
        for (k, w) in p.weights.iter_mut().enumerate() {
            let gw = g.weights[k].data();
            let mw = m.weights[k].data_mut();
            let vw = v.weights[k].data_mut();
            for (i, theta) in w.data_mut().iter_mut().enumerate() {
                let gi = gw[i] + cfg.weight_decay * *theta;
                update(theta, gi, &mut mw[i], &mut vw[i], cfg, c1, c2);
            }
        }
        for (i, theta) in p.bias.iter_mut().enumerate() {
            update(theta, g.bias[i], &mut m.bias[i], &mut v.bias[i], cfg, c1, c2);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::matrix::DenseMatrix;

    fn scalar(w: f64, b: f64) -> Vec<LayerParams> {
        vec![LayerParams {
            weights: vec![DenseMatrix::from_vec(1, 1, vec![w]).unwrap()],
            bias: vec![b],
        }]
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = scalar(0.7, -0.2);
        let mut st = AdamState::new(&p);
        let cfg = AdamConfig { weight_decay: 0.0, ..Default::default() };
        adam_step(&mut p, &scalar(0.0, 0.0), &mut st, &cfg);
        assert_eq!(p, scalar(0.7, -0.2));
        assert_eq!(st.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [3.0, -0.01, 250.0] {
            let mut p = scalar(1.0, 1.0);
            let mut st = AdamState::new(&p);
            let cfg = AdamConfig { weight_decay: 0.0, ..Default::default() };
            adam_step(&mut p, &scalar(g, g), &mut st, &cfg);
            let dw = p[0].weights[0].get(0, 0) - 1.0;
            assert!((dw + 1e-3 * g.signum()).abs() < 1e-8, "{dw}");
            assert!((p[0].bias[0] - 1.0 + 1e-3 * g.signum()).abs() < 1e-8);
        }
    }

    #[test]
    fn decay_is_coupled_and_skips_bias() {
        let mut p = scalar(1.0, 1.0);
        let mut st = AdamState::new(&p);
        adam_step(&mut p, &scalar(0.0, 0.0), &mut st, &AdamConfig::default());
        // effective gradient 5e-4 lands in the first moment
        assert!((st.m[0].weights[0].get(0, 0) - 0.1 * 5e-4).abs() < 1e-18);
        assert!(p[0].weights[0].get(0, 0) < 1.0);
        assert_eq!(p[0].bias[0], 1.0);
    }
}
