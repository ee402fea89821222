use super::layer::LayerState;
use super::tensor::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.003,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam update over every layer, then zeroes the gradients.
pub fn adam_step<T: Scalar>(states: &mut [LayerState<T>], cfg: &AdamConfig) {
    for state in states {
        state.step_count += 1;
        let t = state.step_count as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        let update = |w: &mut [T], g: &mut [T], m: &mut [T], v: &mut [T]| {
            let b1 = T::cast_from(cfg.beta1);
            let b2 = T::cast_from(cfg.beta2);
            let one = T::one();
            let lr = T::cast_from(cfg.learning_rate);
            let eps = T::cast_from(cfg.epsilon);
            let (c1, c2) = (T::cast_from(c1), T::cast_from(c2));
            for i in 0..w.len() {
                let gi = g[i];
                m[i] = b1 * m[i] + (one - b1) * gi;
                v[i] = b2 * v[i] + (one - b2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                w[i] = w[i] - lr * m_hat / (v_hat.sqrt() + eps);
                g[i] = T::zero();
            }
        };
        update(
            &mut state.weights,
            &mut state.grad_weights,
            &mut state.adam_m_weights,
            &mut state.adam_v_weights,
        );
        update(
            &mut state.bias,
            &mut state.grad_bias,
            &mut state.adam_m_bias,
            &mut state.adam_v_bias,
        );
    }
}
