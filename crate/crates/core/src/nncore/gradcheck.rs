use super::loss::mse_loss;
use super::model::Sequential;
use super::tensor::Tensor4;
use crate::{Error, Result};

const MAX_PARAMS: usize = 5_000;
const PERTURBATION: f64 = 1e-4;

fn loss(model: &Sequential<f64>, input: &Tensor4<f64>, target: &Tensor4<f64>) -> Result<f64> {
    let l = mse_loss(&model.forward(input)?, target)?.0;
    if !l.is_finite() {
        return Err(Error::Numeric(format!("loss is {l}")));
    }
    Ok(l)
}

fn rel_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(1e-8);
    (analytic - numeric).abs() / denom
}

/// Compares backprop gradients of the MSE loss against central finite
/// differences for every parameter and every input element.
///
/// Returns the largest relative error seen. Leaves the model's gradient
/// buffers zeroed.
pub fn gradient_check(
    model: &mut Sequential<f64>,
    input: &Tensor4<f64>,
    target: &Tensor4<f64>,
) -> Result<f64> {
    if model.param_count() > MAX_PARAMS {
        return Err(Error::config(format!(
            "gradient check limited to {MAX_PARAMS} parameters, model has {}",
            model.param_count()
        )));
    }
    model.zero_grad();
    let cache = model.forward_cached(input)?;
    let (l0, upstream) = mse_loss(&cache.output, target)?;
    if !l0.is_finite() {
        return Err(Error::Numeric(format!("loss is {l0}")));
    }
    let grad_input = model.backward(&cache, &upstream)?;

    let mut worst = 0.0f64;
    for li in 0..model.layers.len() {
        for which in 0..2 {
            let count = if which == 0 {
                model.layers[li].weights.len()
            } else {
                model.layers[li].bias.len()
            };
            for pi in 0..count {
                let (orig, analytic) = {
                    let l = &model.layers[li];
                    if which == 0 {
                        (l.weights[pi], l.grad_weights[pi])
                    } else {
                        (l.bias[pi], l.grad_bias[pi])
                    }
                };
                let set = |m: &mut Sequential<f64>, v: f64| {
                    let l = &mut m.layers[li];
                    if which == 0 {
                        l.weights[pi] = v;
                    } else {
                        l.bias[pi] = v;
                    }
                };
                set(model, orig + PERTURBATION);
                let lp = loss(model, input, target)?;
                set(model, orig - PERTURBATION);
                let lm = loss(model, input, target)?;
                set(model, orig);
                let numeric = (lp - lm) / (2.0 * PERTURBATION);
                worst = worst.max(rel_error(analytic, numeric));
            }
        }
    }

    let mut probe = input.clone();
    for i in 0..probe.data().len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + PERTURBATION;
        let lp = loss(model, &probe, target)?;
        probe.data_mut()[i] = orig - PERTURBATION;
        let lm = loss(model, &probe, target)?;
        probe.data_mut()[i] = orig;
        let numeric = (lp - lm) / (2.0 * PERTURBATION);
        worst = worst.max(rel_error(grad_input.data()[i], numeric));
    }
    model.zero_grad();
    Ok(worst)
}
