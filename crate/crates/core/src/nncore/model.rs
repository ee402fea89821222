use super::layer::{activation_apply, ActivationDirection, LayerState};
use super::tensor::{Scalar, Tensor4};
use crate::{Error, Result};

/// Plain stack of layers applied in order.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequential<T> {
    pub layers: Vec<LayerState<T>>,
}

/// Activations saved by [`Sequential::forward_cached`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    inputs: Vec<Tensor4<T>>,
    pre: Vec<Tensor4<T>>,
    pub output: Tensor4<T>,
}

impl<T: Scalar> Sequential<T> {
    pub fn new(layers: Vec<LayerState<T>>) -> Result<Self> {
        for pair in layers.windows(2) {
            if pair[0].spec.filters != pair[1].in_channels {
                return Err(Error::dim(format!(
                    "layer emits {} channels but the next expects {}",
                    pair[0].spec.filters, pair[1].in_channels
                )));
            }
        }
        Ok(Sequential { layers })
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerState::param_count).sum()
    }

    pub fn forward(&self, input: &Tensor4<T>) -> Result<Tensor4<T>> {
        let mut x = input.clone();
        for layer in &self.layers {
            x = layer.forward(&x)?;
        }
        Ok(x)
    }

    pub fn forward_cached(&self, input: &Tensor4<T>) -> Result<ForwardCache<T>> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut x = input.clone();
        for layer in &self.layers {
            let z = layer.forward_linear(&x)?;
            let y = activation_apply(&z, layer.spec.activation, ActivationDirection::Forward)?;
            inputs.push(x);
            pre.push(z);
            x = y;
        }
        Ok(ForwardCache {
            inputs,
            pre,
            output: x,
        })
    }

    /// Accumulates parameter gradients and returns the gradient w.r.t. the input.
    pub fn backward(&mut self, cache: &ForwardCache<T>, upstream: &Tensor4<T>) -> Result<Tensor4<T>> {
        let mut g = upstream.clone();
        for (i, layer) in self.layers.iter_mut().enumerate().rev() {
            g = layer.backward(&cache.inputs[i], &cache.pre[i], &g)?;
        }
        Ok(g)
    }

    pub fn zero_grad(&mut self) {
        self.layers.iter_mut().for_each(LayerState::zero_grad);
    }

    pub fn cast<U: Scalar>(&self) -> Sequential<U> {
        Sequential {
            layers: self.layers.iter().map(LayerState::cast).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }
}
