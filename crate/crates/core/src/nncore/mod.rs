//! Minimal neural-network substrate.
//!
//! Only what the semantic codec needs: 4-D tensors, strided convolution and
//! transposed convolution with hand-written gradients, relu / sigmoid, MSE,
//! Adam, a finite-difference gradient checker and a compact weights file.
//! Everything is generic over [`Scalar`] so training runs in `f32` while
//! gradient checks run in `f64`.

mod adam;
mod gradcheck;
mod layer;
mod loss;
mod model;
mod tensor;
mod weights;

pub use adam::{adam_step, AdamConfig};
pub use gradcheck::gradient_check;
pub use layer::{
    activation_apply, conv2d_apply, conv2d_grad, tconv2d_apply, tconv2d_grad, Activation,
    ActivationDirection, ConvLayerSpec, LayerKind, LayerState,
};
pub use loss::mse_loss;
pub use model::{ForwardCache, Sequential};
pub use tensor::{Scalar, Shape4, Tensor4};
pub use weights::{load_weights, read_weights, save_weights, write_weights, WEIGHTS_MAGIC, WEIGHTS_VERSION};
