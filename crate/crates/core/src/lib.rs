//! Desk-scale simulator of a semantic interference cancellation receiver.
//!
//! The receiver concatenates a (2,3)-regular LDPC sum-product decoder with a
//! small convolutional auto-encoder. The two exchange information in a turbo
//! loop: the channel decoder cleans the signal domain, the auto-encoder cleans
//! the image (semantic) domain, and its output is fed back to the decoder as
//! a priori LLRs for the next round.
//!
//! Module map:
//!
//! * [`nncore`]: tensors, conv / transposed conv layers with exact gradients,
//!   Adam, gradient checking and the `SEMW` weights file.
//! * [`autoencoder`]: the default semantic codec and its denoising trainer.
//! * [`ldpc`]: code construction, systematic encoding, sum-product decoding.
//! * [`phy`]: BPSK over AWGN and channel LLRs.
//! * [`bitcodec`]: pixel/bit quantization and LDPC block framing.
//! * [`semantic_turbo`]: the turbo receiver itself.
//! * [`metrics`]: BER, Euclidean distance, PSNR, empirical mutual information.
//! * [`dataio`]: CIFAR-10 binary ingestion, resizing and PNG output.
//! * [`experiment`]: paired IC / no-IC simulations and SNR sweeps with CSV output.

pub mod autoencoder;
pub mod bitcodec;
pub mod dataio;
mod error;
pub mod experiment;
pub mod ldpc;
pub mod metrics;
pub mod nncore;
pub mod phy;
pub mod rng;
pub mod semantic_turbo;

pub use error::{Error, Result};
