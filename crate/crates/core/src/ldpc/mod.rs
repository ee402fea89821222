//! (dv, dc)-regular LDPC codes.
//!
//! [`construct_regular_code`] builds the parity-check matrix, [`systematize`]
//! turns it into an encoder, and [`bp_decode`] runs LLR-domain sum-product
//! decoding with an extra a priori input on every variable node.

mod alist;
mod bp;
mod matrix;
mod systematic;

pub use alist::{parse_alist, to_alist};
pub use bp::{bp_decode, BpOutput, LLR_CLIP};
pub use matrix::{construct_regular_code, syndrome_check, CodeSpec, ParityMatrix};
pub use systematic::{encode, systematize, SystematicCode};
