//! C ABI over the simulator core.
//!
//! Every fallible function returns an [`StStatus`]; on failure a message is
//! kept per thread and readable through [`st_last_error`]. Objects are
//! handed out as opaque pointers and must be released with their `_free`
//! function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use semantic_turbo::autoencoder::{build_default_codec, SemanticCodec, SemanticCodecSpec};
use semantic_turbo::bitcodec::PixelImage;
use semantic_turbo::ldpc::{bp_decode, construct_regular_code, encode, systematize, CodeSpec, SystematicCode};
use semantic_turbo::metrics::{euclidean_distance, psnr};
use semantic_turbo::phy::{channel_llr, SnrConfig};
use semantic_turbo::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StStatus {
    Ok = 0,
    NullPointer = 1,
    Dimension = 2,
    Format = 3,
    Config = 4,
    Numeric = 5,
    Io = 6,
    Panic = 7,
}

/// A systematized LDPC code.
pub struct StCode(SystematicCode);

/// A loaded semantic codec.
pub struct StCodec(SemanticCodec);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> StStatus {
    match e {
        Error::Dimension(_) => StStatus::Dimension,
        Error::Format { .. } => StStatus::Format,
        Error::Config(_) => StStatus::Config,
        Error::Numeric(_) => StStatus::Numeric,
        Error::Io(_) => StStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> StStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            StStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".to_string());
            StStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn object<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

fn expect_len(got: usize, want: usize, what: &str) -> Result<(), Fail> {
    if got != want {
        return Err(Fail::Core(Error::Dimension(format!("{what}: length {got}, expected {want}"))));
    }
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn st_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a (dv, dc)-regular code of length `n` and writes the handle to `out`.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn st_code_new(n: usize, dv: usize, dc: usize, seed: u64, out: *mut *mut StCode) -> StStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let h = construct_regular_code(&CodeSpec { n, dv, dc, seed })?;
        *out = Box::into_raw(Box::new(StCode(systematize(&h))));
        Ok(())
    })
}

/// # Safety
/// `code` must come from [`st_code_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn st_code_free(code: *mut StCode) {
    if !code.is_null() {
        drop(Box::from_raw(code));
    }
}

/// Block length, or 0 for NULL.
///
/// # Safety
/// `code` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn st_code_n(code: *const StCode) -> usize {
    code.as_ref().map_or(0, |c| c.0.n())
}

/// Message length, or 0 for NULL.
///
/// # Safety
/// `code` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn st_code_k(code: *const StCode) -> usize {
    code.as_ref().map_or(0, |c| c.0.k())
}

/// Encodes `k` message bits (0/1 bytes) into `n` codeword bits.
///
/// # Safety
/// `msg` and `codeword` must point to `msg_len` and `codeword_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn st_code_encode(
    code: *const StCode,
    msg: *const u8,
    msg_len: usize,
    codeword: *mut u8,
    codeword_len: usize,
) -> StStatus {
    guard(|| {
        let code = &object(code, "code")?.0;
        let msg = input(msg, msg_len, "msg")?;
        let out = output(codeword, codeword_len, "codeword")?;
        expect_len(codeword_len, code.n(), "codeword")?;
        out.copy_from_slice(&encode(code, msg)?);
        Ok(())
    })
}

/// Sum-product decoding. `apriori` may be NULL for all-zero a priori;
/// `posterior`, `converged` and `iterations` may be NULL when not wanted.
///
/// # Safety
/// Non-NULL arrays must hold `len` elements; scalars must be writable.
#[no_mangle]
pub unsafe extern "C" fn st_bp_decode(
    code: *const StCode,
    channel: *const f64,
    apriori: *const f64,
    len: usize,
    max_iters: usize,
    hard_bits: *mut u8,
    posterior: *mut f64,
    converged: *mut bool,
    iterations: *mut usize,
) -> StStatus {
    guard(|| {
        let code = &object(code, "code")?.0;
        expect_len(len, code.n(), "LLR vector")?;
        let ch = input(channel, len, "channel")?;
        let zeros;
        let ap = if apriori.is_null() {
            zeros = vec![0.0; len];
            &zeros[..]
        } else {
            input(apriori, len, "apriori")?
        };
        let hard = output(hard_bits, len, "hard_bits")?;
        let out = bp_decode(code.parity(), ch, ap, max_iters)?;
        hard.copy_from_slice(&out.hard_bits);
        if !posterior.is_null() {
            output(posterior, len, "posterior")?.copy_from_slice(&out.posterior);
        }
        if !converged.is_null() {
            *converged = out.converged;
        }
        if !iterations.is_null() {
            *iterations = out.iterations;
        }
        Ok(())
    })
}

/// `llr[i] = 2 y[i] / sigma^2` with `sigma^2 = 10^(-snr_db / 10)`.
///
/// # Safety
/// `received` and `llr` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn st_channel_llr(received: *const f64, len: usize, snr_db: f64, llr: *mut f64) -> StStatus {
    guard(|| {
        let snr = SnrConfig::new(snr_db)?;
        let y = input(received, len, "received")?;
        output(llr, len, "llr")?.copy_from_slice(&channel_llr(y, &snr));
        Ok(())
    })
}

/// Untrained default codec with seeded weights.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn st_codec_new_default(seed: u64, out: *mut *mut StCodec) -> StStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        *out = Box::into_raw(Box::new(StCodec(build_default_codec(seed)?)));
        Ok(())
    })
}

/// Loads a weights file for the default 3x96x96 codec.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn st_codec_load(path: *const c_char, out: *mut *mut StCodec) -> StStatus {
    guard(|| {
        if path.is_null() {
            return Err(Fail::Null("path"));
        }
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let path = CStr::from_ptr(path).to_string_lossy().into_owned();
        let codec = SemanticCodec::load(path, SemanticCodecSpec::default_spec().input_shape)?;
        *out = Box::into_raw(Box::new(StCodec(codec)));
        Ok(())
    })
}

/// # Safety
/// `codec` must come from a constructor here and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn st_codec_free(codec: *mut StCodec) {
    if !codec.is_null() {
        drop(Box::from_raw(codec));
    }
}

/// Number of samples in one codec input image (channels * height * width).
///
/// # Safety
/// `codec` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn st_codec_image_len(codec: *const StCodec) -> usize {
    codec.as_ref().map_or(0, |c| {
        let (ch, h, w) = c.0.spec().input_shape;
        ch * h * w
    })
}

/// Runs one planar 8-bit image through the codec.
///
/// # Safety
/// `pixels` and `out` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn st_codec_denoise(codec: *const StCodec, pixels: *const u8, len: usize, out: *mut u8) -> StStatus {
    guard(|| {
        let codec = &object(codec, "codec")?.0;
        let (c, h, w) = codec.spec().input_shape;
        expect_len(len, c * h * w, "image")?;
        let img = PixelImage::new(c, h, w, input(pixels, len, "pixels")?.to_vec())?;
        output(out, len, "out")?.copy_from_slice(codec.denoise_image(&img)?.data());
        Ok(())
    })
}

/// Euclidean distance and PSNR (dB, +inf when identical) of two equally
/// sized 8-bit sample arrays. Either output may be NULL.
///
/// # Safety
/// `a` and `b` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn st_image_metrics(a: *const u8, b: *const u8, len: usize, ed: *mut f64, psnr_db: *mut f64) -> StStatus {
    guard(|| {
        let pa = PixelImage::new(1, 1, len, input(a, len, "a")?.to_vec())?;
        let pb = PixelImage::new(1, 1, len, input(b, len, "b")?.to_vec())?;
        if !ed.is_null() {
            *ed = euclidean_distance(&pa, &pb)?;
        }
        if !psnr_db.is_null() {
            *psnr_db = psnr(&pa, &pb)?;
        }
        Ok(())
    })
}
