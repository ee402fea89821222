#ifndef SEMANTIC_TURBO_H
#define SEMANTIC_TURBO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StStatus {
  ST_STATUS_OK = 0,
  ST_STATUS_NULL_POINTER = 1,
  ST_STATUS_DIMENSION = 2,
  ST_STATUS_FORMAT = 3,
  ST_STATUS_CONFIG = 4,
  ST_STATUS_NUMERIC = 5,
  ST_STATUS_IO = 6,
  ST_STATUS_PANIC = 7,
} StStatus;

/*
 A systematized LDPC code.
 */
typedef struct StCode StCode;

/*
 A loaded semantic codec.
 */
typedef struct StCodec StCodec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. Valid until the
 next failing call on the same thread.
 */
const char *st_last_error(void);

/*
 Builds a (dv, dc)-regular code of length `n` and writes the handle to `out`.

 # Safety
 `out` must be valid for one pointer write.
 */
enum StStatus st_code_new(size_t n, size_t dv, size_t dc, uint64_t seed, struct StCode **out);

/*
 # Safety
 `code` must come from [`st_code_new`] and not be used afterwards.
 */
void st_code_free(struct StCode *code);

/*
 Block length, or 0 for NULL.

 # Safety
 `code` must be NULL or a live handle.
 */
size_t st_code_n(const struct StCode *code);

/*
 Message length, or 0 for NULL.

 # Safety
 `code` must be NULL or a live handle.
 */
size_t st_code_k(const struct StCode *code);

/*
 Encodes `k` message bits (0/1 bytes) into `n` codeword bits.

 # Safety
 `msg` and `codeword` must point to `msg_len` and `codeword_len` bytes.
 */
enum StStatus st_code_encode(const struct StCode *code,
                             const uint8_t *msg,
                             size_t msg_len,
                             uint8_t *codeword,
                             size_t codeword_len);

/*
 Sum-product decoding. `apriori` may be NULL for all-zero a priori;
 `posterior`, `converged` and `iterations` may be NULL when not wanted.

 # Safety
 Non-NULL arrays must hold `len` elements; scalars must be writable.
 */
enum StStatus st_bp_decode(const struct StCode *code,
                           const double *channel,
                           const double *apriori,
                           size_t len,
                           size_t max_iters,
                           uint8_t *hard_bits,
                           double *posterior,
                           bool *converged,
                           size_t *iterations);

/*
 `llr[i] = 2 y[i] / sigma^2` with `sigma^2 = 10^(-snr_db / 10)`.

 # Safety
 `received` and `llr` must hold `len` elements.
 */
enum StStatus st_channel_llr(const double *received, size_t len, double snr_db, double *llr);

/*
 Untrained default codec with seeded weights.

 # Safety
 `out` must be valid for one pointer write.
 */
enum StStatus st_codec_new_default(uint64_t seed, struct StCodec **out);

/*
 Loads a weights file for the default 3x96x96 codec.

 # Safety
 `path` must be a NUL-terminated string; `out` valid for one write.
 */
enum StStatus st_codec_load(const char *path, struct StCodec **out);

/*
 # Safety
 `codec` must come from a constructor here and not be used afterwards.
 */
void st_codec_free(struct StCodec *codec);

/*
 Number of samples in one codec input image (channels * height * width).

 # Safety
 `codec` must be NULL or a live handle.
 */
size_t st_codec_image_len(const struct StCodec *codec);

/*
 Runs one planar 8-bit image through the codec.

 # Safety
 `pixels` and `out` must hold `len` bytes.
 */
enum StStatus st_codec_denoise(const struct StCodec *codec,
                               const uint8_t *pixels,
                               size_t len,
                               uint8_t *out);

/*
 Euclidean distance and PSNR (dB, +inf when identical) of two equally
 sized 8-bit sample arrays. Either output may be NULL.

 # Safety
 `a` and `b` must hold `len` bytes.
 */
enum StStatus st_image_metrics(const uint8_t *a,
                               const uint8_t *b,
                               size_t len,
                               double *ed,
                               double *psnr_db);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEMANTIC_TURBO_H */
