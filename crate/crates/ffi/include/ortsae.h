#ifndef ORTSAE_H
#define ORTSAE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum OrtsaeStatus {
  ORTSAE_STATUS_OK = 0,
  ORTSAE_STATUS_NULL_POINTER = 1,
  ORTSAE_STATUS_INVALID_ARGUMENT = 2,
  ORTSAE_STATUS_SHAPE = 3,
  ORTSAE_STATUS_CONFIG = 4,
  ORTSAE_STATUS_FORMAT = 5,
  ORTSAE_STATUS_IO = 6,
  ORTSAE_STATUS_NUMERIC = 7,
  ORTSAE_STATUS_PANIC = 8,
} OrtsaeStatus;

// A dense row-major matrix of doubles.
typedef struct OrtsaeMatrix OrtsaeMatrix;

// A trained sparse autoencoder with its configuration.
typedef struct OrtsaeModel OrtsaeModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the next failing call.
const char *ortsae_last_error(void);

void ortsae_clear_error(void);

// Copies `rows * cols` row-major values into a new matrix.
//
// # Safety
// `data` must point to `rows * cols` readable doubles (it may be null when that product is 0).
enum OrtsaeStatus ortsae_matrix_new(uintptr_t rows,
                                    uintptr_t cols,
                                    const double *data,
                                    struct OrtsaeMatrix **out);

// # Safety
// `m` must be null or a handle from this library that has not been freed.
void ortsae_matrix_free(struct OrtsaeMatrix *m);

// # Safety
// `m` must be a live matrix handle; `rows` and `cols` must be writable.
enum OrtsaeStatus ortsae_matrix_dims(const struct OrtsaeMatrix *m,
                                     uintptr_t *rows,
                                     uintptr_t *cols);

// Copies the row-major values into `dst`, which holds `len` doubles.
//
// # Safety
// `m` must be a live matrix handle and `dst` must point to `len` writable doubles.
enum OrtsaeStatus ortsae_matrix_copy(const struct OrtsaeMatrix *m, double *dst, uintptr_t len);

// Reads an `SAEACT1` activation file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum OrtsaeStatus ortsae_read_activations(const char *path, struct OrtsaeMatrix **out);

// # Safety
// `path` must be a NUL-terminated string and `m` a live matrix handle.
enum OrtsaeStatus ortsae_write_activations(const char *path, const struct OrtsaeMatrix *m);

// Loads an `SAECKPT1` checkpoint.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum OrtsaeStatus ortsae_model_load(const char *path, struct OrtsaeModel **out);

// # Safety
// `model` must be a live model handle and `path` a NUL-terminated string.
enum OrtsaeStatus ortsae_model_save(const struct OrtsaeModel *model, const char *path);

// # Safety
// `model` must be null or a handle from this library that has not been freed.
void ortsae_model_free(struct OrtsaeModel *model);

// Input width `n` and latent count `m`.
//
// # Safety
// `model` must be a live model handle; `n` and `m` must be writable.
enum OrtsaeStatus ortsae_model_dims(const struct OrtsaeModel *model, uintptr_t *n, uintptr_t *m);

// Sparse latent codes (`rows x m`) of the rows of `x`.
//
// # Safety
// `model` and `x` must be live handles; `out` writable.
enum OrtsaeStatus ortsae_model_encode(const struct OrtsaeModel *model,
                                      const struct OrtsaeMatrix *x,
                                      struct OrtsaeMatrix **out);

// Reconstruction (`rows x n`) from latent codes.
//
// # Safety
// `model` and `latents` must be live handles; `out` writable.
enum OrtsaeStatus ortsae_model_decode(const struct OrtsaeModel *model,
                                      const struct OrtsaeMatrix *latents,
                                      struct OrtsaeMatrix **out);

// Copy of the decoder (`n x m`, one column per latent).
//
// # Safety
// `model` must be a live handle; `out` writable.
enum OrtsaeStatus ortsae_model_decoder(const struct OrtsaeModel *model, struct OrtsaeMatrix **out);

// Mean nearest-neighbour cosine similarity of the columns of `w_dec`.
//
// # Safety
// `w_dec` must be a live handle; `out` writable.
enum OrtsaeStatus ortsae_mean_cos_sim(const struct OrtsaeMatrix *w_dec, double delta, double *out);

// Orthogonality penalty over `chunk_count` random chunks drawn from `seed`; 1 chunk is exact.
//
// # Safety
// `w_dec` must be a live handle; `out` writable.
enum OrtsaeStatus ortsae_ortho_penalty(const struct OrtsaeMatrix *w_dec,
                                       uintptr_t chunk_count,
                                       double delta,
                                       uint64_t seed,
                                       double *out);

// # Safety
// `x` and `x_hat` must be live handles; `out` writable.
enum OrtsaeStatus ortsae_explained_variance(const struct OrtsaeMatrix *x,
                                            const struct OrtsaeMatrix *x_hat,
                                            double *out);

// Trains a fresh model with `m` latents on the rows of `data`.
//
// `sae_json` and `train_json` are JSON objects with model and training
// fields; missing fields and null pointers take the defaults.
//
// # Safety
// `data` must be a live handle; the JSON pointers null or NUL-terminated; `out` writable.
enum OrtsaeStatus ortsae_train(const struct OrtsaeMatrix *data,
                               uintptr_t m,
                               const char *sae_json,
                               const char *train_json,
                               struct OrtsaeModel **out);

// Library version as a static NUL-terminated string.
const char *ortsae_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORTSAE_H */
