//! C ABI over the `ortsae` toolkit.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_load`
//! functions and released by the matching `*_free`. Every fallible call
//! returns an [`OrtsaeStatus`]; on failure a message is kept per thread and
//! read with [`ortsae_last_error`]. Panics are caught and reported as
//! `ORTSAE_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ortsae::datagen::{read_activations, write_activations};
use ortsae::metrics::{explained_variance, mean_cos_sim};
use ortsae::numerics::{streams, DenseMatrix, RngStream};
use ortsae::sae::{decode, encode, ortho_penalty_chunked, ortho_penalty_full, SaeConfig};
use ortsae::trainer::{train, Checkpoint, MatrixSource, TrainConfig};
use ortsae::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrtsaeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    Config = 4,
    Format = 5,
    Io = 6,
    Numeric = 7,
    Panic = 8,
}

/// A dense row-major matrix of doubles.
pub struct OrtsaeMatrix {
    inner: DenseMatrix,
}

/// A trained sparse autoencoder with its configuration.
pub struct OrtsaeModel {
    inner: Checkpoint,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(OrtsaeStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Shape { .. } => OrtsaeStatus::Shape,
            Error::Config { .. } => OrtsaeStatus::Config,
            Error::Format(_) => OrtsaeStatus::Format,
            Error::Io { .. } => OrtsaeStatus::Io,
            Error::NonFinite(_) | Error::UndefinedInput(_) | Error::InsufficientData(_) => OrtsaeStatus::Numeric,
            Error::Consistency(_) => OrtsaeStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OrtsaeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OrtsaeStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            OrtsaeStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(OrtsaeStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(OrtsaeStatus::InvalidArgument, format!("`{what}` is not valid UTF-8")))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failed call on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn ortsae_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn ortsae_clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Copies `rows * cols` row-major values into a new matrix.
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles (it may be null when that product is 0).
#[no_mangle]
pub unsafe extern "C" fn ortsae_matrix_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut OrtsaeMatrix,
) -> OrtsaeStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure(OrtsaeStatus::InvalidArgument, "rows * cols overflows".into()))?;
        let values = if len == 0 {
            Vec::new()
        } else if data.is_null() {
            return Err(null("data"));
        } else {
            std::slice::from_raw_parts(data, len).to_vec()
        };
        *out = boxed(OrtsaeMatrix {
            inner: DenseMatrix::from_vec(rows, cols, values)?,
        });
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ortsae_matrix_free(m: *mut OrtsaeMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live matrix handle; `rows` and `cols` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ortsae_matrix_dims(m: *const OrtsaeMatrix, rows: *mut usize, cols: *mut usize) -> OrtsaeStatus {
    guard(|| {
        let m = deref(m, "matrix")?;
        *out_ptr(rows, "rows")? = m.inner.rows();
        *out_ptr(cols, "cols")? = m.inner.cols();
        Ok(())
    })
}

/// Copies the row-major values into `dst`, which holds `len` doubles.
///
/// # Safety
/// `m` must be a live matrix handle and `dst` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ortsae_matrix_copy(m: *const OrtsaeMatrix, dst: *mut f64, len: usize) -> OrtsaeStatus {
    guard(|| {
        let src = deref(m, "matrix")?.inner.as_slice();
        if len != src.len() {
            return Err(Failure(
                OrtsaeStatus::Shape,
                format!("buffer holds {len} values, matrix has {}", src.len()),
            ));
        }
        if len > 0 {
            if dst.is_null() {
                return Err(null("dst"));
            }
            std::slice::from_raw_parts_mut(dst, len).copy_from_slice(src);
        }
        Ok(())
    })
}

/// Reads an `SAEACT1` activation file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ortsae_read_activations(path: *const c_char, out: *mut *mut OrtsaeMatrix) -> OrtsaeStatus {
    guard(|| {
        let path = string(path, "path")?;
        let out = out_ptr(out, "out")?;
        *out = boxed(OrtsaeMatrix {
            inner: read_activations(path)?,
        });
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `m` a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn ortsae_write_activations(path: *const c_char, m: *const OrtsaeMatrix) -> OrtsaeStatus {
    guard(|| {
        let path = string(path, "path")?;
        write_activations(path, &deref(m, "matrix")?.inner)?;
        Ok(())
    })
}

/// Loads an `SAECKPT1` checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ortsae_model_load(path: *const c_char, out: *mut *mut OrtsaeModel) -> OrtsaeStatus {
    guard(|| {
        let path = string(path, "path")?;
        let out = out_ptr(out, "out")?;
        *out = boxed(OrtsaeModel {
            inner: Checkpoint::load(path)?,
        });
        Ok(())
    })
}

/// # Safety
/// `model` must be a live model handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ortsae_model_save(model: *const OrtsaeModel, path: *const c_char) -> OrtsaeStatus {
    guard(|| {
        let model = deref(model, "model")?;
        model.inner.save(string(path, "path")?)?;
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ortsae_model_free(model: *mut OrtsaeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Input width `n` and latent count `m`.
///
/// # Safety
/// `model` must be a live model handle; `n` and `m` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ortsae_model_dims(model: *const OrtsaeModel, n: *mut usize, m: *mut usize) -> OrtsaeStatus {
    guard(|| {
        let p = &deref(model, "model")?.inner.params;
        *out_ptr(n, "n")? = p.n();
        *out_ptr(m, "m")? = p.m();
        Ok(())
    })
}

/// Sparse latent codes (`rows x m`) of the rows of `x`.
///
/// # Safety
/// `model` and `x` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ortsae_model_encode(
    model: *const OrtsaeModel,
    x: *const OrtsaeMatrix,
    out: *mut *mut OrtsaeMatrix,
) -> OrtsaeStatus {
    guard(|| {
        let ck = &deref(model, "model")?.inner;
        let x = &deref(x, "x")?.inner;
        let out = out_ptr(out, "out")?;
        let enc = encode(&ck.params, &ck.meta.sae, x)?;
        *out = boxed(OrtsaeMatrix { inner: enc.latents });
        Ok(())
    })
}

/// Reconstruction (`rows x n`) from latent codes.
///
/// # Safety
/// `model` and `latents` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ortsae_model_decode(
    model: *const OrtsaeModel,
    latents: *const OrtsaeMatrix,
    out: *mut *mut OrtsaeMatrix,
) -> OrtsaeStatus {
    guard(|| {
        let ck = &deref(model, "model")?.inner;
        let h = &deref(latents, "latents")?.inner;
        let out = out_ptr(out, "out")?;
        *out = boxed(OrtsaeMatrix {
            inner: decode(&ck.params, h)?,
        });
        Ok(())
    })
}

/// Copy of the decoder (`n x m`, one column per latent).
///
/// # Safety
/// `model` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ortsae_model_decoder(model: *const OrtsaeModel, out: *mut *mut OrtsaeMatrix) -> OrtsaeStatus {
    guard(|| {
        let ck = &deref(model, "model")?.inner;
        let out = out_ptr(out, "out")?;
        *out = boxed(OrtsaeMatrix {
            inner: ck.params.w_dec.clone(),
        });
        Ok(())
    })
}

/// Mean nearest-neighbour cosine similarity of the columns of `w_dec`.
///
/// # Safety
/// `w_dec` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ortsae_mean_cos_sim(w_dec: *const OrtsaeMatrix, delta: f64, out: *mut f64) -> OrtsaeStatus {
    guard(|| {
        let w = &deref(w_dec, "w_dec")?.inner;
        *out_ptr(out, "out")? = mean_cos_sim(w, delta)?;
        Ok(())
    })
}

/// Orthogonality penalty over `chunk_count` random chunks drawn from `seed`; 1 chunk is exact.
///
/// # Safety
/// `w_dec` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ortsae_ortho_penalty(
    w_dec: *const OrtsaeMatrix,
    chunk_count: usize,
    delta: f64,
    seed: u64,
    out: *mut f64,
) -> OrtsaeStatus {
    guard(|| {
        let w = &deref(w_dec, "w_dec")?.inner;
        let out = out_ptr(out, "out")?;
        *out = if chunk_count == 1 {
            ortho_penalty_full(w, delta)?
        } else {
            ortho_penalty_chunked(w, chunk_count, delta, &mut RngStream::new(seed))?.0
        };
        Ok(())
    })
}

/// # Safety
/// `x` and `x_hat` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ortsae_explained_variance(
    x: *const OrtsaeMatrix,
    x_hat: *const OrtsaeMatrix,
    out: *mut f64,
) -> OrtsaeStatus {
    guard(|| {
        let (x, y) = (&deref(x, "x")?.inner, &deref(x_hat, "x_hat")?.inner);
        *out_ptr(out, "out")? = explained_variance(x, y)?;
        Ok(())
    })
}

fn config_error(key: &str, e: serde_json::Error) -> Failure {
    Failure(OrtsaeStatus::Config, format!("invalid `{key}`: {e}"))
}

/// Trains a fresh model with `m` latents on the rows of `data`.
///
/// `sae_json` and `train_json` are JSON objects with model and training
/// fields; missing fields and null pointers take the defaults.
///
/// # Safety
/// `data` must be a live handle; the JSON pointers null or NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ortsae_train(
    data: *const OrtsaeMatrix,
    m: usize,
    sae_json: *const c_char,
    train_json: *const c_char,
    out: *mut *mut OrtsaeModel,
) -> OrtsaeStatus {
    guard(|| {
        let data = &deref(data, "data")?.inner;
        let out = out_ptr(out, "out")?;
        let sae_text = if sae_json.is_null() { None } else { Some(string(sae_json, "sae_json")?) };
        let train_text = if train_json.is_null() { None } else { Some(string(train_json, "train_json")?) };
        let sae: SaeConfig = match sae_text {
            Some(t) => serde_json::from_str(t).map_err(|e| config_error("sae_json", e))?,
            None => SaeConfig::default(),
        };
        let cfg: TrainConfig = match train_text {
            Some(t) => serde_json::from_str(t).map_err(|e| config_error("train_json", e))?,
            None => TrainConfig::default(),
        };
        let mut source = MatrixSource::new(data.clone(), RngStream::derive(cfg.seed, streams::DATA))?;
        let outcome = train(&mut source, m, &sae, &cfg)?;
        *out = boxed(OrtsaeModel {
            inner: outcome.checkpoint,
        });
        Ok(())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ortsae_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
