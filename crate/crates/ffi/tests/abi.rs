use std::ffi::{CStr, CString};
use std::ptr;

use ortsae_ffi::*;

fn last_error() -> String {
    let p = ortsae_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn matrix(rows: usize, cols: usize, data: &[f64]) -> *mut OrtsaeMatrix {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ortsae_matrix_new(rows, cols, data.as_ptr(), &mut out) }, OrtsaeStatus::Ok);
    out
}

#[test]
fn analytic_dictionary() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let w = matrix(2, 3, &[1.0, 0.0, s, 0.0, 1.0, s]);
    let (mut mcs, mut pen) = (0.0, 0.0);
    unsafe {
        assert_eq!(ortsae_mean_cos_sim(w, 1e-8, &mut mcs), OrtsaeStatus::Ok);
        assert_eq!(ortsae_ortho_penalty(w, 1, 1e-8, 0, &mut pen), OrtsaeStatus::Ok);
        ortsae_matrix_free(w);
    }
    assert!((mcs - s).abs() < 1e-12);
    assert!((pen - 0.5).abs() < 1e-12);
}

#[test]
fn errors_set_status_and_message() {
    let mut model = ptr::null_mut();
    let path = CString::new("/nonexistent/model.saeckpt").unwrap();
    assert_eq!(unsafe { ortsae_model_load(path.as_ptr(), &mut model) }, OrtsaeStatus::Io);
    assert!(last_error().contains("/nonexistent/model.saeckpt"));
    assert!(model.is_null());

    let mut v = 0.0;
    assert_eq!(unsafe { ortsae_mean_cos_sim(ptr::null(), 1e-8, &mut v) }, OrtsaeStatus::NullPointer);
    assert!(last_error().contains("w_dec"));

    let a = matrix(2, 2, &[1.0, 2.0, 3.0, 4.0]);
    let b = matrix(1, 2, &[1.0, 2.0]);
    assert_eq!(unsafe { ortsae_explained_variance(a, b, &mut v) }, OrtsaeStatus::Shape);
    let mut buf = [0.0; 3];
    assert_eq!(unsafe { ortsae_matrix_copy(a, buf.as_mut_ptr(), 3) }, OrtsaeStatus::Shape);
    unsafe {
        ortsae_matrix_free(a);
        ortsae_matrix_free(b);
    }
    ortsae_clear_error();
    assert!(ortsae_last_error().is_null());
}

#[test]
fn bad_config_is_reported() {
    let data = matrix(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.5, 0.0]);
    let bad = CString::new(r#"{"k_sparsity": "x"}"#).unwrap();
    let mut model = ptr::null_mut();
    let st = unsafe { ortsae_train(data, 8, bad.as_ptr(), ptr::null(), &mut model) };
    assert_eq!(st, OrtsaeStatus::Config);
    assert!(last_error().contains("sae_json"));
    let zero_chunks = CString::new(r#"{"chunk_count": 3}"#).unwrap();
    let st = unsafe { ortsae_train(data, 8, zero_chunks.as_ptr(), ptr::null(), &mut model) };
    assert_eq!(st, OrtsaeStatus::Config);
    assert!(last_error().contains("chunk_count"));
    unsafe { ortsae_matrix_free(data) };
}

#[test]
fn train_save_load_encode_decode() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ortsae::numerics::RngStream::new(4);
    let values: Vec<f64> = (0..64 * 6).map(|_| rng.standard_normal()).collect();
    let data = matrix(64, 6, &values);
    let sae = CString::new(r#"{"mode": "top_k", "k_sparsity": 3}"#).unwrap();
    let train = CString::new(r#"{"total_steps": 30, "batch_size": 16, "learning_rate": 0.01, "log_every": 10}"#).unwrap();
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(ortsae_train(data, 12, sae.as_ptr(), train.as_ptr(), &mut model), OrtsaeStatus::Ok);
        let path = CString::new(dir.path().join("m.saeckpt").to_str().unwrap()).unwrap();
        assert_eq!(ortsae_model_save(model, path.as_ptr()), OrtsaeStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(ortsae_model_load(path.as_ptr(), &mut loaded), OrtsaeStatus::Ok);
        let (mut n, mut m) = (0, 0);
        assert_eq!(ortsae_model_dims(loaded, &mut n, &mut m), OrtsaeStatus::Ok);
        assert_eq!((n, m), (6, 12));

        let mut h = ptr::null_mut();
        assert_eq!(ortsae_model_encode(loaded, data, &mut h), OrtsaeStatus::Ok);
        let (mut r, mut c) = (0, 0);
        ortsae_matrix_dims(h, &mut r, &mut c);
        assert_eq!((r, c), (64, 12));
        let mut codes = vec![0.0; 64 * 12];
        assert_eq!(ortsae_matrix_copy(h, codes.as_mut_ptr(), codes.len()), OrtsaeStatus::Ok);
        for row in codes.chunks(12) {
            assert!(row.iter().filter(|&&v| v != 0.0).count() <= 3);
        }
        let mut x_hat = ptr::null_mut();
        assert_eq!(ortsae_model_decode(loaded, h, &mut x_hat), OrtsaeStatus::Ok);
        let mut ev = f64::NAN;
        assert_eq!(ortsae_explained_variance(data, x_hat, &mut ev), OrtsaeStatus::Ok);
        assert!(ev.is_finite() && ev <= 1.0);

        let act = CString::new(dir.path().join("x.bin").to_str().unwrap()).unwrap();
        assert_eq!(ortsae_write_activations(act.as_ptr(), data), OrtsaeStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(ortsae_read_activations(act.as_ptr(), &mut back), OrtsaeStatus::Ok);
        let mut got = vec![0.0; 64 * 6];
        ortsae_matrix_copy(back, got.as_mut_ptr(), got.len());
        for (g, v) in got.iter().zip(&values) {
            assert_eq!(*g, *v as f32 as f64);
        }

        let garbage = CString::new(dir.path().join("g.bin").to_str().unwrap()).unwrap();
        std::fs::write(dir.path().join("g.bin"), b"nope").unwrap();
        assert_eq!(ortsae_read_activations(garbage.as_ptr(), &mut back), OrtsaeStatus::Format);

        for p in [h, x_hat, back, data] {
            ortsae_matrix_free(p);
        }
        ortsae_model_free(model);
        ortsae_model_free(loaded);
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(ortsae_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
