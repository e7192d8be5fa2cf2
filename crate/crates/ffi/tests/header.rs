//! The generated header compiles as C and links against the shared library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "ortsae.h"

int main(void) {
    const double s = 0.70710678118654752440;
    const double w[6] = {1.0, 0.0, s, 0.0, 1.0, s};
    OrtsaeMatrix *m = NULL;
    double mcs = 0.0, pen = 0.0;
    if (ortsae_matrix_new(2, 3, w, &m) != ORTSAE_STATUS_OK) return 1;
    if (ortsae_mean_cos_sim(m, 1e-8, &mcs) != ORTSAE_STATUS_OK) return 2;
    if (ortsae_ortho_penalty(m, 1, 1e-8, 0, &pen) != ORTSAE_STATUS_OK) return 3;
    ortsae_matrix_free(m);
    if (fabs(mcs - s) > 1e-12 || fabs(pen - 0.5) > 1e-12) return 4;
    OrtsaeModel *model = NULL;
    if (ortsae_model_load("/nonexistent", &model) != ORTSAE_STATUS_IO) return 5;
    if (ortsae_last_error() == NULL) return 6;
    printf("%s\n", ortsae_version());
    return 0;
}
"#;

fn include_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

/// `target/<profile>`, found from this test binary at `target/<profile>/deps/`.
fn lib_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_is_valid_c() {
    let status = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Wextra", "-Werror", "-pedantic", "-std=c99", "-x", "c"])
        .arg(include_dir().join("ortsae.h"))
        .status()
        .expect("a C compiler named `cc`");
    assert!(status.success());
}

#[test]
fn c_program_links_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = dir.path().join("main");
    let lib = lib_dir();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror"])
        .arg("-I")
        .arg(include_dir())
        .arg(&src)
        .arg("-L")
        .arg(&lib)
        .args(["-lortsae_ffi", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "compile or link failed against {}", lib.display());
    let out = Command::new(&exe).env("LD_LIBRARY_PATH", &lib).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), env!("CARGO_PKG_VERSION"));
}
