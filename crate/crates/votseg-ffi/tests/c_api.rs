use std::path::{Path, PathBuf};
use std::process::Command;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use votseg::frontend::NormStats;
use votseg::nn::{Model, ModelConfig};

fn write_model(dir: &Path) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let model = Model::init(ModelConfig::new(6, 4), NormStats::identity(6), &mut rng).unwrap();
    let path = dir.join("model.json");
    model.save(&path).unwrap();
    path
}

/// Directory holding the library artifacts for this profile.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn rust_side_round_trip() {
    use std::ffi::CString;
    use votseg_ffi::*;
    let tmp = tempfile::tempdir().unwrap();
    let path = CString::new(write_model(tmp.path()).to_str().unwrap()).unwrap();
    let mut m = std::ptr::null_mut();
    unsafe {
        assert_eq!(votseg_model_load(path.as_ptr(), &mut m), VotsegStatus::Ok);
        assert_eq!(votseg_model_input_dim(m), 6);
        let frames: Vec<f64> = (0..90 * 6).map(|i| (i % 11) as f64 * 0.1).collect();
        let mut out = std::mem::zeroed::<VotsegMeasurement>();
        assert_eq!(votseg_model_predict(m, frames.as_ptr(), 90, 6, 1.0, &mut out), VotsegStatus::Ok);
        assert!(out.y1 >= 1 && out.y1 < out.y2 && out.y2 <= 90);
        assert!((0.0..=1.0).contains(&out.type_prob));
        votseg_model_free(m);
    }
}

#[test]
fn c_program_links_and_runs() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    // test builds only produce the rlib; ask cargo for the static library
    let built = Command::new(env!("CARGO"))
        .args(["build", "--quiet", "-p", "votseg-ffi", "--lib"])
        .status()
        .unwrap();
    assert!(built.success(), "cargo build of the static library failed");
    let lib = artifact_dir().join("libvotseg_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let exe = tmp.path().join("smoke");
    let status = Command::new(&cc)
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).arg(write_model(tmp.path())).output().unwrap();
    assert!(
        out.status.success(),
        "{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}
