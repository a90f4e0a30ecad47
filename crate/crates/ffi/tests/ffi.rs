use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use olt_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(olt_last_error_message()) }.to_str().unwrap().to_string()
}

fn model(json: &str) -> *mut OltModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { olt_model_new(c(json).as_ptr(), &mut m) }, OltStatus::Ok, "{}", last_error());
    m
}

#[test]
fn model_metadata_and_step() {
    let m = model(r#"{"key": "double_integrator"}"#);
    unsafe {
        assert_eq!(olt_model_state_dimension(m), 2);
        assert_eq!(olt_model_action_count(m), 3);
        assert_eq!(olt_model_feature_dimension(m), 6);
        assert_eq!(olt_model_discount(m), 0.95);
        let s = [1.0, 0.0];
        let mut next = [0.0; 2];
        let mut r = 0.0;
        assert_eq!(olt_model_step(m, s.as_ptr(), 2, 0, next.as_mut_ptr(), &mut r), OltStatus::Ok);
        assert!((next[0] - 1.0).abs() < 1e-15 && (next[1] + 0.1).abs() < 1e-15);
        assert!((r + 1.1).abs() < 1e-12);
        assert_eq!(olt_model_step(m, s.as_ptr(), 1, 0, next.as_mut_ptr(), &mut r), OltStatus::ContractViolation);
        assert!(last_error().contains("dimension"), "{}", last_error());
        olt_model_free(m);
    }
}

#[test]
fn initial_states_match_the_library() {
    let m = model(r#"{"key": "pendulum_swingup"}"#);
    let mut buf = [0.0; 6];
    unsafe {
        assert_eq!(olt_model_initial_states(m, 3, 9, buf.as_mut_ptr(), 6), OltStatus::Ok);
        assert_eq!(olt_model_initial_states(m, 3, 9, buf.as_mut_ptr(), 5), OltStatus::BufferTooSmall);
        olt_model_free(m);
    }
    use olt::mdp::{Domain, GenerativeModel};
    let expected = Domain::from_key("pendulum_swingup").unwrap().initial_states(3, 9).unwrap();
    let flat: Vec<f64> = expected.iter().flat_map(|s| s.iter().copied()).collect();
    assert_eq!(buf.to_vec(), flat);
}

#[test]
fn act_with_theta_and_presets() {
    let m = model(r#"{"key": "chain_walk", "states": 5, "discount": 0.9}"#);
    let s = [0.0];
    let mut a = 99;
    unsafe {
        let greedy = [0.0, 0.0, 0.0, 1.0, 0.0];
        assert_eq!(olt_act(m, s.as_ptr(), 1, greedy.as_ptr(), 5, 5, &mut a), OltStatus::Ok);
        assert_eq!(a, 0);
        assert_eq!(olt_act(m, s.as_ptr(), 1, greedy.as_ptr(), 4, 5, &mut a), OltStatus::ContractViolation);
        for preset in ["uniform", "greedy", "optimistic"] {
            assert_eq!(olt_act_preset(m, s.as_ptr(), 1, c(preset).as_ptr(), 5, &mut a), OltStatus::Ok);
        }
        assert_eq!(olt_act_preset(m, s.as_ptr(), 1, c("lazy").as_ptr(), 5, &mut a), OltStatus::InvalidArgument);
        assert_eq!(olt_act(m, s.as_ptr(), 1, greedy.as_ptr(), 5, 0, &mut a), OltStatus::ContractViolation);
        olt_model_free(m);
    }
}

#[test]
fn bad_inputs_are_reported_not_panicked() {
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(olt_model_new(c(r#"{"key": "cartpole"}"#).as_ptr(), &mut m), OltStatus::InvalidArgument);
        assert!(last_error().contains("cartpole"), "{}", last_error());
        assert_eq!(olt_model_new(ptr::null(), &mut m), OltStatus::NullPointer);
        assert_eq!(olt_model_new(c(r#"{"key": "chain_walk", "discount": 1.5}"#).as_ptr(), &mut m), OltStatus::InvalidArgument);
        assert!(m.is_null());
        assert_eq!(olt_model_state_dimension(ptr::null()), 0);
        assert!(olt_model_discount(ptr::null()).is_nan());
        olt_model_free(ptr::null_mut());
        olt_string_free(ptr::null_mut());
    }
}

#[test]
fn spec_objective_matches_the_library() {
    let json = r#"{"domain": {"key": "chain_walk", "states": 5, "discount": 0.9},
        "initial_states": 1, "train_seed": 0, "holdout_seed": 1, "horizon": 4, "budget": 5}"#;
    let mut spec = ptr::null_mut();
    let mut j = 0.0;
    unsafe {
        assert_eq!(olt_spec_new(c(json).as_ptr(), &mut spec), OltStatus::Ok, "{}", last_error());
        let greedy = [0.0, 0.0, 0.0, 1.0, 0.0];
        assert_eq!(olt_spec_objective(spec, greedy.as_ptr(), 5, &mut j), OltStatus::Ok);
        assert!((j - 0.729).abs() < 1e-12, "{j}");
        assert_eq!(olt_spec_objective(spec, greedy.as_ptr(), 3, &mut j), OltStatus::ContractViolation);
        olt_spec_free(spec);
        let same_seeds = json.replace("\"holdout_seed\": 1", "\"holdout_seed\": 0");
        assert_eq!(olt_spec_new(c(&same_seeds).as_ptr(), &mut spec), OltStatus::InvalidArgument);
    }
}

#[test]
fn run_experiment_returns_campaign_json() {
    let config = r#"{
  "domain": {"key": "chain_walk"},
  "evaluation": {"initial_states": 1, "horizon": 4, "budget": 5},
  "optimizer": {"kind": "cem", "population": 16, "elite": 4, "iterations": 3}
}"#;
    let mut result = ptr::null_mut();
    unsafe {
        assert_eq!(olt_run_experiment(c(config).as_ptr(), 2, &mut result), OltStatus::Ok, "{}", last_error());
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(result).to_str().unwrap()).unwrap();
        olt_string_free(result);
        assert_eq!(v["best_theta"]["weights"].as_array().unwrap().len(), 5);
        assert!(v["run"]["best_value"].as_f64().unwrap() >= 0.729 - 1e-12);

        let typo = config.replace("\"budget\"", "\"budgett\"");
        assert_eq!(olt_run_experiment(c(&typo).as_ptr(), 1, &mut result), OltStatus::InvalidArgument);
        assert!(last_error().contains("budgett"));
    }
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(olt_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(crate_dir().join("include/olt.h")).unwrap();
    assert!(header.contains("typedef struct OltModel OltModel;"));
    assert!(header.contains("typedef struct OltSpec OltSpec;"));
    for name in [
        "olt_model_new", "olt_model_free", "olt_model_state_dimension", "olt_model_action_count",
        "olt_model_feature_dimension", "olt_model_discount", "olt_model_step", "olt_model_initial_states",
        "olt_act", "olt_act_preset", "olt_spec_new", "olt_spec_free", "olt_spec_objective",
        "olt_run_experiment", "olt_string_free", "olt_last_error_message", "olt_version",
    ] {
        assert!(header.contains(&format!(" {name}(")) || header.contains(&format!("*{name}(")), "{name} missing from header");
    }
}

fn static_library() -> Option<PathBuf> {
    // The test binary lives in target/<profile>/deps; the archive one level up.
    let exe = std::env::current_exe().ok()?;
    let lib = exe.parent()?.parent()?.join("libolt_ffi.a");
    lib.is_file().then_some(lib)
}

#[test]
fn c_program_links_against_the_header() {
    let Some(lib) = static_library() else {
        panic!("libolt_ffi.a not found next to the test binary");
    };
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let compiler = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&compiler)
        .arg(crate_dir().join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let out = Command::new(Path::new(&exe)).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
