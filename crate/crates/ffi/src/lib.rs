//! C ABI over the `olt` library.
//!
//! Models and evaluation specs are opaque heap handles created by `*_new` and
//! released by the matching `*_free`. Every call returns an [`OltStatus`]; on
//! failure a description is available from [`olt_last_error_message`] on the
//! same thread. Strings handed out by the library are freed with
//! [`olt_string_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use olt::config::ExperimentConfig;
use olt::harness::{run_campaign, EvaluationSpec, SpecObjective};
use olt::mdp::{ActionId, Domain, GenerativeModel};
use olt::tree::{act, baseline_scorer, BaselineKind, Scorer};
use olt::Error;

/// Result code of every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OltStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Malformed UTF-8, JSON or configuration.
    InvalidArgument = 2,
    /// Wrong dimension, out-of-range action or non-finite input.
    ContractViolation = 3,
    UnsupportedDomain = 4,
    /// The optimizer aborted or its surrogate became ill-conditioned.
    OptimizerFailed = 5,
    Io = 6,
    /// An output buffer is shorter than required.
    BufferTooSmall = 7,
    /// Internal panic, caught at the boundary.
    Panic = 8,
}

/// Opaque generative model handle.
pub struct OltModel(Domain);

/// Opaque evaluation spec handle.
pub struct OltSpec(EvaluationSpec);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(OltStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::ContractViolation(_) => OltStatus::ContractViolation,
            Error::UnsupportedDomain { .. } => OltStatus::UnsupportedDomain,
            Error::IllConditioned { .. } | Error::OptimizerAborted { .. } => OltStatus::OptimizerFailed,
            Error::Config(_) | Error::Json(_) | Error::Csv(_) => OltStatus::InvalidArgument,
            Error::Io(_) => OltStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: OltStatus, message: impl Into<String>) -> Failure {
    Failure(status, message.into())
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> OltStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            OltStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(&format!("internal panic: {message}"));
            OltStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(OltStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|e| fail(OltStatus::InvalidArgument, format!("{what}: {e}")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(OltStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(OltStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(OltStatus::NullPointer, format!("{what} is null")))
}

fn json_error(e: serde_json::Error) -> Failure {
    fail(OltStatus::InvalidArgument, e.to_string())
}

/// Creates a model from a domain object such as `{"key": "chain_walk", "states": 7}`.
///
/// # Safety
/// `domain_json` must be a NUL-terminated string and `model_out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn olt_model_new(domain_json: *const c_char, model_out: *mut *mut OltModel) -> OltStatus {
    guard(|| {
        let slot = out(model_out, "model_out")?;
        let domain: Domain = serde_json::from_str(text(domain_json, "domain_json")?).map_err(json_error)?;
        domain.validate()?;
        *slot = Box::into_raw(Box::new(OltModel(domain)));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from [`olt_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn olt_model_free(model: *mut OltModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// State dimension, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn olt_model_state_dimension(model: *const OltModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.state_dimension())
}

/// Number of discrete actions, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn olt_model_action_count(model: *const OltModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.action_count())
}

/// Length of θ for this model, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn olt_model_feature_dimension(model: *const OltModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.feature_dimension())
}

/// Discount factor, or NaN for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn olt_model_discount(model: *const OltModel) -> f64 {
    model.as_ref().map_or(f64::NAN, |m| m.0.discount())
}

/// One simulator step. `next_state` must hold `state_len` values.
///
/// # Safety
/// Pointers must be valid for the given lengths; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn olt_model_step(
    model: *const OltModel,
    state: *const f64,
    state_len: usize,
    action: usize,
    next_state: *mut f64,
    reward: *mut f64,
) -> OltStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let s = slice(state, state_len, "state")?;
        let reward = out(reward, "reward")?;
        let (next, r) = m.0.step(s, ActionId(action))?;
        if next_state.is_null() {
            return Err(fail(OltStatus::NullPointer, "next_state is null"));
        }
        std::slice::from_raw_parts_mut(next_state, next.len()).copy_from_slice(&next);
        *reward = r;
        Ok(())
    })
}

/// Draws `count` initial states from `seed` into `buffer`, row-major.
///
/// # Safety
/// `buffer` must be writable for `buffer_len` values.
#[no_mangle]
pub unsafe extern "C" fn olt_model_initial_states(
    model: *const OltModel,
    count: usize,
    seed: u64,
    buffer: *mut f64,
    buffer_len: usize,
) -> OltStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let needed = count * m.0.state_dimension();
        if buffer_len < needed {
            return Err(fail(OltStatus::BufferTooSmall, format!("need {needed} values, got {buffer_len}")));
        }
        if buffer.is_null() {
            return Err(fail(OltStatus::NullPointer, "buffer is null"));
        }
        let states = m.0.initial_states(count, seed)?;
        let dst = std::slice::from_raw_parts_mut(buffer, needed);
        for (row, s) in dst.chunks_mut(m.0.state_dimension()).zip(&states) {
            row.copy_from_slice(s);
        }
        Ok(())
    })
}

unsafe fn act_with(
    model: *const OltModel,
    state: *const f64,
    state_len: usize,
    scorer: impl FnOnce(&Domain) -> Result<Scorer, Failure>,
    budget: usize,
    action_out: *mut usize,
) -> OltStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let s = slice(state, state_len, "state")?;
        let slot = out(action_out, "action_out")?;
        let scorer = scorer(&m.0)?;
        *slot = act(&m.0, s, &scorer, budget)?.index();
        Ok(())
    })
}

/// First action of the best-first look-ahead tree scored by θ.
///
/// # Safety
/// Pointers must be valid for the given lengths; `action_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn olt_act(
    model: *const OltModel,
    state: *const f64,
    state_len: usize,
    theta: *const f64,
    theta_len: usize,
    budget: usize,
    action_out: *mut usize,
) -> OltStatus {
    act_with(
        model,
        state,
        state_len,
        |_| Ok(Scorer::linear(slice(theta, theta_len, "theta")?.to_vec())?),
        budget,
        action_out,
    )
}

/// Like [`olt_act`] with a built-in scorer: `uniform`, `greedy` or `optimistic`.
///
/// # Safety
/// `preset` must be a NUL-terminated string; other pointers as in [`olt_act`].
#[no_mangle]
pub unsafe extern "C" fn olt_act_preset(
    model: *const OltModel,
    state: *const f64,
    state_len: usize,
    preset: *const c_char,
    budget: usize,
    action_out: *mut usize,
) -> OltStatus {
    act_with(
        model,
        state,
        state_len,
        |domain| {
            let kind: BaselineKind = text(preset, "preset")?.parse()?;
            Ok(baseline_scorer(kind, domain))
        },
        budget,
        action_out,
    )
}

/// Creates an evaluation spec from its JSON form.
///
/// # Safety
/// `spec_json` must be a NUL-terminated string and `spec_out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn olt_spec_new(spec_json: *const c_char, spec_out: *mut *mut OltSpec) -> OltStatus {
    guard(|| {
        let slot = out(spec_out, "spec_out")?;
        let spec: EvaluationSpec = serde_json::from_str(text(spec_json, "spec_json")?).map_err(json_error)?;
        spec.validate()?;
        *slot = Box::into_raw(Box::new(OltSpec(spec)));
        Ok(())
    })
}

/// Releases a spec. Null is ignored.
///
/// # Safety
/// `spec` must come from [`olt_spec_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn olt_spec_free(spec: *mut OltSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Mean discounted return `J(θ)` over the spec's training states.
///
/// # Safety
/// `theta` must be valid for `theta_len` values; `value_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn olt_spec_objective(
    spec: *const OltSpec,
    theta: *const f64,
    theta_len: usize,
    value_out: *mut f64,
) -> OltStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        let theta = slice(theta, theta_len, "theta")?;
        let slot = out(value_out, "value_out")?;
        *slot = SpecObjective::new(&spec.0)?.try_evaluate(theta)?;
        Ok(())
    })
}

/// Runs a full optimize-and-evaluate campaign from an experiment config.
///
/// `seed` and `output` in the config are honoured except that nothing is
/// written to disk. The campaign result is returned as JSON in `result_out`,
/// to be released with [`olt_string_free`].
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `result_out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn olt_run_experiment(
    config_json: *const c_char,
    workers: usize,
    result_out: *mut *mut c_char,
) -> OltStatus {
    guard(|| {
        let slot = out(result_out, "result_out")?;
        let loaded = ExperimentConfig::parse(text(config_json, "config_json")?, Path::new("<config>"))?;
        loaded.validate()?;
        let c = &loaded.config;
        let campaign = run_campaign(&c.spec(), &c.optimizer, &c.theta_space()?, c.seed, workers.max(1))?;
        let json = serde_json::to_string(&campaign).map_err(json_error)?;
        *slot = CString::new(json).map_err(|e| fail(OltStatus::InvalidArgument, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn olt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, empty after a success.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn olt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn olt_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
