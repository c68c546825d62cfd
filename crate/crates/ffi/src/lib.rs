//! C ABI over `roman-core`.
//!
//! Every function returns a [`RomanStatus`]. On anything other than
//! `ROMAN_STATUS_OK` a message is available from [`roman_last_error_message`]
//! on the same thread until the next failing call. Objects are passed as
//! opaque handles and released with the matching `*_free`. Strings and byte buffers returned to the caller must be
//! released with [`roman_string_free`] and [`roman_bytes_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use roman_core::device;
use roman_core::kinematics::{chain_output, chain_reflect_load, chain_transmit, motor_output, MotorSpec, ShaftState, TransmissionChain};
use roman_core::profile::{make_template, MotionProfile, TemplateKind};
use roman_core::registry::{ObjectRecord, Registry, RegistryError};
use roman_core::testbed::{run_task, Scenario, TaskOutcome};
use roman_core::TagId;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RomanStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidProfile = 3,
    NotFound = 4,
    Io = 5,
    Encoding = 6,
    Simulation = 7,
    Panic = 255,
}

/// Which template [`roman_profile_template`] builds.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RomanTemplate {
    EndlessRotation = 0,
    Periodic = 1,
    OneWay = 2,
    TwoWay = 3,
}

/// One 20 ms telemetry sample of a simulated run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RomanSample {
    pub t: f64,
    pub u: f64,
    pub motor_theta: f64,
    pub output_coord: f64,
    pub load: f64,
    pub completed: bool,
}

pub struct RomanProfile(MotionProfile);
pub struct RomanChain(TransmissionChain);
pub struct RomanScenario(Scenario);
pub struct RomanOutcome(TaskOutcome);
pub struct RomanRegistry(Registry);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(RomanStatus, String);

type FfiResult<T = ()> = Result<T, Failure>;

fn fail(status: RomanStatus, message: impl ToString) -> Failure {
    Failure(status, message.to_string())
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult) -> RomanStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RomanStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            RomanStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| fail(RomanStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| fail(RomanStatus::NullPointer, format!("{what} is null")))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(fail(RomanStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(RomanStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

fn c_string(s: String) -> FfiResult<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| fail(RomanStatus::Encoding, "string contains a nul byte"))
}

fn tag(s: &str) -> FfiResult<TagId> {
    TagId::parse(s).map_err(|e| fail(RomanStatus::InvalidArgument, e))
}

fn registry_failure(e: RegistryError) -> Failure {
    let status = match e {
        RegistryError::NotFound(_) => RomanStatus::NotFound,
        RegistryError::InvalidTag(_) => RomanStatus::InvalidArgument,
        RegistryError::Io(_) | RegistryError::Corrupt { .. } => RomanStatus::Io,
    };
    fail(status, e)
}

/// Message for the last failing call on this thread, or NULL if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn roman_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn roman_clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn roman_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn roman_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `data`/`len` must be NULL/0 or a buffer returned by this library.
#[no_mangle]
pub unsafe extern "C" fn roman_bytes_free(data: *mut u8, len: usize) {
    if !data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(data, len)));
    }
}

// ---- profiles ----

/// # Safety
/// `json` must be a NUL-terminated string; `out_profile` must be writable.
#[no_mangle]
pub unsafe extern "C" fn roman_profile_from_json(json: *const c_char, out_profile: *mut *mut RomanProfile) -> RomanStatus {
    guard(|| {
        let json = text(json, "json")?;
        let slot = out(out_profile, "out_profile")?;
        let p: MotionProfile = serde_json::from_str(json).map_err(|e| fail(RomanStatus::InvalidProfile, e))?;
        *slot = boxed(RomanProfile(p));
        Ok(())
    })
}

/// `kind` is a [`RomanTemplate`] value.
///
/// # Safety
/// `out_profile` must be writable.
#[no_mangle]
pub unsafe extern "C" fn roman_profile_template(kind: u32, out_profile: *mut *mut RomanProfile) -> RomanStatus {
    guard(|| {
        let slot = out(out_profile, "out_profile")?;
        let kind = match kind {
            k if k == RomanTemplate::EndlessRotation as u32 => TemplateKind::EndlessRotation,
            k if k == RomanTemplate::Periodic as u32 => TemplateKind::Periodic,
            k if k == RomanTemplate::OneWay as u32 => TemplateKind::OneWay,
            k if k == RomanTemplate::TwoWay as u32 => TemplateKind::TwoWay,
            k => return Err(fail(RomanStatus::InvalidArgument, format!("unknown template {k}"))),
        };
        *slot = boxed(RomanProfile(make_template(kind)));
        Ok(())
    })
}

/// # Safety
/// `profile` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn roman_profile_to_json(profile: *const RomanProfile, out_json: *mut *mut c_char) -> RomanStatus {
    guard(|| {
        let p = deref(profile, "profile")?;
        let slot = out(out_json, "out_json")?;
        *slot = c_string(serde_json::to_string(&p.0).expect("profiles serialize"))?;
        Ok(())
    })
}

/// Command value at time `t` (seconds).
///
/// # Safety
/// `profile` must be a live handle; `out_u` must be writable.
#[no_mangle]
pub unsafe extern "C" fn roman_profile_evaluate(profile: *const RomanProfile, t: f64, out_u: *mut f64) -> RomanStatus {
    guard(|| {
        let p = deref(profile, "profile")?;
        *out(out_u, "out_u")? = p.0.evaluate(t);
        Ok(())
    })
}

/// # Safety
/// `profile` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn roman_profile_add_keypoint(profile: *const RomanProfile, t: f64, u: f64, out_profile: *mut *mut RomanProfile) -> RomanStatus {
    guard(|| {
        let p = deref(profile, "profile")?;
        let slot = out(out_profile, "out_profile")?;
        let next = p.0.add_keypoint(t, u).map_err(|e| fail(RomanStatus::InvalidProfile, e))?;
        *slot = boxed(RomanProfile(next));
        Ok(())
    })
}

/// Compact device encoding; free the buffer with [`roman_bytes_free`].
///
/// # Safety
/// `profile` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn roman_profile_encode_device(profile: *const RomanProfile, out_data: *mut *mut u8, out_len: *mut usize) -> RomanStatus {
    guard(|| {
        let p = deref(profile, "profile")?;
        let data = out(out_data, "out_data")?;
        let len = out(out_len, "out_len")?;
        let bytes = device::encode(&p.0).map_err(|e| fail(RomanStatus::Encoding, e))?;
        *len = bytes.len();
        *data = Box::into_raw(bytes.into_boxed_slice()).cast();
        Ok(())
    })
}

/// # Safety
/// `data` must point to `len` readable bytes; `out_profile` must be writable.
#[no_mangle]
pub unsafe extern "C" fn roman_profile_decode_device(data: *const u8, len: usize, out_profile: *mut *mut RomanProfile) -> RomanStatus {
    guard(|| {
        let slot = out(out_profile, "out_profile")?;
        let bytes = if len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(deref(data, "data")?, len)
        };
        let p = device::decode(bytes).map_err(|e| fail(RomanStatus::Encoding, e))?;
        *slot = boxed(RomanProfile(p));
        Ok(())
    })
}

/// # Safety
/// `profile` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn roman_profile_free(profile: *mut RomanProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

// ---- kinematics ----

/// Builds a transmission chain from its JSON stage list.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_chain` must be writable.
#[no_mangle]
pub unsafe extern "C" fn roman_chain_from_json(json: *const c_char, out_chain: *mut *mut RomanChain) -> RomanStatus {
    guard(|| {
        let json = text(json, "json")?;
        let slot = out(out_chain, "out_chain")?;
        let chain: TransmissionChain = serde_json::from_str(json).map_err(|e| fail(RomanStatus::InvalidArgument, e))?;
        chain.validate().map_err(|e| fail(RomanStatus::InvalidArgument, e))?;
        *slot = boxed(RomanChain(chain));
        Ok(())
    })
}

/// Output position for motor angle `theta` (rad); metres for linear chains.
///
/// # Safety
/// `chain` must be a live handle; `out_position` must be writable.
#[no_mangle]
pub unsafe extern "C" fn roman_chain_output(chain: *const RomanChain, theta: f64, out_position: *mut f64) -> RomanStatus {
    guard(|| {
        let c = deref(chain, "chain")?;
        *out(out_position, "out_position")? = chain_output(theta, &c.0).map_err(|e| fail(RomanStatus::InvalidArgument, e))?;
        Ok(())
    })
}

/// Output rate and effort for a motor shaft state at angle `theta`.
///
/// # Safety
/// `chain` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn roman_chain_transmit(
    chain: *const RomanChain,
    omega: f64,
    tau: f64,
    theta: f64,
    out_rate: *mut f64,
    out_effort: *mut f64,
) -> RomanStatus {
    guard(|| {
        let c = deref(chain, "chain")?;
        let rate = out(out_rate, "out_rate")?;
        let effort = out(out_effort, "out_effort")?;
        let o = chain_transmit(ShaftState::new(omega, tau), &c.0, theta).map_err(|e| fail(RomanStatus::InvalidArgument, e))?;
        *rate = o.rate();
        *effort = o.effort();
        Ok(())
    })
}

/// Motor torque needed to hold `load` at the chain output.
///
/// # Safety
/// `chain` must be a live handle; `out_torque` must be writable.
#[no_mangle]
pub unsafe extern "C" fn roman_chain_reflect_load(chain: *const RomanChain, load: f64, theta: f64, out_torque: *mut f64) -> RomanStatus {
    guard(|| {
        let c = deref(chain, "chain")?;
        *out(out_torque, "out_torque")? = chain_reflect_load(load, &c.0, theta).map_err(|e| fail(RomanStatus::InvalidArgument, e))?;
        Ok(())
    })
}

/// # Safety
/// `chain` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn roman_chain_free(chain: *mut RomanChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// Motor speed for command `u` against `load` (N·m) on the linear
/// torque-speed curve.
///
/// # Safety
/// `out_omega` must be writable.
#[no_mangle]
pub unsafe extern "C" fn roman_motor_speed(u: f64, load: f64, tau_stall: f64, omega_noload: f64, out_omega: *mut f64) -> RomanStatus {
    guard(|| {
        let slot = out(out_omega, "out_omega")?;
        let spec = MotorSpec::new(tau_stall, omega_noload).map_err(|e| fail(RomanStatus::InvalidArgument, e))?;
        *slot = motor_output(u, load, &spec).omega;
        Ok(())
    })
}

// ---- scenarios and simulation ----

/// # Safety
/// `out_scenario` must be writable.
#[no_mangle]
pub unsafe extern "C" fn roman_scenario_builtin(out_scenario: *mut *mut RomanScenario) -> RomanStatus {
    guard(|| {
        *out(out_scenario, "out_scenario")? = boxed(RomanScenario(Scenario::builtin()));
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out_scenario` must be writable.
#[no_mangle]
pub unsafe extern "C" fn roman_scenario_from_json(json: *const c_char, out_scenario: *mut *mut RomanScenario) -> RomanStatus {
    guard(|| {
        let json = text(json, "json")?;
        let slot = out(out_scenario, "out_scenario")?;
        let s: Scenario = serde_json::from_str(json).map_err(|e| fail(RomanStatus::InvalidArgument, e))?;
        s.validate().map_err(|e| fail(RomanStatus::InvalidArgument, e))?;
        *slot = boxed(RomanScenario(s));
        Ok(())
    })
}

/// # Safety
/// `scenario` must be a live handle; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn roman_scenario_object_count(scenario: *const RomanScenario, out_count: *mut usize) -> RomanStatus {
    guard(|| {
        *out(out_count, "out_count")? = deref(scenario, "scenario")?.0.objects.len();
        Ok(())
    })
}

/// # Safety
/// `scenario` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn roman_scenario_free(scenario: *mut RomanScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs `profile` for one profile duration on the object tagged `tag_id`.
///
/// # Safety
/// Handles must be live; `tag_id` NUL-terminated; `out_outcome` writable.
#[no_mangle]
pub unsafe extern "C" fn roman_simulate(
    scenario: *const RomanScenario,
    tag_id: *const c_char,
    profile: *const RomanProfile,
    out_outcome: *mut *mut RomanOutcome,
) -> RomanStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        let p = deref(profile, "profile")?;
        let slot = out(out_outcome, "out_outcome")?;
        let tag = tag(text(tag_id, "tag_id")?)?;
        let object = s.0.object(&tag).map_err(|e| fail(RomanStatus::NotFound, e))?;
        let outcome = run_task(object, &p.0, &s.0.motor).map_err(|e| fail(RomanStatus::Simulation, e))?;
        *slot = boxed(RomanOutcome(outcome));
        Ok(())
    })
}

/// `out_t_complete` receives the completion time, or NaN if the task did not
/// complete.
///
/// # Safety
/// `outcome` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn roman_outcome_summary(
    outcome: *const RomanOutcome,
    out_completed: *mut bool,
    out_t_complete: *mut f64,
    out_sample_count: *mut usize,
) -> RomanStatus {
    guard(|| {
        let o = &deref(outcome, "outcome")?.0;
        *out(out_completed, "out_completed")? = o.completed;
        *out(out_t_complete, "out_t_complete")? = o.t_complete.unwrap_or(f64::NAN);
        *out(out_sample_count, "out_sample_count")? = o.trajectory.len();
        Ok(())
    })
}

/// # Safety
/// `outcome` must be a live handle; `out_sample` must be writable.
#[no_mangle]
pub unsafe extern "C" fn roman_outcome_sample(outcome: *const RomanOutcome, index: usize, out_sample: *mut RomanSample) -> RomanStatus {
    guard(|| {
        let o = &deref(outcome, "outcome")?.0;
        let slot = out(out_sample, "out_sample")?;
        let s = o
            .trajectory
            .get(index)
            .ok_or_else(|| fail(RomanStatus::InvalidArgument, format!("sample {index} out of range ({})", o.trajectory.len())))?;
        *slot = RomanSample {
            t: s.t,
            u: s.u,
            motor_theta: s.motor_theta,
            output_coord: s.output_coord,
            load: s.load,
            completed: s.completed,
        };
        Ok(())
    })
}

/// # Safety
/// `outcome` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn roman_outcome_free(outcome: *mut RomanOutcome) {
    if !outcome.is_null() {
        drop(Box::from_raw(outcome));
    }
}

// ---- registry ----

/// # Safety
/// `dir` must be NUL-terminated; `out_registry` must be writable.
#[no_mangle]
pub unsafe extern "C" fn roman_registry_open(dir: *const c_char, out_registry: *mut *mut RomanRegistry) -> RomanStatus {
    guard(|| {
        let dir = PathBuf::from(text(dir, "dir")?);
        let slot = out(out_registry, "out_registry")?;
        *slot = boxed(RomanRegistry(Registry::open(dir).map_err(registry_failure)?));
        Ok(())
    })
}

/// Saves `profile` for the scenario object tagged `tag_id`.
///
/// # Safety
/// Handles must be live; `tag_id` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn roman_registry_put(
    registry: *const RomanRegistry,
    scenario: *const RomanScenario,
    tag_id: *const c_char,
    profile: *const RomanProfile,
) -> RomanStatus {
    guard(|| {
        let r = deref(registry, "registry")?;
        let s = deref(scenario, "scenario")?;
        let p = deref(profile, "profile")?;
        let tag = tag(text(tag_id, "tag_id")?)?;
        let object = s.0.object(&tag).map_err(|e| fail(RomanStatus::NotFound, e))?;
        let record = ObjectRecord::new(tag, object.name.clone(), object.category, p.0.clone());
        r.0.put_record(record).map_err(registry_failure)?;
        Ok(())
    })
}

/// # Safety
/// `registry` must be live; `tag_id` NUL-terminated; `out_profile` writable.
#[no_mangle]
pub unsafe extern "C" fn roman_registry_get(registry: *const RomanRegistry, tag_id: *const c_char, out_profile: *mut *mut RomanProfile) -> RomanStatus {
    guard(|| {
        let r = deref(registry, "registry")?;
        let slot = out(out_profile, "out_profile")?;
        let record = r.0.get(text(tag_id, "tag_id")?).map_err(registry_failure)?;
        *slot = boxed(RomanProfile(record.profile));
        Ok(())
    })
}

/// # Safety
/// `registry` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn roman_registry_free(registry: *mut RomanRegistry) {
    if !registry.is_null() {
        drop(Box::from_raw(registry));
    }
}
