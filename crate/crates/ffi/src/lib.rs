//! C ABI over the recommendation engine.
//!
//! Every function returns an [`RcbStatus`]; on failure the message is
//! available from [`rcb_last_error`] on the same thread. Handles are opaque
//! and must be released with their `_free` function.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use riskcbr::casebase::{build_casebase, load_casebase, save_casebase, CaseBase, PersonalStore};
use riskcbr::cbr::{recommend, Query, Rationale, SimilarityIndex};
use riskcbr::ffm::{load_model, sigmoid, FfmModel};
use riskcbr::schema::ensure_valid;
use riskcbr::{Error, EventCase, Premise};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcbStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    CorruptFile = 5,
    VersionMismatch = 6,
    MissingArtifact = 7,
    EmptyCaseBase = 8,
    NoViableSolution = 9,
    Internal = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcbRationale {
    General = 0,
    PersonalExact = 1,
    PersonalManeuver = 2,
}

/// Result of [`rcb_recommend`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcbRecommendation {
    pub d_r: u8,
    pub c_t: u8,
    pub confidence: f64,
    pub support: u64,
    pub rationale: RcbRationale,
    pub general_count: u64,
    pub personalized_count: u64,
}

/// Trained model plus its similarity tables.
pub struct RcbModel {
    model: FfmModel,
    index: SimilarityIndex,
}

pub struct RcbCaseBase {
    inner: CaseBase,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RcbStatus {
    match e {
        Error::Io { .. } => RcbStatus::Io,
        Error::Parse { .. } | Error::SchemaMismatch { .. } => RcbStatus::Parse,
        Error::CorruptFile { .. } => RcbStatus::CorruptFile,
        Error::VersionMismatch { .. } => RcbStatus::VersionMismatch,
        Error::MissingArtifact(_) => RcbStatus::MissingArtifact,
        Error::EmptyCaseBase => RcbStatus::EmptyCaseBase,
        Error::NoViableSolution => RcbStatus::NoViableSolution,
        Error::Stage { source, .. } => status_of(source),
        _ => RcbStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Invalid(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RcbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            RcbStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is null"));
            RcbStatus::NullArgument
        }
        Ok(Err(Failure::Invalid(msg))) => {
            set_error(msg);
            RcbStatus::InvalidArgument
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            RcbStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Invalid(format!("{what} is not UTF-8")))
}

unsafe fn path_arg(p: *const c_char, what: &'static str) -> Result<PathBuf, Failure> {
    str_arg(p, what).map(PathBuf::from)
}

unsafe fn codes_arg<const N: usize>(p: *const u8, what: &'static str) -> Result<[u8; N], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    let mut out = [0u8; N];
    out.copy_from_slice(std::slice::from_raw_parts(p, N));
    Ok(out)
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn rcb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rcb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a model file into `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rcb_model_load(path: *const c_char, out: *mut *mut RcbModel) -> RcbStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let model = load_model(path_arg(path, "path")?)?;
        let index = SimilarityIndex::new(&model);
        *out = Box::into_raw(Box::new(RcbModel { model, index }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`rcb_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rcb_model_free(model: *mut RcbModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Crash probability of the case `codes[0..7]` in the order
/// `e_n, p_e, p_m, d_r, c_t, r_c, d_c`.
///
/// # Safety
/// `codes` must point to 7 bytes; `out_prob` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rcb_model_predict(
    model: *const RcbModel,
    codes: *const u8,
    out_prob: *mut f64,
) -> RcbStatus {
    guard(|| {
        let m = handle(model, "model")?;
        if out_prob.is_null() {
            return Err(Failure::Null("out_prob"));
        }
        let codes: [u8; 7] = codes_arg(codes, "codes")?;
        let case = EventCase::from_codes(codes);
        ensure_valid(&case, m.model.schema())?;
        *out_prob = sigmoid(m.model.score_codes(&codes));
        Ok(())
    })
}

/// Builds the near-crash case base from the model.
///
/// # Safety
/// `model` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rcb_casebase_build(
    model: *const RcbModel,
    out: *mut *mut RcbCaseBase,
) -> RcbStatus {
    guard(|| {
        let m = handle(model, "model")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let inner = build_casebase(&m.model, m.model.schema())?;
        *out = Box::into_raw(Box::new(RcbCaseBase { inner }));
        Ok(())
    })
}

/// Loads a case-base CSV using the model's schema.
///
/// # Safety
/// `model` must be a live handle, `path` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rcb_casebase_load(
    model: *const RcbModel,
    path: *const c_char,
    out: *mut *mut RcbCaseBase,
) -> RcbStatus {
    guard(|| {
        let m = handle(model, "model")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let inner = load_casebase(path_arg(path, "path")?, m.model.schema())?;
        *out = Box::into_raw(Box::new(RcbCaseBase { inner }));
        Ok(())
    })
}

/// # Safety
/// `cb` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn rcb_casebase_save(
    cb: *const RcbCaseBase,
    path: *const c_char,
) -> RcbStatus {
    guard(|| {
        let cb = handle(cb, "cb")?;
        save_casebase(&cb.inner, path_arg(path, "path")?)?;
        Ok(())
    })
}

/// Number of `(premise, solution)` pairs.
///
/// # Safety
/// `cb` must be a live handle; `out_count` valid.
#[no_mangle]
pub unsafe extern "C" fn rcb_casebase_count(
    cb: *const RcbCaseBase,
    out_count: *mut u64,
) -> RcbStatus {
    guard(|| {
        let cb = handle(cb, "cb")?;
        if out_count.is_null() {
            return Err(Failure::Null("out_count"));
        }
        *out_count = cb.inner.case_count() as u64;
        Ok(())
    })
}

/// # Safety
/// `cb` must come from a build or load call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rcb_casebase_free(cb: *mut RcbCaseBase) {
    if !cb.is_null() {
        drop(Box::from_raw(cb));
    }
}

/// Retrieve, reuse and revise for `premise[0..5]` (`e_n, p_e, p_m, r_c, d_c`).
///
/// `personal_dir` and `driver_id` may both be null for an anonymous query.
/// `excluded` holds `n_excluded` maneuver codes and may be null when
/// `n_excluded` is 0.
///
/// # Safety
/// Pointers must be valid for the lengths described above.
#[no_mangle]
pub unsafe extern "C" fn rcb_recommend(
    model: *const RcbModel,
    cb: *const RcbCaseBase,
    premise: *const u8,
    personal_dir: *const c_char,
    driver_id: *const c_char,
    excluded: *const u8,
    n_excluded: usize,
    tau: f64,
    top_k: usize,
    out: *mut RcbRecommendation,
) -> RcbStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let cb = handle(cb, "cb")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let mut q = Query::new(Premise(codes_arg(premise, "premise")?));
        q.tau = tau;
        q.top_k = top_k;
        if n_excluded > 0 {
            if excluded.is_null() {
                return Err(Failure::Null("excluded"));
            }
            q.excluded_maneuvers = std::slice::from_raw_parts(excluded, n_excluded)
                .iter()
                .copied()
                .collect::<BTreeSet<u8>>();
        }
        let pcb = match (personal_dir.is_null(), driver_id.is_null()) {
            (true, true) => None,
            (false, false) => {
                let dir = path_arg(personal_dir, "personal_dir")?;
                let id = str_arg(driver_id, "driver_id")?;
                q.driver_id = Some(id.to_string());
                Some(PersonalStore::new(dir, cb.inner.schema().clone()).load(id)?)
            }
            _ => {
                return Err(Failure::Invalid(
                    "personal_dir and driver_id must both be set or both be null".into(),
                ))
            }
        };
        let (_, rec) = recommend(&cb.inner, &m.index, pcb.as_ref(), &q)?;
        *out = RcbRecommendation {
            d_r: rec.adopted.solution.d_r,
            c_t: rec.adopted.solution.c_t,
            confidence: rec.adopted.confidence,
            support: rec.adopted.support as u64,
            rationale: match rec.rationale {
                Rationale::General => RcbRationale::General,
                Rationale::PersonalExact => RcbRationale::PersonalExact,
                Rationale::PersonalManeuver => RcbRationale::PersonalManeuver,
            },
            general_count: rec.general_count as u64,
            personalized_count: rec.personalized.len() as u64,
        };
        Ok(())
    })
}
