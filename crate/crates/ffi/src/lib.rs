//! C ABI over the `reuseknn` library.
//!
//! Objects cross the boundary as opaque handles created by `rk_*_new` or
//! `rk_*_load` functions and released with the matching `rk_*_free`. Every
//! fallible function returns an [`RkStatus`]; on failure the message is kept
//! per thread and can be read with [`rk_last_error`]. Strings returned
//! through out-parameters are owned by the caller and released with
//! [`rk_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use reuseknn::dataset::{
    describe, load_ratings, synth_dataset, DuplicatePolicy, RatingFormat, RatingScale, RatingTable, Skew, SynthSpec,
};
use reuseknn::harness::{run, ExperimentConfig};
use reuseknn::knn::{Method, QueryEngine, StrategySpec};
use reuseknn::metrics::{mann_whitney, Tail};
use reuseknn::privacy::{epsilon_closed_form, estimate_tau};
use reuseknn::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Utf8 = 3,
    Io = 4,
    Parse = 5,
    Config = 6,
    EmptyTable = 7,
    DegenerateUsage = 8,
    Undefined = 9,
    Mismatch = 10,
    Panic = 11,
    Other = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RkTail {
    TwoSided = 0,
    Less = 1,
    Greater = 2,
}

/// Opaque rating table.
pub struct RkTable {
    table: Arc<RatingTable>,
}

/// Opaque stateful recommender: one strategy, one neighbor count, one ledger.
pub struct RkRecommender {
    engine: QueryEngine,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    let c = CString::new(message).expect("interior nul bytes were replaced");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(e: &Error) -> RkStatus {
    match e {
        Error::Parse { .. } | Error::Validation { .. } | Error::Csv(_) | Error::Json(_) => RkStatus::Parse,
        Error::Io { .. } => RkStatus::Io,
        Error::EmptyTable | Error::EmptyProfile(_) => RkStatus::EmptyTable,
        Error::DegenerateUsage(_) => RkStatus::DegenerateUsage,
        Error::Undefined(_) | Error::UndefinedEpsilon(_) => RkStatus::Undefined,
        Error::InvalidArgument(_) | Error::InfeasibleSpec(_) | Error::QueryOutOfRange { .. } => {
            RkStatus::InvalidArgument
        }
        Error::Config(_) => RkStatus::Config,
        Error::Mismatch(_) => RkStatus::Mismatch,
    }
}

struct Failure(RkStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> RkStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RkStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {message}"));
            RkStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(RkStatus::NullPointer, format!("{name} is null"))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(RkStatus::Utf8, format!("{name} is not valid UTF-8")))
}

unsafe fn opt_text<'a>(p: *const c_char, name: &str) -> FfiResult<Option<&'a str>> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, name).map(Some)
    }
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn into_c_string(s: String) -> FfiResult<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(RkStatus::Other, "output contains a nul byte".into()))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(RkStatus::InvalidArgument, message.into())
}

/// Message of the last failed call on this thread, or null if the last call
/// succeeded. Valid until the next `rk_*` call on the same thread.
#[no_mangle]
pub extern "C" fn rk_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a rating file. `format` is "csv", "tsv" or "dat"; `scale` is a
/// scale spec such as "1..5" or "0.5..5:0.5". A null `format` means csv.
///
/// # Safety
/// String arguments must be valid nul-terminated strings; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rk_table_load(
    path: *const c_char,
    format: *const c_char,
    scale: *const c_char,
    out_table: *mut *mut RkTable,
) -> RkStatus {
    guard(|| {
        let path = text(path, "path")?;
        let format: RatingFormat = opt_text(format, "format")?.unwrap_or("csv").parse()?;
        let scale: RatingScale = text(scale, "scale")?.parse()?;
        let slot = out(out_table, "out_table")?;
        let table = load_ratings(path, format, &scale, DuplicatePolicy::Reject)?;
        *slot = Box::into_raw(Box::new(RkTable { table: Arc::new(table) }));
        Ok(())
    })
}

/// Generates a synthetic table on the 1..5 integer scale. Exponents of zero
/// select uniform item popularity or user activity.
///
/// # Safety
/// `out_table` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_table_synth(
    users: usize,
    items: usize,
    density: f64,
    popularity_exponent: f64,
    activity_exponent: f64,
    seed: u64,
    out_table: *mut *mut RkTable,
) -> RkStatus {
    guard(|| {
        let slot = out(out_table, "out_table")?;
        let skew = |e: f64| -> FfiResult<Skew> {
            if !(e >= 0.0) || !e.is_finite() {
                return Err(invalid(format!("exponent must be finite and >= 0, got {e}")));
            }
            Ok(if e == 0.0 { Skew::Uniform } else { Skew::PowerLaw { exponent: e } })
        };
        let spec = SynthSpec {
            users,
            items,
            density,
            scale: RatingScale::integer(1, 5)?,
            skew: skew(popularity_exponent)?,
            activity: skew(activity_exponent)?,
            seed,
        };
        let table = synth_dataset(&spec)?;
        *slot = Box::into_raw(Box::new(RkTable { table: Arc::new(table) }));
        Ok(())
    })
}

/// # Safety
/// `table` must come from this library and not have been freed. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn rk_table_free(table: *mut RkTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Number of users in the table's id space; 0 for a null handle.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rk_table_num_users(table: *const RkTable) -> usize {
    table.as_ref().map_or(0, |t| t.table.num_users())
}

/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rk_table_num_items(table: *const RkTable) -> usize {
    table.as_ref().map_or(0, |t| t.table.num_items())
}

/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rk_table_num_ratings(table: *const RkTable) -> usize {
    table.as_ref().map_or(0, |t| t.table.len())
}

/// Descriptive statistics as a JSON object.
///
/// # Safety
/// `table` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_table_describe(table: *const RkTable, out_json: *mut *mut c_char) -> RkStatus {
    guard(|| {
        let t = table.as_ref().ok_or_else(|| null("table"))?;
        let slot = out(out_json, "out_json")?;
        let stats = describe(&t.table)?;
        *slot = into_c_string(serde_json::to_string(&stats).map_err(Error::from)?)?;
        Ok(())
    })
}

/// Privacy parameter of a vulnerable user in nats, from its data usage and
/// privacy risk (`0 <= risk < usage`).
///
/// # Safety
/// `out_epsilon` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_epsilon(data_usage: f64, privacy_risk: f64, out_epsilon: *mut f64) -> RkStatus {
    guard(|| {
        let slot = out(out_epsilon, "out_epsilon")?;
        *slot = epsilon_closed_form(data_usage, privacy_risk)?.as_f64();
        Ok(())
    })
}

/// Data-usage threshold estimated from per-user usage counts.
///
/// # Safety
/// `usages` must point to `len` readable values; `out_tau` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_estimate_tau(usages: *const u64, len: usize, out_tau: *mut f64) -> RkStatus {
    guard(|| {
        let values = slice(usages, len, "usages")?;
        let slot = out(out_tau, "out_tau")?;
        *slot = estimate_tau(values)?;
        Ok(())
    })
}

/// Mann-Whitney U test of sample `a` against sample `b`. `Less` tests whether
/// `a` tends to be smaller.
///
/// # Safety
/// `a` and `b` must point to `na` and `nb` readable values; the out-pointers
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_mann_whitney(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    tail: RkTail,
    out_u: *mut f64,
    out_p: *mut f64,
) -> RkStatus {
    guard(|| {
        let a = slice(a, na, "a")?;
        let b = slice(b, nb, "b")?;
        let tail = match tail {
            RkTail::TwoSided => Tail::TwoSided,
            RkTail::Less => Tail::Less,
            RkTail::Greater => Tail::Greater,
        };
        let u_slot = out(out_u, "out_u")?;
        let p_slot = out(out_p, "out_p")?;
        let r = mann_whitney(a, b, tail, 0.05)?;
        *u_slot = r.statistic;
        *p_slot = r.p_value;
        Ok(())
    })
}

/// Runs an experiment config file, writes its outputs, and returns the run
/// manifest as JSON. Relative paths in the config resolve against the config
/// file's directory.
///
/// # Safety
/// `config_path` must be a valid string; `out_manifest_json` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rk_run_config(config_path: *const c_char, out_manifest_json: *mut *mut c_char) -> RkStatus {
    guard(|| {
        let path = Path::new(text(config_path, "config_path")?);
        let slot = out(out_manifest_json, "out_manifest_json")?;
        let config = ExperimentConfig::load(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let outcome = run(&config, base)?;
        *slot = into_c_string(serde_json::to_string(&outcome.manifest).map_err(Error::from)?)?;
        Ok(())
    })
}

/// Creates a recommender over a table using cosine similarity. `method` is a
/// method name such as "UserKNN", "Gain_DP" or "UserKNN_full_DP"; `tau` is
/// the data-usage threshold (pass infinity for none). Embedding-based
/// strategies are not available here.
///
/// # Safety
/// `table` must be a live handle; `method` a valid string; `out_rec`
/// writable. The recommender keeps its own reference to the table's data.
#[no_mangle]
pub unsafe extern "C" fn rk_recommender_new(
    table: *const RkTable,
    method: *const c_char,
    k: usize,
    tau: f64,
    seed: u64,
    out_rec: *mut *mut RkRecommender,
) -> RkStatus {
    guard(|| {
        let t = table.as_ref().ok_or_else(|| null("table"))?;
        let method: Method = text(method, "method")?.parse()?;
        let slot = out(out_rec, "out_rec")?;
        if method.strategy.uses_embeddings() {
            return Err(invalid(format!("{method} needs trained embeddings")));
        }
        let spec = StrategySpec::new(method.strategy, k).with_dp(method.dp, tau).with_seed(seed);
        let engine = QueryEngine::cosine(spec, t.table.clone())?;
        *slot = Box::into_raw(Box::new(RkRecommender { engine }));
        Ok(())
    })
}

/// # Safety
/// `rec` must come from this library and not have been freed. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn rk_recommender_free(rec: *mut RkRecommender) {
    if !rec.is_null() {
        drop(Box::from_raw(rec));
    }
}

/// Estimates `user`'s rating of `item` (external ids), charging the served
/// neighbors to the ledger. `out_neighbors` may be null.
///
/// # Safety
/// `rec` must be a live handle; the strings valid; `out_score` writable.
#[no_mangle]
pub unsafe extern "C" fn rk_recommender_query(
    rec: *mut RkRecommender,
    user: *const c_char,
    item: *const c_char,
    out_score: *mut f64,
    out_neighbors: *mut usize,
) -> RkStatus {
    guard(|| {
        let r = rec.as_mut().ok_or_else(|| null("rec"))?;
        let user_name = text(user, "user")?;
        let item_name = text(item, "item")?;
        let score_slot = out(out_score, "out_score")?;
        let catalog = r.engine.train().catalog().clone();
        let u = catalog
            .user(user_name)
            .ok_or_else(|| invalid(format!("unknown user '{user_name}'")))?;
        let i = catalog
            .item(item_name)
            .ok_or_else(|| invalid(format!("unknown item '{item_name}'")))?;
        let prediction = r.engine.query(u, i)?;
        *score_slot = prediction.score;
        if let Some(n) = out_neighbors.as_mut() {
            *n = prediction.neighbors.len();
        }
        Ok(())
    })
}

/// Number of times `user`'s ratings have been served so far.
///
/// # Safety
/// `rec` must be a live handle; `user` valid; `out_usage` writable.
#[no_mangle]
pub unsafe extern "C" fn rk_recommender_data_usage(
    rec: *const RkRecommender,
    user: *const c_char,
    out_usage: *mut u64,
) -> RkStatus {
    guard(|| {
        let r = rec.as_ref().ok_or_else(|| null("rec"))?;
        let user_name = text(user, "user")?;
        let slot = out(out_usage, "out_usage")?;
        let u = r
            .engine
            .train()
            .catalog()
            .user(user_name)
            .ok_or_else(|| invalid(format!("unknown user '{user_name}'")))?;
        *slot = r.engine.ledger().data_usage(u);
        Ok(())
    })
}

/// Privacy parameter of `user` under the recommender's ledger. Infinity
/// means no DP protection applied.
///
/// # Safety
/// `rec` must be a live handle; `user` valid; `out_epsilon` writable.
#[no_mangle]
pub unsafe extern "C" fn rk_recommender_epsilon(
    rec: *const RkRecommender,
    user: *const c_char,
    out_epsilon: *mut f64,
) -> RkStatus {
    guard(|| {
        let r = rec.as_ref().ok_or_else(|| null("rec"))?;
        let user_name = text(user, "user")?;
        let slot = out(out_epsilon, "out_epsilon")?;
        let u = r
            .engine
            .train()
            .catalog()
            .user(user_name)
            .ok_or_else(|| invalid(format!("unknown user '{user_name}'")))?;
        *slot = r.engine.ledger().epsilon(u)?.as_f64();
        Ok(())
    })
}

/// Total servings charged to the recommender's ledger.
///
/// # Safety
/// `rec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rk_recommender_total_servings(rec: *const RkRecommender) -> u64 {
    rec.as_ref().map_or(0, |r| r.engine.ledger().total_servings())
}
