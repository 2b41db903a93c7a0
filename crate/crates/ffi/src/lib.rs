//! C ABI over `closedloop`.
//!
//! Every fallible function returns a [`ClStatus`] and writes its result
//! through an out-pointer. On failure a message is kept per thread and can
//! be read with [`cl_last_error`]. Objects are opaque handles created by
//! `cl_*_new`/`cl_*_parse` and released by the matching `cl_*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use closedloop::channel::{Alphabet, Dmc, Pmf, Sdmc};
use closedloop::isac::{expected_distortion, mutual_information, DistortionFn};
use closedloop::tree::{exhaustive_max_success, ScoreParams, StrategyTree};
use closedloop::typicality::{lemma1_bound, martingale_check};
use closedloop::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    /// An enumeration or tree would exceed the built-in size caps.
    TooLarge = 4,
    BoundViolated = 5,
    /// The output buffer is too short; the required length was written.
    BufferTooSmall = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

/// A discrete memoryless channel.
pub struct ClDmc(Dmc);

/// A state-dependent channel `W(y | x, s)`.
pub struct ClSdmc(Sdmc);

/// A depth-`n` strategy tree.
pub struct ClTree(StrategyTree);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ClStatus {
    match e.root() {
        Error::Parse { .. } | Error::Config(_) => ClStatus::ParseError,
        Error::EnumerationTooLarge(_) | Error::DepthOverflow(_) => ClStatus::TooLarge,
        Error::BoundViolated { .. } => ClStatus::BoundViolated,
        _ => ClStatus::InvalidArgument,
    }
}

struct Fail(ClStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

type Out<T> = std::result::Result<T, Fail>;

fn null(what: &str) -> Fail {
    Fail(ClStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Out<()>) -> ClStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ClStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            ClStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Out<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T) -> Out<()> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Out<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn read_text<'a>(p: *const c_char) -> Out<&'a str> {
    if p.is_null() {
        return Err(null("text"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(ClStatus::ParseError, "text is not valid UTF-8".into()))
}

unsafe fn read_rows(p: *const f64, outer: usize, inner: usize, what: &str) -> Out<Vec<Vec<f64>>> {
    let len = outer.checked_mul(inner).ok_or_else(|| Fail(ClStatus::InvalidArgument, "size overflow".into()))?;
    let flat = slice(p, len, what)?;
    Ok(flat.chunks(inner.max(1)).map(<[f64]>::to_vec).collect())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn score(dmc: *const ClDmc, a: usize, b: usize, mu: f64) -> Out<ScoreParams> {
    Ok(ScoreParams::new(get(dmc, "dmc")?.0.clone(), a, b, mu)?)
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Channel from a row-major `inputs x outputs` matrix of `P(y|x)`.
///
/// # Safety
/// `rows` must point to `inputs * outputs` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_dmc_new(rows: *const f64, inputs: usize, outputs: usize, out: *mut *mut ClDmc) -> ClStatus {
    guard(|| {
        let dmc = Dmc::new(read_rows(rows, inputs, outputs, "rows")?)?;
        put(out, boxed(ClDmc(dmc)))
    })
}

/// Binary symmetric channel with crossover `p`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_dmc_bsc(p: f64, out: *mut *mut ClDmc) -> ClStatus {
    guard(|| put(out, boxed(ClDmc(Dmc::bsc(p)?))))
}

/// Channel from the `dmc |X| |Y|` text format.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_dmc_parse(text: *const c_char, out: *mut *mut ClDmc) -> ClStatus {
    guard(|| put(out, boxed(ClDmc(read_text(text)?.parse()?))))
}

/// # Safety
/// `dmc` must come from a `cl_dmc_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cl_dmc_free(dmc: *mut ClDmc) {
    if !dmc.is_null() {
        drop(Box::from_raw(dmc));
    }
}

/// State-dependent channel from `inputs * states` rows of `outputs`
/// probabilities; row `x * states + s` is `W(. | x, s)`.
///
/// # Safety
/// `rows` must point to `inputs * states * outputs` doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cl_sdmc_new(
    rows: *const f64,
    inputs: usize,
    states: usize,
    outputs: usize,
    out: *mut *mut ClSdmc,
) -> ClStatus {
    guard(|| {
        let cells =
            inputs.checked_mul(states).ok_or_else(|| Fail(ClStatus::InvalidArgument, "size overflow".into()))?;
        let sdmc = Sdmc::new(inputs, states, read_rows(rows, cells, outputs, "rows")?)?;
        put(out, boxed(ClSdmc(sdmc)))
    })
}

/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_sdmc_parse(text: *const c_char, out: *mut *mut ClSdmc) -> ClStatus {
    guard(|| put(out, boxed(ClSdmc(read_text(text)?.parse()?))))
}

/// # Safety
/// `sdmc` must come from a `cl_sdmc_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cl_sdmc_free(sdmc: *mut ClSdmc) {
    if !sdmc.is_null() {
        drop(Box::from_raw(sdmc));
    }
}

/// The threshold strategy of depth `n` for the score of `(a, b)` on `dmc`.
///
/// # Safety
/// `dmc` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_tree_optimal(
    dmc: *const ClDmc,
    n: usize,
    a: usize,
    b: usize,
    mu: f64,
    out: *mut *mut ClTree,
) -> ClStatus {
    guard(|| {
        let p = score(dmc, a, b, mu)?;
        put(out, boxed(ClTree(StrategyTree::optimal(n, &p)?)))
    })
}

/// Tree from breadth-first labels.
///
/// # Safety
/// `labels` must point to `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_tree_from_labels(
    n: usize,
    inputs: usize,
    outputs: usize,
    labels: *const usize,
    len: usize,
    out: *mut *mut ClTree,
) -> ClStatus {
    guard(|| {
        let labels = slice(labels, len, "labels")?.to_vec();
        let tree = StrategyTree::from_labels(n, Alphabet::new(inputs)?, Alphabet::new(outputs)?, labels)?;
        put(out, boxed(ClTree(tree)))
    })
}

/// Tree from the `tree n |X| |Y|` text format.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_tree_parse(text: *const c_char, out: *mut *mut ClTree) -> ClStatus {
    guard(|| put(out, boxed(ClTree(read_text(text)?.parse()?))))
}

/// # Safety
/// `tree` must come from a `cl_tree_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cl_tree_free(tree: *mut ClTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Copies the breadth-first labels into `buf`. `written` receives the
/// number of labels; when `cap` is too small nothing is copied and
/// `BufferTooSmall` is returned.
///
/// # Safety
/// `tree` must be a live handle, `buf` must have room for `cap` values and
/// `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_tree_labels(
    tree: *const ClTree,
    buf: *mut usize,
    cap: usize,
    written: *mut usize,
) -> ClStatus {
    guard(|| {
        let labels = get(tree, "tree")?.0.labels();
        put(written, labels.len())?;
        if cap < labels.len() {
            return Err(Fail(ClStatus::BufferTooSmall, format!("need room for {} labels", labels.len())));
        }
        if !labels.is_empty() {
            if buf.is_null() {
                return Err(null("buf"));
            }
            ptr::copy_nonoverlapping(labels.as_ptr(), buf, labels.len());
        }
        Ok(())
    })
}

/// `P(|S_n| > n mu)` under `tree`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_tree_success_probability(
    tree: *const ClTree,
    dmc: *const ClDmc,
    a: usize,
    b: usize,
    mu: f64,
    out: *mut f64,
) -> ClStatus {
    guard(|| {
        let p = score(dmc, a, b, mu)?;
        put(out, get(tree, "tree")?.0.checked_success_probability(&p)?)
    })
}

/// Largest success probability over every depth-`n` strategy.
///
/// # Safety
/// `dmc` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_exhaustive_max_success(
    dmc: *const ClDmc,
    n: usize,
    a: usize,
    b: usize,
    mu: f64,
    out: *mut f64,
) -> ClStatus {
    guard(|| {
        let p = score(dmc, a, b, mu)?;
        put(out, exhaustive_max_success(n, &p)?.1)
    })
}

/// `1 / (4 n mu^2)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_lemma1_bound(n: usize, mu: f64, out: *mut f64) -> ClStatus {
    guard(|| put(out, lemma1_bound(n, mu)?))
}

/// Largest absolute conditional drift of the score under `tree`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_martingale_bias(
    tree: *const ClTree,
    dmc: *const ClDmc,
    a: usize,
    b: usize,
    mu: f64,
    out: *mut f64,
) -> ClStatus {
    guard(|| {
        let p = score(dmc, a, b, mu)?;
        let t = &get(tree, "tree")?.0;
        put(out, martingale_check(t, t.depth(), &p)?.max_abs_step_bias)
    })
}

/// `I(X;Y)` in bits for input law `px` and state law `ps`.
///
/// # Safety
/// `px` and `ps` must point to `px_len` and `ps_len` doubles; `sdmc` must be
/// live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_mutual_information(
    px: *const f64,
    px_len: usize,
    sdmc: *const ClSdmc,
    ps: *const f64,
    ps_len: usize,
    out: *mut f64,
) -> ClStatus {
    guard(|| {
        let px = Pmf::new(slice(px, px_len, "px")?.to_vec())?;
        let ps = Pmf::new(slice(ps, ps_len, "ps")?.to_vec())?;
        put(out, mutual_information(&px, &get(sdmc, "sdmc")?.0, &ps)?)
    })
}

/// Expected per-letter distortion of the optimal estimator. `dist` is the
/// row-major `estimates x states` table `d(e, s)`.
///
/// # Safety
/// Pointers must reference arrays of the stated lengths; `sdmc` must be
/// live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_expected_distortion(
    px: *const f64,
    px_len: usize,
    sdmc: *const ClSdmc,
    ps: *const f64,
    ps_len: usize,
    dist: *const f64,
    estimates: usize,
    out: *mut f64,
) -> ClStatus {
    guard(|| {
        let sdmc = &get(sdmc, "sdmc")?.0;
        let px = Pmf::new(slice(px, px_len, "px")?.to_vec())?;
        let ps = Pmf::new(slice(ps, ps_len, "ps")?.to_vec())?;
        let d = DistortionFn::new(read_rows(dist, estimates, sdmc.states().size(), "dist")?)?;
        put(out, expected_distortion(&px, sdmc, &ps, &d)?)
    })
}
