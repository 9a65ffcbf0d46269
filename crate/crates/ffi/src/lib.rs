//! C interface to `lpred`.
//!
//! Metrics and embeddings cross the boundary as opaque handles created by
//! `lpred_*_new` functions and released with the matching `_free`. Every
//! call returns an [`LpredStatus`]; on anything but `LPRED_STATUS_OK` the
//! message is available from [`lpred_last_error`] on the same thread.
//! Results are written through caller-provided out-pointers.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lpred::embedding::{embed_l2_exact, embed_search, holder_distortion, L2Outcome, SearchOptions};
use lpred::metric::snowflake;
use lpred::nets::{chain_number, chain_witness, greedy_net};
use lpred::reduction::{pair, unpair};
use lpred::{validate_metric, Embedding, Error, FiniteMetricSpace};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpredStatus {
    Ok = 0,
    /// A finding about the data: no chain, not embeddable, broken link.
    Domain = 1,
    /// Malformed input or out-of-range arguments.
    Invalid = 2,
    NullPointer = 3,
    Panic = 4,
}

/// A finite metric space.
pub struct LpredMetric(FiniteMetricSpace);

/// A map from metric points into ℓq^k.
pub struct LpredEmbedding(Embedding);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn fail(e: Error) -> LpredStatus {
    let status = if e.is_domain() {
        LpredStatus::Domain
    } else {
        LpredStatus::Invalid
    };
    set_error(e.to_string());
    status
}

fn null(name: &str) -> LpredStatus {
    set_error(format!("null pointer: {name}"));
    LpredStatus::NullPointer
}

/// Runs `f`, converting panics into `LPRED_STATUS_PANIC`.
fn guard(f: impl FnOnce() -> LpredStatus) -> LpredStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            LpredStatus::Panic
        }
    }
}

macro_rules! deref {
    ($p:expr, $name:literal) => {
        match unsafe { $p.as_ref() } {
            Some(v) => v,
            None => return null($name),
        }
    };
}

macro_rules! write_out {
    ($p:expr, $v:expr, $name:literal) => {
        if $p.is_null() {
            return null($name);
        } else {
            unsafe { *$p = $v };
        }
    };
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next `lpred_*` call on the same thread.
#[no_mangle]
pub extern "C" fn lpred_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lpred_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a metric from a row-major `n*n` matrix. Labels are `"0"`, `"1"`, ...
#[no_mangle]
pub unsafe extern "C" fn lpred_metric_new(
    n: usize,
    d: *const f64,
    pseudo: bool,
    out: *mut *mut LpredMetric,
) -> LpredStatus {
    guard(|| {
        if d.is_null() && n > 0 {
            return null("d");
        }
        if out.is_null() {
            return null("out");
        }
        let Some(len) = n.checked_mul(n) else {
            return fail(Error::InvalidArgument(format!("{n} points overflow the matrix size")));
        };
        let values = if n == 0 {
            Vec::new()
        } else {
            unsafe { std::slice::from_raw_parts(d, len) }.to_vec()
        };
        match FiniteMetricSpace::unlabeled(n, values, pseudo) {
            Ok(m) => {
                unsafe { *out = Box::into_raw(Box::new(LpredMetric(m))) };
                LpredStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Parses the JSON metric format `{"labels": [...], "d": [[...]], "pseudo": bool}`.
#[no_mangle]
pub unsafe extern "C" fn lpred_metric_from_json(
    json: *const c_char,
    out: *mut *mut LpredMetric,
) -> LpredStatus {
    guard(|| {
        if json.is_null() {
            return null("json");
        }
        if out.is_null() {
            return null("out");
        }
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(t) => t,
            Err(e) => return fail(Error::InvalidArgument(format!("json is not UTF-8: {e}"))),
        };
        match FiniteMetricSpace::from_json_str(text) {
            Ok(m) => {
                unsafe { *out = Box::into_raw(Box::new(LpredMetric(m))) };
                LpredStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a metric. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn lpred_metric_free(m: *mut LpredMetric) {
    if !m.is_null() {
        drop(unsafe { Box::from_raw(m) });
    }
}

#[no_mangle]
pub unsafe extern "C" fn lpred_metric_len(m: *const LpredMetric, out: *mut usize) -> LpredStatus {
    guard(|| {
        let m = deref!(m, "m");
        write_out!(out, m.0.len(), "out");
        LpredStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn lpred_metric_dist(
    m: *const LpredMetric,
    i: usize,
    j: usize,
    out: *mut f64,
) -> LpredStatus {
    guard(|| {
        let m = deref!(m, "m");
        if i >= m.0.len() || j >= m.0.len() {
            return fail(Error::InvalidArgument(format!(
                "index out of range for {} points",
                m.0.len()
            )));
        }
        write_out!(out, m.0.dist(i, j), "out");
        LpredStatus::Ok
    })
}

/// Writes whether the matrix is a valid (pseudo)metric with no defects.
#[no_mangle]
pub unsafe extern "C" fn lpred_metric_is_clean(m: *const LpredMetric, out: *mut bool) -> LpredStatus {
    guard(|| {
        let m = deref!(m, "m");
        write_out!(out, validate_metric(&m.0).is_clean(), "out");
        LpredStatus::Ok
    })
}

/// New metric with every distance raised to `alpha` in (0, 1].
#[no_mangle]
pub unsafe extern "C" fn lpred_metric_snowflake(
    m: *const LpredMetric,
    alpha: f64,
    out: *mut *mut LpredMetric,
) -> LpredStatus {
    guard(|| {
        let m = deref!(m, "m");
        if out.is_null() {
            return null("out");
        }
        match snowflake(&m.0, alpha) {
            Ok(s) => {
                unsafe { *out = Box::into_raw(Box::new(LpredMetric(s))) };
                LpredStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Greedy `eps`-net in index order. `members` must hold `capacity`
/// entries; `count` receives the net size even when it exceeds `capacity`,
/// in which case the call fails with `LPRED_STATUS_INVALID`.
#[no_mangle]
pub unsafe extern "C" fn lpred_greedy_net(
    m: *const LpredMetric,
    eps: f64,
    members: *mut usize,
    capacity: usize,
    count: *mut usize,
) -> LpredStatus {
    guard(|| {
        let m = deref!(m, "m");
        if count.is_null() {
            return null("count");
        }
        let net = match greedy_net(&m.0, eps, None) {
            Ok(n) => n,
            Err(e) => return fail(e),
        };
        unsafe { *count = net.members.len() };
        if net.members.len() > capacity {
            return fail(Error::InvalidArgument(format!(
                "net has {} members but capacity is {capacity}",
                net.members.len()
            )));
        }
        if !net.members.is_empty() {
            if members.is_null() {
                return null("members");
            }
            unsafe { std::slice::from_raw_parts_mut(members, net.members.len()) }
                .copy_from_slice(&net.members);
        }
        LpredStatus::Ok
    })
}

/// Minimal number of `eps`-steps from `u` to `v`; `LPRED_STATUS_DOMAIN`
/// when no chain exists.
#[no_mangle]
pub unsafe extern "C" fn lpred_chain_steps(
    m: *const LpredMetric,
    eps: f64,
    u: usize,
    v: usize,
    steps: *mut usize,
) -> LpredStatus {
    guard(|| {
        let m = deref!(m, "m");
        match chain_witness(&m.0, eps, u, v) {
            Ok(Some(c)) => {
                write_out!(steps, c.steps, "steps");
                LpredStatus::Ok
            }
            Ok(None) => {
                set_error(format!("no {eps}-chain from point {u} to point {v}"));
                LpredStatus::Domain
            }
            Err(e) => fail(e),
        }
    })
}

/// Sampled chain number: the largest minimal chain length over pairs
/// closer than `c`. `LPRED_STATUS_DOMAIN` when some such pair has no chain.
#[no_mangle]
pub unsafe extern "C" fn lpred_chain_number(
    m: *const LpredMetric,
    eps: f64,
    c: f64,
    out: *mut usize,
) -> LpredStatus {
    guard(|| {
        let m = deref!(m, "m");
        match chain_number(&m.0, eps, c) {
            Ok(r) => {
                write_out!(out, r.n, "out");
                LpredStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Builds an embedding of `n` points from a row-major `n*dim` coordinate
/// array, measured with the ℓq norm.
#[no_mangle]
pub unsafe extern "C" fn lpred_embedding_new(
    q: f64,
    n: usize,
    dim: usize,
    coords: *const f64,
    out: *mut *mut LpredEmbedding,
) -> LpredStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let Some(len) = n.checked_mul(dim) else {
            return fail(Error::InvalidArgument("coordinate array size overflows".into()));
        };
        if coords.is_null() && len > 0 {
            return null("coords");
        }
        let flat = if len == 0 {
            &[][..]
        } else {
            unsafe { std::slice::from_raw_parts(coords, len) }
        };
        let rows = (0..n).map(|i| flat[i * dim..(i + 1) * dim].to_vec()).collect();
        match Embedding::new(q, rows) {
            Ok(t) => {
                unsafe { *out = Box::into_raw(Box::new(LpredEmbedding(t))) };
                LpredStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases an embedding. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn lpred_embedding_free(t: *mut LpredEmbedding) {
    if !t.is_null() {
        drop(unsafe { Box::from_raw(t) });
    }
}

#[no_mangle]
pub unsafe extern "C" fn lpred_embedding_dim(t: *const LpredEmbedding, out: *mut usize) -> LpredStatus {
    guard(|| {
        let t = deref!(t, "t");
        write_out!(out, t.0.dim(), "out");
        LpredStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn lpred_embedding_distance(
    t: *const LpredEmbedding,
    i: usize,
    j: usize,
    out: *mut f64,
) -> LpredStatus {
    guard(|| {
        let t = deref!(t, "t");
        if i >= t.0.len() || j >= t.0.len() {
            return fail(Error::InvalidArgument(format!(
                "index out of range for {} points",
                t.0.len()
            )));
        }
        write_out!(out, t.0.image_distance(i, j), "out");
        LpredStatus::Ok
    })
}

/// Least `A` with `A⁻¹ d^α <= |T u - T v|_q <= A d^α` on every pair.
#[no_mangle]
pub unsafe extern "C" fn lpred_holder_distortion(
    m: *const LpredMetric,
    t: *const LpredEmbedding,
    alpha: f64,
    out: *mut f64,
) -> LpredStatus {
    guard(|| {
        let (m, t) = (deref!(m, "m"), deref!(t, "t"));
        match holder_distortion(&m.0, &t.0, alpha) {
            Ok(c) => {
                write_out!(out, c.a, "out");
                LpredStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Exact isometric embedding into Euclidean space. `LPRED_STATUS_DOMAIN`
/// when none exists; `most_negative` (optional) then receives the witness
/// eigenvalue.
#[no_mangle]
pub unsafe extern "C" fn lpred_embed_l2(
    m: *const LpredMetric,
    out: *mut *mut LpredEmbedding,
    most_negative: *mut f64,
) -> LpredStatus {
    guard(|| {
        let m = deref!(m, "m");
        if out.is_null() {
            return null("out");
        }
        match embed_l2_exact(&m.0) {
            Ok(L2Outcome::Embedded { embedding, .. }) => {
                unsafe { *out = Box::into_raw(Box::new(LpredEmbedding(embedding))) };
                LpredStatus::Ok
            }
            Ok(L2Outcome::NotEmbeddable {
                most_negative_eigenvalue,
                ..
            }) => {
                if !most_negative.is_null() {
                    unsafe { *most_negative = most_negative_eigenvalue };
                }
                set_error(format!(
                    "not Euclidean: centered Gram matrix has eigenvalue {most_negative_eigenvalue}"
                ));
                LpredStatus::Domain
            }
            Err(e) => fail(e),
        }
    })
}

/// Seeded search for a low-distortion embedding into ℓq^dim. `c <= 0`
/// means no scale split. `distortion` (optional) receives the certified `A`.
#[no_mangle]
pub unsafe extern "C" fn lpred_embed_search(
    m: *const LpredMetric,
    alpha: f64,
    q: f64,
    dim: usize,
    c: f64,
    restarts: usize,
    seed: u64,
    out: *mut *mut LpredEmbedding,
    distortion: *mut f64,
) -> LpredStatus {
    guard(|| {
        let m = deref!(m, "m");
        if out.is_null() {
            return null("out");
        }
        let opts = SearchOptions {
            alpha,
            q,
            dim,
            c: (c > 0.0).then_some(c),
            restarts,
            seed,
        };
        match embed_search(&m.0, &opts) {
            Ok(r) => {
                if !distortion.is_null() {
                    unsafe { *distortion = r.certificate.a };
                }
                unsafe { *out = Box::into_raw(Box::new(LpredEmbedding(r.embedding))) };
                if r.degenerate {
                    set_error("every restart collapsed two points");
                    LpredStatus::Domain
                } else {
                    LpredStatus::Ok
                }
            }
            Err(e) => fail(e),
        }
    })
}

/// `<n, m> = (n+m)(n+m+1)/2 + m`; `LPRED_STATUS_INVALID` on overflow.
#[no_mangle]
pub unsafe extern "C" fn lpred_pair(n: u64, m: u64, out: *mut u64) -> LpredStatus {
    guard(|| match pair(n, m) {
        Some(k) => {
            write_out!(out, k, "out");
            LpredStatus::Ok
        }
        None => fail(Error::InvalidArgument(format!("<{n}, {m}> overflows 64 bits"))),
    })
}

#[no_mangle]
pub unsafe extern "C" fn lpred_unpair(k: u64, n: *mut u64, m: *mut u64) -> LpredStatus {
    guard(|| {
        let (a, b) = unpair(k);
        write_out!(n, a, "n");
        write_out!(m, b, "m");
        LpredStatus::Ok
    })
}
