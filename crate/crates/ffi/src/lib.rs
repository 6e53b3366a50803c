//! C ABI over the htype library.
//!
//! Handles are opaque and owned by the caller after a successful `*_new`;
//! release them with the matching `*_free`. Every call returns an
//! [`HtypeStatus`]; on failure the message is available from
//! [`htype_last_error`] on the same thread.

use htype::heat::duhamel::{c1_estimate, C1Options};
use htype::heat::GroupKernel;
use htype::models::{model_from_id, FoliationModel};
use htype::HtypeError;
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HtypeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Inadmissible = 3,
    OutOfDomain = 4,
    Integration = 5,
    NoConvergence = 6,
    RankDeficient = 7,
    Hypothesis = 8,
    UnknownModel = 9,
    Io = 10,
    Panic = 11,
}

/// A foliation model.
pub struct HtypeModel {
    inner: FoliationModel,
}

/// Heat kernel of an H-type group.
pub struct HtypeKernel {
    inner: GroupKernel,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: HtypeStatus, msg: impl Into<String>) -> HtypeStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

fn status_of(e: &HtypeError) -> HtypeStatus {
    match e {
        HtypeError::Inadmissible { .. } => HtypeStatus::Inadmissible,
        HtypeError::InvalidArgument(_) => HtypeStatus::InvalidArgument,
        HtypeError::OutOfDomain(_) => HtypeStatus::OutOfDomain,
        HtypeError::Integration(_) => HtypeStatus::Integration,
        HtypeError::NoConvergence { .. } => HtypeStatus::NoConvergence,
        HtypeError::RankDeficient(_) => HtypeStatus::RankDeficient,
        HtypeError::Hypothesis(_) => HtypeStatus::Hypothesis,
        HtypeError::UnknownModel(_) | HtypeError::Config(_) => HtypeStatus::UnknownModel,
        HtypeError::Io(_) | HtypeError::Json(_) => HtypeStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), HtypeStatus>) -> HtypeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HtypeStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(HtypeStatus::Panic, "panic inside htype"),
    }
}

fn lib<T>(r: htype::Result<T>) -> Result<T, HtypeStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn nonnull<T>(p: *const T, what: &str) -> Result<(), HtypeStatus> {
    if p.is_null() {
        Err(fail(HtypeStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn htype_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let k = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, k);
            *buf.add(k) = 0;
        }
        msg.len()
    })
}

/// Build a model from a registry id such as `"hopf-s3@2"`.
///
/// # Safety
/// `id` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn htype_model_new(id: *const c_char, out: *mut *mut HtypeModel) -> HtypeStatus {
    guard(|| {
        nonnull(id, "id")?;
        nonnull(out, "out")?;
        let s = CStr::from_ptr(id).to_str().map_err(|_| fail(HtypeStatus::InvalidArgument, "id is not UTF-8"))?;
        let inner = lib(model_from_id(s))?;
        *out = Box::into_raw(Box::new(HtypeModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from [`htype_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn htype_model_free(model: *mut HtypeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Horizontal and vertical ranks.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn htype_model_dims(model: *const HtypeModel, n: *mut usize, m: *mut usize) -> HtypeStatus {
    guard(|| {
        nonnull(model, "model")?;
        nonnull(n, "n")?;
        nonnull(m, "m")?;
        *n = (*model).inner.n;
        *m = (*model).inner.m;
        Ok(())
    })
}

/// `κ_H` and `τ_V` at a chart point of length `n + m`.
///
/// # Safety
/// `point` must hold `len` doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn htype_model_invariants(
    model: *const HtypeModel,
    point: *const f64,
    len: usize,
    kappa_h: *mut f64,
    tau_v: *mut f64,
) -> HtypeStatus {
    guard(|| {
        nonnull(model, "model")?;
        nonnull(point, "point")?;
        nonnull(kappa_h, "kappa_h")?;
        nonnull(tau_v, "tau_v")?;
        let p = std::slice::from_raw_parts(point, len);
        let g = lib(htype::connection::PointGeometry::at(&(*model).inner, p))?;
        *kappa_h = g.kappa_h();
        *tau_v = g.tau_v();
        Ok(())
    })
}

/// Popp-normalized second heat invariant at the model's base point.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn htype_c1(model: *const HtypeModel, s_nodes: usize, value: *mut f64, stderr: *mut f64) -> HtypeStatus {
    guard(|| {
        nonnull(model, "model")?;
        nonnull(value, "value")?;
        nonnull(stderr, "stderr")?;
        let m = &(*model).inner;
        let opts = C1Options { s_nodes: s_nodes.max(4), ..Default::default() };
        let r = lib(c1_estimate(m, &m.base_point(), &opts))?;
        *value = r.c1.value;
        *stderr = r.c1.stderr;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn htype_kernel_new(n: usize, m: usize, out: *mut *mut HtypeKernel) -> HtypeStatus {
    guard(|| {
        nonnull(out, "out")?;
        lib(htype::clifford::build_rep(n, m))?;
        *out = Box::into_raw(Box::new(HtypeKernel { inner: GroupKernel::new(n, m) }));
        Ok(())
    })
}

/// # Safety
/// `kernel` must be null or a live handle from [`htype_kernel_new`].
#[no_mangle]
pub unsafe extern "C" fn htype_kernel_free(kernel: *mut HtypeKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// `K(t; x, z)` against Lebesgue measure; `xz` holds `n + m` doubles.
///
/// # Safety
/// `xz` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn htype_kernel_value(kernel: *const HtypeKernel, t: f64, xz: *const f64, len: usize, out: *mut f64) -> HtypeStatus {
    guard(|| {
        nonnull(kernel, "kernel")?;
        nonnull(xz, "xz")?;
        nonnull(out, "out")?;
        let k = &(*kernel).inner;
        if len != k.n + k.m {
            return Err(fail(HtypeStatus::InvalidArgument, format!("expected {} coordinates", k.n + k.m)));
        }
        let p = std::slice::from_raw_parts(xz, len);
        *out = lib(k.value(t, &p[..k.n], &p[k.n..]))?;
        Ok(())
    })
}
