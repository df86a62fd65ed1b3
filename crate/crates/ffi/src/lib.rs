//! C ABI over the `mes` engine.
//!
//! Objects cross the boundary as opaque handles created by `*_new` / `*_load`
//! functions and released by the matching `*_free`. Every fallible function
//! returns a [`MesStatus`]; on failure a description is available from
//! [`mes_last_error_message`] on the same thread. Panics never unwind into
//! the caller; they surface as `MES_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use mes::blackbox::{BlackBox, LinearModel};
use mes::density::InputDensity;
use mes::explanation::{Direction, ExplanationFamily, FamilyKind, FeatureVector};
use mes::precompute::{build_tables, Polarity, PrecomputeOptions, SampleBudget};
use mes::tables_file::TablesFile;
use mes::MesError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MesStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    ClassTooRare = 4,
    Degenerate = 5,
    Transport = 6,
    Io = 7,
    Format = 8,
    Internal = 9,
}

/// Opaque classifier handle.
pub struct MesBlackBox(Box<dyn BlackBox>);

/// Opaque input-density handle.
pub struct MesDensity(InputDensity);

/// Opaque set of score tables.
pub struct MesTables(TablesFile);

/// Result of [`mes_explain`]. `family_index` is -1 and `threshold` is
/// +infinity for the null explanation. `direction` is +1 for `<=`, -1 for
/// `>=` (axis families, with `threshold` already sign-folded) and 0 for null.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MesExplanation {
    pub family_index: i64,
    pub direction: i32,
    pub threshold: f64,
    pub score: f64,
}

/// Classifier callback: returns 1 or 0 for the label of `x[0..dim]`, or a
/// negative value to signal failure.
pub type MesPredictFn = Option<extern "C" fn(user_data: *mut c_void, x: *const f64, dim: usize) -> i32>;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &MesError) -> MesStatus {
    match e {
        MesError::DimensionMismatch { .. } => MesStatus::DimensionMismatch,
        MesError::ClassTooRare { .. } => MesStatus::ClassTooRare,
        MesError::DegenerateClassifier { .. } | MesError::DegenerateExplanation => MesStatus::Degenerate,
        MesError::Transport(_) | MesError::Nondeterministic => MesStatus::Transport,
        MesError::Io(_) => MesStatus::Io,
        MesError::Format(_) | MesError::Json(_) | MesError::Csv(_) => MesStatus::Format,
        _ => MesStatus::InvalidArgument,
    }
}

fn guard<F: FnOnce() -> Result<(), (MesStatus, String)>>(f: F) -> MesStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MesStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MesStatus::Internal
        }
    }
}

fn mes_err(e: MesError) -> (MesStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (MesStatus, String) {
    (MesStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], (MesStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees `ptr` addresses `len` readable f64 values.
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn path_arg<'a>(ptr: *const c_char) -> Result<&'a Path, (MesStatus, String)> {
    if ptr.is_null() {
        return Err(null("path"));
    }
    // SAFETY: caller passes a NUL-terminated string.
    let s = CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| (MesStatus::InvalidArgument, "path is not UTF-8".to_owned()))?;
    Ok(Path::new(s))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), (MesStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    // SAFETY: `out` is a valid, writable pointer per the caller contract.
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mes_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mes_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Per-class Monte Carlo sample count for the given accuracy.
///
/// # Safety
/// `out_n` must be a valid pointer to writable memory.
#[no_mangle]
pub unsafe extern "C" fn mes_sample_size(
    epsilon: f64,
    delta: f64,
    num_families: usize,
    out_n: *mut usize,
) -> MesStatus {
    guard(|| {
        if out_n.is_null() {
            return Err(null("out_n"));
        }
        *out_n = mes::sample_size(epsilon, delta, num_families).map_err(mes_err)?;
        Ok(())
    })
}

/// Linear classifier: label 1 iff `weights . x + bias >= 0`.
///
/// # Safety
/// `weights` must point to `dim` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mes_linear_model_new(
    weights: *const f64,
    dim: usize,
    bias: f64,
    out: *mut *mut MesBlackBox,
) -> MesStatus {
    guard(|| {
        let w = slice(weights, dim, "weights")?;
        let m = LinearModel::new(w.to_vec(), bias).map_err(mes_err)?;
        write_out(out, MesBlackBox(Box::new(m)))
    })
}

struct CallbackModel {
    func: extern "C" fn(*mut c_void, *const f64, usize) -> i32,
    user_data: *mut c_void,
    dim: usize,
    thread_safe: bool,
}

// SAFETY: the caller of `mes_callback_model_new` declares whether the
// callback may be invoked concurrently; when it may not, the engine
// serializes calls because `is_thread_safe` reports false.
unsafe impl Send for CallbackModel {}
unsafe impl Sync for CallbackModel {}

impl BlackBox for CallbackModel {
    fn predict(&self, x: &[f64]) -> mes::Result<bool> {
        if x.len() != self.dim {
            return Err(MesError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        match (self.func)(self.user_data, x.as_ptr(), x.len()) {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(MesError::Transport(format!("callback returned {other}"))),
        }
    }

    fn dim(&self) -> Option<usize> {
        Some(self.dim)
    }

    fn is_thread_safe(&self) -> bool {
        self.thread_safe
    }
}

/// Classifier backed by a C callback. `user_data` is passed through
/// untouched and must outlive the handle.
///
/// # Safety
/// `out` must be writable; `func` must be safe to call with `user_data`.
#[no_mangle]
pub unsafe extern "C" fn mes_callback_model_new(
    func: MesPredictFn,
    user_data: *mut c_void,
    dim: usize,
    thread_safe: bool,
    out: *mut *mut MesBlackBox,
) -> MesStatus {
    guard(|| {
        let func = func.ok_or_else(|| null("func"))?;
        if dim == 0 {
            return Err((MesStatus::InvalidArgument, "dim must be >= 1".into()));
        }
        write_out(
            out,
            MesBlackBox(Box::new(CallbackModel {
                func,
                user_data,
                dim,
                thread_safe,
            })),
        )
    })
}

/// # Safety
/// `model` must be a live handle; `x` must point to `dim` doubles; `out_label`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn mes_blackbox_predict(
    model: *const MesBlackBox,
    x: *const f64,
    dim: usize,
    out_label: *mut i32,
) -> MesStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        if out_label.is_null() {
            return Err(null("out_label"));
        }
        let x = slice(x, dim, "x")?;
        *out_label = model.0.predict(x).map_err(mes_err)? as i32;
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mes_blackbox_free(model: *mut MesBlackBox) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mes_density_gaussian_new(dim: usize, seed: u64, out: *mut *mut MesDensity) -> MesStatus {
    guard(|| {
        let d = InputDensity::standard_gaussian(dim, seed).map_err(mes_err)?;
        write_out(out, MesDensity(d))
    })
}

/// Empirical density over `rows` points stored row-major in `data`.
///
/// # Safety
/// `data` must point to `rows * cols` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mes_density_empirical_new(
    data: *const f64,
    rows: usize,
    cols: usize,
    seed: u64,
    out: *mut *mut MesDensity,
) -> MesStatus {
    guard(|| {
        let len = rows
            .checked_mul(cols)
            .ok_or((MesStatus::InvalidArgument, "rows * cols overflows".to_owned()))?;
        if len == 0 {
            return Err((MesStatus::InvalidArgument, "empty dataset".into()));
        }
        let flat = slice(data, len, "data")?;
        let points = flat
            .chunks(cols)
            .map(|r| FeatureVector::new(r.to_vec()))
            .collect::<mes::Result<Vec<_>>>()
            .map_err(mes_err)?;
        let d = InputDensity::empirical(points, seed).map_err(mes_err)?;
        write_out(out, MesDensity(d))
    })
}

/// # Safety
/// `density` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mes_density_free(density: *mut MesDensity) {
    if !density.is_null() {
        drop(Box::from_raw(density));
    }
}

unsafe fn build(
    model: *const MesBlackBox,
    density: *const MesDensity,
    families: Vec<ExplanationFamily>,
    epsilon: f64,
    delta: f64,
    negative: bool,
    out: *mut *mut MesTables,
) -> Result<(), (MesStatus, String)> {
    let model = model.as_ref().ok_or_else(|| null("model"))?;
    let density = density.as_ref().ok_or_else(|| null("density"))?;
    let budget = SampleBudget::new(epsilon, delta, families.len()).map_err(mes_err)?;
    let opts = PrecomputeOptions {
        polarity: if negative {
            Polarity::Negative
        } else {
            Polarity::Positive
        },
        ..PrecomputeOptions::default()
    };
    let tables = build_tables(model.0.as_ref(), &density.0, &families, &budget, &opts).map_err(mes_err)?;
    let file = TablesFile::new(density.0.dim(), tables).map_err(mes_err)?;
    write_out(out, MesTables(file))
}

/// Score tables for both orientations of every feature (`2 * dim` families).
///
/// # Safety
/// `model` and `density` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mes_tables_build_axis(
    model: *const MesBlackBox,
    density: *const MesDensity,
    epsilon: f64,
    delta: f64,
    negative: bool,
    out: *mut *mut MesTables,
) -> MesStatus {
    guard(|| {
        let dim = density.as_ref().ok_or_else(|| null("density"))?.0.dim();
        build(
            model,
            density,
            ExplanationFamily::all_axis(dim),
            epsilon,
            delta,
            negative,
            out,
        )
    })
}

/// Score tables for linear families `g_i(x) = W[i] . x + offsets[i]`, with
/// `W` row-major `num_families x dim`.
///
/// # Safety
/// `weights` must point to `num_families * dim` doubles and `offsets` to
/// `num_families` doubles; handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mes_tables_build_linear(
    model: *const MesBlackBox,
    density: *const MesDensity,
    weights: *const f64,
    offsets: *const f64,
    num_families: usize,
    epsilon: f64,
    delta: f64,
    negative: bool,
    out: *mut *mut MesTables,
) -> MesStatus {
    guard(|| {
        let dim = density.as_ref().ok_or_else(|| null("density"))?.0.dim();
        let len = num_families
            .checked_mul(dim)
            .ok_or((MesStatus::InvalidArgument, "size overflow".to_owned()))?;
        let w = slice(weights, len, "weights")?;
        let b = slice(offsets, num_families, "offsets")?;
        let families = w
            .chunks(dim.max(1))
            .zip(b)
            .map(|(row, &off)| ExplanationFamily::linear(row.to_vec(), off))
            .collect::<mes::Result<Vec<_>>>()
            .map_err(mes_err)?;
        build(model, density, families, epsilon, delta, negative, out)
    })
}

/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mes_tables_load(path: *const c_char, out: *mut *mut MesTables) -> MesStatus {
    guard(|| {
        let path = path_arg(path)?;
        let file = TablesFile::load(path).map_err(mes_err)?;
        write_out(out, MesTables(file))
    })
}

/// # Safety
/// `tables` must be a live handle; `path` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn mes_tables_save(tables: *const MesTables, path: *const c_char) -> MesStatus {
    guard(|| {
        let tables = tables.as_ref().ok_or_else(|| null("tables"))?;
        let path = path_arg(path)?;
        tables.0.save(path).map_err(mes_err)
    })
}

/// Number of families, or 0 for a null handle.
///
/// # Safety
/// `tables` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mes_tables_len(tables: *const MesTables) -> usize {
    tables.as_ref().map_or(0, |t| t.0.tables.len())
}

/// Feature dimension, or 0 for a null handle.
///
/// # Safety
/// `tables` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mes_tables_dim(tables: *const MesTables) -> usize {
    tables.as_ref().map_or(0, |t| t.0.dim)
}

/// # Safety
/// `tables` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mes_tables_free(tables: *mut MesTables) {
    if !tables.is_null() {
        drop(Box::from_raw(tables));
    }
}

/// Best explanation at `x`.
///
/// # Safety
/// `tables` must be a live handle, `x` must point to `dim` doubles and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mes_explain(
    tables: *const MesTables,
    x: *const f64,
    dim: usize,
    out: *mut MesExplanation,
) -> MesStatus {
    guard(|| {
        let tables = tables.as_ref().ok_or_else(|| null("tables"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if dim != tables.0.dim {
            return Err(mes_err(MesError::DimensionMismatch {
                expected: tables.0.dim,
                got: dim,
            }));
        }
        let x = slice(x, dim, "x")?;
        let e = mes::explain(x, &tables.0.tables).map_err(mes_err)?;
        *out = match (&e.family, e.family_index) {
            (Some(fam), Some(i)) if !e.is_null() => {
                let ge = matches!(
                    fam.kind,
                    FamilyKind::AxisAligned {
                        direction: Direction::Ge,
                        ..
                    }
                );
                MesExplanation {
                    family_index: i as i64,
                    direction: if ge { -1 } else { 1 },
                    threshold: if ge { -e.threshold } else { e.threshold },
                    score: e.score,
                }
            }
            _ => MesExplanation {
                family_index: -1,
                direction: 0,
                threshold: f64::INFINITY,
                score: 0.0,
            },
        };
        Ok(())
    })
}
