//! C ABI for the voleta toolkit: opaque mesh handles, status codes, and
//! flat argument lists so other languages can bind without knowing any
//! Rust types. The generated header lives at `include/voleta.h`.
//!
//! Conventions:
//!
//! * every fallible call returns a [`VoletaStatus`] and writes its result
//!   through an out pointer, touched only on `VOLETA_STATUS_OK`;
//! * handles created by `voleta_*_load`/`voleta_mesh_clean`/
//!   `voleta_mesh_scale` are owned by the caller and released with
//!   [`voleta_mesh_free`];
//! * [`voleta_last_error_message`] describes the most recent failure on
//!   the calling thread, valid until the next failing call on it;
//! * panics never cross the boundary; they surface as
//!   `VOLETA_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use voleta::evalreg::{evaluate_pair, EvalError, IcpParams};
use voleta::meshkit::{
    load_mesh, mesh_volume, remove_isolated_pieces, save_mesh, scale_mesh, MeshError,
    TriangleMesh,
};
use voleta::metrology::{
    fine_tune_scale, food_height, potential_volume, scale_from_reference_blocks,
    select_scale_one_shot, MetrologyError,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoletaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    ParseError = 3,
    IoError = 4,
    IllConditioned = 5,
    InvalidUtf8 = 6,
    Panic = 7,
}

/// Opaque triangle-mesh handle.
pub struct VoletaMesh {
    inner: TriangleMesh,
}

/// Registration and shape-similarity outcome of
/// [`voleta_evaluate_pair`]. `transform` is the row-major 4x4 homogeneous
/// matrix mapping the first mesh's frame into the second's.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct VoletaEvalResult {
    pub chamfer_with_transform: f64,
    pub chamfer_without_transform: f64,
    pub icp_rmse: f64,
    pub iterations: u64,
    pub transform: [f64; 16],
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(status: VoletaStatus, message: &str) -> VoletaStatus {
    set_last_error(message);
    status
}

fn status_of_mesh_error(e: &MeshError) -> VoletaStatus {
    match e {
        MeshError::Io { .. } => VoletaStatus::IoError,
        MeshError::Invalid(_) | MeshError::InvalidInput(_) => VoletaStatus::InvalidInput,
        _ => VoletaStatus::ParseError,
    }
}

fn status_of_metrology_error(_: &MetrologyError) -> VoletaStatus {
    VoletaStatus::InvalidInput
}

fn status_of_eval_error(e: &EvalError) -> VoletaStatus {
    match e {
        EvalError::InvalidInput(_) => VoletaStatus::InvalidInput,
        EvalError::IllConditioned(_) => VoletaStatus::IllConditioned,
    }
}

/// Shield the boundary from panics.
fn guarded(f: impl FnOnce() -> VoletaStatus) -> VoletaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(VoletaStatus::Panic, "internal panic"),
    }
}

unsafe fn path_from_c(path: *const c_char) -> Result<PathBuf, VoletaStatus> {
    if path.is_null() {
        set_last_error("path is null");
        return Err(VoletaStatus::NullPointer);
    }
    match CStr::from_ptr(path).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_last_error("path is not valid UTF-8");
            Err(VoletaStatus::InvalidUtf8)
        }
    }
}

unsafe fn slice_from_c<'a, T>(ptr: *const T, len: usize) -> Result<&'a [T], VoletaStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        set_last_error("array pointer is null");
        return Err(VoletaStatus::NullPointer);
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// Human-readable description of the most recent failure on this thread.
/// The pointer stays valid until the next failing call on the same
/// thread. Never null.
#[no_mangle]
pub extern "C" fn voleta_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn voleta_status_name(status: VoletaStatus) -> *const c_char {
    let name: &'static CStr = match status {
        VoletaStatus::Ok => c"ok",
        VoletaStatus::NullPointer => c"null pointer",
        VoletaStatus::InvalidInput => c"invalid input",
        VoletaStatus::ParseError => c"parse error",
        VoletaStatus::IoError => c"i/o error",
        VoletaStatus::IllConditioned => c"ill-conditioned",
        VoletaStatus::InvalidUtf8 => c"invalid utf-8",
        VoletaStatus::Panic => c"panic",
    };
    name.as_ptr()
}

/// Load an OBJ or PLY mesh from `path` into a new handle.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn voleta_mesh_load(
    path: *const c_char,
    out: *mut *mut VoletaMesh,
) -> VoletaStatus {
    guarded(|| {
        if out.is_null() {
            return fail(VoletaStatus::NullPointer, "out pointer is null");
        }
        let path = match path_from_c(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_mesh(&path) {
            Ok(mesh) => {
                *out = Box::into_raw(Box::new(VoletaMesh { inner: mesh }));
                VoletaStatus::Ok
            }
            Err(e) => fail(status_of_mesh_error(&e), &e.to_string()),
        }
    })
}

/// Save a mesh to `path` (`.obj` or `.ply`, ASCII).
///
/// # Safety
/// `mesh` must be a live handle and `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn voleta_mesh_save(
    mesh: *const VoletaMesh,
    path: *const c_char,
) -> VoletaStatus {
    guarded(|| {
        let Some(mesh) = mesh.as_ref() else {
            return fail(VoletaStatus::NullPointer, "mesh handle is null");
        };
        let path = match path_from_c(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match save_mesh(&mesh.inner, &path) {
            Ok(()) => VoletaStatus::Ok,
            Err(e) => fail(status_of_mesh_error(&e), &e.to_string()),
        }
    })
}

/// Release a handle returned by this library. Null is a no-op.
///
/// # Safety
/// `mesh` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn voleta_mesh_free(mesh: *mut VoletaMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Number of vertices (0 for a null handle).
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn voleta_mesh_vertex_count(mesh: *const VoletaMesh) -> u64 {
    mesh.as_ref().map_or(0, |m| m.inner.vertex_count() as u64)
}

/// Number of triangles (0 for a null handle).
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn voleta_mesh_triangle_count(mesh: *const VoletaMesh) -> u64 {
    mesh.as_ref().map_or(0, |m| m.inner.triangle_count() as u64)
}

/// Number of boundary edges; 0 means the surface is closed.
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn voleta_mesh_boundary_edge_count(mesh: *const VoletaMesh) -> u64 {
    mesh.as_ref().map_or(0, |m| m.inner.boundary_edge_count() as u64)
}

/// Enclosed volume (cube of the vertex unit) via signed tetrahedra.
///
/// # Safety
/// `mesh` must be a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn voleta_mesh_volume(
    mesh: *const VoletaMesh,
    out: *mut f64,
) -> VoletaStatus {
    guarded(|| {
        let Some(mesh) = mesh.as_ref() else {
            return fail(VoletaStatus::NullPointer, "mesh handle is null");
        };
        if out.is_null() {
            return fail(VoletaStatus::NullPointer, "out pointer is null");
        }
        *out = mesh_volume(&mesh.inner);
        VoletaStatus::Ok
    })
}

/// Remove connected components whose diameter is at most
/// `diameter_fraction` of the mesh bounding-box diagonal; writes a new
/// handle.
///
/// # Safety
/// `mesh` must be a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn voleta_mesh_clean(
    mesh: *const VoletaMesh,
    diameter_fraction: f64,
    out: *mut *mut VoletaMesh,
) -> VoletaStatus {
    guarded(|| {
        let Some(mesh) = mesh.as_ref() else {
            return fail(VoletaStatus::NullPointer, "mesh handle is null");
        };
        if out.is_null() {
            return fail(VoletaStatus::NullPointer, "out pointer is null");
        }
        match remove_isolated_pieces(&mesh.inner, diameter_fraction) {
            Ok(cleaned) => {
                *out = Box::into_raw(Box::new(VoletaMesh { inner: cleaned }));
                VoletaStatus::Ok
            }
            Err(e) => fail(status_of_mesh_error(&e), &e.to_string()),
        }
    })
}

/// Uniformly scale a mesh by `factor > 0`; writes a new handle.
///
/// # Safety
/// `mesh` must be a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn voleta_mesh_scale(
    mesh: *const VoletaMesh,
    factor: f64,
    out: *mut *mut VoletaMesh,
) -> VoletaStatus {
    guarded(|| {
        let Some(mesh) = mesh.as_ref() else {
            return fail(VoletaStatus::NullPointer, "mesh handle is null");
        };
        if out.is_null() {
            return fail(VoletaStatus::NullPointer, "out pointer is null");
        }
        match scale_mesh(&mesh.inner, factor) {
            Ok(scaled) => {
                *out = Box::into_raw(Box::new(VoletaMesh { inner: scaled }));
                VoletaStatus::Ok
            }
            Err(e) => fail(status_of_mesh_error(&e), &e.to_string()),
        }
    })
}

/// Scaling factor from measured reference-block lengths:
/// `block_edge_m / mean(lengths)`.
///
/// # Safety
/// `lengths` must point to `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn voleta_scale_from_blocks(
    lengths: *const f64,
    len: usize,
    block_edge_m: f64,
    out: *mut f64,
) -> VoletaStatus {
    guarded(|| {
        if out.is_null() {
            return fail(VoletaStatus::NullPointer, "out pointer is null");
        }
        let lengths = match slice_from_c(lengths, len) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match scale_from_reference_blocks(lengths, block_edge_m) {
            Ok(s) => {
                *out = s;
                VoletaStatus::Ok
            }
            Err(e) => fail(status_of_metrology_error(&e), &e.to_string()),
        }
    })
}

/// Depth-derived bounding-box volume `(f_w * ppu) * (f_l * ppu) * f_h`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn voleta_potential_volume(
    f_w_px: f64,
    f_l_px: f64,
    f_h: f64,
    ppu: f64,
    out: *mut f64,
) -> VoletaStatus {
    guarded(|| {
        if out.is_null() {
            return fail(VoletaStatus::NullPointer, "out pointer is null");
        }
        *out = potential_volume(f_w_px, f_l_px, f_h, ppu);
        VoletaStatus::Ok
    })
}

/// Food height as the absolute difference of two mean depths.
#[no_mangle]
pub extern "C" fn voleta_food_height(d_r: f64, d_f: f64) -> f64 {
    food_height(d_r, d_f)
}

/// Validate a scale against the potential volume, correcting it with the
/// cube root when the relative deviation exceeds `tolerance`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn voleta_fine_tune_scale(
    s: f64,
    unitless_volume: f64,
    potential: f64,
    tolerance: f64,
    out: *mut f64,
) -> VoletaStatus {
    guarded(|| {
        if out.is_null() {
            return fail(VoletaStatus::NullPointer, "out pointer is null");
        }
        match fine_tune_scale(s, unitless_volume, potential, tolerance) {
            Ok(v) => {
                *out = v;
                VoletaStatus::Ok
            }
            Err(e) => fail(status_of_metrology_error(&e), &e.to_string()),
        }
    })
}

/// Pick the candidate factor whose scaled volume lands closest to the
/// potential volume (ties break toward the smaller candidate).
///
/// # Safety
/// `candidates` must point to `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn voleta_select_scale_one_shot(
    candidates: *const f64,
    len: usize,
    unitless_volume: f64,
    potential: f64,
    out: *mut f64,
) -> VoletaStatus {
    guarded(|| {
        if out.is_null() {
            return fail(VoletaStatus::NullPointer, "out pointer is null");
        }
        let candidates = match slice_from_c(candidates, len) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match select_scale_one_shot(candidates, unitless_volume, potential) {
            Ok(v) => {
                *out = v;
                VoletaStatus::Ok
            }
            Err(e) => fail(status_of_metrology_error(&e), &e.to_string()),
        }
    })
}

/// Mean absolute percentage error of predicted against true volumes.
///
/// # Safety
/// Both arrays must hold `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn voleta_mape(
    v_true: *const f64,
    v_pred: *const f64,
    len: usize,
    out: *mut f64,
) -> VoletaStatus {
    guarded(|| {
        if out.is_null() {
            return fail(VoletaStatus::NullPointer, "out pointer is null");
        }
        let v_true = match slice_from_c(v_true, len) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let v_pred = match slice_from_c(v_pred, len) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match voleta::evalreg::mape(v_true, v_pred) {
            Ok(v) => {
                *out = v;
                VoletaStatus::Ok
            }
            Err(e) => fail(status_of_eval_error(&e), &e.to_string()),
        }
    })
}

/// Sample both meshes, compute the raw Chamfer distance, register `ours`
/// onto `ground_truth` with point-to-point ICP, and compute the Chamfer
/// distance again after the transform.
///
/// # Safety
/// Both handles must be live; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn voleta_evaluate_pair(
    ours: *const VoletaMesh,
    ground_truth: *const VoletaMesh,
    samples: u64,
    seed: u64,
    out: *mut VoletaEvalResult,
) -> VoletaStatus {
    guarded(|| {
        let (Some(ours), Some(gt)) = (ours.as_ref(), ground_truth.as_ref()) else {
            return fail(VoletaStatus::NullPointer, "mesh handle is null");
        };
        if out.is_null() {
            return fail(VoletaStatus::NullPointer, "out pointer is null");
        }
        match evaluate_pair(
            &ours.inner,
            &gt.inner,
            samples as usize,
            seed,
            &IcpParams::default(),
        ) {
            Ok(result) => {
                let rows = result.transform.to_homogeneous_rows();
                let mut transform = [0.0; 16];
                for r in 0..4 {
                    transform[r * 4..r * 4 + 4].copy_from_slice(&rows[r]);
                }
                *out = VoletaEvalResult {
                    chamfer_with_transform: result.chamfer_with_transform,
                    chamfer_without_transform: result.chamfer_without_transform,
                    icp_rmse: result.icp_rmse,
                    iterations: result.iterations_used as u64,
                    transform,
                };
                VoletaStatus::Ok
            }
            Err(e) => fail(status_of_eval_error(&e), &e.to_string()),
        }
    })
}
