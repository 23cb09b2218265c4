//! C ABI for the gpfn dataset generator.
//!
//! Configs and datasets are opaque heap handles owned by the caller and
//! released with the matching `*_free` function. Fallible calls return a
//! [`GpfnStatus`]; the message of the last failure on the calling thread is
//! available from [`gpfn_last_error`]. Array accessors return borrowed
//! pointers that stay valid until the dataset is freed or mutated.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gpfn::episode::build_episodes;
use gpfn::format::{read_dataset, write_dataset, FormatError};
use gpfn::{generate_dataset, AttributedGraphDataset, Episode, PriorConfig, Target};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpfnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Config = 4,
    Generation = 5,
    Format = 6,
    Episode = 7,
    Panic = 8,
}

/// Prior configuration handle.
pub struct GpfnConfig {
    inner: PriorConfig,
}

/// Dataset handle, with any episodes built for it.
pub struct GpfnDataset {
    dataset: AttributedGraphDataset,
    episodes: Vec<Episode>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("no interior nul"));
}

fn guard(f: impl FnOnce() -> Result<(), (GpfnStatus, String)>) -> GpfnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            GpfnStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            GpfnStatus::Panic
        }
    }
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a str, (GpfnStatus, String)> {
    if path.is_null() {
        return Err((GpfnStatus::NullPointer, "path is null".into()));
    }
    unsafe { CStr::from_ptr(path) }
        .to_str()
        .map_err(|_| (GpfnStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

fn format_status(e: FormatError) -> (GpfnStatus, String) {
    let status = match e {
        FormatError::Io { .. } => GpfnStatus::Io,
        _ => GpfnStatus::Format,
    };
    (status, e.to_string())
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn gpfn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread (empty after a success).
/// Valid until the next gpfn call on the same thread.
#[no_mangle]
pub extern "C" fn gpfn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default prior configuration.
#[no_mangle]
pub extern "C" fn gpfn_config_default() -> *mut GpfnConfig {
    Box::into_raw(Box::new(GpfnConfig {
        inner: PriorConfig::default(),
    }))
}

/// Loads a TOML config file; absent keys take their defaults.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gpfn_config_load(path: *const c_char, out: *mut *mut GpfnConfig) -> GpfnStatus {
    guard(|| {
        if out.is_null() {
            return Err((GpfnStatus::NullPointer, "out is null".into()));
        }
        let path = unsafe { path_arg(path)? };
        let inner = gpfn::load_config(path).map_err(|e| (GpfnStatus::Config, e.to_string()))?;
        unsafe { *out = Box::into_raw(Box::new(GpfnConfig { inner })) };
        Ok(())
    })
}

/// Parses a TOML config document.
///
/// # Safety
/// `text` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gpfn_config_parse(text: *const c_char, out: *mut *mut GpfnConfig) -> GpfnStatus {
    guard(|| {
        if out.is_null() || text.is_null() {
            return Err((GpfnStatus::NullPointer, "null argument".into()));
        }
        let text = unsafe { CStr::from_ptr(text) }
            .to_str()
            .map_err(|_| (GpfnStatus::InvalidArgument, "config is not valid UTF-8".into()))?;
        let inner = PriorConfig::from_toml_str(text).map_err(|e| (GpfnStatus::Config, e.to_string()))?;
        unsafe { *out = Box::into_raw(Box::new(GpfnConfig { inner })) };
        Ok(())
    })
}

/// # Safety
/// `config` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gpfn_config_free(config: *mut GpfnConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Generates the dataset identified by `(config, seed)`.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gpfn_generate(
    config: *const GpfnConfig,
    seed: u64,
    out: *mut *mut GpfnDataset,
) -> GpfnStatus {
    guard(|| {
        if config.is_null() || out.is_null() {
            return Err((GpfnStatus::NullPointer, "null argument".into()));
        }
        let config = unsafe { &(*config).inner };
        let dataset = generate_dataset(config, seed).map_err(|e| (GpfnStatus::Generation, e.to_string()))?;
        unsafe {
            *out = Box::into_raw(Box::new(GpfnDataset {
                dataset,
                episodes: Vec::new(),
            }))
        };
        Ok(())
    })
}

/// Replaces the dataset's episodes with `count` freshly built ones.
///
/// # Safety
/// `dataset` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gpfn_dataset_build_episodes(dataset: *mut GpfnDataset, count: u16) -> GpfnStatus {
    guard(|| {
        let ds = unsafe { dataset.as_mut() }.ok_or((GpfnStatus::NullPointer, "dataset is null".into()))?;
        ds.episodes =
            build_episodes(&ds.dataset, count as usize).map_err(|e| (GpfnStatus::Episode, e.to_string()))?;
        Ok(())
    })
}

/// Reads and validates a `.gpfn` container.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gpfn_dataset_read(path: *const c_char, out: *mut *mut GpfnDataset) -> GpfnStatus {
    guard(|| {
        if out.is_null() {
            return Err((GpfnStatus::NullPointer, "out is null".into()));
        }
        let path = unsafe { path_arg(path)? };
        let (dataset, episodes) = read_dataset(path).map_err(format_status)?;
        unsafe { *out = Box::into_raw(Box::new(GpfnDataset { dataset, episodes })) };
        Ok(())
    })
}

/// Writes the dataset and its episodes as a `.gpfn` container.
///
/// # Safety
/// `dataset` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gpfn_dataset_write(dataset: *const GpfnDataset, path: *const c_char) -> GpfnStatus {
    guard(|| {
        let ds = unsafe { dataset.as_ref() }.ok_or((GpfnStatus::NullPointer, "dataset is null".into()))?;
        let path = unsafe { path_arg(path)? };
        write_dataset(&ds.dataset, &ds.episodes, path).map_err(format_status)
    })
}

/// # Safety
/// `dataset` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gpfn_dataset_free(dataset: *mut GpfnDataset) {
    if !dataset.is_null() {
        drop(unsafe { Box::from_raw(dataset) });
    }
}

unsafe fn with_dataset<T>(dataset: *const GpfnDataset, default: T, f: impl FnOnce(&GpfnDataset) -> T) -> T {
    match unsafe { dataset.as_ref() } {
        Some(ds) => f(ds),
        None => default,
    }
}

unsafe fn slice_out<T>(s: &[T], len: *mut usize) -> *const T {
    if !len.is_null() {
        unsafe { *len = s.len() };
    }
    s.as_ptr()
}

/// # Safety
/// `dataset` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gpfn_dataset_seed(dataset: *const GpfnDataset) -> u64 {
    unsafe { with_dataset(dataset, 0, |d| d.dataset.seed) }
}

/// # Safety
/// `dataset` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gpfn_dataset_n_nodes(dataset: *const GpfnDataset) -> u64 {
    unsafe { with_dataset(dataset, 0, |d| d.dataset.n_nodes() as u64) }
}

/// Number of stored arcs, twice the undirected edge count.
///
/// # Safety
/// `dataset` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gpfn_dataset_n_arcs(dataset: *const GpfnDataset) -> u64 {
    unsafe { with_dataset(dataset, 0, |d| d.dataset.graph.n_arcs() as u64) }
}

/// # Safety
/// `dataset` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gpfn_dataset_n_features(dataset: *const GpfnDataset) -> u32 {
    unsafe { with_dataset(dataset, 0, |d| d.dataset.n_features() as u32) }
}

/// Class count, or 0 for regression datasets.
///
/// # Safety
/// `dataset` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gpfn_dataset_n_classes(dataset: *const GpfnDataset) -> u16 {
    unsafe { with_dataset(dataset, 0, |d| d.dataset.task.n_classes().unwrap_or(0)) }
}

/// # Safety
/// `dataset` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gpfn_dataset_episode_count(dataset: *const GpfnDataset) -> u16 {
    unsafe { with_dataset(dataset, 0, |d| d.episodes.len() as u16) }
}

/// CSR offsets, `n_nodes + 1` entries.
///
/// # Safety
/// `dataset` must be a live handle; `len` may be null.
#[no_mangle]
pub unsafe extern "C" fn gpfn_dataset_offsets(dataset: *const GpfnDataset, len: *mut usize) -> *const u64 {
    unsafe { with_dataset(dataset, ptr::null(), |d| slice_out(d.dataset.graph.offsets(), len)) }
}

/// CSR neighbor indices, ascending within each node.
///
/// # Safety
/// `dataset` must be a live handle; `len` may be null.
#[no_mangle]
pub unsafe extern "C" fn gpfn_dataset_indices(dataset: *const GpfnDataset, len: *mut usize) -> *const u32 {
    unsafe { with_dataset(dataset, ptr::null(), |d| slice_out(d.dataset.graph.indices(), len)) }
}

/// Row-major `n_nodes x n_features` feature matrix.
///
/// # Safety
/// `dataset` must be a live handle; `len` may be null.
#[no_mangle]
pub unsafe extern "C" fn gpfn_dataset_features(dataset: *const GpfnDataset, len: *mut usize) -> *const f32 {
    unsafe {
        with_dataset(dataset, ptr::null(), |d| {
            slice_out(d.dataset.features.as_slice().expect("standard layout"), len)
        })
    }
}

/// Regression targets, or null for classification datasets.
///
/// # Safety
/// `dataset` must be a live handle; `len` may be null.
#[no_mangle]
pub unsafe extern "C" fn gpfn_dataset_regression_targets(
    dataset: *const GpfnDataset,
    len: *mut usize,
) -> *const f32 {
    unsafe {
        with_dataset(dataset, ptr::null(), |d| match &d.dataset.target {
            Target::Regression(t) => slice_out(t, len),
            Target::Classification(_) => ptr::null(),
        })
    }
}

/// Class ids, or null for regression datasets.
///
/// # Safety
/// `dataset` must be a live handle; `len` may be null.
#[no_mangle]
pub unsafe extern "C" fn gpfn_dataset_class_targets(dataset: *const GpfnDataset, len: *mut usize) -> *const u16 {
    unsafe {
        with_dataset(dataset, ptr::null(), |d| match &d.dataset.target {
            Target::Classification(t) => slice_out(t, len),
            Target::Regression(_) => ptr::null(),
        })
    }
}
