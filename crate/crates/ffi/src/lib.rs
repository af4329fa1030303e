//! C ABI over `adl-core`.
//!
//! Datasets and networks cross the boundary as opaque handles that the caller
//! releases with the matching `*_free`. Every fallible call returns an
//! [`AdlStatus`]; on failure, [`adl_last_error_message`] describes the error
//! for the calling thread. Output buffers are caller-owned and sized by the
//! caller; a short buffer yields `ADL_STATUS_SHAPE_MISMATCH`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use adl_core::dataset::{self, Dataset, SyntheticConfig};
use adl_core::embedding::{self, EmbeddingNetConfig, EmbeddingNetwork, EncoderId};
use adl_core::engine;
use adl_core::harness::{self, HarnessConfig};
use adl_core::nn::Trainable;
use adl_core::selection::{self, ClusterAssignment, QueryVariant};
use adl_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    ShapeMismatch = 3,
    Numerical = 4,
    DegenerateClustering = 5,
    Config = 6,
    Format = 7,
    Version = 8,
    Io = 9,
    Invariant = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdlEncoder {
    Time = 0,
    Space = 1,
    SpaceTime = 2,
    Joint = 3,
    PredictedLabel = 4,
    TrueLabel = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdlVariant {
    Rnd = 0,
    Max = 1,
    Min = 2,
    Avg = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdlCommand {
    Generate = 0,
    Run = 1,
    Grid = 2,
}

/// Network shape. `weather_steps` must divide `d_st`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdlNetworkConfig {
    pub d_t: usize,
    pub d_s: usize,
    pub d_st: usize,
    pub d_y: usize,
    pub weather_steps: usize,
    pub hidden_width: usize,
    pub embedding_dim: usize,
    pub conv_filters: usize,
    pub conv_kernel: usize,
}

pub struct AdlDataset {
    inner: Dataset,
}

pub struct AdlNetwork {
    inner: EmbeddingNetwork,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> AdlStatus {
    match e {
        Error::InvalidInput(_) => AdlStatus::InvalidInput,
        Error::ShapeMismatch { .. } => AdlStatus::ShapeMismatch,
        Error::Numerical { .. } => AdlStatus::Numerical,
        Error::DegenerateClustering { .. } => AdlStatus::DegenerateClustering,
        Error::Config { .. } => AdlStatus::Config,
        Error::Format(_) | Error::Csv(_) | Error::Json(_) => AdlStatus::Format,
        Error::Version { .. } => AdlStatus::Version,
        Error::Io(_) | Error::File { .. } => AdlStatus::Io,
        Error::Invariant(_) => AdlStatus::Invariant,
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<(), Failure>;

/// Runs `f`, converting errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Outcome) -> AdlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            AdlStatus::Ok
        }
        Ok(Err(Failure::Null(name))) => {
            set_last_error(&format!("null pointer: {name}"));
            AdlStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(&format!("{}: {e}", e.kind()));
            status_of(&e)
        }
        Err(_) => {
            set_last_error("panic: internal error");
            AdlStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &'static str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn path<'a>(p: *const c_char, name: &'static str) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::InvalidInput(format!("{name} is not valid UTF-8")))?;
    Ok(Path::new(s))
}

fn copy_into(values: &[f64], dst: &mut [f64]) -> Outcome {
    if dst.len() < values.len() {
        return Err(Error::ShapeMismatch {
            expected: values.len(),
            got: dst.len(),
        }
        .into());
    }
    dst[..values.len()].copy_from_slice(values);
    Ok(())
}

fn boxed<T>(value: T, dst: &mut *mut T) {
    *dst = Box::into_raw(Box::new(value));
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn adl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static, NUL-terminated library version.
#[no_mangle]
pub extern "C" fn adl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Synthesizes a dataset.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn adl_dataset_generate(
    n_buildings: usize,
    n_timestamps: usize,
    noise_scale: f64,
    shift_strength: f64,
    seed: u64,
    out_dataset: *mut *mut AdlDataset,
) -> AdlStatus {
    guard(|| {
        let dst = out(out_dataset, "out_dataset")?;
        let inner = dataset::generate_synthetic(&SyntheticConfig {
            n_buildings,
            n_timestamps,
            noise_scale,
            shift_strength,
            seed,
        })?;
        boxed(AdlDataset { inner }, dst);
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out_dataset` writable.
#[no_mangle]
pub unsafe extern "C" fn adl_dataset_load(path_utf8: *const c_char, out_dataset: *mut *mut AdlDataset) -> AdlStatus {
    guard(|| {
        let dst = out(out_dataset, "out_dataset")?;
        let p = path(path_utf8, "path")?;
        let inner = dataset::load_dataset(p).map_err(|e| e.at_path(p))?;
        boxed(AdlDataset { inner }, dst);
        Ok(())
    })
}

/// # Safety
/// `ds` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn adl_dataset_save(ds: *const AdlDataset, path_utf8: *const c_char) -> AdlStatus {
    guard(|| {
        let ds = as_ref(ds, "dataset")?;
        let p = path(path_utf8, "path")?;
        dataset::save_dataset(&ds.inner, p).map_err(|e| e.at_path(p))?;
        Ok(())
    })
}

/// Number of points and feature/label widths.
///
/// # Safety
/// `ds` must come from this library; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn adl_dataset_shape(
    ds: *const AdlDataset,
    out_points: *mut usize,
    out_d_x: *mut usize,
    out_d_y: *mut usize,
) -> AdlStatus {
    guard(|| {
        let ds = &as_ref(ds, "dataset")?.inner;
        *out(out_points, "out_points")? = ds.len();
        *out(out_d_x, "out_d_x")? = ds.schema.d_x();
        *out(out_d_y, "out_d_y")? = ds.schema.d_y;
        Ok(())
    })
}

/// Copies one point's features and label.
///
/// # Safety
/// Buffers must hold at least `features_len` and `label_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn adl_dataset_point(
    ds: *const AdlDataset,
    index: usize,
    features: *mut f64,
    features_len: usize,
    label: *mut f64,
    label_len: usize,
) -> AdlStatus {
    guard(|| {
        let ds = &as_ref(ds, "dataset")?.inner;
        let p = ds
            .points
            .get(index)
            .ok_or_else(|| Error::InvalidInput(format!("point {index} out of range ({} points)", ds.len())))?;
        copy_into(&p.features, slice_mut(features, features_len, "features")?)?;
        copy_into(&p.label, slice_mut(label, label_len, "label")?)?;
        Ok(())
    })
}

/// # Safety
/// `ds` must come from this library or be null; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn adl_dataset_free(ds: *mut AdlDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Default network shape for the standard feature schema.
#[no_mangle]
pub extern "C" fn adl_network_config_default() -> AdlNetworkConfig {
    let c = EmbeddingNetConfig::default();
    AdlNetworkConfig {
        d_t: c.d_t,
        d_s: c.d_s,
        d_st: c.d_st,
        d_y: c.d_y,
        weather_steps: c.weather_steps,
        hidden_width: c.hidden_width,
        embedding_dim: c.embedding_dim,
        conv_filters: c.conv_filters,
        conv_kernel: c.conv_kernel,
    }
}

fn net_config(c: &AdlNetworkConfig) -> EmbeddingNetConfig {
    EmbeddingNetConfig {
        d_t: c.d_t,
        d_s: c.d_s,
        d_st: c.d_st,
        d_y: c.d_y,
        weather_steps: c.weather_steps,
        hidden_width: c.hidden_width,
        embedding_dim: c.embedding_dim,
        conv_filters: c.conv_filters,
        conv_kernel: c.conv_kernel,
    }
}

/// Builds a freshly initialized network.
///
/// # Safety
/// `config` must be readable and `out_network` writable.
#[no_mangle]
pub unsafe extern "C" fn adl_network_new(
    config: *const AdlNetworkConfig,
    seed: u64,
    out_network: *mut *mut AdlNetwork,
) -> AdlStatus {
    guard(|| {
        let cfg = net_config(as_ref(config, "config")?);
        let dst = out(out_network, "out_network")?;
        boxed(
            AdlNetwork {
                inner: EmbeddingNetwork::build(cfg, seed)?,
            },
            dst,
        );
        Ok(())
    })
}

/// # Safety
/// `path` must be NUL-terminated and `out_network` writable.
#[no_mangle]
pub unsafe extern "C" fn adl_network_load(path_utf8: *const c_char, out_network: *mut *mut AdlNetwork) -> AdlStatus {
    guard(|| {
        let dst = out(out_network, "out_network")?;
        let p = path(path_utf8, "path")?;
        let inner = embedding::load_weights(p).map_err(|e| e.at_path(p))?;
        boxed(AdlNetwork { inner }, dst);
        Ok(())
    })
}

/// # Safety
/// `net` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn adl_network_save(net: *const AdlNetwork, path_utf8: *const c_char) -> AdlStatus {
    guard(|| {
        let net = as_ref(net, "network")?;
        let p = path(path_utf8, "path")?;
        embedding::save_weights(&net.inner, p).map_err(|e| e.at_path(p))?;
        Ok(())
    })
}

/// # Safety
/// `net` must come from this library; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adl_network_param_count(net: *const AdlNetwork, out_count: *mut usize) -> AdlStatus {
    guard(|| {
        *out(out_count, "out_count")? = as_ref(net, "network")?.inner.param_count();
        Ok(())
    })
}

/// Predicts a label vector for one feature vector.
///
/// # Safety
/// `x` must hold `x_len` doubles and `y` must hold `y_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn adl_network_predict(
    net: *const AdlNetwork,
    x: *const f64,
    x_len: usize,
    y: *mut f64,
    y_len: usize,
) -> AdlStatus {
    guard(|| {
        let net = &as_ref(net, "network")?.inner;
        let pred = net.predict(slice(x, x_len, "x")?)?;
        copy_into(&pred, slice_mut(y, y_len, "y")?)
    })
}

/// Encodes one feature vector with the chosen encoder. `label` may be null
/// except for `ADL_ENCODER_TRUE_LABEL`. The embedding length is written to
/// `out_written`.
///
/// # Safety
/// Buffers must hold the stated number of doubles; `out_written` may be null.
#[no_mangle]
pub unsafe extern "C" fn adl_network_encode(
    net: *const AdlNetwork,
    encoder: AdlEncoder,
    x: *const f64,
    x_len: usize,
    label: *const f64,
    label_len: usize,
    embedding: *mut f64,
    embedding_len: usize,
    out_written: *mut usize,
) -> AdlStatus {
    guard(|| {
        let net = &as_ref(net, "network")?.inner;
        let id = match encoder {
            AdlEncoder::Time => EncoderId::Time,
            AdlEncoder::Space => EncoderId::Space,
            AdlEncoder::SpaceTime => EncoderId::SpaceTime,
            AdlEncoder::Joint => EncoderId::Joint,
            AdlEncoder::PredictedLabel => EncoderId::PredictedLabel,
            AdlEncoder::TrueLabel => EncoderId::TrueLabel,
        };
        let label = if label.is_null() {
            None
        } else {
            Some(slice(label, label_len, "label")?)
        };
        let e = net.encode(id, slice(x, x_len, "x")?, label)?;
        copy_into(&e, slice_mut(embedding, embedding_len, "embedding")?)?;
        if let Some(w) = out_written.as_mut() {
            *w = e.len();
        }
        Ok(())
    })
}

/// # Safety
/// `net` must come from this library or be null; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn adl_network_free(net: *mut AdlNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

fn rows(flat: &[f64], n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| flat[i * dim..(i + 1) * dim].to_vec()).collect()
}

/// K-means++ over `n` row-major vectors of length `dim`.
///
/// # Safety
/// `vectors` holds `n * dim` doubles, `membership` holds `n` entries,
/// `centers` holds `k * dim` doubles; `out_sse` may be null.
#[no_mangle]
pub unsafe extern "C" fn adl_kmeans(
    vectors: *const f64,
    n: usize,
    dim: usize,
    k: usize,
    seed: u64,
    membership: *mut usize,
    centers: *mut f64,
    out_sse: *mut f64,
) -> AdlStatus {
    guard(|| {
        let total = n.checked_mul(dim).ok_or_else(|| Error::InvalidInput("n * dim overflows".into()))?;
        let a = selection::kmeans_pp(&rows(slice(vectors, total, "vectors")?, n, dim), k, seed)?;
        slice_mut(membership, n, "membership")?.copy_from_slice(&a.membership);
        let flat: Vec<f64> = a.centers.concat();
        copy_into(&flat, slice_mut(centers, k * dim, "centers")?)?;
        if let Some(s) = out_sse.as_mut() {
            *s = a.within_cluster_sse;
        }
        Ok(())
    })
}

/// `exp(-|v - center|_1 / n_e)`.
///
/// # Safety
/// `v` and `center` hold `len` doubles; `out_similarity` is writable.
#[no_mangle]
pub unsafe extern "C" fn adl_laplacian_similarity(
    v: *const f64,
    center: *const f64,
    len: usize,
    n_e: usize,
    out_similarity: *mut f64,
) -> AdlStatus {
    guard(|| {
        *out(out_similarity, "out_similarity")? =
            selection::laplacian_similarity(slice(v, len, "v")?, slice(center, len, "center")?, n_e)?;
        Ok(())
    })
}

/// One candidate index per cluster, written to `selected` in cluster order.
///
/// # Safety
/// `membership` and `scores` hold `n` entries; `selected` holds `k` entries.
#[no_mangle]
pub unsafe extern "C" fn adl_select_batch(
    variant: AdlVariant,
    membership: *const usize,
    scores: *const f64,
    n: usize,
    k: usize,
    seed: u64,
    selected: *mut usize,
) -> AdlStatus {
    guard(|| {
        let membership = slice(membership, n, "membership")?.to_vec();
        if let Some(m) = membership.iter().find(|&&m| m >= k) {
            return Err(Error::InvalidInput(format!("membership {m} is not below k = {k}")).into());
        }
        let assignment = ClusterAssignment {
            centers: vec![Vec::new(); k],
            membership,
            within_cluster_sse: 0.0,
            sse_history: Vec::new(),
        };
        let variant = match variant {
            AdlVariant::Rnd => QueryVariant::Rnd,
            AdlVariant::Max => QueryVariant::Max,
            AdlVariant::Min => QueryVariant::Min,
            AdlVariant::Avg => QueryVariant::Avg,
        };
        let picks = selection::select_batch(variant, &assignment, slice(scores, n, "scores")?, seed)?;
        slice_mut(selected, k, "selected")?.copy_from_slice(&picks);
        Ok(())
    })
}

/// `1 - min(1, model_loss / rf_loss)`.
///
/// # Safety
/// `out_accuracy` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adl_accuracy(model_loss: f64, rf_loss: f64, out_accuracy: *mut f64) -> AdlStatus {
    guard(|| {
        *out(out_accuracy, "out_accuracy")? = engine::accuracy(model_loss, rf_loss)?;
        Ok(())
    })
}

/// Runs a harness command from a configuration file, as the `adl` binary does.
///
/// # Safety
/// Both strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn adl_run_command(
    command: AdlCommand,
    config_path: *const c_char,
    out_path: *const c_char,
) -> AdlStatus {
    guard(|| {
        let cfg = HarnessConfig::load(path(config_path, "config_path")?)?;
        let dst = path(out_path, "out_path")?;
        match command {
            AdlCommand::Generate => {
                harness::cmd_generate(&cfg, dst)?;
            }
            AdlCommand::Run => {
                harness::cmd_run(&cfg, dst)?;
            }
            AdlCommand::Grid => {
                harness::cmd_grid(&cfg, dst)?;
            }
        }
        Ok(())
    })
}
