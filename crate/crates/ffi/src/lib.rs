//! C ABI over `fairgraph`.
//!
//! Objects are opaque handles created by `fg_*_new`/`fg_*_build` style
//! functions and released with the matching `fg_*_free`. Fallible calls
//! return an [`FgStatus`]; the message for the most recent failure on the
//! calling thread is available from [`fg_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use fairgraph::metrics::{balance, clustering_error, EvalReport};
use fairgraph::pipeline::{
    build_graph, cluster_graph, load_dataset, resolve_c, run_pipeline, EpsRule, GraphMethod, GraphOutput, KnnAlgo,
    LoadedData, RunConfig,
};
use fairgraph::{Dataset, Error};

/// Result code of a fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FgStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8, or malformed JSON argument.
    InvalidArgument = 1,
    /// Parameter or dataset rejected.
    Config = 2,
    /// Fairness could not be met and strict mode was requested.
    Infeasible = 3,
    /// Numerical failure (zero degree, eigensolver, PSD check).
    Numeric = 4,
    Io = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FgMethod {
    Knn = 0,
    Eps = 1,
    FairKnn = 2,
    FairEps = 3,
}

impl From<FgMethod> for GraphMethod {
    fn from(m: FgMethod) -> Self {
        match m {
            FgMethod::Knn => GraphMethod::Knn,
            FgMethod::Eps => GraphMethod::Eps,
            FgMethod::FairKnn => GraphMethod::FairKnn,
            FgMethod::FairEps => GraphMethod::FairEps,
        }
    }
}

/// Graph construction options. Obtain defaults from
/// [`fg_graph_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FgGraphOptions {
    pub method: FgMethod,
    /// Neighbors per node; 0 selects `ceil(sqrt(n))`.
    pub k: usize,
    pub alpha: f64,
    pub min_pts: usize,
    /// Radius for epsilon methods; values <= 0 select the quantile rule.
    pub eps: f64,
    /// Use the exact candidate-pool kNN instead of NN-Descent.
    pub exact: bool,
    pub seed: u64,
}

pub struct FgDataset {
    data: LoadedData,
}

pub struct FgGraph {
    out: GraphOutput,
    cfg: RunConfig,
}

pub struct FgClustering {
    labels: Vec<usize>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> FgStatus {
    match err {
        Error::Io(_) => FgStatus::Io,
        _ => match err.exit_code() {
            3 => FgStatus::Infeasible,
            4 => FgStatus::Numeric,
            _ => FgStatus::Config,
        },
    }
}

struct Fail(FgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(FgStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> FgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FgStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            FgStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(invalid(format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| invalid(format!("{name} is null")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Fail> {
    if p.is_null() {
        return Err(invalid(format!("{name} is null")));
    }
    Ok(slice::from_raw_parts(p, len))
}

fn parse_config(json: &str) -> Result<RunConfig, Fail> {
    serde_json::from_str(json).map_err(|e| invalid(format!("config JSON: {e}")))
}

fn out_arg<T>(out: *mut *mut T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(invalid("output pointer is null"));
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a dataset from `n * d` row-major points and `n` group ids.
/// `truth` may be null.
///
/// # Safety
/// `points` must hold `n * d` doubles, `groups` and a non-null `truth` must
/// hold `n` values, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fg_dataset_new(
    points: *const f64,
    n: usize,
    d: usize,
    groups: *const usize,
    truth: *const usize,
    out: *mut *mut FgDataset,
) -> FgStatus {
    guard(|| {
        out_arg(out)?;
        let total = n.checked_mul(d).ok_or_else(|| invalid("n * d overflows"))?;
        let points = slice_arg(points, total, "points")?.to_vec();
        let groups = slice_arg(groups, n, "groups")?.to_vec();
        let truth = if truth.is_null() { None } else { Some(slice::from_raw_parts(truth, n).to_vec()) };
        let dataset = Dataset::new(points, d, groups, truth)?;
        let handle = FgDataset { data: LoadedData { dataset, sbm: None, ingest: None } };
        *out = Box::into_raw(Box::new(handle));
        Ok(())
    })
}

/// Loads the data source named in a run-configuration JSON document
/// (a CSV ingest spec or SBM parameters).
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fg_dataset_from_config(config_json: *const c_char, out: *mut *mut FgDataset) -> FgStatus {
    guard(|| {
        out_arg(out)?;
        let cfg = parse_config(str_arg(config_json, "config_json")?)?;
        let data = load_dataset(&cfg)?;
        *out = Box::into_raw(Box::new(FgDataset { data }));
        Ok(())
    })
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn fg_dataset_len(ds: *const FgDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.data.dataset.len())
}

/// Feature dimension, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn fg_dataset_dim(ds: *const FgDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.data.dataset.dim())
}

/// Copies the `n` group ids into `out`.
///
/// # Safety
/// `ds` must be a live handle and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn fg_dataset_groups(ds: *const FgDataset, out: *mut usize, len: usize) -> FgStatus {
    guard(|| {
        let ds = &ref_arg(ds, "dataset")?.data.dataset;
        copy_out(ds.groups(), out, len)
    })
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fg_dataset_free(ds: *mut FgDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

#[no_mangle]
pub extern "C" fn fg_graph_options_default() -> FgGraphOptions {
    let cfg = RunConfig::default();
    FgGraphOptions {
        method: FgMethod::FairKnn,
        k: 0,
        alpha: cfg.alpha,
        min_pts: cfg.min_pts,
        eps: 0.0,
        exact: false,
        seed: cfg.seed,
    }
}

fn options_config(opts: &FgGraphOptions) -> RunConfig {
    let mut cfg = RunConfig {
        method: opts.method.into(),
        k: (opts.k > 0).then_some(opts.k),
        alpha: opts.alpha,
        min_pts: opts.min_pts,
        seed: opts.seed,
        knn_algo: if opts.exact { KnnAlgo::Exact } else { KnnAlgo::Descent },
        ..RunConfig::default()
    };
    if opts.eps > 0.0 {
        cfg.eps_rule = EpsRule::Fixed { value: opts.eps };
    }
    cfg
}

/// Builds a neighbor graph on `ds`. A null `opts` uses the defaults.
///
/// # Safety
/// `ds` must be a live handle, `opts` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fg_graph_build(
    ds: *const FgDataset,
    opts: *const FgGraphOptions,
    out: *mut *mut FgGraph,
) -> FgStatus {
    guard(|| {
        out_arg(out)?;
        let ds = ref_arg(ds, "dataset")?;
        let opts = opts.as_ref().copied().unwrap_or_else(|| fg_graph_options_default());
        let cfg = options_config(&opts);
        let graph = build_graph(&cfg, &ds.data)?;
        *out = Box::into_raw(Box::new(FgGraph { out: graph, cfg }));
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn fg_graph_num_nodes(g: *const FgGraph) -> usize {
    g.as_ref().map_or(0, |g| g.out.graph.num_nodes())
}

/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn fg_graph_num_edges(g: *const FgGraph) -> usize {
    g.as_ref().map_or(0, |g| g.out.graph.num_edges())
}

/// Nodes whose neighborhood could not be made fair.
///
/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn fg_graph_infeasible_count(g: *const FgGraph) -> usize {
    g.as_ref().map_or(0, |g| g.out.report.infeasible_count)
}

/// Reads undirected edge `index` (`i < j`).
///
/// # Safety
/// `g` must be a live handle and the output pointers writable.
#[no_mangle]
pub unsafe extern "C" fn fg_graph_edge(
    g: *const FgGraph,
    index: usize,
    i: *mut usize,
    j: *mut usize,
    weight: *mut f64,
) -> FgStatus {
    guard(|| {
        let g = ref_arg(g, "graph")?;
        if i.is_null() || j.is_null() || weight.is_null() {
            return Err(invalid("output pointer is null"));
        }
        let edges = g.out.graph.edges();
        let &(a, b, w) = edges
            .get(index)
            .ok_or_else(|| invalid(format!("edge index {index} out of range ({} edges)", edges.len())))?;
        *i = a;
        *j = b;
        *weight = w;
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fg_graph_free(g: *mut FgGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Spectral clustering of `g` into `c` clusters (0 uses the dataset's
/// ground-truth cluster count). Isolated nodes take the label of their
/// nearest clustered point in `ds`.
///
/// # Safety
/// `g` and `ds` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fg_cluster(
    g: *const FgGraph,
    ds: *const FgDataset,
    c: usize,
    seed: u64,
    out: *mut *mut FgClustering,
) -> FgStatus {
    guard(|| {
        out_arg(out)?;
        let g = ref_arg(g, "graph")?;
        let ds = &ref_arg(ds, "dataset")?.data.dataset;
        let mut cfg = g.cfg.clone();
        cfg.seed = seed;
        cfg.c = (c > 0).then_some(c);
        let c = resolve_c(&cfg, ds)?;
        let outcome = cluster_graph(&cfg, &g.out.graph, ds, c)?;
        *out = Box::into_raw(Box::new(FgClustering { labels: outcome.result.labels }));
        Ok(())
    })
}

/// Runs the whole pipeline for a run-configuration JSON document. When
/// `report_json` is non-null it receives the evaluation report, to be
/// released with [`fg_string_free`].
///
/// # Safety
/// `config_json` must be NUL-terminated, `out` writable, `report_json` null
/// or writable.
#[no_mangle]
pub unsafe extern "C" fn fg_pipeline_run(
    config_json: *const c_char,
    out: *mut *mut FgClustering,
    report_json: *mut *mut c_char,
) -> FgStatus {
    guard(|| {
        out_arg(out)?;
        let cfg = parse_config(str_arg(config_json, "config_json")?)?;
        let result = run_pipeline(&cfg)?;
        if !report_json.is_null() {
            *report_json = report_string(&result.eval)?.into_raw();
        }
        *out = Box::into_raw(Box::new(FgClustering { labels: result.clustering.result.labels }));
        Ok(())
    })
}

fn report_string(report: &EvalReport) -> Result<CString, Fail> {
    let s = serde_json::to_string(report).map_err(|e| Fail(FgStatus::Config, e.to_string()))?;
    CString::new(s).map_err(|e| Fail(FgStatus::Config, e.to_string()))
}

/// # Safety
/// `cl` must be null or a live clustering handle.
#[no_mangle]
pub unsafe extern "C" fn fg_clustering_len(cl: *const FgClustering) -> usize {
    cl.as_ref().map_or(0, |c| c.labels.len())
}

/// Copies the labels into `out`; `len` must equal [`fg_clustering_len`].
///
/// # Safety
/// `cl` must be a live handle and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn fg_clustering_labels(cl: *const FgClustering, out: *mut usize, len: usize) -> FgStatus {
    guard(|| copy_out(&ref_arg(cl, "clustering")?.labels, out, len))
}

/// # Safety
/// `cl` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fg_clustering_free(cl: *mut FgClustering) {
    if !cl.is_null() {
        drop(Box::from_raw(cl));
    }
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Balance (min over clusters of smallest/largest group count).
///
/// # Safety
/// `labels` and `groups` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fg_balance(labels: *const usize, groups: *const usize, n: usize, out: *mut f64) -> FgStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("output pointer is null"));
        }
        let labels = slice_arg(labels, n, "labels")?;
        let groups = slice_arg(groups, n, "groups")?;
        *out = balance(labels, groups);
        Ok(())
    })
}

/// Clustering error under the best one-to-one label matching.
///
/// # Safety
/// `labels` and `truth` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fg_clustering_error(
    labels: *const usize,
    truth: *const usize,
    n: usize,
    out: *mut f64,
) -> FgStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("output pointer is null"));
        }
        let labels = slice_arg(labels, n, "labels")?;
        let truth = slice_arg(truth, n, "truth")?;
        *out = clustering_error(labels, truth)?;
        Ok(())
    })
}

unsafe fn copy_out(src: &[usize], out: *mut usize, len: usize) -> Result<(), Fail> {
    if out.is_null() {
        return Err(invalid("output buffer is null"));
    }
    if len != src.len() {
        return Err(invalid(format!("buffer length {len} != {}", src.len())));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, len);
    Ok(())
}
