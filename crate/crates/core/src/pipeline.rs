//! End-to-end runs: load data, build a (fair) neighborhood graph, cluster
//! it spectrally, evaluate. Also parameter sweeps over alpha, k and epsilon.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fair_eps::{build_eps_neighborhoods, fair_eps_neighborhoods};
use crate::fair_knn::{exact_knn, fair_knn_exact, fair_nn_descent};
use crate::graph::{assemble_graph, SigmaRule, Symmetrize, WeightedGraph};
use crate::ingest::{load_csv, IngestReport, IngestSpec};
use crate::metrics::{evaluate, EvalReport};
use crate::spectral::{canonical_labels, spectral_cluster, ClusteringResult, SpectralOptions};
use crate::synth::{generate_instance, SbmInstance, SbmParams};
use crate::types::{is_fair, Dataset, FairnessParams, NeighborList};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DataSource {
    Csv(IngestSpec),
    Sbm(SbmParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphMethod {
    Knn,
    Eps,
    FairKnn,
    FairEps,
}

impl GraphMethod {
    pub fn is_fair(self) -> bool {
        matches!(self, GraphMethod::FairKnn | GraphMethod::FairEps)
    }

    pub fn is_eps(self) -> bool {
        matches!(self, GraphMethod::Eps | GraphMethod::FairEps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KnnAlgo {
    #[default]
    Descent,
    Exact,
}

/// What clustering does with nodes that have no edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum IsolatedPolicy {
    /// Cluster the rest, then give each isolated node the label of its
    /// nearest clustered node in feature space.
    #[default]
    AttachNearest,
    /// Fail with a zero-degree error.
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum EpsRule {
    /// `(ln n / n)^d`.
    LogRatio,
    /// Nearest-rank `q`-quantile of the per-node distance to the k-th
    /// nearest neighbor.
    Quantile { q: f64 },
    Fixed { value: f64 },
}

impl Default for EpsRule {
    fn default() -> Self {
        EpsRule::Quantile { q: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub source: DataSource,
    pub method: GraphMethod,
    pub alpha: f64,
    /// Defaults to `ceil(sqrt(n))`.
    pub k: Option<usize>,
    pub min_pts: usize,
    pub eps_rule: EpsRule,
    pub knn_algo: KnnAlgo,
    pub candidate_multiplier: f64,
    /// Number of clusters; defaults to the ground-truth cluster count.
    pub c: Option<usize>,
    pub seed: u64,
    pub sigma: SigmaRule,
    pub symmetrize: Symmetrize,
    /// Cluster the generated SBM adjacency instead of a feature graph.
    pub use_sbm_graph: bool,
    pub strict_fairness: bool,
    pub isolated: IsolatedPolicy,
    pub spectral: SpectralOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        let f = FairnessParams::default();
        Self {
            source: DataSource::Sbm(SbmParams::default()),
            method: GraphMethod::FairKnn,
            alpha: f.alpha,
            k: None,
            min_pts: f.min_pts,
            eps_rule: EpsRule::default(),
            knn_algo: KnnAlgo::default(),
            candidate_multiplier: f.candidate_multiplier,
            c: None,
            seed: 0,
            sigma: SigmaRule::MeanEdge,
            symmetrize: Symmetrize::Union,
            use_sbm_graph: false,
            strict_fairness: false,
            isolated: IsolatedPolicy::default(),
            spectral: SpectralOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha {} not in [0, 1]", self.alpha)));
        }
        if self.min_pts == 0 {
            return Err(Error::InvalidParameter("min_pts must be >= 1".into()));
        }
        if self.k == Some(0) {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        match self.eps_rule {
            EpsRule::Quantile { q } if !(q > 0.0 && q <= 1.0) => {
                return Err(Error::InvalidParameter(format!("eps quantile {q} not in (0, 1]")));
            }
            EpsRule::Fixed { value } if !(value > 0.0 && value.is_finite()) => {
                return Err(Error::InvalidParameter(format!("epsilon {value} must be > 0")));
            }
            _ => {}
        }
        if let SigmaRule::Fixed(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!("sigma {s} must be > 0")));
            }
        }
        if self.use_sbm_graph && !matches!(self.source, DataSource::Sbm(_)) {
            return Err(Error::InvalidParameter("--use-sbm-graph needs an SBM data source".into()));
        }
        if let DataSource::Sbm(p) = &self.source {
            p.validate()?;
        }
        Ok(())
    }

    /// SBM parameters when the source is synthetic.
    pub fn sbm_params(&self) -> Option<&SbmParams> {
        match &self.source {
            DataSource::Sbm(p) => Some(p),
            DataSource::Csv(_) => None,
        }
    }
}

/// Loaded dataset plus whatever its source produced alongside it.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: Dataset,
    pub sbm: Option<SbmInstance>,
    pub ingest: Option<IngestReport>,
}

pub fn load_dataset(cfg: &RunConfig) -> Result<LoadedData> {
    match &cfg.source {
        DataSource::Csv(spec) => {
            let (dataset, report) = load_csv(spec)?;
            Ok(LoadedData { dataset, sbm: None, ingest: Some(report) })
        }
        DataSource::Sbm(params) => {
            let inst = generate_instance(params)?;
            Ok(LoadedData { dataset: inst.to_dataset()?, sbm: Some(inst), ingest: None })
        }
    }
}

/// `ceil(sqrt(n))` unless overridden, capped at `n - 1`.
pub fn resolve_k(cfg: &RunConfig, n: usize) -> usize {
    let k = cfg.k.unwrap_or_else(|| (n as f64).sqrt().ceil() as usize);
    k.min(n.saturating_sub(1)).max(1)
}

fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

/// Epsilon for the configured rule. `k` is the resolved neighborhood size.
pub fn resolve_eps(cfg: &RunConfig, dataset: &Dataset, k: usize) -> Result<f64> {
    let eps = match cfg.eps_rule {
        EpsRule::Fixed { value } => value,
        EpsRule::LogRatio => {
            let n = dataset.len() as f64;
            (n.ln() / n).powi(dataset.dim() as i32)
        }
        EpsRule::Quantile { q } => {
            let lists = exact_knn(dataset, k)?;
            let mut kth: Vec<f64> = lists.iter().map(|l| l.entries.last().map_or(0.0, |e| e.dist)).collect();
            kth.sort_by(f64::total_cmp);
            nearest_rank(&kth, q)
        }
    };
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon rule produced {eps}; need > 0")));
    }
    Ok(eps)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphReport {
    pub method: String,
    pub n: usize,
    pub k: Option<usize>,
    pub eps: Option<f64>,
    pub alpha: f64,
    pub min_pts: usize,
    pub sigma: Option<f64>,
    pub edges: usize,
    pub isolated: usize,
    /// Fraction of nodes whose final neighborhood is fair at `alpha`.
    pub fairness_pass_rate: f64,
    /// Fraction of nodes without an infeasibility flag that are fair.
    pub unflagged_pass_rate: f64,
    pub infeasible_count: usize,
    pub initially_unfair: Option<usize>,
    pub entries_added: Option<usize>,
    /// Neighbor entries before fair augmentation (epsilon methods).
    pub raw_entries: Option<usize>,
    pub descent_sweeps: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct GraphOutput {
    pub graph: WeightedGraph,
    pub lists: Option<Vec<NeighborList>>,
    pub report: GraphReport,
}

fn fairness_rates(lists: &[NeighborList], groups: &[usize], alpha: f64) -> (f64, f64) {
    let fair: Vec<bool> = lists.iter().map(|l| is_fair(l, groups, groups[l.owner], alpha)).collect();
    let total = fair.iter().filter(|&&f| f).count() as f64 / lists.len().max(1) as f64;
    let unflagged: Vec<bool> = lists.iter().zip(&fair).filter(|(l, _)| !l.infeasible).map(|(_, &f)| f).collect();
    let rate = if unflagged.is_empty() {
        1.0
    } else {
        unflagged.iter().filter(|&&f| f).count() as f64 / unflagged.len() as f64
    };
    (total, rate)
}

/// Builds the configured graph on `data`.
pub fn build_graph(cfg: &RunConfig, data: &LoadedData) -> Result<GraphOutput> {
    cfg.validate()?;
    let ds = &data.dataset;
    let n = ds.len();
    if cfg.use_sbm_graph {
        let inst = data.sbm.as_ref().ok_or_else(|| Error::InvalidParameter("no SBM instance loaded".into()))?;
        let graph = inst.symmetrized_graph()?;
        let report = GraphReport {
            method: "sbm-adjacency".into(),
            n,
            k: None,
            eps: None,
            alpha: cfg.alpha,
            min_pts: cfg.min_pts,
            sigma: None,
            edges: graph.num_edges(),
            isolated: graph.isolated_nodes().len(),
            fairness_pass_rate: f64::NAN,
            unflagged_pass_rate: f64::NAN,
            infeasible_count: 0,
            initially_unfair: None,
            entries_added: None,
            raw_entries: None,
            descent_sweeps: None,
        };
        return Ok(GraphOutput { graph, lists: None, report });
    }
    if cfg.method.is_fair() {
        ds.require_groups()?;
    }
    let k = resolve_k(cfg, n);
    let mut eps = None;
    let mut initially_unfair = None;
    let mut entries_added = None;
    let mut raw_entries = None;
    let mut descent_sweeps = None;

    let lists = match cfg.method {
        GraphMethod::Knn | GraphMethod::FairKnn => {
            let alpha = if cfg.method == GraphMethod::FairKnn { cfg.alpha } else { 0.0 };
            match cfg.knn_algo {
                KnnAlgo::Descent => {
                    let out = fair_nn_descent(ds, k, alpha, cfg.seed)?;
                    descent_sweeps = Some(out.sweeps());
                    out.lists
                }
                KnnAlgo::Exact if alpha == 0.0 => exact_knn(ds, k)?,
                KnnAlgo::Exact => {
                    let params = FairnessParams { alpha, k, candidate_multiplier: cfg.candidate_multiplier, ..Default::default() };
                    fair_knn_exact(ds, k, alpha, params.k_prime())?
                }
            }
        }
        GraphMethod::Eps => {
            let e = resolve_eps(cfg, ds, k)?;
            eps = Some(e);
            build_eps_neighborhoods(ds, e)?
        }
        GraphMethod::FairEps => {
            let e = resolve_eps(cfg, ds, k)?;
            eps = Some(e);
            let (lists, rep) = fair_eps_neighborhoods(ds, e, cfg.min_pts, cfg.alpha)?;
            initially_unfair = Some(rep.initially_unfair);
            entries_added = Some(rep.entries_added);
            raw_entries = Some(lists.iter().map(NeighborList::len).sum::<usize>() - rep.entries_added);
            lists
        }
    };
    if cfg.method == GraphMethod::Eps {
        raw_entries = Some(lists.iter().map(NeighborList::len).sum());
    }
    let (graph, asm) = assemble_graph(&lists, cfg.sigma, cfg.symmetrize)?;
    let (fairness_pass_rate, unflagged_pass_rate) = fairness_rates(&lists, ds.groups(), cfg.alpha);
    let infeasible_count = lists.iter().filter(|l| l.infeasible).count();
    let report = GraphReport {
        method: serde_json::to_value(cfg.method)?.as_str().unwrap_or_default().to_string(),
        n,
        k: (!cfg.method.is_eps()).then_some(k),
        eps,
        alpha: cfg.alpha,
        min_pts: cfg.min_pts,
        sigma: Some(asm.sigma),
        edges: asm.edges,
        isolated: asm.isolated.len(),
        fairness_pass_rate,
        unflagged_pass_rate,
        infeasible_count,
        initially_unfair,
        entries_added,
        raw_entries,
        descent_sweeps,
    };
    if cfg.strict_fairness && cfg.method.is_fair() && infeasible_count > 0 {
        return Err(Error::Infeasible { count: infeasible_count });
    }
    Ok(GraphOutput { graph, lists: Some(lists), report })
}

/// Number of clusters: configured, else ground truth.
pub fn resolve_c(cfg: &RunConfig, dataset: &Dataset) -> Result<usize> {
    cfg.c
        .or_else(|| dataset.num_clusters())
        .ok_or_else(|| Error::InvalidParameter("number of clusters c is required without ground truth".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOutcome {
    pub result: ClusteringResult,
    /// Isolated nodes labeled after the fact by nearest clustered node.
    pub attached: Vec<usize>,
}

/// Spectral clustering of `graph`, handling isolated nodes per
/// `cfg.isolated`.
pub fn cluster_graph(cfg: &RunConfig, graph: &WeightedGraph, dataset: &Dataset, c: usize) -> Result<ClusterOutcome> {
    let n = graph.num_nodes();
    if dataset.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: dataset.len() });
    }
    let isolated = graph.isolated_nodes();
    if isolated.is_empty() || cfg.isolated == IsolatedPolicy::Error {
        let result = spectral_cluster(graph, c, cfg.seed, &cfg.spectral)?.0;
        return Ok(ClusterOutcome { result, attached: Vec::new() });
    }
    let kept: Vec<usize> = (0..n).filter(|i| isolated.binary_search(i).is_err()).collect();
    if kept.len() < c {
        return Err(Error::Numeric(format!("only {} connected node(s) for {c} clusters", kept.len())));
    }
    log::warn!("{} isolated node(s) excluded from the spectral step and attached to their nearest neighbor", isolated.len());
    let mut index = vec![usize::MAX; n];
    for (new, &old) in kept.iter().enumerate() {
        index[old] = new;
    }
    let sub = WeightedGraph::from_edges(kept.len(), graph.edges().iter().map(|&(i, j, w)| (index[i], index[j], w)))?;
    let mut result = spectral_cluster(&sub, c, cfg.seed, &cfg.spectral)?.0;
    let mut labels = vec![0; n];
    for (new, &old) in kept.iter().enumerate() {
        labels[old] = result.labels[new];
    }
    for &v in &isolated {
        let nearest = kept
            .iter()
            .map(|&u| (dataset.dist(v, u), u))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("kept is non-empty")
            .1;
        labels[v] = labels[nearest];
    }
    result.labels = canonical_labels(&labels);
    Ok(ClusterOutcome { result, attached: isolated })
}

/// Resolved values echoed into reports next to the configuration.
pub fn params_echo(
    cfg: &RunConfig,
    graph: Option<&GraphReport>,
    c: usize,
    attached: usize,
) -> Result<serde_json::Value> {
    Ok(serde_json::json!({
        "config": cfg,
        "resolved": {
            "c": c,
            "k": graph.and_then(|g| g.k),
            "eps": graph.and_then(|g| g.eps),
            "sigma": graph.and_then(|g| g.sigma),
            "isolated_attached": attached,
        }
    }))
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub data: LoadedData,
    pub graph: GraphOutput,
    pub clustering: ClusterOutcome,
    pub eval: EvalReport,
}

/// Load, build, cluster, evaluate.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let data = load_dataset(cfg)?;
    let graph = build_graph(cfg, &data)?;
    let c = resolve_c(cfg, &data.dataset)?;
    let outcome = cluster_graph(cfg, &graph.graph, &data.dataset, c)?;
    let eval = evaluate(
        &data.dataset,
        &outcome.result.labels,
        Some(&graph.graph),
        graph.report.infeasible_count,
        params_echo(cfg, Some(&graph.report), c, outcome.attached.len())?,
    )?;
    Ok(PipelineOutput { data, graph, clustering: outcome, eval })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Alpha,
    K,
    /// Fixed epsilon values.
    Eps,
    /// Quantile-rule `q` values.
    EpsQuantile,
}

impl SweepAxis {
    pub fn apply(self, base: &RunConfig, value: f64) -> Result<RunConfig> {
        let mut cfg = base.clone();
        match self {
            SweepAxis::Alpha => cfg.alpha = value,
            SweepAxis::K => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::InvalidParameter(format!("k value {value} is not a positive integer")));
                }
                cfg.k = Some(value as usize);
            }
            SweepAxis::Eps => cfg.eps_rule = EpsRule::Fixed { value },
            SweepAxis::EpsQuantile => cfg.eps_rule = EpsRule::Quantile { q: value },
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub status: String,
    pub balance: Option<f64>,
    pub ncut_sum: Option<f64>,
    pub ncut_normalized: Option<f64>,
    pub silhouette: Option<f64>,
    pub ce: Option<f64>,
    pub infeasible_count: Option<usize>,
    pub edges: Option<usize>,
    /// Entries of the plain epsilon neighborhoods (epsilon methods only).
    pub raw_entries: Option<usize>,
    pub error: Option<String>,
}

fn sweep_point(base: &RunConfig, data: &LoadedData, axis: SweepAxis, value: f64) -> Result<SweepRow> {
    let cfg = axis.apply(base, value)?;
    let graph = build_graph(&cfg, data)?;
    let c = resolve_c(&cfg, &data.dataset)?;
    let outcome = cluster_graph(&cfg, &graph.graph, &data.dataset, c)?;
    let eval = evaluate(&data.dataset, &outcome.result.labels, Some(&graph.graph), graph.report.infeasible_count, serde_json::Value::Null)?;
    Ok(SweepRow {
        value,
        status: "ok".into(),
        balance: Some(eval.balance),
        ncut_sum: eval.ncut_sum,
        ncut_normalized: eval.ncut_normalized,
        silhouette: eval.silhouette,
        ce: eval.ce,
        infeasible_count: Some(eval.infeasible_count),
        edges: Some(graph.report.edges),
        raw_entries: graph.report.raw_entries,
        error: None,
    })
}

/// One full run per value on a single loaded dataset. Points run in
/// parallel; rows come back sorted by value. A failing point yields a row
/// with status `failed` instead of aborting the sweep.
pub fn run_sweep(base: &RunConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    base.validate()?;
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let data = load_dataset(base)?;
    run_sweep_on(base, &data, axis, values)
}

/// [`run_sweep`] on already loaded data.
pub fn run_sweep_on(base: &RunConfig, data: &LoadedData, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    let mut rows: Vec<SweepRow> = values
        .par_iter()
        .map(|&v| {
            sweep_point(base, data, axis, v).unwrap_or_else(|e| {
                log::warn!("sweep point {v} failed: {e}");
                SweepRow {
                    value: v,
                    status: "failed".into(),
                    balance: None,
                    ncut_sum: None,
                    ncut_normalized: None,
                    silhouette: None,
                    ce: None,
                    infeasible_count: None,
                    edges: None,
                    raw_entries: None,
                    error: Some(e.to_string()),
                }
            })
        })
        .collect();
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(rows)
}

pub const SWEEP_HEADER: [&str; 11] = [
    "value",
    "status",
    "balance",
    "ncut_sum",
    "ncut_normalized",
    "silhouette",
    "ce",
    "infeasible_count",
    "edges",
    "raw_entries",
    "error",
];

/// Plot-ready CSV; empty cells for missing values.
pub fn sweep_csv(rows: &[SweepRow], comments: &[String]) -> Result<String> {
    let mut out = String::new();
    for c in comments {
        out.push_str(&format!("# {c}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.value.to_string(),
            r.status.clone(),
            opt(r.balance),
            opt(r.ncut_sum),
            opt(r.ncut_normalized),
            opt(r.silhouette),
            opt(r.ce),
            r.infeasible_count.map(|x| x.to_string()).unwrap_or_default(),
            r.edges.map(|x| x.to_string()).unwrap_or_default(),
            r.raw_entries.map(|x| x.to_string()).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is UTF-8"));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_sbm(seed: u64) -> RunConfig {
        RunConfig {
            source: DataSource::Sbm(SbmParams { n: 120, d: 10, seed, ..Default::default() }),
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn default_k_is_ceil_sqrt_n() {
        let cfg = RunConfig::default();
        assert_eq!(resolve_k(&cfg, 1000), 32);
        assert_eq!(resolve_k(&cfg, 100), 10);
        assert_eq!(resolve_k(&RunConfig { k: Some(50), ..cfg }, 20), 19);
    }

    #[test]
    fn nearest_rank_quantile() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(nearest_rank(&v, 0.05), 1.0);
        assert_eq!(nearest_rank(&v, 0.5), 2.0);
        assert_eq!(nearest_rank(&v, 1.0), 4.0);
    }

    #[test]
    fn log_ratio_eps_rule() {
        let ds = Dataset::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]], vec![0, 1, 0, 1], None).unwrap();
        let cfg = RunConfig { eps_rule: EpsRule::LogRatio, ..Default::default() };
        let expect = (4f64.ln() / 4.0).powi(2);
        assert_eq!(resolve_eps(&cfg, &ds, 2).unwrap(), expect);
    }

    #[test]
    fn every_method_runs_and_fair_ones_are_fair() {
        for method in [GraphMethod::Knn, GraphMethod::Eps, GraphMethod::FairKnn, GraphMethod::FairEps] {
            for algo in [KnnAlgo::Descent, KnnAlgo::Exact] {
                let cfg = RunConfig { method, knn_algo: algo, eps_rule: EpsRule::Quantile { q: 0.5 }, ..small_sbm(1) };
                let out = run_pipeline(&cfg).unwrap();
                assert_eq!(out.clustering.result.labels.len(), 120);
                if method.is_fair() {
                    assert_eq!(out.graph.report.unflagged_pass_rate, 1.0, "{method:?}");
                }
                let e = &out.eval;
                assert!((0.0..=1.0).contains(&e.balance));
                assert_eq!(e.ce.unwrap() + e.acc.unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn isolated_nodes_attach_or_fail() {
        let ds = Dataset::from_rows(
            &[vec![0.0], vec![0.1], vec![5.0], vec![5.1], vec![4.0]],
            vec![0, 1, 0, 1, 0],
            None,
        )
        .unwrap();
        let g = WeightedGraph::from_edges(5, [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let cfg = RunConfig::default();
        let out = cluster_graph(&cfg, &g, &ds, 2).unwrap();
        assert_eq!(out.attached, vec![4]);
        assert_eq!(out.result.labels, vec![0, 0, 1, 1, 1]);
        let strict = RunConfig { isolated: IsolatedPolicy::Error, ..cfg };
        assert!(matches!(cluster_graph(&strict, &g, &ds, 2), Err(Error::ZeroDegree { node: 4 })));
    }

    #[test]
    fn sbm_graph_mode() {
        let cfg = RunConfig { use_sbm_graph: true, ..small_sbm(2) };
        let out = run_pipeline(&cfg).unwrap();
        assert_eq!(out.graph.report.method, "sbm-adjacency");
        let csv_cfg = RunConfig { source: DataSource::Csv(IngestSpec::default()), use_sbm_graph: true, ..Default::default() };
        assert!(csv_cfg.validate().is_err());
    }

    #[test]
    fn strong_sbm_graph_is_recovered() {
        let params = SbmParams { n: 200, p: 0.9, q: 0.05, r: 0.8, s: 0.02, d: 5, seed: 3, ..Default::default() };
        let cfg = RunConfig { source: DataSource::Sbm(params), use_sbm_graph: true, ..Default::default() };
        let out = run_pipeline(&cfg).unwrap();
        assert!(out.eval.ce.unwrap() < 0.1);
    }

    #[test]
    fn strict_fairness_reports_infeasibility() {
        // One node of group 1 among many of group 0: group-0 nodes cannot
        // find enough different-group neighbors.
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64]).collect();
        let mut groups = vec![0; 12];
        groups[5] = 1;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let mut text = String::from("x,g\n");
        for (r, g) in rows.iter().zip(&groups) {
            text.push_str(&format!("{},{}\n", r[0], g));
        }
        std::fs::write(&path, text).unwrap();
        let spec = IngestSpec { path, sensitive_column: "g".into(), ..Default::default() };
        let cfg = RunConfig {
            source: DataSource::Csv(spec),
            k: Some(4),
            c: Some(2),
            knn_algo: KnnAlgo::Exact,
            strict_fairness: true,
            ..Default::default()
        };
        let data = load_dataset(&cfg).unwrap();
        let err = build_graph(&cfg, &data).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
        assert_eq!(err.exit_code(), 3);
        let lenient = RunConfig { strict_fairness: false, ..cfg };
        assert!(build_graph(&lenient, &data).unwrap().report.infeasible_count > 0);
    }

    #[test]
    fn sweep_rows_sorted_and_failures_marked() {
        let cfg = small_sbm(4);
        let rows = run_sweep(&cfg, SweepAxis::Alpha, &[1.0, 0.2, 7.0, 0.6]).unwrap();
        let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
        assert_eq!(values, vec![0.2, 0.6, 1.0, 7.0]);
        assert_eq!(rows[3].status, "failed");
        assert!(rows[..3].iter().all(|r| r.status == "ok"));
        let csv = sweep_csv(&rows, &[]).unwrap();
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let rows = run_sweep(&small_sbm(0), SweepAxis::K, &[]).unwrap();
        assert!(rows.is_empty());
        assert_eq!(sweep_csv(&rows, &[]).unwrap(), SWEEP_HEADER.join(",") + "\n");
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = RunConfig { method: GraphMethod::FairEps, eps_rule: EpsRule::Fixed { value: 0.3 }, sigma: SigmaRule::Fixed(2.0), ..small_sbm(9) };
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), cfg);
    }
}
