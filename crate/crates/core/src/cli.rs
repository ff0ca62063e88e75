//! Command-line front end. Each subcommand writes its artifacts under
//! `<out>/<run-id>/` next to a `manifest.json`; the run id is a hash of the
//! subcommand and its full configuration, so identical invocations land in
//! the same directory with byte-identical files.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{SigmaRule, Symmetrize, WeightedGraph};
use crate::ingest::{CategoricalPolicy, GroupRule, IngestSpec, Scaling};
use crate::io::{read_graph, read_labels, read_neighbor_lists, write_graph, write_labels, write_neighbor_lists, write_sbm_instance};
use crate::metrics::evaluate;
use crate::pipeline::{
    build_graph, cluster_graph, load_dataset, params_echo, resolve_c, run_pipeline, run_sweep, sweep_csv, DataSource,
    EpsRule, GraphMethod, GraphOutput, IsolatedPolicy, KnnAlgo, RunConfig, SweepAxis,
};
use crate::spectral::{EigenSolver, EmbeddingKind, KMeansOptions, SpectralOptions};
use crate::synth::{generate_instance, SbmParams};

#[derive(Debug, Parser)]
#[command(name = "fairgraph", version, about = "Fair neighborhood graphs and spectral clustering")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an SBM instance (features, nodes, adjacency, params).
    Sbm(SbmCmd),
    /// Build a neighborhood graph.
    Graph(RunArgs),
    /// Cluster a graph (built from the configuration, or read with --graph).
    Cluster(ClusterCmd),
    /// Score a label file.
    Eval(EvalCmd),
    /// Run the full pipeline once per value of one parameter.
    Sweep(SweepCmd),
    /// Build, cluster and evaluate in one go.
    Pipeline(RunArgs),
}

fn kebab<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn pair(s: &str) -> std::result::Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or("expected LO,HI")?;
    Ok([a.trim().parse().map_err(|_| "bad LO")?, b.trim().parse().map_err(|_| "bad HI")?])
}

#[derive(Debug, Clone, Args)]
pub struct SbmArgs {
    /// SBM node count.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// SBM cluster count.
    #[arg(long = "sbm-clusters", default_value_t = 4)]
    pub sbm_clusters: usize,
    /// SBM sensitive group count.
    #[arg(long = "groups", default_value_t = 2)]
    pub h: usize,
    /// Edge probability: same cluster, same group.
    #[arg(long, default_value_t = 0.4)]
    pub p: f64,
    /// Edge probability: different clusters, same group.
    #[arg(long, default_value_t = 0.3)]
    pub q: f64,
    /// Edge probability: same cluster, different groups.
    #[arg(long, default_value_t = 0.2)]
    pub r: f64,
    /// Edge probability: different clusters, different groups.
    #[arg(long, default_value_t = 0.1)]
    pub s: f64,
    /// Feature dimension.
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    /// Diagonal noise range LO,HI.
    #[arg(long, value_parser = pair, default_value = "0,0.2")]
    pub noise: [f64; 2],
    /// Edge weight range LO,HI.
    #[arg(long = "weight-range", value_parser = pair, default_value = "0.1,2")]
    pub weight_range: [f64; 2],
    /// Seed for the SBM draw (defaults to --seed).
    #[arg(long = "data-seed")]
    pub data_seed: Option<u64>,
}

impl SbmArgs {
    fn params(&self, seed: u64) -> SbmParams {
        SbmParams {
            n: self.n,
            c: self.sbm_clusters,
            h: self.h,
            p: self.p,
            q: self.q,
            r: self.r,
            s: self.s,
            weight_range: self.weight_range,
            noise_range: self.noise,
            d: self.dim,
            seed: self.data_seed.unwrap_or(seed),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CsvArgs {
    /// Input CSV; selects CSV mode instead of SBM.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Ingest specification as JSON; selects CSV mode.
    #[arg(long = "ingest-spec", conflicts_with = "csv")]
    pub ingest_spec: Option<PathBuf>,
    /// Sensitive attribute column.
    #[arg(long)]
    pub sensitive: Option<String>,
    /// Ground-truth label column.
    #[arg(long)]
    pub label: Option<String>,
    /// Comma-separated feature columns (default: all others).
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
    /// Comma-separated columns to leave out of the features.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<String>,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// one-hot | reject
    #[arg(long, value_parser = kebab::<CategoricalPolicy>, default_value = "one-hot")]
    pub categorical: CategoricalPolicy,
    /// zscore | none
    #[arg(long, value_parser = kebab::<Scaling>, default_value = "zscore")]
    pub scaling: Scaling,
    /// Keep only these sensitive values (comma-separated); drop other rows.
    #[arg(long = "keep-groups", value_delimiter = ',')]
    pub keep_groups: Option<Vec<String>>,
    /// Numeric sensitive column: values >= T form group 1.
    #[arg(long = "group-threshold", conflicts_with = "keep_groups")]
    pub group_threshold: Option<f64>,
}

impl CsvArgs {
    fn spec(&self) -> Result<Option<IngestSpec>> {
        if let Some(path) = &self.ingest_spec {
            return IngestSpec::from_json_file(path).map(Some);
        }
        let Some(path) = &self.csv else { return Ok(None) };
        let sensitive = self
            .sensitive
            .clone()
            .ok_or_else(|| Error::InvalidParameter("--csv needs --sensitive".into()))?;
        let group_rule = match (&self.keep_groups, self.group_threshold) {
            (Some(values), _) => GroupRule::Keep { values: values.clone() },
            (None, Some(at)) => GroupRule::Threshold { at },
            (None, None) => GroupRule::Distinct,
        };
        Ok(Some(IngestSpec {
            path: path.clone(),
            delimiter: self.delimiter,
            feature_columns: self.features.clone(),
            exclude: self.exclude.clone(),
            sensitive_column: sensitive,
            label_column: self.label.clone(),
            categorical: self.categorical,
            scaling: self.scaling,
            group_rule,
        }))
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Run configuration JSON (or a manifest.json). Replaces all other
    /// configuration flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub csv: CsvArgs,
    #[command(flatten)]
    pub sbm: SbmArgs,
    /// knn | eps | fair-knn | fair-eps
    #[arg(long, value_parser = kebab::<GraphMethod>, default_value = "fair-knn")]
    pub method: GraphMethod,
    /// Neighbors per node (default ceil(sqrt(n))).
    #[arg(short, long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0.8)]
    pub alpha: f64,
    #[arg(long = "min-pts", default_value_t = 3)]
    pub min_pts: usize,
    /// log-ratio | quantile | fixed
    #[arg(long = "eps-rule", default_value = "quantile")]
    pub eps_rule: String,
    #[arg(long = "eps-quantile", default_value_t = 0.05)]
    pub eps_quantile: f64,
    /// Epsilon value; implies --eps-rule fixed.
    #[arg(long)]
    pub eps: Option<f64>,
    /// descent | exact
    #[arg(long = "knn-algo", value_parser = kebab::<KnnAlgo>, default_value = "descent")]
    pub knn_algo: KnnAlgo,
    #[arg(long = "candidate-multiplier", default_value_t = 3.0)]
    pub candidate_multiplier: f64,
    /// Fixed Gaussian bandwidth (default: mean retained edge distance).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Keep only mutual neighbor edges.
    #[arg(long)]
    pub mutual: bool,
    /// Cluster the generated SBM adjacency directly.
    #[arg(long = "use-sbm-graph")]
    pub use_sbm_graph: bool,
    /// Fail (exit 3) if any fair neighborhood is infeasible.
    #[arg(long = "strict-fairness")]
    pub strict_fairness: bool,
    /// attach-nearest | error
    #[arg(long, value_parser = kebab::<IsolatedPolicy>, default_value = "attach-nearest")]
    pub isolated: IsolatedPolicy,
    /// Number of clusters (default: ground-truth count).
    #[arg(short)]
    pub c: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// njw | random-walk
    #[arg(long, value_parser = kebab::<EmbeddingKind>, default_value = "njw")]
    pub embedding: EmbeddingKind,
    /// auto | dense | krylov
    #[arg(long, value_parser = kebab::<EigenSolver>, default_value = "auto")]
    pub solver: EigenSolver,
    #[arg(long = "n-init", default_value_t = 10)]
    pub n_init: usize,
    #[arg(long = "max-iter", default_value_t = 300)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Output root directory.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

impl RunArgs {
    pub fn to_config(&self) -> Result<RunConfig> {
        if let Some(path) = &self.config {
            return load_config_file(path);
        }
        let source = match self.csv.spec()? {
            Some(spec) => DataSource::Csv(spec),
            None => DataSource::Sbm(self.sbm.params(self.seed)),
        };
        let eps_rule = match (self.eps, self.eps_rule.as_str()) {
            (Some(value), _) => EpsRule::Fixed { value },
            (None, "fixed") => return Err(Error::InvalidParameter("--eps-rule fixed needs --eps".into())),
            (None, "log-ratio") => EpsRule::LogRatio,
            (None, "quantile") => EpsRule::Quantile { q: self.eps_quantile },
            (None, other) => return Err(Error::InvalidParameter(format!("unknown eps rule `{other}`"))),
        };
        let cfg = RunConfig {
            source,
            method: self.method,
            alpha: self.alpha,
            k: self.k,
            min_pts: self.min_pts,
            eps_rule,
            knn_algo: self.knn_algo,
            candidate_multiplier: self.candidate_multiplier,
            c: self.c,
            seed: self.seed,
            sigma: self.sigma.map_or(SigmaRule::MeanEdge, SigmaRule::Fixed),
            symmetrize: if self.mutual { Symmetrize::Mutual } else { Symmetrize::Union },
            use_sbm_graph: self.use_sbm_graph,
            strict_fairness: self.strict_fairness,
            isolated: self.isolated,
            spectral: SpectralOptions {
                embedding: self.embedding,
                solver: self.solver,
                kmeans: KMeansOptions { n_init: self.n_init, max_iter: self.max_iter, tol: self.tol },
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Reads a `RunConfig`, either bare or as the `config` field of a manifest.
pub fn load_config_file(path: &Path) -> Result<RunConfig> {
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let inner = match value.get("config") {
        Some(c) if value.get("run_id").is_some() => c.clone(),
        _ => value,
    };
    let cfg: RunConfig = serde_json::from_value(inner)?;
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, Args)]
pub struct SbmCmd {
    #[command(flatten)]
    pub sbm: SbmArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterCmd {
    #[command(flatten)]
    pub run: RunArgs,
    /// Graph TSV to cluster instead of building one.
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalCmd {
    #[command(flatten)]
    pub run: RunArgs,
    /// Labels CSV (`id,label`) to score.
    #[arg(long)]
    pub labels: PathBuf,
    /// Graph TSV for NCut (default: build from the configuration).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Neighbor TSV whose flags give the infeasible count.
    #[arg(long)]
    pub neighbors: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepCmd {
    #[command(flatten)]
    pub run: RunArgs,
    /// alpha | k | eps | eps-quantile
    #[arg(long, value_parser = kebab::<SweepAxis>)]
    pub axis: SweepAxis,
    /// Comma-separated values; may be empty.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub values: Vec<String>,
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Output directory of one invocation plus the reproducibility header
/// shared by its files.
pub struct RunDir {
    pub id: String,
    pub path: PathBuf,
    pub header: Vec<String>,
}

impl RunDir {
    /// Creates `<out>/<run-id>/` and writes `manifest.json`.
    pub fn create<C: Serialize>(out: &Path, subcommand: &str, config: &C, extra: serde_json::Value, seed: u64) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        let key = serde_json::json!({ "subcommand": subcommand, "config": config, "extra": extra });
        let id = format!("{:016x}", fnv1a(serde_json::to_string(&key)?.as_bytes()));
        let path = out.join(&id);
        std::fs::create_dir_all(&path)?;
        let manifest = serde_json::json!({
            "run_id": id,
            "subcommand": subcommand,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "config": config,
            "extra": extra,
        });
        write_json(&path.join("manifest.json"), &manifest)?;
        let header = vec![
            format!("run-id={id}"),
            format!("seed={seed}"),
            format!("config={}", serde_json::to_string(&config)?),
        ];
        Ok(Self { id, path, header })
    }

    fn file(&self, name: &str) -> Result<std::io::BufWriter<std::fs::File>> {
        Ok(std::io::BufWriter::new(std::fs::File::create(self.path.join(name))?))
    }

    fn json<T: Serialize>(&self, name: &str, body: &T) -> Result<()> {
        let value = serde_json::json!({ "run_id": self.id, "report": body });
        write_json(&self.path.join(name), &value)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn write_graph_artifacts(dir: &RunDir, out: &GraphOutput, cfg: &RunConfig) -> Result<()> {
    if let Some(lists) = &out.lists {
        write_neighbor_lists(dir.file("neighbors.tsv")?, lists, cfg.method.is_eps(), &dir.header)?;
    }
    write_graph(dir.file("graph.tsv")?, &out.graph, &dir.header)?;
    dir.json("graph_report.json", &out.report)
}

fn cmd_sbm(cmd: &SbmCmd) -> Result<PathBuf> {
    let params = cmd.sbm.params(cmd.seed);
    let dir = RunDir::create(&cmd.out, "sbm", &params, serde_json::Value::Null, params.seed)?;
    let inst = generate_instance(&params)?;
    write_sbm_instance(&dir.path, &inst, &dir.header)?;
    Ok(dir.path)
}

fn cmd_graph(args: &RunArgs) -> Result<PathBuf> {
    let cfg = args.to_config()?;
    let dir = RunDir::create(&args.out, "graph", &cfg, serde_json::Value::Null, cfg.seed)?;
    let data = load_dataset(&cfg)?;
    if let Some(rep) = &data.ingest {
        dir.json("ingest_report.json", rep)?;
    }
    let out = build_graph(&cfg, &data)?;
    write_graph_artifacts(&dir, &out, &cfg)?;
    Ok(dir.path)
}

fn cmd_cluster(cmd: &ClusterCmd) -> Result<PathBuf> {
    let cfg = cmd.run.to_config()?;
    let graph_bytes = cmd.graph.as_ref().map(std::fs::read).transpose()?;
    let extra = serde_json::json!({ "graph_fnv": graph_bytes.as_ref().map(|b| format!("{:016x}", fnv1a(b))) });
    let dir = RunDir::create(&cmd.run.out, "cluster", &cfg, extra, cfg.seed)?;
    let data = load_dataset(&cfg)?;
    let graph: WeightedGraph = match &graph_bytes {
        Some(bytes) => read_graph(bytes.as_slice())?,
        None => build_graph(&cfg, &data)?.graph,
    };
    let c = resolve_c(&cfg, &data.dataset)?;
    let outcome = cluster_graph(&cfg, &graph, &data.dataset, c)?;
    write_labels(dir.file("labels.csv")?, &outcome.result.labels, &dir.header)?;
    dir.json("clustering.json", &serde_json::json!({ "result": outcome.result, "isolated_attached": outcome.attached }))?;
    Ok(dir.path)
}

fn cmd_eval(cmd: &EvalCmd) -> Result<PathBuf> {
    let cfg = cmd.run.to_config()?;
    let label_bytes = std::fs::read(&cmd.labels)?;
    let graph_bytes = cmd.graph.as_ref().map(std::fs::read).transpose()?;
    let neighbor_bytes = cmd.neighbors.as_ref().map(std::fs::read).transpose()?;
    let hash = |b: &Option<Vec<u8>>| b.as_ref().map(|b| format!("{:016x}", fnv1a(b)));
    let extra = serde_json::json!({
        "labels_fnv": format!("{:016x}", fnv1a(&label_bytes)),
        "graph_fnv": hash(&graph_bytes),
        "neighbors_fnv": hash(&neighbor_bytes),
    });
    let dir = RunDir::create(&cmd.run.out, "eval", &cfg, extra, cfg.seed)?;
    let data = load_dataset(&cfg)?;
    let labels = read_labels(label_bytes.as_slice())?;
    let (graph, report) = match &graph_bytes {
        Some(bytes) => (read_graph(bytes.as_slice())?, None),
        None => {
            let out = build_graph(&cfg, &data)?;
            (out.graph, Some(out.report))
        }
    };
    let infeasible = match &neighbor_bytes {
        Some(bytes) => read_neighbor_lists(bytes.as_slice())?.iter().filter(|l| l.infeasible).count(),
        None => report.as_ref().map_or(0, |r| r.infeasible_count),
    };
    let c = labels.iter().max().map_or(0, |m| m + 1);
    let eval = evaluate(&data.dataset, &labels, Some(&graph), infeasible, params_echo(&cfg, report.as_ref(), c, 0)?)?;
    dir.json("eval.json", &eval)?;
    Ok(dir.path)
}

fn cmd_sweep(cmd: &SweepCmd) -> Result<PathBuf> {
    let cfg = cmd.run.to_config()?;
    let values: Vec<f64> = cmd
        .values
        .iter()
        .filter(|v| !v.trim().is_empty())
        .map(|v| v.trim().parse().map_err(|_| Error::InvalidParameter(format!("bad sweep value `{v}`"))))
        .collect::<Result<_>>()?;
    let extra = serde_json::json!({ "axis": cmd.axis, "values": values });
    let dir = RunDir::create(&cmd.run.out, "sweep", &cfg, extra, cfg.seed)?;
    let rows = run_sweep(&cfg, cmd.axis, &values)?;
    std::fs::write(dir.path.join("sweep.csv"), sweep_csv(&rows, &dir.header)?)?;
    Ok(dir.path)
}

fn cmd_pipeline(args: &RunArgs) -> Result<PathBuf> {
    let cfg = args.to_config()?;
    let dir = RunDir::create(&args.out, "pipeline", &cfg, serde_json::Value::Null, cfg.seed)?;
    let out = run_pipeline(&cfg)?;
    if let Some(rep) = &out.data.ingest {
        dir.json("ingest_report.json", rep)?;
    }
    write_graph_artifacts(&dir, &out.graph, &cfg)?;
    write_labels(dir.file("labels.csv")?, &out.clustering.result.labels, &dir.header)?;
    dir.json(
        "clustering.json",
        &serde_json::json!({ "result": out.clustering.result, "isolated_attached": out.clustering.attached }),
    )?;
    dir.json("eval.json", &out.eval)?;
    Ok(dir.path)
}

/// Runs one parsed invocation and returns its output directory.
pub fn run(cli: &Cli) -> Result<PathBuf> {
    match &cli.command {
        Command::Sbm(c) => cmd_sbm(c),
        Command::Graph(a) => cmd_graph(a),
        Command::Cluster(c) => cmd_cluster(c),
        Command::Eval(c) => cmd_eval(c),
        Command::Sweep(c) => cmd_sweep(c),
        Command::Pipeline(a) => cmd_pipeline(a),
    }
}
