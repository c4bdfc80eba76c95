//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pqsq::approximators::{IntervalPolicy, PcaOptions};
use pqsq::datagen::{
    gen_outlier_benchmark, gen_sparse_regression, gen_two_cluster, seeded_rng, BimodalConfig, OutlierBenchConfig,
    SparseRegressionConfig,
};
use pqsq::elastic_graph::{fit_elastic_graph, ElasticGraph, GraphFitOptions, PartitionMetric};
use pqsq::regression::{
    black_hole_radius, fit_pqsq_regression, lambda_path, penalty_spec, Penalty, RegressionOptions,
};
use pqsq::{
    fit_pca, pqsq_kmeans, pqsq_mean, DataMatrix, DistanceMode, IntervalConfig, KMeansOptions, Majorant, MeanOptions,
    PotentialSpec,
};
use serde_json::json;

use crate::bench::{self, BimodalBench, BimodalDim, OutlierBench, RegressBench};
use crate::error::{CliError, CliResult};
use crate::io::{self, ColumnRef, CsvTable, Table};

#[derive(Debug, Parser)]
#[command(name = "pqsq", version, about = "Robust data approximation with piece-wise quadratic potentials")]
pub struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, env = "PQSQ_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Worker threads for benchmark replicates, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// PQSQ mean of the selected columns.
    Mean {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        potential: PotentialArgs,
        #[command(flatten)]
        output: OutputArg,
    },
    /// PQSQ k-means clustering.
    Kmeans {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        potential: PotentialArgs,
        #[command(flatten)]
        output: OutputArg,
        #[arg(long, short)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
    },
    /// PQSQ principal components by deflation.
    Pca {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        potential: PotentialArgs,
        #[command(flatten)]
        output: OutputArg,
        #[arg(long, default_value_t = 1)]
        components: usize,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        /// Keep the first component's thresholds instead of placing them
        /// again on the residuals.
        #[arg(long)]
        no_recompute: bool,
        /// Leave the point projections out of the model file.
        #[arg(long)]
        no_projections: bool,
    },
    /// Elastic principal graph.
    Graph {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        potential: PotentialArgs,
        #[command(flatten)]
        output: OutputArg,
        #[arg(long, default_value_t = 10)]
        nodes: usize,
        /// Edge stretching modulus.
        #[arg(long, default_value_t = 0.01)]
        lambda: f64,
        /// Star bending modulus.
        #[arg(long, default_value_t = 0.1)]
        mu: f64,
        #[arg(long, value_enum, default_value_t = Topology::Chain)]
        topology: Topology,
        #[arg(long, value_enum, default_value_t = Metric::L2)]
        metric: Metric,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
    },
    /// Regularized regression at one lambda.
    Regress {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        reg: RegressionArgs,
        #[command(flatten)]
        output: OutputArg,
        #[arg(long)]
        lambda: f64,
        /// Black hole radius: `auto`, `none` or a number.
        #[arg(long, default_value = "auto")]
        black_hole: String,
    },
    /// Lambda path with black hole sparsification, as lambda/nonzeros/fvu CSV.
    RegressPath {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        reg: RegressionArgs,
        #[command(flatten)]
        output: OutputArg,
        #[arg(long, default_value_t = 30)]
        lambdas: usize,
        /// Also write every model on the path as JSON.
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Generate a synthetic dataset as CSV.
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        #[command(flatten)]
        output: OutputArg,
        /// Contaminating points for the cluster datasets.
        #[arg(long, default_value_t = 20)]
        noise_points: usize,
        #[command(flatten)]
        outlier: OutlierArgs,
    },
    /// Two clusters contaminated by sparse noise, PQSQ L1 against L2 PCA.
    BenchBimodal {
        #[command(flatten)]
        output: OutputArg,
        /// 2 scores the first component's abscissa, 100 the cluster t-statistic.
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Contamination levels; defaults to 0,10,20,30,60 in 2-D and 40 in 100-D.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
        /// Replicates per level; defaults to 100 in 2-D and 50 in 100-D.
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
    },
    /// Planted five-dimensional manifold with outliers, sigma per method.
    BenchOutlier {
        #[command(flatten)]
        output: OutputArg,
        #[command(flatten)]
        outlier: OutlierArgs,
        #[arg(long, default_value_t = 50)]
        sets: usize,
        #[arg(long, default_value_t = 5)]
        intervals: usize,
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        /// Sweep mu in {1,5,10,25} and p in {1,2,3}, `--sets` each.
        #[arg(long)]
        full: bool,
        /// Print NA instead of the runtime ratio so reruns are byte-identical.
        #[arg(long)]
        no_timing: bool,
    },
    /// Sparse synthetic regression, minimum FVU per support size on the path.
    BenchRegress {
        #[command(flatten)]
        output: OutputArg,
        #[arg(long, default_value_t = 10)]
        replicates: usize,
        #[arg(long, default_value_t = 30)]
        lambdas: usize,
        #[arg(long, default_value = "l1", value_parser = parse_penalty)]
        penalty: Penalty,
        #[arg(long, default_value_t = pqsq::regression::DEFAULT_PENALTY_INTERVALS)]
        intervals: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Columns to use, by header name or zero-based index; all by default.
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
}

impl InputArgs {
    fn columns(&self) -> Vec<ColumnRef> {
        self.columns.iter().map(|c| ColumnRef::parse(c)).collect()
    }

    fn table(&self) -> CliResult<CsvTable> {
        let t = io::read_csv(&self.input)?;
        if t.dropped() > 0 {
            eprintln!("warning: {} rows dropped", t.dropped());
        }
        Ok(t)
    }

    fn matrix(&self) -> CliResult<DataMatrix> {
        self.table()?.matrix(&self.columns())
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArg {
    /// Output file, written atomically; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

impl OutputArg {
    fn path(&self) -> Option<&Path> {
        self.output.as_deref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Distance {
    Amplitude,
    Mad,
}

#[derive(Debug, Clone, Args)]
pub struct PotentialArgs {
    /// Error function: l1, l2, log1p, power:Q or mixture:ALPHA.
    #[arg(long, default_value = "l1", value_parser = parse_majorant)]
    pub majorant: Majorant,
    /// Number of intervals p.
    #[arg(long, default_value_t = 5)]
    pub intervals: usize,
    /// Scale applied to the characteristic distance; below 1 (amplitude) or
    /// 10 (MAD) the potential is trimmed.
    #[arg(long = "scale", default_value_t = 1.0)]
    pub alpha_scale: f64,
    #[arg(long, value_enum, default_value_t = Distance::Amplitude)]
    pub distance: Distance,
    /// Explicit thresholds shared by every coordinate, starting at 0.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    /// Override the recorded trimming flag.
    #[arg(long)]
    pub trimmed: Option<bool>,
}

impl PotentialArgs {
    pub fn interval_config(&self) -> IntervalConfig {
        match &self.thresholds {
            Some(r) => IntervalConfig::explicit(r.clone()),
            None => IntervalConfig {
                count: self.intervals,
                scale: self.alpha_scale,
                mode: match self.distance {
                    Distance::Amplitude => DistanceMode::Amplitude,
                    Distance::Mad => DistanceMode::Mad,
                },
                explicit: None,
            },
        }
    }

    pub fn spec(&self, data: &DataMatrix) -> CliResult<PotentialSpec> {
        let spec = PotentialSpec::from_columns(self.majorant, &data.columns(), &self.interval_config())?;
        Ok(match self.trimmed {
            Some(t) => spec.with_trimmed(t),
            None => spec,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct RegressionArgs {
    /// Response column, by header name or zero-based index.
    #[arg(long)]
    pub response: String,
    /// Penalty: l1 or elasticnet:ALPHA.
    #[arg(long, default_value = "l1", value_parser = parse_penalty)]
    pub penalty: Penalty,
    /// Penalty intervals.
    #[arg(long, default_value_t = pqsq::regression::DEFAULT_PENALTY_INTERVALS)]
    pub intervals: usize,
    /// Fit on the raw predictor scale.
    #[arg(long)]
    pub no_standardize: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutlierArgs {
    /// Outlier mean.
    #[arg(long, default_value_t = 10.0)]
    pub mu: f64,
    /// Outlier dimensions.
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    /// Outlier frequency.
    #[arg(long, default_value_t = 0.1)]
    pub phi: f64,
}

impl OutlierArgs {
    fn config(&self) -> OutlierBenchConfig {
        OutlierBenchConfig::new(self.mu, self.p, self.phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Topology {
    Chain,
    Star,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    L2,
    Pqsq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    /// Two clusters in the plane with Laplace noise.
    Bimodal,
    /// The 100-dimensional two-cluster variant.
    BimodalHd,
    /// Planted manifold with outliers.
    Outlier,
    /// Sparse linear model, predictors then `y`.
    Regression,
}

fn split_param(s: &str) -> (&str, Option<&str>) {
    match s.split_once([':', '=']) {
        Some((name, p)) => (name, Some(p)),
        None => (s, None),
    }
}

fn param(name: &str, p: Option<&str>) -> Result<f64, String> {
    let p = p.ok_or_else(|| format!("`{name}` needs a parameter, e.g. {name}:0.5"))?;
    p.parse().map_err(|_| format!("`{p}` is not a number"))
}

pub fn parse_majorant(s: &str) -> Result<Majorant, String> {
    let (name, p) = split_param(s.trim());
    let m = match name.to_ascii_lowercase().as_str() {
        "l1" | "abs" | "absolute" => Majorant::Absolute,
        "l2" | "square" => Majorant::Square,
        "log1p" => Majorant::Log1p,
        "power" => Majorant::Power { q: param(name, p)? },
        "mixture" | "elasticnet" => Majorant::PenaltyMixture { alpha: param(name, p)? },
        other => return Err(format!("unknown majorant `{other}`; use l1, l2, log1p, power:Q or mixture:ALPHA")),
    };
    m.validate().map_err(|e| e.to_string())?;
    Ok(m)
}

pub fn parse_penalty(s: &str) -> Result<Penalty, String> {
    let (name, p) = split_param(s.trim());
    match name.to_ascii_lowercase().as_str() {
        "l1" | "lasso" => Ok(Penalty::L1),
        "elasticnet" | "enet" => {
            let alpha = param(name, p)?;
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(format!("elastic net needs 0 < alpha <= 1, got {alpha}"));
            }
            Ok(Penalty::ElasticNet { alpha })
        }
        other => Err(format!("unknown penalty `{other}`; use l1 or elasticnet:ALPHA")),
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} worker threads: {e}", cli.threads)))?;
    pool.install(|| execute(cli))
}

fn execute(cli: &Cli) -> CliResult<()> {
    let seed = cli.seed;
    match &cli.command {
        Command::Mean { input, potential, output } => {
            let data = input.matrix()?;
            let spec = potential.spec(&data)?;
            let fit = pqsq_mean(&data, &spec, &MeanOptions::default())?;
            let report = json!({ "command": "mean", "seed": seed, "error": fit.error(), "potential": spec, "model": fit });
            io::emit(output.path(), &io::to_json(&report))
        }
        Command::Kmeans { input, potential, output, k, restarts, max_iter } => {
            let data = input.matrix()?;
            let spec = potential.spec(&data)?;
            let opts = KMeansOptions { restarts: *restarts, seed, max_iter: *max_iter, ..KMeansOptions::new(*k) };
            let model = pqsq_kmeans(&data, &spec, &opts)?;
            let report = json!({ "command": "kmeans", "seed": seed, "potential": spec, "model": model });
            io::emit(output.path(), &io::to_json(&report))
        }
        Command::Pca { input, potential, output, components, restarts, no_recompute, no_projections } => {
            let data = input.matrix()?;
            let policy = match &potential.thresholds {
                Some(_) => IntervalPolicy::Fixed(potential.spec(&data)?),
                None => IntervalPolicy::Adaptive {
                    majorant: potential.majorant,
                    config: potential.interval_config(),
                    recompute_on_residuals: !no_recompute,
                },
            };
            let mut opts = PcaOptions::new(*components, policy);
            opts.restarts = *restarts;
            opts.seed = seed;
            let mut model = fit_pca(&data, &opts)?;
            if *no_projections {
                model.projections.clear();
            }
            let report = json!({
                "command": "pca",
                "seed": seed,
                "intervals": opts.policy,
                "restarts": restarts,
                "model": model,
            });
            io::emit(output.path(), &io::to_json(&report))
        }
        Command::Graph { input, potential, output, nodes, lambda, mu, topology, metric, max_iter } => {
            let data = input.matrix()?;
            let spec = potential.spec(&data)?;
            let graph = initial_graph(&data, *topology, *nodes, *lambda, *mu, seed)?;
            let opts = GraphFitOptions {
                metric: match metric {
                    Metric::L2 => PartitionMetric::L2,
                    Metric::Pqsq => PartitionMetric::Pqsq,
                },
                max_iter: *max_iter,
                ..GraphFitOptions::default()
            };
            let fit = fit_elastic_graph(&graph, &data, &spec, &opts)?;
            let report = json!({ "command": "graph", "seed": seed, "energy": fit.energy(), "potential": spec, "model": fit });
            io::emit(output.path(), &io::to_json(&report))
        }
        Command::Regress { input, reg, output, lambda, black_hole } => {
            let (problem, names) = input.table()?.regression(
                &ColumnRef::parse(&reg.response),
                &input.columns(),
                !reg.no_standardize,
            )?;
            let spec = penalty_spec(&problem, reg.penalty, reg.intervals)?;
            let mut opts = RegressionOptions::new(*lambda);
            match black_hole.trim() {
                "none" => {}
                "auto" => opts = opts.with_black_hole(black_hole_radius(&problem, &spec)?),
                v => {
                    let eps: f64 = v
                        .parse()
                        .map_err(|_| CliError::Usage(format!("--black-hole takes auto, none or a number, got `{v}`")))?;
                    opts = opts.with_black_hole(eps);
                }
            }
            let model = fit_pqsq_regression(&problem, &spec, &opts)?;
            let report = json!({
                "command": "regress",
                "seed": seed,
                "response": reg.response,
                "predictors": names,
                "penalty": reg.penalty,
                "model": model,
            });
            io::emit(output.path(), &io::to_json(&report))
        }
        Command::RegressPath { input, reg, output, lambdas, models } => {
            let (problem, names) = input.table()?.regression(
                &ColumnRef::parse(&reg.response),
                &input.columns(),
                !reg.no_standardize,
            )?;
            let spec = penalty_spec(&problem, reg.penalty, reg.intervals)?;
            let path = lambda_path(&problem, &spec, *lambdas)?;
            if let Some(p) = models {
                let report = json!({ "command": "regress-path", "predictors": names, "penalty": reg.penalty, "path": path });
                io::write_atomic(p, &io::to_json(&report))?;
            }
            io::emit(output.path(), &bench::path_table(&path).to_csv())
        }
        Command::Gen { kind, output, noise_points, outlier } => {
            let table = generate(*kind, *noise_points, &outlier.config(), seed)?;
            io::emit(output.path(), &table.to_csv())
        }
        Command::BenchBimodal { output, dim, levels, replicates, restarts } => {
            let dim = match dim {
                2 => BimodalDim::Two,
                100 => BimodalDim::Hundred,
                d => return Err(CliError::Usage(format!("--dim must be 2 or 100, got {d}"))),
            };
            let mut b = BimodalBench::new(dim);
            b.seed = seed;
            b.restarts = *restarts;
            if let Some(l) = levels {
                b.levels = l.clone();
            }
            if let Some(r) = replicates {
                b.replicates = *r;
            }
            let results = bench::run_bimodal(&b)?;
            io::emit(output.path(), &bench::bimodal_table(&results, dim).to_csv())
        }
        Command::BenchOutlier { output, outlier, sets, intervals, restarts, full, no_timing } => {
            let mut b = if *full { OutlierBench::full_grid() } else { OutlierBench::new(outlier.config()) };
            b.sets = *sets;
            b.seed = seed;
            b.intervals = *intervals;
            b.restarts = *restarts;
            b.timing = !no_timing;
            let results = bench::run_outlier(&b)?;
            io::emit(output.path(), &bench::outlier_table(&results, b.timing).to_csv())
        }
        Command::BenchRegress { output, replicates, lambdas, penalty, intervals } => {
            let b = RegressBench {
                replicates: *replicates,
                seed,
                lambdas: *lambdas,
                penalty: *penalty,
                intervals: *intervals,
                ..RegressBench::default()
            };
            let results = bench::run_regress(&b)?;
            io::emit(output.path(), &bench::regress_table(&results).to_csv())
        }
    }
}

fn initial_graph(
    data: &DataMatrix,
    topology: Topology,
    nodes: usize,
    lambda: f64,
    mu: f64,
    seed: u64,
) -> CliResult<ElasticGraph> {
    if nodes < 2 || nodes > data.rows() {
        return Err(CliError::Usage(format!("--nodes must be in 2..={}, got {nodes}", data.rows())));
    }
    Ok(match topology {
        Topology::Chain => ElasticGraph::chain_along_pc1(data, nodes, lambda, mu)?,
        Topology::Star => {
            let mut rng = seeded_rng(seed);
            let leaves = rand::seq::index::sample(&mut rng, data.rows(), nodes - 1)
                .into_iter()
                .map(|i| data.row(i).to_vec())
                .collect();
            ElasticGraph::star(data.arithmetic_mean(), leaves, lambda, mu)?
        }
    })
}

fn generate(kind: GenKind, noise_points: usize, outlier: &OutlierBenchConfig, seed: u64) -> CliResult<Table> {
    let coords = |m: usize| (0..m).map(|k| format!("x{k}")).collect::<Vec<_>>();
    match kind {
        GenKind::Bimodal | GenKind::BimodalHd => {
            let cfg = match kind {
                GenKind::Bimodal => BimodalConfig::two_dimensional(noise_points),
                _ => BimodalConfig::high_dimensional(noise_points),
            };
            let (data, labels) = gen_two_cluster(&cfg, seed)?;
            let mut names = coords(data.cols());
            names.push("label".into());
            let mut t = io::matrix_table(&data, &names[..data.cols()]);
            t.header = names;
            for (row, label) in t.rows.iter_mut().zip(&labels) {
                row.push(label.code().to_string());
            }
            Ok(t)
        }
        GenKind::Outlier => {
            let data = gen_outlier_benchmark(outlier, seed)?;
            Ok(io::matrix_table(&data, &coords(data.cols())))
        }
        GenKind::Regression => {
            let cfg = SparseRegressionConfig::default();
            let (x, y, _) = gen_sparse_regression(&cfg, seed)?;
            let mut names = coords(x.cols());
            names.push("y".into());
            let mut t = io::matrix_table(&x, &names[..x.cols()]);
            t.header = names;
            for (row, v) in t.rows.iter_mut().zip(&y) {
                row.push(io::num(*v));
            }
            Ok(t)
        }
    }
}
