use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "metriq", version, about = "Quotients of finite metric spaces, with certified distortion")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Base seed; trial `t` uses the child seed `t` of this seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Number of independent trials (commands that sample); overrides a plan's count.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Absolute tolerance for certificate and bundle comparisons.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an instance metric.
    Gen(GenArgs),
    /// Quotient a metric by a partition (Q), a restriction then partition (QS), or keep blocks of a quotient (SQ).
    Quotient(QuotientArgs),
    /// Run a randomized quotient construction.
    #[command(subcommand)]
    Construct(Construct),
    /// Embed a metric or point set into a normed space.
    #[command(subcommand)]
    Embed(Embed),
    /// Build the quotient of a punctured Hamming cube with a certified embedding.
    CubeQs(CubeQsArgs),
    /// Recompute a certificate from its inputs.
    #[command(subcommand)]
    Certify(Certify),
    /// Evaluate a distance transform at one point.
    Transform(TransformArgs),
    /// Execute an experiment plan and write a CSV report and JSON summary.
    Run(RunArgs),
    /// Check a sealed bundle independently of the constructions that produced it.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Padded,
    Gnp,
    Composition,
    Lipcomp,
    Cube,
    Star,
    Lacunary,
    Random,
    Euclidean,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, required_unless_present = "spec")]
    pub variant: Option<Variant>,
    /// Instance description as JSON; replaces `--variant` and its parameters.
    #[arg(long, conflicts_with = "variant")]
    pub spec: Option<PathBuf>,
    /// Point count (gnp, star leaves, random, euclidean, padded base).
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    /// Edge probability for gnp.
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    #[arg(long, default_value_t = 2)]
    pub copies: usize,
    /// Cross-copy distance for padded copies, or separation for composition trees.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Base metric for padded copies; a random metric on `n` points when absent.
    #[arg(long)]
    pub base: Option<PathBuf>,
    /// Cube dimension.
    #[arg(long, default_value_t = 4)]
    pub d: usize,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// Comma-separated decreasing sequence for lacunary metrics.
    #[arg(long, value_delimiter = ',')]
    pub a: Vec<f64>,
    /// Lacunarity ratio.
    #[arg(long, default_value_t = 2.0)]
    pub k: f64,
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[arg(long, default_value_t = 3)]
    pub fanout: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Outer and inner metrics for lipcomp; random 3-point metrics when absent.
    #[arg(long)]
    pub outer: Option<PathBuf>,
    #[arg(long)]
    pub inner: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    /// Level scale for lipcomp; the smallest admissible value plus one when absent.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct QuotientArgs {
    #[arg(long)]
    pub metric: PathBuf,
    /// Partition as JSON, e.g. `[[0,1],[2]]`.
    #[arg(long, conflicts_with = "subset")]
    pub blocks: Option<String>,
    /// Comma-separated subset collapsed to one point.
    #[arg(long, value_delimiter = ',')]
    pub subset: Vec<usize>,
    /// Restrict to these points before quotienting; block indices refer to the original metric.
    #[arg(long, value_delimiter = ',')]
    pub restrict: Vec<usize>,
    /// Keep only these blocks of the quotient.
    #[arg(long, value_delimiter = ',')]
    pub keep: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct MetricIn {
    #[arg(long)]
    pub metric: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Construct {
    /// Collapse a random set so that it becomes an m-center.
    Mcenter {
        #[command(flatten)]
        input: MetricIn,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
    },
    /// Build an HST from a space with an m-center.
    Hst {
        #[command(flatten)]
        input: MetricIn,
        /// Center parameter; the smallest one with a center when absent.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Find a quotient close to a star metric.
    Star {
        #[command(flatten)]
        input: MetricIn,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        alpha: f64,
    },
    /// Find a quotient close to a k-lacunary metric.
    Lacunary {
        #[command(flatten)]
        input: MetricIn,
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        #[arg(long, default_value_t = 1.5)]
        beta: f64,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
    },
    /// The larger of a lacunary and a star quotient.
    Dichotomy {
        #[command(flatten)]
        input: MetricIn,
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        #[arg(long, default_value_t = 1.5)]
        beta: f64,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long)]
        drop_root: bool,
    },
    /// A quotient within distortion 2 of a lacunary metric on at least n/4 + 1 points.
    Q2 {
        #[command(flatten)]
        input: MetricIn,
    },
    /// A quotient close to an equilateral space.
    Aspect {
        #[command(flatten)]
        input: MetricIn,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long)]
        lipschitz: bool,
        #[arg(long, value_delimiter = ',')]
        weights: Vec<f64>,
    },
    /// A quotient of a composed metric close to an HST.
    Composition {
        /// Composition tree as JSON.
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, value_delimiter = ',')]
        weights: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Args)]
pub struct PointsIn {
    /// Points as a JSON array of coordinate arrays.
    #[arg(long)]
    pub points: PathBuf,
    /// Truncation level.
    #[arg(long = "level", alias = "D")]
    pub level: f64,
    #[arg(long, default_value_t = 1024)]
    pub features: usize,
}

#[derive(Debug, Subcommand)]
pub enum Embed {
    /// Frechet embedding of a space with an m-center.
    Bourgain {
        #[command(flatten)]
        input: MetricIn,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Center parameter; the point count when absent.
        #[arg(long)]
        m: Option<f64>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Isometric embedding of a star metric.
    Star {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    /// Gaussian features of a truncated Euclidean metric.
    GaussTrunc {
        #[command(flatten)]
        input: PointsIn,
    },
    /// p-stable features of a truncated l_p metric.
    Pstable {
        #[command(flatten)]
        input: PointsIn,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
    },
    /// Composite embedding with a logarithmic envelope.
    Uptolog {
        #[command(flatten)]
        input: PointsIn,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        /// Materialize sampled vectors for integer points.
        #[arg(long)]
        materialize: bool,
    },
}

#[derive(Debug, Args)]
pub struct CubeQsArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Write the result even when the block count misses its bound.
    #[arg(long)]
    pub allow_shortfall: bool,
}

#[derive(Debug, Subcommand)]
pub enum Certify {
    /// Distortion of a map between two metrics.
    Distortion {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Comma-separated images of the source points; the identity when absent.
        #[arg(long, value_delimiter = ',')]
        map: Vec<usize>,
    },
    /// Lipschitz and co-Lipschitz constants of a surjection.
    Lipq {
        /// Map document `{"source", "target", "assign"}`.
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Lower bound from the largest ball of singleton blocks in a cube quotient.
    CubeLower {
        /// Quotient document over a Hamming cube, or a cube-qs result.
        #[arg(long)]
        quotient: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformKind {
    GaussTrunc,
    Pstable,
    Uptolog,
    Snowflake,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long, value_enum)]
    pub kind: TransformKind,
    /// Truncation level.
    #[arg(long = "D")]
    pub level: f64,
    /// Input distance.
    #[arg(long = "d")]
    pub dist: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment plan as JSON.
    #[arg(long)]
    pub plan: PathBuf,
    /// JSON summary path; overrides the plan.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Sealed bundle path; overrides the plan.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// Fill the millis column.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub bundle: PathBuf,
}
