//! Experiment drivers, the dense reference oracle, CSV output and the
//! acceptance checks.
//!
//! An [`Experiment`] expands into sweep points. Every point runs BASE plus the
//! requested variants on identical operands, checks each result against the
//! oracle and only then emits one [`ResultRow`] per requested variant.

mod accept;
pub mod oracle;

pub use accept::{
    check_acceptance, indirect_stream_throughput, measure, measure_all, random_operands, Measurement, Verdict, CRITERIA,
};
pub use oracle::{oracle, reference, Reference};

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{run_cluster, ClusterConfig, ClusterError};
use crate::formats::{
    gen_csr, gen_dense_vector, gen_sparse_vector, load_matrix_market, CsrMatrix, DenseVector, FormatError, IndexWidth,
    MtxField, SyntheticCsr,
};
use crate::kernels::{run_kernel, ExecOptions, KernelConfig, KernelError, KernelId, Operands, Variant, DEFAULT_UNROLL};
use crate::machine::{MachineParams, SimReport};
use crate::timing::{StallBreakdown, TimingMode};

/// Relative error bound against the sum of absolute terms.
pub const ORACLE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Toml {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error("{kernel} {variant} at {point}: result differs from the oracle: {msg}")]
    Mismatch { kernel: KernelId, variant: Variant, point: String, msg: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("no data")]
    NoData,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentId {
    SvXdVUtil,
    SvPdVUtil,
    SmXdVSpeedup,
    SvXsVGrid,
    SvPsVGrid,
    SmXsVSpeedup,
    ClusterSmXdV,
    ClusterSmXsV,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        Self::SvXdVUtil,
        Self::SvPdVUtil,
        Self::SmXdVSpeedup,
        Self::SvXsVGrid,
        Self::SvPsVGrid,
        Self::SmXsVSpeedup,
        Self::ClusterSmXdV,
        Self::ClusterSmXsV,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::SvXdVUtil => "SvXdV_util",
            Self::SvPdVUtil => "SvPdV_util",
            Self::SmXdVSpeedup => "SmXdV_speedup",
            Self::SvXsVGrid => "SvXsV_grid",
            Self::SvPsVGrid => "SvPsV_grid",
            Self::SmXsVSpeedup => "SmXsV_speedup",
            Self::ClusterSmXdV => "Cluster_SmXdV",
            Self::ClusterSmXsV => "Cluster_SmXsV",
        }
    }

    pub fn kernel(self) -> KernelId {
        match self {
            Self::SvXdVUtil => KernelId::SvXdV,
            Self::SvPdVUtil => KernelId::SvPdV,
            Self::SmXdVSpeedup | Self::ClusterSmXdV => KernelId::SmXdV,
            Self::SvXsVGrid => KernelId::SvXsV,
            Self::SvPsVGrid => KernelId::SvPsV,
            Self::SmXsVSpeedup | Self::ClusterSmXsV => KernelId::SmXsV,
        }
    }

    pub fn is_cluster(self) -> bool {
        matches!(self, Self::ClusterSmXdV | Self::ClusterSmXsV)
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = BenchError;

    /// Case-insensitive; `-` and `_` are interchangeable.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = |t: &str| t.to_ascii_lowercase().replace('-', "_");
        let want = norm(s);
        Self::ALL
            .into_iter()
            .find(|e| norm(e.name()) == want)
            .ok_or_else(|| BenchError::UnknownExperiment(s.to_string()))
    }
}

/// Sweep coordinates of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub widths: Vec<IndexWidth>,
    pub variants: Vec<Variant>,
    /// Vector nonzeros, or average nonzeros per row for synthetic matrices.
    pub nnz: Vec<usize>,
    /// Density grid for sparse-sparse experiments; vector densities for sM×sV.
    pub densities: Vec<f64>,
    /// Matrix Market files; synthetic matrices are used when empty.
    pub matrices: Vec<PathBuf>,
    pub seed: u64,
    pub vector_len: u64,
    pub rows: usize,
    pub cols: usize,
}

/// Optional overrides read from the `[sweep]` section.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepFile {
    pub widths: Option<Vec<u32>>,
    pub variants: Option<Vec<Variant>>,
    pub nnz: Option<Vec<usize>>,
    pub densities: Option<Vec<f64>>,
    pub matrices: Option<Vec<PathBuf>>,
    pub seed: Option<u64>,
    pub vector_len: Option<u64>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub parallel: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingFile {
    /// Defaults to ideal for single-core and banked for cluster experiments.
    pub mode: Option<TimingMode>,
    pub banks: usize,
}

impl Default for TimingFile {
    fn default() -> Self {
        Self { mode: None, banks: ExecOptions::default().banks }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelFile {
    pub accumulators: Option<usize>,
    pub unroll: usize,
}

impl Default for KernelFile {
    fn default() -> Self {
        Self { accumulators: None, unroll: DEFAULT_UNROLL }
    }
}

/// Contents of a benchmark config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub sweep: SweepFile,
    pub machine: MachineParams,
    pub timing: TimingFile,
    pub kernel: KernelFile,
    pub cluster: ClusterConfig,
}

impl BenchConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, BenchError> {
        toml::from_str(text).map_err(|source| BenchError::Toml { path: origin.to_string(), source })
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text, &path.display().to_string())
    }
}

pub fn width_from_bits(bits: u32) -> Result<IndexWidth, BenchError> {
    match IndexWidth::from_bits(bits) {
        Some(w) if w != IndexWidth::W64 => Ok(w),
        _ => Err(BenchError::Config(format!("index width must be 8, 16 or 32, got {bits}"))),
    }
}

/// A fully specified experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub id: ExperimentId,
    pub sweep: Sweep,
    pub exec: ExecOptions,
    pub kernel: KernelFile,
    pub cluster: ClusterConfig,
    /// Run sweep points on the rayon pool (only with the `parallel` feature).
    pub parallel: bool,
}

const GRID: [f64; 7] = [0.0003, 0.001, 0.003, 0.01, 0.03, 0.1, 0.3];

impl Experiment {
    /// Default sweep of each experiment.
    pub fn new(id: ExperimentId) -> Self {
        use ExperimentId::*;
        let k = id.kernel();
        let (widths, nnz, densities, vector_len, rows, cols): (&[IndexWidth], Vec<usize>, Vec<f64>, u64, usize, usize) =
            match id {
                SvXdVUtil | SvPdVUtil => (
                    &[IndexWidth::W8, IndexWidth::W16, IndexWidth::W32],
                    vec![4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096],
                    vec![],
                    8192,
                    0,
                    0,
                ),
                SmXdVSpeedup => (&[IndexWidth::W16, IndexWidth::W32], vec![2, 5, 10, 20, 30, 50, 100], vec![], 0, 64, 1024),
                SvXsVGrid | SvPsVGrid => (&[IndexWidth::W16], vec![], GRID.to_vec(), 60_000, 0, 0),
                SmXsVSpeedup => (&[IndexWidth::W16], vec![5, 10, 20, 50, 100], vec![0.01, 0.1], 0, 64, 2048),
                ClusterSmXdV => (&[IndexWidth::W16], vec![5, 10, 20, 30, 40, 50, 75, 100], vec![], 0, 256, 2048),
                ClusterSmXsV => (&[IndexWidth::W16], vec![5, 10, 20, 30, 40, 50, 75, 100], vec![0.01], 0, 256, 2048),
            };
        let exec = if id.is_cluster() {
            ExecOptions { timing: TimingMode::Banked, ..ExecOptions::default() }
        } else {
            ExecOptions::default()
        };
        Self {
            id,
            sweep: Sweep {
                widths: widths.to_vec(),
                variants: k.variants().to_vec(),
                nnz,
                densities,
                matrices: vec![],
                seed: 1,
                vector_len,
                rows,
                cols,
            },
            exec,
            kernel: KernelFile::default(),
            cluster: ClusterConfig::default(),
            parallel: true,
        }
    }

    /// Defaults overlaid with a config file.
    pub fn from_config(id: ExperimentId, cfg: &BenchConfig) -> Result<Self, BenchError> {
        let mut e = Self::new(id);
        let s = &cfg.sweep;
        if let Some(w) = &s.widths {
            e.sweep.widths = w.iter().map(|&b| width_from_bits(b)).collect::<Result<_, _>>()?;
        }
        if let Some(v) = &s.variants {
            e.sweep.variants = v.clone();
        }
        macro_rules! take {
            ($($f:ident),*) => {$(if let Some(v) = &s.$f { e.sweep.$f = v.clone(); })*};
        }
        take!(nnz, densities, matrices, seed, vector_len, rows, cols);
        if let Some(p) = s.parallel {
            e.parallel = p;
        }
        e.exec.machine = cfg.machine;
        e.exec.banks = cfg.timing.banks;
        e.kernel = cfg.kernel;
        e.cluster = cfg.cluster;
        // `[timing] mode` wins over `[cluster] timing` for cluster runs.
        if let Some(t) = cfg.timing.mode {
            e.exec.timing = t;
        } else if id.is_cluster() {
            e.exec.timing = cfg.cluster.timing;
        }
        Ok(e)
    }

    fn kernel_config(&self, v: Variant, w: IndexWidth) -> KernelConfig {
        KernelConfig { accumulators: self.kernel.accumulators, unroll: self.kernel.unroll, ..KernelConfig::new(v, w) }
    }

    fn validate(&self) -> Result<(), BenchError> {
        let k = self.id.kernel();
        if let Some(v) = self.sweep.variants.iter().find(|v| !k.variants().contains(v)) {
            return Err(KernelError::Unsupported { kernel: k, variant: *v }.into());
        }
        if self.sweep.widths.is_empty() || self.sweep.variants.is_empty() {
            return Err(BenchError::Config("empty width or variant list".into()));
        }
        if let Some(d) = self.sweep.densities.iter().find(|d| !(**d > 0.0 && **d <= 1.0)) {
            return Err(BenchError::Config(format!("density {d} outside (0, 1]")));
        }
        if self.id.is_cluster() {
            self.cluster.validate()?;
        }
        Ok(())
    }
}

/// One CSV line.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: ExperimentId,
    pub kernel: KernelId,
    pub variant: Variant,
    pub idx_width: u32,
    /// File stem with the Matrix Market field type, `synthetic`, or empty for vectors.
    pub matrix: String,
    pub rows: usize,
    /// Vector length or matrix columns.
    pub cols: u64,
    /// Nonzeros of the first operand.
    pub nnz: usize,
    pub avg_row_nnz: Option<f64>,
    pub density_a: Option<f64>,
    pub density_b: Option<f64>,
    pub cores: usize,
    pub cycles: u64,
    pub fpu_useful_ops: u64,
    pub utilization: f64,
    pub speedup_vs_base: f64,
    pub max_rel_error: f64,
    pub stalls: StallBreakdown,
    pub idle_cycles: u64,
    /// Max over min busy cycles across cores; clusters only.
    pub imbalance: Option<f64>,
}

pub const CSV_HEADER: [&str; 26] = [
    "experiment",
    "kernel",
    "variant",
    "idx_width",
    "matrix",
    "rows",
    "cols",
    "nnz",
    "avg_row_nnz",
    "density_a",
    "density_b",
    "cores",
    "cycles",
    "fpu_useful_ops",
    "utilization",
    "speedup_vs_base",
    "max_rel_error",
    "stall_stream_data",
    "stall_stream_control",
    "stall_bank_conflict",
    "stall_dependency",
    "stall_fence_drain",
    "stall_icache",
    "idle_cycles",
    "imbalance",
    "total_stalls",
];

/// Nine significant digits; plain notation for moderate magnitudes.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = format!("{x:.8e}");
    let exp: i32 = e[e.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        e
    }
}

impl ResultRow {
    pub fn record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(sig9).unwrap_or_default();
        let s = &self.stalls;
        vec![
            self.experiment.to_string(),
            self.kernel.to_string(),
            self.variant.to_string(),
            self.idx_width.to_string(),
            self.matrix.clone(),
            self.rows.to_string(),
            self.cols.to_string(),
            self.nnz.to_string(),
            opt(self.avg_row_nnz),
            opt(self.density_a),
            opt(self.density_b),
            self.cores.to_string(),
            self.cycles.to_string(),
            self.fpu_useful_ops.to_string(),
            sig9(self.utilization),
            sig9(self.speedup_vs_base),
            sig9(self.max_rel_error),
            s.stream_data.to_string(),
            s.stream_control.to_string(),
            s.bank_conflict.to_string(),
            s.dependency.to_string(),
            s.fence_drain.to_string(),
            s.icache.to_string(),
            self.idle_cycles.to_string(),
            opt(self.imbalance),
            s.total().to_string(),
        ]
    }
}

pub fn write_csv<W: std::io::Write>(rows: &[ResultRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush().map_err(|source| BenchError::Io { path: "<csv>".into(), source })?;
    Ok(())
}

pub fn write_csv_file(rows: &[ResultRow], path: &Path) -> Result<(), BenchError> {
    let io = |source| BenchError::Io { path: path.display().to_string(), source };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let f = std::fs::File::create(path).map_err(io)?;
    write_csv(rows, std::io::BufWriter::new(f))
}

/// Maps `f` over `items` in order, on the rayon pool when `parallel` is set
/// and the `parallel` feature is enabled.
pub fn sweep<T: Sync, R: Send>(items: &[T], parallel: bool, f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

#[derive(Debug, Clone)]
enum MatrixSource {
    Synthetic { avg: usize },
    File { label: String, a: CsrMatrix },
}

#[derive(Debug, Clone)]
enum Point {
    Vector { w: IndexWidth, nnz: usize },
    Grid { w: IndexWidth, da: f64, db: f64 },
    Matrix { w: IndexWidth, src: usize, density: Option<f64> },
}

fn field_name(f: MtxField) -> &'static str {
    match f {
        MtxField::Real => "real",
        MtxField::Integer => "integer",
        MtxField::Pattern => "pattern",
    }
}

fn nnz_of(len: u64, density: f64) -> u64 {
    ((len as f64 * density).round() as u64).clamp(1, len)
}

/// Synthetic row densities, or the listed files read once at 32-bit width.
fn load_sources(e: &Experiment) -> Result<Vec<MatrixSource>, BenchError> {
    if e.sweep.matrices.is_empty() {
        return Ok(e.sweep.nnz.iter().map(|&avg| MatrixSource::Synthetic { avg }).collect());
    }
    e.sweep
        .matrices
        .iter()
        .map(|p| {
            let (a, field) = load_matrix_market(p, IndexWidth::W32)?;
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(MatrixSource::File { label: format!("{stem}:{}", field_name(field)), a })
        })
        .collect()
}

/// Dense-vector experiments shrink the vector to what the width can index.
fn vector_len(e: &Experiment, w: IndexWidth) -> u64 {
    e.sweep.vector_len.min(w.max_index().saturating_add(1))
}

fn points(e: &Experiment, sources: &[MatrixSource]) -> Vec<Point> {
    use ExperimentId::*;
    let mut out = Vec::new();
    for &w in &e.sweep.widths {
        match e.id {
            SvXdVUtil | SvPdVUtil => {
                let len = vector_len(e, w);
                out.extend(e.sweep.nnz.iter().filter(|&&n| n as u64 <= len).map(|&nnz| Point::Vector { w, nnz }))
            }
            SvXsVGrid | SvPsVGrid => {
                for &da in &e.sweep.densities {
                    out.extend(e.sweep.densities.iter().map(|&db| Point::Grid { w, da, db }));
                }
            }
            SmXdVSpeedup | ClusterSmXdV => out.extend((0..sources.len()).map(|src| Point::Matrix { w, src, density: None })),
            SmXsVSpeedup | ClusterSmXsV => {
                for src in 0..sources.len() {
                    out.extend(e.sweep.densities.iter().map(|&d| Point::Matrix { w, src, density: Some(d) }));
                }
            }
        }
    }
    out
}

/// Operands of one point plus the row coordinates they imply.
struct Instance {
    ops: Operands,
    template: ResultRow,
    label: String,
}

fn instance(e: &Experiment, p: &Point, sources: &[MatrixSource]) -> Result<Instance, BenchError> {
    let seed = e.sweep.seed;
    let k = e.id.kernel();
    let mut t = ResultRow {
        experiment: e.id,
        kernel: k,
        variant: Variant::Base,
        idx_width: 0,
        matrix: String::new(),
        rows: 0,
        cols: 0,
        nnz: 0,
        avg_row_nnz: None,
        density_a: None,
        density_b: None,
        cores: if e.id.is_cluster() { e.cluster.cores } else { 1 },
        cycles: 0,
        fpu_useful_ops: 0,
        utilization: 0.0,
        speedup_vs_base: 0.0,
        max_rel_error: 0.0,
        stalls: StallBreakdown::default(),
        idle_cycles: 0,
        imbalance: None,
    };
    let ops = match *p {
        Point::Vector { w, nnz } => {
            t.idx_width = w.bits();
            let len = vector_len(e, w);
            let a = gen_sparse_vector(len, nnz as u64, seed, w)?;
            let b = DenseVector::unit(gen_dense_vector(len as usize, seed + 1));
            (t.cols, t.nnz, t.density_a) = (len, nnz, Some(nnz as f64 / len as f64));
            Operands::SparseDense { a, b }
        }
        Point::Grid { w, da, db } => {
            t.idx_width = w.bits();
            let len = e.sweep.vector_len;
            let a = gen_sparse_vector(len, nnz_of(len, da), seed, w)?;
            let b = gen_sparse_vector(len, nnz_of(len, db), seed + 1, w)?;
            (t.cols, t.nnz, t.density_a, t.density_b) = (len, a.nnz(), Some(da), Some(db));
            Operands::SparseSparse { a, b }
        }
        Point::Matrix { w, src, density } => {
            t.idx_width = w.bits();
            let a = match &sources[src] {
                MatrixSource::Synthetic { avg } => {
                    t.matrix = "synthetic".into();
                    let (nrows, ncols) = (e.sweep.rows, e.sweep.cols);
                    gen_csr(&SyntheticCsr { nrows, ncols, nnz: nrows * avg, seed, width: w })?
                }
                MatrixSource::File { label, a } => {
                    t.matrix = label.clone();
                    a.clone().with_width(w)?
                }
            };
            (t.rows, t.cols, t.nnz, t.avg_row_nnz) = (a.nrows(), a.ncols() as u64, a.nnz(), Some(a.avg_row_nnz()));
            match density {
                None => {
                    let x = DenseVector::unit(gen_dense_vector(a.ncols(), seed + 1));
                    Operands::MatVec { a, x, y_stride: 1 }
                }
                Some(d) => {
                    t.density_b = Some(d);
                    let b = gen_sparse_vector(a.ncols() as u64, nnz_of(a.ncols() as u64, d), seed + 1, w)?;
                    Operands::MatSparseVec { a, b }
                }
            }
        }
    };
    let label = format!(
        "{}-bit {} nnz={} density_a={:?} density_b={:?}",
        t.idx_width, t.matrix, t.nnz, t.density_a, t.density_b
    );
    Ok(Instance { ops, template: t, label })
}

struct Measured {
    variant: Variant,
    cycles: u64,
    report: SimReport,
    utilization: f64,
    error: f64,
    imbalance: Option<f64>,
}

fn measure_variant(e: &Experiment, inst: &Instance, v: Variant, want: &Reference) -> Result<Measured, BenchError> {
    let k = e.id.kernel();
    let w = IndexWidth::from_bits(inst.template.idx_width).expect("valid width");
    let kcfg = e.kernel_config(v, w);
    let (out, report, cycles, utilization, imbalance) = if e.id.is_cluster() {
        let cfg = ClusterConfig { timing: e.exec.timing, ..e.cluster };
        let run = run_cluster(k, &kcfg, &inst.ops, &cfg, e.exec.machine)?;
        let util = run.report.utilization();
        let imb = run.report.imbalance();
        (crate::kernels::KernelOutput::Dense(run.y), run.report.aggregate, run.report.cycles, util, Some(imb))
    } else {
        let (out, rep) = run_kernel(k, &kcfg, &inst.ops, &e.exec)?;
        let (c, u) = (rep.cycles, rep.utilization());
        (out, rep, c, u, None)
    };
    let error = oracle::relative_error(&out, want)
        .and_then(|err| if err <= ORACLE_TOLERANCE { Ok(err) } else { Err(format!("relative error {err:e}")) })
        .map_err(|msg| BenchError::Mismatch { kernel: k, variant: v, point: inst.label.clone(), msg })?;
    Ok(Measured { variant: v, cycles, report, utilization, error, imbalance })
}

fn run_point(e: &Experiment, p: &Point, sources: &[MatrixSource]) -> Result<Vec<ResultRow>, BenchError> {
    let inst = instance(e, p, sources)?;
    let want = reference(e.id.kernel(), &inst.ops);
    let mut variants = vec![Variant::Base];
    variants.extend(e.sweep.variants.iter().copied().filter(|v| *v != Variant::Base));
    let ms = variants.iter().map(|&v| measure_variant(e, &inst, v, &want)).collect::<Result<Vec<_>, _>>()?;
    let base = ms[0].cycles as f64;
    Ok(ms
        .into_iter()
        .filter(|m| e.sweep.variants.contains(&m.variant))
        .map(|m| ResultRow {
            variant: m.variant,
            cycles: m.cycles,
            fpu_useful_ops: m.report.fpu_useful_ops,
            utilization: m.utilization,
            speedup_vs_base: base / m.cycles as f64,
            max_rel_error: m.error,
            stalls: m.report.stalls,
            idle_cycles: m.report.idle,
            imbalance: m.imbalance,
            ..inst.template.clone()
        })
        .collect())
}

/// Runs every sweep point; rows come back in sweep order regardless of threading.
pub fn run_experiment(e: &Experiment) -> Result<Vec<ResultRow>, BenchError> {
    e.validate()?;
    let sources = load_sources(e)?;
    let pts = points(e, &sources);
    let per_point = sweep(&pts, e.parallel, |p| run_point(e, p, &sources));
    let mut rows = Vec::new();
    for r in per_point {
        rows.extend(r?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(1.0), "1.00000000");
        assert_eq!(sig9(0.8), "0.800000000");
        assert_eq!(sig9(123456.789), "123456.789");
        assert_eq!(sig9(9.9999999999), "10.0000000");
        assert_eq!(sig9(1e-9), "1.00000000e-9");
        assert_eq!(sig9(-2.5), "-2.50000000");
    }

    #[test]
    fn experiment_names_round_trip() {
        for id in ExperimentId::ALL {
            assert_eq!(id.name().parse::<ExperimentId>().unwrap(), id);
        }
        assert_eq!("cluster-smxdv".parse::<ExperimentId>().unwrap(), ExperimentId::ClusterSmXdV);
        assert!("nope".parse::<ExperimentId>().is_err());
    }

    #[test]
    fn config_overrides_defaults() {
        let cfg = BenchConfig::parse(
            "[sweep]\nwidths = [32]\nnnz = [8]\n[timing]\nmode = \"banked\"\nbanks = 16\n[cluster]\ncores = 4\n",
            "inline",
        )
        .unwrap();
        let e = Experiment::from_config(ExperimentId::SvXdVUtil, &cfg).unwrap();
        assert_eq!(e.sweep.widths, vec![IndexWidth::W32]);
        assert_eq!(e.sweep.nnz, vec![8]);
        assert_eq!((e.exec.timing, e.exec.banks, e.cluster.cores), (TimingMode::Banked, 16, 4));
        assert!(BenchConfig::parse("[sweep]\nbogus = 1\n", "inline").is_err());
        assert!(Experiment::from_config(ExperimentId::SvXdVUtil, &BenchConfig::parse("[sweep]\nwidths = [64]", "x").unwrap()).is_err());
    }

    #[test]
    fn unsupported_variant_is_rejected() {
        let mut e = Experiment::new(ExperimentId::SvXsVGrid);
        e.sweep.variants = vec![Variant::Ssr];
        assert!(matches!(run_experiment(&e), Err(BenchError::Kernel(KernelError::Unsupported { .. }))));
    }

    #[test]
    fn missing_matrix_names_the_path() {
        let mut e = Experiment::new(ExperimentId::SmXdVSpeedup);
        e.sweep.matrices = vec![PathBuf::from("/nonexistent/m.mtx")];
        let err = run_experiment(&e).unwrap_err().to_string();
        assert!(err.contains("/nonexistent/m.mtx"), "{err}");
    }
}
