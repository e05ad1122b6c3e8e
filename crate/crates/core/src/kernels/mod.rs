//! Sparse linear-algebra kernels as programs for the simulated core.
//!
//! Every kernel comes as a BASE scalar loop, an SSR variant (affine streams
//! only) where that helps, and an SSSR variant using indirection, matching
//! and egress. [`prepare`] lays out the operands in a fresh memory image and
//! returns the program with its register arguments; [`run_kernel`] executes
//! it and reads the result back.

pub(crate) mod layout;
pub(crate) mod programs;
mod schedule;

pub use schedule::{smxdv_row_schedule, RowPlan};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formats::{csr_to_csc, CsrMatrix, DenseVector, Fiber, FormatError, IndexWidth};
use crate::machine::{assemble, AsmError, Machine, MachineParams, Program, SimError, SimReport, XReg};
use crate::timing::{Memory, TimingMode};
use layout::Image;
use programs::Gen;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KernelId {
    SvXdV,
    SmXdV,
    SmXdM,
    SvPdV,
    SvHdV,
    SvXsV,
    SmXsV,
    SmXsM,
    SvPsV,
    SvHsV,
}

impl KernelId {
    pub const ALL: [KernelId; 10] = [
        Self::SvXdV,
        Self::SmXdV,
        Self::SmXdM,
        Self::SvPdV,
        Self::SvHdV,
        Self::SvXsV,
        Self::SmXsV,
        Self::SmXsM,
        Self::SvPsV,
        Self::SvHsV,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::SvXdV => "svxdv",
            Self::SmXdV => "smxdv",
            Self::SmXdM => "smxdm",
            Self::SvPdV => "svpdv",
            Self::SvHdV => "svhdv",
            Self::SvXsV => "svxsv",
            Self::SmXsV => "smxsv",
            Self::SmXsM => "smxsm",
            Self::SvPsV => "svpsv",
            Self::SvHsV => "svhsv",
        }
    }

    /// Intersection kernels gain nothing from affine streams alone.
    pub fn uses_intersection(self) -> bool {
        matches!(self, Self::SvXsV | Self::SmXsV | Self::SmXsM | Self::SvHsV)
    }

    pub fn variants(self) -> &'static [Variant] {
        if self.uses_intersection() {
            &[Variant::Base, Variant::Sssr]
        } else {
            &[Variant::Base, Variant::Ssr, Variant::Sssr]
        }
    }
}

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let l = s.to_ascii_lowercase();
        Self::ALL.into_iter().find(|k| k.name() == l).ok_or_else(|| format!("unknown kernel `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Base,
    Ssr,
    Sssr,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Base, Variant::Ssr, Variant::Sssr];

    pub fn name(self) -> &'static str {
        match self {
            Self::Base => "base",
            Self::Ssr => "ssr",
            Self::Sssr => "sssr",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "base" => Ok(Self::Base),
            "ssr" => Ok(Self::Ssr),
            "sssr" => Ok(Self::Sssr),
            _ => Err(format!("variant must be base, ssr or sssr, got `{s}`")),
        }
    }
}

/// Accumulators needed to cover the FPU latency at each width's peak rate.
pub fn default_accumulators(w: IndexWidth) -> usize {
    match w {
        IndexWidth::W8 => 8,
        IndexWidth::W16 => 4,
        IndexWidth::W32 => 3,
        IndexWidth::W64 => 2,
    }
}

pub const DEFAULT_UNROLL: usize = 4;
pub const MAX_ACCUMULATORS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub variant: Variant,
    pub width: IndexWidth,
    /// Accumulator block size; `None` picks [`default_accumulators`].
    pub accumulators: Option<usize>,
    /// Row-length threshold below which sM×dV rows skip the hardware loop.
    pub unroll: usize,
}

impl KernelConfig {
    pub fn new(variant: Variant, width: IndexWidth) -> Self {
        Self { variant, width, accumulators: None, unroll: DEFAULT_UNROLL }
    }

    pub fn accs(&self) -> usize {
        self.accumulators.unwrap_or_else(|| default_accumulators(self.width))
    }
}

/// Row-major dense matrix with a power-of-two column count.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, KernelError> {
        if data.len() != rows * cols {
            return Err(KernelError::Shape(format!("{rows}x{cols} matrix with {} values", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operands {
    /// sV×dV, sV+dV, sV⊙dV.
    SparseDense { a: Fiber, b: DenseVector },
    /// sV×sV, sV+sV, sV⊙sV.
    SparseSparse { a: Fiber, b: Fiber },
    /// sM×dV; `y_stride` is the result stride in elements.
    MatVec { a: CsrMatrix, x: DenseVector, y_stride: u64 },
    /// sM×dM.
    MatMat { a: CsrMatrix, b: DenseMatrix },
    /// sM×sV.
    MatSparseVec { a: CsrMatrix, b: Fiber },
    /// sM×sM inner product; `b` is given row-wise and converted to CSC.
    MatSparseMat { a: CsrMatrix, b: CsrMatrix },
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelOutput {
    Scalar(f64),
    Dense(Vec<f64>),
    Sparse(Fiber),
    Matrix(DenseMatrix),
}

#[derive(Debug, Error)]
pub enum KernelError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{kernel} has no {variant} variant")]
    Unsupported { kernel: KernelId, variant: Variant },
    #[error("operands do not fit the kernel: {0}")]
    Shape(String),
    #[error("configuration out of range: {0}")]
    Capacity(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Asm(#[from] AsmError),
}

#[derive(Debug, Clone, PartialEq)]
enum OutLoc {
    Scalar(u64),
    Dense { base: u64, len: usize, stride: u64 },
    Sparse { vals: u64, idcs: u64, len: Result<u64, usize>, dense_len: u64, width: IndexWidth },
    Matrix { base: u64, rows: usize, cols: usize },
}

/// A kernel program ready to run, with its memory image and register arguments.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub source: String,
    pub program: Program,
    pub mem: Memory,
    pub args: Vec<(XReg, u64)>,
    out: OutLoc,
}

impl Prepared {
    /// Reads the kernel's result out of a final memory image.
    pub fn read_output(&self, mem: &Memory) -> Result<KernelOutput, KernelError> {
        Ok(match &self.out {
            OutLoc::Scalar(a) => KernelOutput::Scalar(mem.peek_f64(*a)),
            OutLoc::Dense { base, len, stride } => {
                KernelOutput::Dense((0..*len as u64).map(|k| mem.peek_f64(base + 8 * stride * k)).collect())
            }
            OutLoc::Sparse { vals, idcs, len, dense_len, width } => {
                let n = match len {
                    Ok(addr) => mem.peek_uint(*addr, 8),
                    Err(n) => *n as u64,
                };
                let b = u64::from(width.bytes());
                let v = (0..n).map(|k| mem.peek_f64(vals + 8 * k)).collect();
                let i = (0..n).map(|k| mem.peek_uint(idcs + b * k, b)).collect();
                KernelOutput::Sparse(Fiber::new(v, i, *dense_len, *width)?)
            }
            OutLoc::Matrix { base, rows, cols } => KernelOutput::Matrix(DenseMatrix {
                rows: *rows,
                cols: *cols,
                data: (0..(rows * cols) as u64).map(|k| mem.peek_f64(base + 8 * k)).collect(),
            }),
        })
    }

    /// A machine loaded with this kernel's memory and arguments.
    pub fn machine(&self, opts: &ExecOptions) -> Machine {
        let mut m = Machine::with_memory(opts.machine, self.mem.clone(), opts.timing, opts.banks);
        for &(r, v) in &self.args {
            m.cpu.set_x(r, v);
        }
        m
    }
}

/// How a kernel is executed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecOptions {
    pub machine: MachineParams,
    pub timing: TimingMode,
    pub banks: usize,
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self { machine: MachineParams::default(), timing: TimingMode::Ideal, banks: 32 }
    }
}

fn x(name: &str) -> XReg {
    crate::machine::asm::parse_xreg(name).expect("fixed register name")
}

fn check_dim(dense_len: u64, w: IndexWidth) -> Result<(), KernelError> {
    if dense_len > 0 && !w.fits(dense_len - 1) {
        return Err(FormatError::WidthOverflow { value: dense_len - 1, width: w }.into());
    }
    Ok(())
}

fn log2_exact(v: u64, what: &str) -> Result<u32, KernelError> {
    if v == 0 || !v.is_power_of_two() {
        return Err(KernelError::Shape(format!("{what} {v} is not a power of two")));
    }
    Ok(v.trailing_zeros())
}

fn row_ptrs_addr(img: &mut Image, a: &CsrMatrix) -> u64 {
    img.u32s(a.row_ptrs())
}

/// Validates the configuration against the kernel and builds the generator parameters.
pub(crate) fn gen_for(kernel: KernelId, cfg: &KernelConfig, sh: u32) -> Result<Gen, KernelError> {
    if !kernel.variants().contains(&cfg.variant) {
        return Err(KernelError::Unsupported { kernel, variant: cfg.variant });
    }
    let acc = cfg.accs();
    if acc == 0 || acc > MAX_ACCUMULATORS {
        return Err(KernelError::Capacity(format!("{acc} accumulators (1..={MAX_ACCUMULATORS})")));
    }
    if cfg.unroll > programs::MAX_UNROLL {
        return Err(KernelError::Capacity(format!("unroll {} (max {})", cfg.unroll, programs::MAX_UNROLL)));
    }
    Ok(Gen { w: cfg.width, sh, acc, unroll: cfg.unroll, idx_lead: 4 })
}

pub(crate) fn source_for(kernel: KernelId, g: &Gen, v: Variant, c_minus_a: i64) -> String {
    use Variant::*;
    match (kernel, v) {
        (KernelId::SvXdV, Base) => programs::svxdv_base(g),
        (KernelId::SvXdV, Ssr) => programs::svxdv_ssr(g),
        (KernelId::SvXdV, Sssr) => programs::svxdv_sssr(g),
        (KernelId::SvPdV, Base) => programs::svpdv_base(g),
        (KernelId::SvPdV, Ssr) => programs::svpdv_ssr(g),
        (KernelId::SvPdV, Sssr) => programs::svpdv_sssr(g),
        (KernelId::SvHdV, Base) => programs::svhdv_base(g, c_minus_a),
        (KernelId::SvHdV, Ssr) => programs::svhdv_ssr(g),
        (KernelId::SvHdV, Sssr) => programs::svhdv_sssr(g),
        (KernelId::SvXsV, Sssr) => programs::svxsv_sssr(g),
        (KernelId::SvXsV, _) => programs::svxsv_base(g),
        (KernelId::SvPsV, Base) => programs::svpsv_base(g),
        (KernelId::SvPsV, Ssr) => programs::svpsv_ssr(g),
        (KernelId::SvPsV, Sssr) => programs::svpsv_sssr(g),
        (KernelId::SvHsV, Sssr) => programs::svhsv_sssr(g),
        (KernelId::SvHsV, _) => programs::svhsv_base(g),
        (KernelId::SmXdV, v) => programs::smxdv(g, v),
        (KernelId::SmXdM, v) => programs::smxdm(g, v),
        (KernelId::SmXsV, v) => programs::smxsv(g, v),
        (KernelId::SmXsM, v) => programs::smxsm(g, v),
    }
}

fn shape_for(kernel: KernelId, ops: &Operands) -> Result<(), KernelError> {
    let ok = matches!(
        (kernel, ops),
        (KernelId::SvXdV | KernelId::SvPdV | KernelId::SvHdV, Operands::SparseDense { .. })
            | (KernelId::SvXsV | KernelId::SvPsV | KernelId::SvHsV, Operands::SparseSparse { .. })
            | (KernelId::SmXdV, Operands::MatVec { .. })
            | (KernelId::SmXdM, Operands::MatMat { .. })
            | (KernelId::SmXsV, Operands::MatSparseVec { .. })
            | (KernelId::SmXsM, Operands::MatSparseMat { .. })
    );
    if ok {
        Ok(())
    } else {
        Err(KernelError::Shape(format!("{kernel} does not take these operands")))
    }
}

/// Lays out operands and generates the program.
///
/// Register contracts:
/// - sparse-dense: a0 a_vals, a1 a_idcs, a2 nnz, a3 b, a6 c_vals, a7 &scalar
/// - sparse-sparse: a0/a1/a2 a, a3/a4/a5 b, a6 c_vals, a7 c_idcs or &scalar, s2 &c_len
/// - sM×dV / sM×dM: a0 vals, a1 idcs, a2 row_ptrs, a3 x, a4 nrows, a5 y, a6 y stride bytes, a7 columns
/// - sM×sV: a0..a2 matrix, a3 b_vals, a4 b_idcs, a5 b_nnz, a6 nrows, a7 y, s2 y stride bytes
/// - sM×sM: sM×sV for A, s9/s10/s11 B col_ptrs/idcs/vals, s1 columns of B
pub fn prepare(kernel: KernelId, cfg: &KernelConfig, ops: &Operands) -> Result<Prepared, KernelError> {
    shape_for(kernel, ops)?;
    let w = cfg.width;
    let wb = u64::from(w.bytes());
    let mut img = Image::new();
    let mut args: Vec<(&str, u64)> = Vec::new();
    let (sh, out, c_minus_a) = match ops {
        Operands::SparseDense { a, b } => {
            let a = a.clone().with_width(w)?;
            check_dim(a.dense_len(), w)?;
            if (b.len() as u64) < a.dense_len() {
                return Err(KernelError::Shape(format!("dense operand {} shorter than {}", b.len(), a.dense_len())));
            }
            let sh = 3 + log2_exact(b.stride(), "dense stride")?;
            let av = img.f64s(a.values());
            let ai = img.indices(a.indices(), w);
            let bb = img.f64s(&b.strided_image());
            let c = img.alloc(8 * a.nnz() as u64);
            let res = img.alloc(8);
            args.extend([("a0", av), ("a1", ai), ("a2", a.nnz() as u64), ("a3", bb), ("a6", c), ("a7", res)]);
            let out = match kernel {
                KernelId::SvXdV => OutLoc::Scalar(res),
                KernelId::SvPdV => OutLoc::Dense { base: bb, len: b.len(), stride: b.stride() },
                _ => OutLoc::Sparse { vals: c, idcs: ai, len: Err(a.nnz()), dense_len: a.dense_len(), width: w },
            };
            (sh, out, c as i64 - av as i64)
        }
        Operands::SparseSparse { a, b } => {
            let a = a.clone().with_width(w)?;
            let b = b.clone().with_width(w)?;
            if a.dense_len() != b.dense_len() {
                return Err(KernelError::Shape(format!("fiber lengths {} and {}", a.dense_len(), b.dense_len())));
            }
            check_dim(a.dense_len(), w)?;
            let cap = (a.nnz() + b.nnz()) as u64;
            let av = img.f64s(a.values());
            let ai = img.indices(a.indices(), w);
            let bv = img.f64s(b.values());
            let bi = img.indices(b.indices(), w);
            let cv = img.alloc(8 * cap);
            let ci = img.alloc(wb * cap);
            let len = img.alloc(8);
            let res = img.alloc(8);
            args.extend([("a0", av), ("a1", ai), ("a2", a.nnz() as u64), ("a3", bv), ("a4", bi)]);
            args.extend([("a5", b.nnz() as u64), ("a6", cv), ("s2", len)]);
            let out = if kernel == KernelId::SvXsV {
                args.push(("a7", res));
                OutLoc::Scalar(res)
            } else {
                args.push(("a7", ci));
                OutLoc::Sparse { vals: cv, idcs: ci, len: Ok(len), dense_len: a.dense_len(), width: w }
            };
            (3, out, 0)
        }
        Operands::MatVec { a, x, y_stride } => {
            let a = a.clone().with_width(w)?;
            check_dim(a.ncols() as u64, w)?;
            if x.len() < a.ncols() {
                return Err(KernelError::Shape(format!("vector length {} < {} columns", x.len(), a.ncols())));
            }
            if *y_stride == 0 {
                return Err(KernelError::Shape("result stride 0".into()));
            }
            let sh = 3 + log2_exact(x.stride(), "dense stride")?;
            let y_len = (a.nrows() as u64).saturating_sub(1) * y_stride + 1;
            let (av, ai, rp) = (img.f64s(a.vals()), img.indices(a.col_idcs(), w), row_ptrs_addr(&mut img, &a));
            let xb = img.f64s(&x.strided_image());
            let y = img.alloc(8 * y_len);
            args.extend([("a0", av), ("a1", ai), ("a2", rp), ("a3", xb), ("a4", a.nrows() as u64)]);
            args.extend([("a5", y), ("a6", 8 * y_stride)]);
            (sh, OutLoc::Dense { base: y, len: a.nrows(), stride: *y_stride }, 0)
        }
        Operands::MatMat { a, b } => {
            let a = a.clone().with_width(w)?;
            check_dim(a.ncols() as u64, w)?;
            if b.rows != a.ncols() {
                return Err(KernelError::Shape(format!("{} columns times {} rows", a.ncols(), b.rows)));
            }
            let sh = 3 + log2_exact(b.cols as u64, "dense column count")?;
            let (av, ai, rp) = (img.f64s(a.vals()), img.indices(a.col_idcs(), w), row_ptrs_addr(&mut img, &a));
            let bb = img.f64s(&b.data);
            let c = img.alloc(8 * (a.nrows() * b.cols) as u64);
            args.extend([("a0", av), ("a1", ai), ("a2", rp), ("a3", bb), ("a4", a.nrows() as u64)]);
            args.extend([("a5", c), ("a6", 8 * b.cols as u64), ("a7", b.cols as u64)]);
            (sh, OutLoc::Matrix { base: c, rows: a.nrows(), cols: b.cols }, 0)
        }
        Operands::MatSparseVec { a, b } => {
            let a = a.clone().with_width(w)?;
            let b = b.clone().with_width(w)?;
            if b.dense_len() != a.ncols() as u64 {
                return Err(KernelError::Shape(format!("fiber length {} vs {} columns", b.dense_len(), a.ncols())));
            }
            check_dim(b.dense_len(), w)?;
            let (av, ai, rp) = (img.f64s(a.vals()), img.indices(a.col_idcs(), w), row_ptrs_addr(&mut img, &a));
            let bv = img.f64s(b.values());
            let bi = img.indices(b.indices(), w);
            let y = img.alloc(8 * a.nrows() as u64);
            args.extend([("a0", av), ("a1", ai), ("a2", rp), ("a3", bv), ("a4", bi), ("a5", b.nnz() as u64)]);
            args.extend([("a6", a.nrows() as u64), ("a7", y), ("s2", 8)]);
            (3, OutLoc::Dense { base: y, len: a.nrows(), stride: 1 }, 0)
        }
        Operands::MatSparseMat { a, b } => {
            let a = a.clone().with_width(w)?;
            let b = b.clone().with_width(w)?;
            if b.nrows() != a.ncols() {
                return Err(KernelError::Shape(format!("{} columns times {} rows", a.ncols(), b.nrows())));
            }
            check_dim(a.ncols() as u64, w)?;
            let csc = csr_to_csc(&b)?;
            let (av, ai, rp) = (img.f64s(a.vals()), img.indices(a.col_idcs(), w), row_ptrs_addr(&mut img, &a));
            let (bv, bi, bp) = (img.f64s(csc.vals()), img.indices(csc.col_idcs(), w), row_ptrs_addr(&mut img, &csc));
            let cols = b.ncols();
            let c = img.alloc(8 * (a.nrows() * cols) as u64);
            args.extend([("a0", av), ("a1", ai), ("a2", rp), ("a6", a.nrows() as u64), ("a7", c)]);
            args.extend([("s2", 8 * cols as u64), ("s9", bp), ("s10", bi), ("s11", bv), ("s1", cols as u64)]);
            (3, OutLoc::Matrix { base: c, rows: a.nrows(), cols }, 0)
        }
    };
    let g = gen_for(kernel, cfg, sh)?;
    let source = source_for(kernel, &g, cfg.variant, c_minus_a);
    let program = assemble(&source)?;
    Ok(Prepared {
        source,
        program,
        mem: img.into_memory(),
        args: args.into_iter().map(|(n, v)| (x(n), v)).collect(),
        out,
    })
}

/// The kernel's program for these operands.
pub fn build(kernel: KernelId, cfg: &KernelConfig, ops: &Operands) -> Result<Program, KernelError> {
    Ok(prepare(kernel, cfg, ops)?.program)
}

/// Runs a kernel to completion and returns its result and cycle report.
pub fn run_kernel(
    kernel: KernelId,
    cfg: &KernelConfig,
    ops: &Operands,
    opts: &ExecOptions,
) -> Result<(KernelOutput, SimReport), KernelError> {
    let p = prepare(kernel, cfg, ops)?;
    let mut m = p.machine(opts);
    let rep = m.run(&p.program)?;
    Ok((p.read_output(&m.mem)?, rep))
}
