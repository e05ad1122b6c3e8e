//! Multi-core scaleout of sM×dV and sM×sV.
//!
//! Cores share a word-interleaved TCDM and claim row chunks from a common
//! queue. The vector is copied in up front; matrix chunks stream in through
//! a double buffer while earlier chunks are being computed. Every core reruns
//! the single-core kernel program on its chunk with new register arguments.

mod dma;

pub use dma::{dma_cycles, Dma, DmaJob};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formats::CsrMatrix;
use crate::kernels::layout::Image;
use crate::kernels::{gen_for, source_for, KernelConfig, KernelError, KernelId, Operands};
use crate::machine::{asm::parse_xreg, assemble, Cpu, MachineParams, SimError, SimReport, XReg};
use crate::timing::{BankArbiter, MemRequest, TimingMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub cores: usize,
    pub banks: usize,
    pub tcdm_kib: usize,
    pub dma_width_bits: u32,
    /// Charged once per claimed chunk; 0 disables the instruction-cache model.
    pub icache_penalty: u64,
    /// Core cycles spent claiming a chunk and issuing its DMA request.
    pub claim_overhead: u64,
    pub timing: TimingMode,
    /// Rows per claim; `None` uses max(1, nrows / 4p).
    pub chunk_rows: Option<usize>,
    pub trace: bool,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            cores: 8,
            banks: 32,
            tcdm_kib: 128,
            dma_width_bits: 512,
            icache_penalty: 0,
            claim_overhead: 10,
            timing: TimingMode::Banked,
            chunk_rows: None,
            trace: false,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<(), ClusterError> {
        let bad = |m: String| Err(ClusterError::Config(m));
        if self.cores == 0 || self.cores > 64 {
            return bad(format!("{} cores", self.cores));
        }
        if self.dma_width_bits < 64 || !self.dma_width_bits.is_multiple_of(64) {
            return bad(format!("DMA width {} bits is not a multiple of 64", self.dma_width_bits));
        }
        let per_beat = (self.dma_width_bits / 64) as usize;
        if !self.banks.is_power_of_two() || !self.banks.is_multiple_of(per_beat) {
            return bad(format!("{} banks must be a power of two and a multiple of {per_beat}", self.banks));
        }
        if !self.tcdm_kib.is_power_of_two() {
            return bad(format!("TCDM size {} KiB is not a power of two", self.tcdm_kib));
        }
        if self.chunk_rows == Some(0) {
            return bad("zero rows per chunk".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("cluster configuration: {0}")]
    Config(String),
    #[error("TCDM capacity exceeded: {0}")]
    Capacity(String),
    #[error("DMA hazard: {0}")]
    Dma(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// A contiguous block of rows claimed as one unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chunk {
    pub start: usize,
    pub rows: usize,
    pub bytes: u64,
}

/// Row chunks handed out in order; a claim is atomic by construction since
/// cores are visited in a fixed order each cycle.
#[derive(Debug, Clone)]
pub struct WorkQueue {
    pub chunks: Vec<Chunk>,
    next: usize,
}

impl WorkQueue {
    /// Splits rows into chunks of at most `max_rows` rows and `max_bytes` bytes.
    pub fn new(a: &CsrMatrix, max_rows: usize, max_bytes: u64) -> Result<Self, ClusterError> {
        let per_nz = 8 + u64::from(a.width().bytes());
        let mut chunks = Vec::new();
        let mut cur = Chunk { start: 0, rows: 0, bytes: 4 };
        for r in 0..a.nrows() {
            let b = a.row_len(r) as u64 * per_nz + 4;
            if b + 4 > max_bytes {
                return Err(ClusterError::Capacity(format!("row {r} needs {} bytes, buffer slot holds {max_bytes}", b + 4)));
            }
            if cur.rows == max_rows || cur.bytes + b > max_bytes {
                chunks.push(cur);
                cur = Chunk { start: r, rows: 0, bytes: 4 };
            }
            cur.rows += 1;
            cur.bytes += b;
        }
        if cur.rows > 0 {
            chunks.push(cur);
        }
        Ok(Self { chunks, next: 0 })
    }

    pub fn claim(&mut self) -> Option<usize> {
        (self.next < self.chunks.len()).then(|| {
            self.next += 1;
            self.next - 1
        })
    }

    pub fn remaining(&self) -> usize {
        self.chunks.len() - self.next
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterReport {
    pub cycles: u64,
    pub prologue_cycles: u64,
    pub epilogue_cycles: u64,
    /// Cycles cores spent waiting for a chunk's transfer.
    pub dma_wait_cycles: u64,
    pub chunks: usize,
    pub rows_per_core: Vec<usize>,
    pub per_core: Vec<SimReport>,
    pub aggregate: SimReport,
}

impl ClusterReport {
    /// Useful FP ops over all cores' cycles.
    pub fn utilization(&self) -> f64 {
        let denom = self.cycles * self.per_core.len() as u64;
        if denom == 0 {
            0.0
        } else {
            self.aggregate.fpu_useful_ops as f64 / denom as f64
        }
    }

    /// Max over mean per-core busy cycles; 1.0 is perfectly balanced.
    pub fn imbalance(&self) -> f64 {
        let busy: Vec<u64> = self.per_core.iter().map(|r| r.issue_cycles + r.stalls.total()).collect();
        let max = busy.iter().max().copied().unwrap_or(0);
        let sum: u64 = busy.iter().sum();
        if sum == 0 {
            1.0
        } else {
            max as f64 * busy.len() as f64 / sum as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClusterRun {
    pub y: Vec<f64>,
    pub report: ClusterReport,
    pub trace: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum CoreState {
    Idle,
    Claiming { chunk: usize, until: u64 },
    Running { chunk: usize },
    Done,
}

/// Runs sM×dV or sM×sV over a cluster.
pub fn run_cluster(
    kernel: KernelId,
    kcfg: &KernelConfig,
    ops: &Operands,
    cfg: &ClusterConfig,
    params: MachineParams,
) -> Result<ClusterRun, ClusterError> {
    cfg.validate()?;
    let w = kcfg.width;
    let mut img = Image::new();
    // Fixed register arguments, then the per-chunk ones.
    let mut fixed: Vec<(&str, u64)> = Vec::new();
    let (a, sh, vec_bytes, y, y_stride, rp_base) = match (kernel, ops) {
        (KernelId::SmXdV, Operands::MatVec { a, x, y_stride }) => {
            let a = a.clone().with_width(w).map_err(KernelError::from)?;
            if x.len() < a.ncols() || *y_stride == 0 || !x.stride().is_power_of_two() {
                return Err(KernelError::Shape("vector does not fit the matrix".into()).into());
            }
            let (av, ai, rp) = (img.f64s(a.vals()), img.indices(a.col_idcs(), w), img.u32s(a.row_ptrs()));
            let image = x.strided_image();
            let xb = img.f64s(&image);
            let y = img.alloc(8 * ((a.nrows() as u64).saturating_sub(1) * y_stride + 1));
            fixed.extend([("a0", av), ("a1", ai), ("a3", xb), ("a6", 8 * y_stride)]);
            let sh = 3 + x.stride().trailing_zeros();
            (a, sh, 8 * image.len() as u64, y, *y_stride, rp)
        }
        (KernelId::SmXsV, Operands::MatSparseVec { a, b }) => {
            let a = a.clone().with_width(w).map_err(KernelError::from)?;
            let b = b.clone().with_width(w).map_err(KernelError::from)?;
            if b.dense_len() != a.ncols() as u64 {
                return Err(KernelError::Shape("fiber length differs from column count".into()).into());
            }
            let (av, ai, rp) = (img.f64s(a.vals()), img.indices(a.col_idcs(), w), img.u32s(a.row_ptrs()));
            let (bv, bi) = (img.f64s(b.values()), img.indices(b.indices(), w));
            let y = img.alloc(8 * a.nrows() as u64);
            fixed.extend([("a0", av), ("a1", ai), ("a3", bv), ("a4", bi), ("a5", b.nnz() as u64), ("s2", 8)]);
            (a, 3, (8 + u64::from(w.bytes())) * b.nnz() as u64, y, 1, rp)
        }
        _ => return Err(KernelError::Shape(format!("{kernel} cannot run on the cluster with these operands")).into()),
    };
    let g = gen_for(kernel, kcfg, sh)?;
    let source = source_for(kernel, &g, kcfg.variant, 0);
    let program = assemble(&source).map_err(KernelError::from)?;

    let p = cfg.cores;
    let y_bytes = 8 * a.nrows() as u64;
    let tcdm = 1024 * cfg.tcdm_kib as u64;
    let free = tcdm.checked_sub(vec_bytes + y_bytes).filter(|f| *f > 0).ok_or_else(|| {
        ClusterError::Capacity(format!("vector and result need {} of {tcdm} bytes", vec_bytes + y_bytes))
    })?;
    let slot_bytes = free / (2 * p as u64);
    let max_rows = cfg.chunk_rows.unwrap_or((a.nrows() / (4 * p)).max(1));
    let mut queue = WorkQueue::new(&a, max_rows, slot_bytes)?;
    let n_chunks = queue.chunks.len();

    let mut mem = img.into_memory();
    let mut cpus: Vec<Cpu> = (0..p).map(|i| Cpu::new(i, params)).collect();
    let mut state = vec![CoreState::Idle; p];
    let mut rows_per_core = vec![0usize; p];
    let mut arb = BankArbiter::new(cfg.banks);
    let mut dma = Dma::new(cfg.dma_width_bits, p);
    let mut avail = vec![false; n_chunks];
    let mut next_xfer = 0usize;
    let mut trace = Vec::new();
    let mut dma_wait = 0u64;

    let prologue = dma_cycles(vec_bytes, cfg.dma_width_bits);
    let mut now = prologue;
    let fixed: Vec<(XReg, u64)> = fixed.into_iter().map(|(n, v)| (xr(n), v)).collect();
    let mut reqs: Vec<MemRequest> = Vec::with_capacity(4 * p);
    let mut owners: Vec<usize> = Vec::with_capacity(4 * p);

    loop {
        if let Some(j) = dma.poll(now) {
            avail[j.chunk] = true;
            if cfg.trace {
                trace.push(format!("{now} dma done chunk {}", j.chunk));
            }
        }
        while dma.idle() && next_xfer < n_chunks && dma.slot_free(next_xfer) {
            let (buffer, slot) = dma.placement(next_xfer);
            let job = DmaJob { chunk: next_xfer, bytes: queue.chunks[next_xfer].bytes, buffer, slot };
            dma.issue(job, now)?;
            if cfg.trace {
                trace.push(format!("{now} dma start chunk {next_xfer} buffer {buffer} slot {slot}"));
            }
            next_xfer += 1;
            if let Some(j) = dma.poll(now) {
                avail[j.chunk] = true;
            }
        }

        // Chunk claiming and start-up.
        let mut running = Vec::with_capacity(p);
        for i in 0..p {
            if state[i] == CoreState::Idle {
                state[i] = match queue.claim() {
                    Some(c) => {
                        if cfg.trace {
                            trace.push(format!("{now} core {i} claim chunk {c}"));
                        }
                        CoreState::Claiming { chunk: c, until: now + cfg.claim_overhead + cfg.icache_penalty }
                    }
                    None => CoreState::Done,
                };
            }
            if let CoreState::Claiming { chunk, until } = state[i] {
                let st = &mut cpus[i].stats;
                if now < until {
                    if now + cfg.icache_penalty < until {
                        st.issue_cycles += 1;
                    } else {
                        st.stalls.icache += 1;
                    }
                    st.cycles += 1;
                    continue;
                }
                if !avail[chunk] {
                    st.idle += 1;
                    st.cycles += 1;
                    dma_wait += 1;
                    continue;
                }
                let ch = queue.chunks[chunk];
                let cpu = &mut cpus[i];
                for &(r, v) in &fixed {
                    cpu.set_x(r, v);
                }
                let y_at = y + 8 * y_stride * ch.start as u64;
                let rp_at = rp_base + 4 * ch.start as u64;
                let rows = ch.rows as u64;
                match kernel {
                    KernelId::SmXdV => {
                        cpu.set_x(xr("a2"), rp_at);
                        cpu.set_x(xr("a4"), rows);
                        cpu.set_x(xr("a5"), y_at);
                    }
                    _ => {
                        cpu.set_x(xr("a2"), rp_at);
                        cpu.set_x(xr("a6"), rows);
                        cpu.set_x(xr("a7"), y_at);
                    }
                }
                cpu.restart();
                state[i] = CoreState::Running { chunk };
                if cfg.trace {
                    trace.push(format!("{now} core {i} start chunk {chunk} rows {}..{}", ch.start, ch.start + ch.rows));
                }
            }
            if matches!(state[i], CoreState::Running { .. }) {
                running.push(i);
            }
        }
        if running.is_empty() && state.iter().all(|s| *s == CoreState::Done) && dma.idle() {
            break;
        }
        if now - prologue >= params.watchdog {
            return Err(SimError::Timeout(now).into());
        }

        reqs.clear();
        owners.clear();
        for &i in &running {
            cpus[i].propose(now, &program)?;
            for (_, r) in cpus[i].requests() {
                reqs.push(r);
                owners.push(i);
            }
        }
        let grants = match cfg.timing {
            TimingMode::Ideal => vec![true; reqs.len()],
            TimingMode::Banked => arb.arbitrate(&reqs, p),
        };
        let mut k = 0;
        for &i in &running {
            let n = owners[k..].iter().take_while(|&&o| o == i).count();
            cpus[i].commit(&grants[k..k + n], &mut mem, now)?;
            k += n;
            if cpus[i].halted {
                let CoreState::Running { chunk } = state[i] else { unreachable!() };
                rows_per_core[i] += queue.chunks[chunk].rows;
                dma.release(chunk);
                state[i] = CoreState::Idle;
                if cfg.trace {
                    trace.push(format!("{} core {i} finish chunk {chunk}", now + 1));
                }
            }
        }
        now += 1;
    }
    debug_assert_eq!(queue.remaining(), 0);

    let epilogue = dma_cycles(y_bytes, cfg.dma_width_bits);
    let cycles = now + epilogue;
    let per_core: Vec<SimReport> = cpus.iter().map(|c| c.report(&mem)).collect();
    let mut aggregate = SimReport::default();
    for r in &per_core {
        aggregate.merge(r);
    }
    aggregate.cycles = cycles;
    aggregate.mem_reads = mem.reads;
    aggregate.mem_writes = mem.writes;
    let yv = (0..a.nrows() as u64).map(|r| mem.peek_f64(y + 8 * y_stride * r)).collect();
    Ok(ClusterRun {
        y: yv,
        report: ClusterReport {
            cycles,
            prologue_cycles: prologue,
            epilogue_cycles: epilogue,
            dma_wait_cycles: dma_wait,
            chunks: n_chunks,
            rows_per_core,
            per_core,
            aggregate,
        },
        trace,
    })
}

fn xr(name: &str) -> XReg {
    parse_xreg(name).expect("fixed register name")
}
