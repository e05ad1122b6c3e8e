//! Single-issue core with an FP subsystem (sequencer + pipelined FPU) and
//! stream register redirection.

pub mod asm;
pub mod isa;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use asm::{assemble, AsmError};
pub use isa::{Cond, FReg, FSrc, Instr, Opcode, Operand, Program, ShiftDir, Stagger, XReg};

use crate::streamer::{CfgWrite, LaneRequest, LaneStats, ReqKind, Streamer, StreamerParams, Token};
use crate::timing::{BankArbiter, MemRequest, Memory, MemoryFault, StallBreakdown, StallCause, TimingMode};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("decode fault at pc {pc}: {msg}")]
    Decode { pc: usize, msg: String },
    #[error("stream access fault on lane {lane}: {msg}")]
    StreamAccess { lane: usize, msg: String },
    #[error("lane {lane} accessed against its stream direction")]
    WrongDirection { lane: usize },
    #[error("configuration fault on lane {lane}: {msg}")]
    Config { lane: usize, msg: String },
    #[error("memory fault: {0}")]
    Memory(#[from] MemoryFault),
    #[error("watchdog expired after {0} cycles")]
    Timeout(u64),
    #[error("stream-controlled loop with no matching job")]
    FrepNoMatch,
    #[error("union matching requires an active egress job")]
    UnionWithoutEgress,
    #[error("lane {lane} delivered non-increasing indices")]
    UnsortedIndices { lane: usize },
    #[error("pc {0} out of range")]
    PcOutOfRange(usize),
    #[error("{0}")]
    Internal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MachineParams {
    pub fpu_latency: u64,
    pub fmv_latency: u64,
    pub load_latency: u64,
    pub seq_depth: usize,
    pub watchdog: u64,
    pub streamer: StreamerParams,
}

impl Default for MachineParams {
    fn default() -> Self {
        Self {
            fpu_latency: 3,
            fmv_latency: 1,
            load_latency: 2,
            seq_depth: 16,
            watchdog: 200_000_000,
            streamer: StreamerParams::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SimReport {
    pub cycles: u64,
    /// Cycles in which the core or the FP sequencer issued something.
    pub issue_cycles: u64,
    pub fpu_busy_cycles: u64,
    pub fpu_useful_ops: u64,
    pub instrs_retired: u64,
    pub stalls: StallBreakdown,
    pub idle: u64,
    pub mem_reads: u64,
    pub mem_writes: u64,
    pub frep_s_iterations: u64,
    pub tokens: u64,
    #[serde(skip)]
    pub lanes: [LaneStats; 3],
    pub digest: u64,
}

impl SimReport {
    pub fn utilization(&self) -> f64 {
        if self.cycles == 0 {
            0.0
        } else {
            self.fpu_useful_ops as f64 / self.cycles as f64
        }
    }

    pub fn merge(&mut self, o: &SimReport) {
        self.cycles = self.cycles.max(o.cycles);
        self.issue_cycles += o.issue_cycles;
        self.fpu_busy_cycles += o.fpu_busy_cycles;
        self.fpu_useful_ops += o.fpu_useful_ops;
        self.instrs_retired += o.instrs_retired;
        self.stalls.merge(&o.stalls);
        self.idle += o.idle;
        self.mem_reads += o.mem_reads;
        self.mem_writes += o.mem_writes;
        self.frep_s_iterations += o.frep_s_iterations;
        self.tokens += o.tokens;
        self.digest ^= o.digest.rotate_left(17);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LoopCount {
    Counted(u64),
    Stream,
}

#[derive(Debug, Clone)]
enum SeqItem {
    Op { instr: Instr, xval: u64 },
    Loop { body: Vec<Instr>, body_len: usize, count: LoopCount, stagger: Stagger, iter: u64, pos: usize, started: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum FpStep {
    Idle,
    Issued,
    Stall(StallCause),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum MemDst {
    X(XReg),
    F(FReg),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct CoreMem {
    addr: u64,
    bytes: u64,
    store: Option<u64>,
    dst: Option<MemDst>,
    pop_lane: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum CoreStep {
    Issued,
    Mem(CoreMem),
    Stall(StallCause),
    Halted,
}

/// Memory port a request leaves the core on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortSource {
    Core,
    Lane(usize),
}

/// One core with its FP subsystem and streamer.
#[derive(Debug, Clone)]
pub struct Cpu {
    pub id: usize,
    pub params: MachineParams,
    pub pc: usize,
    pub x: [u64; 32],
    x_ready: [u64; 32],
    pub f: [f64; 32],
    f_ready: [u64; 32],
    pub ssr: bool,
    seq: VecDeque<SeqItem>,
    fill_left: usize,
    pub streamer: Streamer,
    pub halted: bool,
    fp_state: FpStep,
    core_state: CoreStep,
    lane_reqs: [Option<LaneRequest>; 3],
    pub stats: SimReport,
}

impl Cpu {
    pub fn new(id: usize, params: MachineParams) -> Self {
        Self {
            id,
            params,
            pc: 0,
            x: [0; 32],
            x_ready: [0; 32],
            f: [0.0; 32],
            f_ready: [0; 32],
            ssr: false,
            seq: VecDeque::new(),
            fill_left: 0,
            streamer: Streamer::new(params.streamer),
            halted: false,
            fp_state: FpStep::Idle,
            core_state: CoreStep::Halted,
            lane_reqs: [None; 3],
            stats: SimReport::default(),
        }
    }

    /// Restarts execution at pc 0, keeping registers, streamer state and counters.
    pub fn restart(&mut self) {
        self.pc = 0;
        self.halted = false;
    }

    pub fn set_x(&mut self, r: XReg, v: u64) {
        if r != XReg::ZERO {
            self.x[r.0 as usize] = v;
        }
    }

    fn write_x(&mut self, r: XReg, v: u64, ready: u64) {
        if r != XReg::ZERO {
            self.x[r.0 as usize] = v;
            self.x_ready[r.0 as usize] = ready;
        }
    }

    fn x_ok(&self, r: XReg, now: u64) -> bool {
        self.x_ready[r.0 as usize] <= now
    }

    fn operand(&self, o: Operand) -> u64 {
        match o {
            Operand::Reg(r) => self.x[r.0 as usize],
            Operand::Imm(i) => i as u64,
        }
    }

    fn operand_ok(&self, o: Operand, now: u64) -> bool {
        match o {
            Operand::Reg(r) => self.x_ok(r, now),
            Operand::Imm(_) => true,
        }
    }

    fn streamed(&self, r: FReg) -> Option<usize> {
        if self.ssr {
            r.stream_lane()
        } else {
            None
        }
    }

    fn fp_idle(&self) -> bool {
        self.seq.is_empty() && self.fill_left == 0
    }

    /// Readiness of an FP op's operands and destination.
    fn fp_ready(&self, instr: &Instr, now: u64) -> Result<Option<StallCause>, SimError> {
        let (srcs, n) = instr.fp_sources();
        let mut per_lane = [0usize; 3];
        for r in &srcs[..n] {
            match self.streamed(*r) {
                Some(l) => per_lane[l] += 1,
                None if self.f_ready[r.0 as usize] > now => return Ok(Some(StallCause::Dependency)),
                None => {}
            }
        }
        for (l, &k) in per_lane.iter().enumerate() {
            if k > 0 && !self.streamer.read_ready(l, k, now)? {
                return Ok(Some(StallCause::StreamData));
            }
        }
        if let Some(l) = instr.fp_dest().and_then(|d| self.streamed(d)) {
            if !self.streamer.write_ready(l)? {
                return Ok(Some(StallCause::StreamData));
            }
        }
        Ok(None)
    }

    fn fp_read(&mut self, r: FReg) -> f64 {
        match self.streamed(r) {
            Some(l) => self.streamer.pop_read(l),
            None => self.f[r.0 as usize],
        }
    }

    /// Issues a ready FP op into the pipeline.
    fn fp_issue(&mut self, instr: &Instr, xval: u64, now: u64) {
        let (value, lat) = match *instr {
            Instr::Fmadd { rs1, rs2, rs3, .. } => {
                let (a, b, c) = (self.fp_read(rs1), self.fp_read(rs2), self.fp_read(rs3));
                (a.mul_add(b, c), self.params.fpu_latency)
            }
            Instr::Fadd { rs1, rs2, .. } => {
                let (a, b) = (self.fp_read(rs1), self.fp_read(rs2));
                (a + b, self.params.fpu_latency)
            }
            Instr::Fmul { rs1, rs2, .. } => {
                let (a, b) = (self.fp_read(rs1), self.fp_read(rs2));
                (a * b, self.params.fpu_latency)
            }
            Instr::Fmv { src: FSrc::F(r), .. } => (self.fp_read(r), self.params.fmv_latency),
            Instr::Fmv { src: FSrc::X(_), .. } => (f64::from_bits(xval), self.params.fmv_latency),
            _ => unreachable!("only FP compute reaches the FPU"),
        };
        let rd = instr.fp_dest().expect("FP compute has a destination");
        match self.streamed(rd) {
            Some(l) => self.streamer.push_write(l, value, now + lat),
            None => {
                self.f[rd.0 as usize] = value;
                let r = &mut self.f_ready[rd.0 as usize];
                *r = (*r).max(now + lat);
            }
        }
        self.stats.fpu_busy_cycles += 1;
        if instr.is_useful_fp() {
            self.stats.fpu_useful_ops += 1;
        }
    }

    /// FP sequencer: at most one op per cycle from the offload queue or a hardware loop.
    fn fp_step(&mut self, now: u64) -> Result<FpStep, SimError> {
        loop {
            let Some(front) = self.seq.front_mut() else { return Ok(FpStep::Idle) };
            match front {
                SeqItem::Op { instr, xval } => {
                    let (instr, xval) = (*instr, *xval);
                    if let Some(c) = self.fp_ready(&instr, now)? {
                        return Ok(FpStep::Stall(c));
                    }
                    self.seq.pop_front();
                    self.fp_issue(&instr, xval, now);
                    return Ok(FpStep::Issued);
                }
                SeqItem::Loop { body, body_len, count, stagger, iter, pos, started } => {
                    let (filled, body_len, count, stagger, iter, pos, started) =
                        (body.len(), *body_len, *count, *stagger, *iter, *pos, *started);
                    if let LoopCount::Counted(n) = count {
                        if iter >= n {
                            if filled < body_len {
                                return Ok(FpStep::Idle);
                            }
                            self.seq.pop_front();
                            continue;
                        }
                    }
                    if pos == 0 && !started {
                        if count == LoopCount::Stream {
                            match self.streamer.peek_token() {
                                Some(Token::Done) => {
                                    self.streamer.pop_token();
                                    self.set_loop_count(LoopCount::Counted(iter));
                                    continue;
                                }
                                Some(Token::Available) => {
                                    self.streamer.pop_token();
                                    self.stats.frep_s_iterations += 1;
                                }
                                None if !self.streamer.match_work_pending() => return Err(SimError::FrepNoMatch),
                                None => return Ok(FpStep::Stall(StallCause::StreamControl)),
                            }
                        }
                        if let Some(SeqItem::Loop { started, .. }) = self.seq.front_mut() {
                            *started = true;
                        }
                    }
                    let raw = match self.seq.front() {
                        Some(SeqItem::Loop { body, .. }) => body.get(pos).copied(),
                        _ => None,
                    };
                    let Some(raw) = raw else { return Ok(FpStep::Stall(StallCause::Dependency)) };
                    let instr = raw.staggered(stagger, iter);
                    if let Some(c) = self.fp_ready(&instr, now)? {
                        return Ok(FpStep::Stall(c));
                    }
                    self.fp_issue(&instr, 0, now);
                    if let Some(SeqItem::Loop { iter, pos, started, .. }) = self.seq.front_mut() {
                        *pos += 1;
                        if *pos == body_len {
                            *pos = 0;
                            *iter += 1;
                            *started = false;
                        }
                    }
                    return Ok(FpStep::Issued);
                }
            }
        }
    }

    fn set_loop_count(&mut self, c: LoopCount) {
        if let Some(SeqItem::Loop { count, .. }) = self.seq.front_mut() {
            *count = c;
        }
    }

    fn drained(&self, now: u64) -> bool {
        self.fp_idle() && self.f_ready.iter().all(|&r| r <= now) && self.streamer.idle()
    }

    fn core_step(&mut self, now: u64, prog: &Program, fp_issued: bool) -> Result<CoreStep, SimError> {
        if self.halted {
            return Ok(CoreStep::Halted);
        }
        let pc = self.pc;
        let instr = *prog.instrs.get(pc).ok_or(SimError::PcOutOfRange(pc))?;
        if self.fill_left > 0 {
            if !instr.is_fp_compute() {
                return Err(SimError::Decode { pc, msg: "hardware loop body must be FP compute".into() });
            }
            match self.seq.back_mut() {
                Some(SeqItem::Loop { body, .. }) => body.push(instr),
                _ => return Err(SimError::Internal("loop fill without a loop item".into())),
            }
            self.fill_left -= 1;
            self.pc += 1;
            return Ok(CoreStep::Issued);
        }
        let dep = CoreStep::Stall(StallCause::Dependency);
        let step = match instr {
            i if i.is_fp_compute() => {
                let xval = match i {
                    Instr::Fmv { src: FSrc::X(r), .. } => {
                        if !self.x_ok(r, now) {
                            return Ok(dep);
                        }
                        self.x[r.0 as usize]
                    }
                    _ => 0,
                };
                if self.seq.is_empty() && !fp_issued {
                    if let Some(c) = self.fp_ready(&i, now)? {
                        return Ok(CoreStep::Stall(c));
                    }
                    self.fp_issue(&i, xval, now);
                } else if self.seq.len() >= self.params.seq_depth {
                    return Ok(dep);
                } else {
                    self.seq.push_back(SeqItem::Op { instr: i, xval });
                }
                CoreStep::Issued
            }
            Instr::LoadF { rd, base, offset } => {
                if self.streamed(rd).is_some() {
                    return Err(SimError::StreamAccess { lane: rd.0 as usize, msg: "load into a stream register".into() });
                }
                if !self.fp_idle() || !self.x_ok(base, now) {
                    return Ok(dep);
                }
                let addr = self.x[base.0 as usize].wrapping_add(offset as u64);
                CoreStep::Mem(CoreMem { addr, bytes: 8, store: None, dst: Some(MemDst::F(rd)), pop_lane: None })
            }
            Instr::StoreF { rs, base, offset } => {
                if !self.fp_idle() || !self.x_ok(base, now) {
                    return Ok(dep);
                }
                let (value, pop_lane) = match self.streamed(rs) {
                    Some(l) => {
                        if !self.streamer.read_ready(l, 1, now)? {
                            return Ok(CoreStep::Stall(StallCause::StreamData));
                        }
                        (self.streamer.peek_read(l), Some(l))
                    }
                    None if self.f_ready[rs.0 as usize] > now => return Ok(dep),
                    None => (self.f[rs.0 as usize], None),
                };
                let addr = self.x[base.0 as usize].wrapping_add(offset as u64);
                CoreStep::Mem(CoreMem { addr, bytes: 8, store: Some(value.to_bits()), dst: None, pop_lane })
            }
            Instr::LoadI { rd, base, offset, bytes } => {
                if !self.x_ok(base, now) {
                    return Ok(dep);
                }
                let addr = self.x[base.0 as usize].wrapping_add(offset as u64);
                CoreStep::Mem(CoreMem {
                    addr,
                    bytes: u64::from(bytes),
                    store: None,
                    dst: Some(MemDst::X(rd)),
                    pop_lane: None,
                })
            }
            Instr::StoreI { rs, base, offset, bytes } => {
                if !self.x_ok(base, now) || !self.x_ok(rs, now) {
                    return Ok(dep);
                }
                let addr = self.x[base.0 as usize].wrapping_add(offset as u64);
                let store = Some(self.x[rs.0 as usize]);
                CoreStep::Mem(CoreMem { addr, bytes: u64::from(bytes), store, dst: None, pop_lane: None })
            }
            Instr::AddI { rd, rs1, rhs } | Instr::SubI { rd, rs1, rhs } | Instr::ShiftI { rd, rs1, amount: rhs, .. } => {
                if !self.x_ok(rs1, now) || !self.operand_ok(rhs, now) {
                    return Ok(dep);
                }
                let (a, b) = (self.x[rs1.0 as usize], self.operand(rhs));
                let v = match instr {
                    Instr::AddI { .. } => a.wrapping_add(b),
                    Instr::SubI { .. } => a.wrapping_sub(b),
                    Instr::ShiftI { dir: ShiftDir::Left, .. } => a << (b & 63),
                    _ => a >> (b & 63),
                };
                self.write_x(rd, v, now + 1);
                CoreStep::Issued
            }
            Instr::Branch { cond, rs1, rs2, target } => {
                if !self.x_ok(rs1, now) || !self.x_ok(rs2, now) {
                    return Ok(dep);
                }
                let (a, b) = (self.x[rs1.0 as usize], self.x[rs2.0 as usize]);
                let taken = match cond {
                    Cond::Lt => a < b,
                    Cond::Eq => a == b,
                    Cond::Ne => a != b,
                };
                self.stats.instrs_retired += 1;
                self.pc = if taken { target } else { pc + 1 };
                return Ok(CoreStep::Issued);
            }
            Instr::Jump { target } => {
                self.stats.instrs_retired += 1;
                self.pc = target;
                return Ok(CoreStep::Issued);
            }
            Instr::Frep { iters, body_len, stagger } => {
                if !self.x_ok(iters, now) {
                    return Ok(dep);
                }
                if self.seq.len() >= self.params.seq_depth {
                    return Ok(dep);
                }
                let n = self.x[iters.0 as usize];
                self.push_loop(LoopCount::Counted(n), body_len, stagger);
                CoreStep::Issued
            }
            Instr::FrepS { body_len, stagger } => {
                if self.seq.len() >= self.params.seq_depth {
                    return Ok(dep);
                }
                self.push_loop(LoopCount::Stream, body_len, stagger);
                CoreStep::Issued
            }
            Instr::SsrCfgWrite { rs, lane, reg } => {
                if !self.x_ok(rs, now) {
                    return Ok(dep);
                }
                match self.streamer.cfg_write(lane, reg, self.x[rs.0 as usize])? {
                    CfgWrite::Done => CoreStep::Issued,
                    CfgWrite::Busy => return Ok(CoreStep::Stall(StallCause::StreamData)),
                }
            }
            Instr::SsrCfgRead { rd, lane, reg } => {
                let v = self.streamer.cfg_read(lane, reg)?;
                self.write_x(rd, v, now + 1);
                CoreStep::Issued
            }
            Instr::SsrEnable | Instr::SsrDisable => {
                if !self.fp_idle() {
                    return Ok(CoreStep::Stall(StallCause::FenceDrain));
                }
                self.ssr = instr == Instr::SsrEnable;
                CoreStep::Issued
            }
            Instr::FpuFence => {
                if !self.drained(now) {
                    return Ok(CoreStep::Stall(StallCause::FenceDrain));
                }
                CoreStep::Issued
            }
            Instr::Halt => {
                if !self.drained(now) {
                    return Ok(CoreStep::Stall(StallCause::FenceDrain));
                }
                self.halted = true;
                self.stats.instrs_retired += 1;
                return Ok(CoreStep::Issued);
            }
            _ => unreachable!("all instruction kinds are covered"),
        };
        if step == CoreStep::Issued {
            self.stats.instrs_retired += 1;
            self.pc += 1;
        }
        Ok(step)
    }

    fn push_loop(&mut self, count: LoopCount, body_len: u32, stagger: Stagger) {
        let body_len = body_len as usize;
        self.seq.push_back(SeqItem::Loop {
            body: Vec::with_capacity(body_len),
            body_len,
            count,
            stagger,
            iter: 0,
            pos: 0,
            started: false,
        });
        self.fill_left = body_len;
    }

    /// First half of a cycle: internal stream work, FP and core issue, port requests.
    pub fn propose(&mut self, now: u64, prog: &Program) -> Result<(), SimError> {
        self.streamer.step(now)?;
        self.fp_state = self.fp_step(now)?;
        self.core_state = self.core_step(now, prog, self.fp_state == FpStep::Issued)?;
        let core_port = matches!(self.core_state, CoreStep::Mem(_));
        for l in 0..3 {
            self.lane_reqs[l] = if l == 0 && core_port {
                None
            } else {
                self.streamer.lanes[l].request(now, &self.streamer.params)
            };
        }
        Ok(())
    }

    /// Memory requests of this cycle, tagged with their issuing port.
    pub fn requests(&self) -> impl Iterator<Item = (PortSource, MemRequest)> + '_ {
        let core = match self.core_state {
            CoreStep::Mem(m) => Some((PortSource::Core, MemRequest { core: self.id, port: 0, addr: m.addr })),
            _ => None,
        };
        let lanes = self.lane_reqs.iter().enumerate().filter_map(move |(l, r)| {
            r.map(|r| (PortSource::Lane(l), MemRequest { core: self.id, port: l, addr: r.addr }))
        });
        core.into_iter().chain(lanes)
    }

    /// Second half: apply granted accesses and account the cycle.
    /// `granted` is indexed in the order `requests` produced.
    pub fn commit(&mut self, granted: &[bool], mem: &mut Memory, now: u64) -> Result<(), SimError> {
        let mut g = granted.iter().copied();
        let mut core_issued = matches!(self.core_state, CoreStep::Issued);
        let mut core_stall = match self.core_state {
            CoreStep::Stall(c) => Some(c),
            _ => None,
        };
        if let CoreStep::Mem(m) = self.core_state {
            if g.next().unwrap_or(true) {
                match m.store {
                    Some(v) => mem.store(m.addr, m.bytes, v)?,
                    None => {
                        let v = mem.load(m.addr, m.bytes)?;
                        match m.dst {
                            Some(MemDst::X(r)) => self.write_x(r, v, now + self.params.load_latency),
                            Some(MemDst::F(r)) => {
                                self.f[r.0 as usize] = f64::from_bits(v);
                                let rr = &mut self.f_ready[r.0 as usize];
                                *rr = (*rr).max(now + self.params.load_latency);
                            }
                            None => {}
                        }
                    }
                }
                if let Some(l) = m.pop_lane {
                    self.streamer.pop_read(l);
                }
                self.pc += 1;
                self.stats.instrs_retired += 1;
                core_issued = true;
            } else {
                core_stall = Some(StallCause::BankConflict);
            }
        }
        for l in 0..3 {
            let Some(r) = self.lane_reqs[l] else { continue };
            if !g.next().unwrap_or(true) {
                continue;
            }
            let loaded = match r.kind {
                ReqKind::Read => mem.load(r.addr, 8)?,
                ReqKind::Write { value, mask } => {
                    if mask == 0xff {
                        mem.store(r.addr, 8, value)?;
                    } else {
                        mem.store_masked(r.addr, value, mask)?;
                    }
                    0
                }
            };
            let p = self.streamer.params;
            self.streamer.lanes[l].commit(&r, loaded, now, &p);
        }
        if self.fp_state == FpStep::Issued || core_issued {
            self.stats.issue_cycles += 1;
        } else {
            let cause = match (self.fp_state, core_stall) {
                (FpStep::Stall(c), _) => c,
                (_, Some(c)) => c,
                _ => return Err(SimError::Internal(format!("unclassified stall at cycle {now}"))),
            };
            self.stats.stalls.add(cause);
        }
        self.stats.cycles += 1;
        Ok(())
    }

    pub fn report(&self, mem: &Memory) -> SimReport {
        let mut r = self.stats.clone();
        r.mem_reads = mem.reads;
        r.mem_writes = mem.writes;
        r.tokens = self.streamer.tokens_emitted;
        for (i, l) in self.streamer.lanes.iter().enumerate() {
            r.lanes[i] = l.stats;
        }
        r.digest = digest(self, mem);
        r
    }
}

fn digest(cpu: &Cpu, mem: &Memory) -> u64 {
    const PRIME: u64 = 0x100_0000_01b3;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |b: u8| {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    };
    for b in mem.slice(0, mem.size()) {
        eat(*b);
    }
    for v in cpu.x.iter().copied().chain(cpu.f.iter().map(|f| f.to_bits())) {
        for b in v.to_le_bytes() {
            eat(b);
        }
    }
    h
}

/// One core plus its memory.
#[derive(Debug, Clone)]
pub struct Machine {
    pub cpu: Cpu,
    pub mem: Memory,
    pub timing: TimingMode,
    banks: BankArbiter,
    pub now: u64,
}

impl Machine {
    pub fn new(params: MachineParams, mem_bytes: usize, timing: TimingMode, banks: usize) -> Self {
        Self { cpu: Cpu::new(0, params), mem: Memory::new(mem_bytes), timing, banks: BankArbiter::new(banks), now: 0 }
    }

    pub fn with_memory(params: MachineParams, mem: Memory, timing: TimingMode, banks: usize) -> Self {
        Self { cpu: Cpu::new(0, params), mem, timing, banks: BankArbiter::new(banks), now: 0 }
    }

    /// Runs until the core halts.
    pub fn run(&mut self, prog: &Program) -> Result<SimReport, SimError> {
        self.run_until(prog, None)
    }

    /// Runs until the core halts or its pc first reaches `stop`.
    pub fn run_until(&mut self, prog: &Program, stop: Option<usize>) -> Result<SimReport, SimError> {
        prog.validate().map_err(|(pc, msg)| SimError::Decode { pc, msg })?;
        self.cpu.restart();
        let mut reqs = Vec::with_capacity(4);
        while !self.cpu.halted && Some(self.cpu.pc) != stop {
            if self.cpu.stats.cycles >= self.cpu.params.watchdog {
                return Err(SimError::Timeout(self.cpu.stats.cycles));
            }
            self.cpu.propose(self.now, prog)?;
            reqs.clear();
            reqs.extend(self.cpu.requests().map(|(_, r)| r));
            let grants = match self.timing {
                TimingMode::Ideal => vec![true; reqs.len()],
                TimingMode::Banked => self.banks.arbitrate(&reqs, 1),
            };
            self.cpu.commit(&grants, &mut self.mem, self.now)?;
            self.now += 1;
        }
        Ok(self.cpu.report(&self.mem))
    }
}

/// Runs `prog` on a fresh core with ideal memory of `mem`'s contents.
pub fn run(prog: &Program, params: MachineParams, mem: Memory) -> Result<(SimReport, Memory, Cpu), SimError> {
    let mut m = Machine { cpu: Cpu::new(0, params), mem, timing: TimingMode::Ideal, banks: BankArbiter::new(32), now: 0 };
    let rep = m.run(prog)?;
    Ok((rep, m.mem, m.cpu))
}
