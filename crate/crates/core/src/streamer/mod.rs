//! Stream semantic registers: three lanes (two indirection/matching read
//! lanes, one egress lane) sharing an index comparator and a stream-control
//! queue.

mod config;
mod lane;
mod pure;

use std::collections::VecDeque;

pub use config::{
    cfg_reg_by_name, encode_idx_cfg, mode_code, reg, ConfigFault, Direction, ShadowRegs, StreamConfig, StreamMode,
    BROADCAST_LANE, MAX_DIMS, NUM_LANES,
};
pub use lane::{Lane, LaneRequest, LaneStats, ReqKind};
pub use pure::{
    affine_addresses, coalesce_indices, compare_step, compare_streams, extract_index, indirect_addresses,
    serialize_indices, CompareStep, Directive, EventKind, IndexWord, JointStreamEvent, MatchKind,
};

use lane::{Job, MatchDirective};
use serde::{Deserialize, Serialize};

use crate::machine::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StreamerParams {
    pub fifo_depth: usize,
    pub idx_fifo_words: usize,
    pub outstanding: usize,
    pub directive_depth: usize,
    pub token_depth: usize,
    pub mem_latency: u64,
}

impl Default for StreamerParams {
    fn default() -> Self {
        Self { fifo_depth: 4, idx_fifo_words: 2, outstanding: 4, directive_depth: 4, token_depth: 8, mem_latency: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Token {
    Available,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfgWrite {
    Done,
    /// Launch refused because the lane's shadow job slot is occupied.
    Busy,
}

#[derive(Debug, Clone, Copy)]
struct Comparator {
    kind: MatchKind,
    egress: bool,
    last: [Option<u64>; 2],
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ComparatorStats {
    pub comparisons: u64,
    pub events: u64,
    pub skips: u64,
    pub jobs: u64,
}

#[derive(Debug, Clone)]
pub struct Streamer {
    pub params: StreamerParams,
    pub lanes: [Lane; NUM_LANES],
    cmp: Option<Comparator>,
    tokens: VecDeque<Token>,
    pub cmp_stats: ComparatorStats,
    pub tokens_emitted: u64,
}

impl Streamer {
    pub fn new(params: StreamerParams) -> Self {
        Self {
            params,
            lanes: [Lane::new(0), Lane::new(1), Lane::new(2)],
            cmp: None,
            tokens: VecDeque::new(),
            cmp_stats: ComparatorStats::default(),
            tokens_emitted: 0,
        }
    }

    fn lane_ref(&self, lane: u8) -> Result<&Lane, SimError> {
        self.lanes
            .get(lane as usize)
            .ok_or_else(|| SimError::Config { lane: lane as usize, msg: "no such lane".into() })
    }

    pub fn cfg_write(&mut self, lane: u8, reg: u8, value: u64) -> Result<CfgWrite, SimError> {
        if reg >= 32 {
            return Err(SimError::Config { lane: lane as usize, msg: format!("config register {reg} out of range") });
        }
        if lane == BROADCAST_LANE {
            if reg == reg::LAUNCH_READ || reg == reg::LAUNCH_WRITE {
                return Err(SimError::Config { lane: lane as usize, msg: "launch cannot be broadcast".into() });
            }
            for l in &mut self.lanes {
                l.shadow.write(reg, value);
            }
            return Ok(CfgWrite::Done);
        }
        self.lane_ref(lane)?;
        let l = &mut self.lanes[lane as usize];
        let dir = match reg {
            reg::LAUNCH_READ => Direction::Read,
            reg::LAUNCH_WRITE => Direction::Write,
            reg::LENGTH | reg::STATUS => {
                return Err(SimError::Config { lane: lane as usize, msg: "register is read-only".into() })
            }
            _ => {
                l.shadow.write(reg, value);
                return Ok(CfgWrite::Done);
            }
        };
        if l.pending.is_some() {
            return Ok(CfgWrite::Busy);
        }
        let cfg = l
            .shadow
            .launch(lane as usize, dir, value)
            .map_err(|ConfigFault(msg)| SimError::Config { lane: lane as usize, msg })?;
        l.pending = Some(Job::new(cfg));
        Ok(CfgWrite::Done)
    }

    pub fn cfg_read(&self, lane: u8, reg: u8) -> Result<u64, SimError> {
        let l = self.lane_ref(lane)?;
        Ok(match reg {
            reg::LENGTH => l.length,
            reg::STATUS => u64::from(l.active.is_some()) | (u64::from(l.pending.is_some()) << 1),
            r if r < 32 => l.shadow.read(r),
            r => return Err(SimError::Config { lane: lane as usize, msg: format!("config register {r} out of range") }),
        })
    }

    /// Whether `n` values can be popped from a read lane now.
    pub fn read_ready(&self, lane: usize, n: usize, now: u64) -> Result<bool, SimError> {
        let l = &self.lanes[lane];
        match l.access_dir() {
            Some(Direction::Read) => {}
            Some(Direction::Write) => return Err(SimError::WrongDirection { lane }),
            None => return Err(SimError::StreamAccess { lane, msg: "read with no configured job".into() }),
        }
        if l.ready_reads(now) >= n {
            return Ok(true);
        }
        let more = l.active.is_some() || l.pending.is_some() || l.fifo.len() >= n;
        if !more {
            return Err(SimError::StreamAccess { lane, msg: "read past end of stream".into() });
        }
        Ok(false)
    }

    pub fn peek_read(&self, lane: usize) -> f64 {
        self.lanes[lane].fifo.front().expect("caller checked readiness").value
    }

    pub fn pop_read(&mut self, lane: usize) -> f64 {
        self.lanes[lane].pop_read()
    }

    /// Whether a value can be pushed into a write lane now.
    pub fn write_ready(&self, lane: usize) -> Result<bool, SimError> {
        let l = &self.lanes[lane];
        if !l.write_target_ok() {
            return match l.access_dir() {
                Some(Direction::Read) => Err(SimError::WrongDirection { lane }),
                None => Err(SimError::StreamAccess { lane, msg: "write with no configured job".into() }),
                Some(Direction::Write) => {
                    // An egress job may still receive indices.
                    let waiting = l.active.as_ref().is_some_and(|j| j.mode() == StreamMode::Egress && !j.eg.done);
                    if waiting {
                        Ok(false)
                    } else {
                        Err(SimError::StreamAccess { lane, msg: "write past end of stream".into() })
                    }
                }
            };
        }
        Ok(l.fifo.len() < self.params.fifo_depth)
    }

    pub fn push_write(&mut self, lane: usize, value: f64, ready_at: u64) {
        self.lanes[lane].push_write(value, ready_at);
    }

    pub fn peek_token(&self) -> Option<Token> {
        self.tokens.front().copied()
    }

    pub fn pop_token(&mut self) -> Option<Token> {
        self.tokens.pop_front()
    }

    /// True if a stream-controlled loop may still receive a token.
    pub fn match_work_pending(&self) -> bool {
        !self.tokens.is_empty()
            || self.cmp.is_some()
            || self.lanes[..2]
                .iter()
                .any(|l| [&l.active, &l.pending].into_iter().flatten().any(|j| j.mode().is_match() && !j.cmp_done))
    }

    pub fn idle(&self) -> bool {
        self.lanes.iter().all(Lane::idle) && self.cmp.is_none()
    }

    /// Per-cycle internal work: job promotion, comparator, zero injection, retirement.
    pub fn step(&mut self, now: u64) -> Result<(), SimError> {
        for l in &mut self.lanes {
            l.promote();
        }
        self.comparator_step(now)?;
        for l in &mut self.lanes[..2] {
            l.inject(now, &self.params);
        }
        for l in &mut self.lanes {
            if l.retire() {
                l.promote();
            }
        }
        Ok(())
    }

    fn comparator_step(&mut self, now: u64) -> Result<(), SimError> {
        if self.cmp.is_none() {
            let (Some(a), Some(b)) = (&self.lanes[0].active, &self.lanes[1].active) else { return Ok(()) };
            if !(a.mode().is_match() && b.mode().is_match()) || a.cmp_done || b.cmp_done {
                return Ok(());
            }
            if a.mode() != b.mode() {
                return Err(SimError::Config { lane: 1, msg: "matching lanes disagree on intersect/union".into() });
            }
            let kind = MatchKind::of(a.mode()).unwrap();
            let egress = self.lanes[2].active.as_ref().is_some_and(|j| j.mode() == StreamMode::Egress && !j.eg.done);
            if kind == MatchKind::Union && !egress {
                return Err(SimError::UnionWithoutEgress);
            }
            self.cmp = Some(Comparator { kind, egress, last: [None, None] });
            self.cmp_stats.jobs += 1;
        }
        let p = self.params;
        let cmp = self.cmp.unwrap();
        if self.tokens.len() >= p.token_depth
            || self.lanes[..2].iter().any(|l| l.active.as_ref().unwrap().directives.len() >= p.directive_depth)
            || (cmp.egress && !self.lanes[2].can_accept_index(&p))
        {
            return Ok(());
        }
        let mut heads = [None, None];
        for (s, h) in heads.iter_mut().enumerate() {
            let ser = self.lanes[s].active.as_ref().unwrap().ser.as_ref().unwrap();
            if ser.exhausted() {
                continue;
            }
            match ser.peek(now) {
                Some(i) => *h = Some(i),
                None => return Ok(()),
            }
        }
        self.cmp_stats.comparisons += 1;
        let mut pop = [false, false];
        match compare_step(heads[0], heads[1], cmp.kind) {
            CompareStep::Emit { event, pop_left, pop_right } => {
                pop = [pop_left, pop_right];
                for (s, d) in [event.left, event.right].into_iter().enumerate() {
                    let j = self.lanes[s].active.as_mut().unwrap();
                    match d {
                        Directive::EmitValue => {
                            j.directives.push_back(MatchDirective::Emit(j.match_pos));
                            j.match_pos += 1;
                        }
                        Directive::InjectZero => j.directives.push_back(MatchDirective::Zero),
                        Directive::Skip => {}
                    }
                }
                self.tokens.push_back(Token::Available);
                self.tokens_emitted += 1;
                self.cmp_stats.events += 1;
                if cmp.egress {
                    self.lanes[2].accept_index(event.index);
                }
            }
            step @ (CompareStep::SkipLeft | CompareStep::SkipRight) => {
                let s = usize::from(step == CompareStep::SkipRight);
                pop[s] = true;
                let j = self.lanes[s].active.as_mut().unwrap();
                j.match_pos += 1;
                self.lanes[s].stats.skips += 1;
                self.cmp_stats.skips += 1;
            }
            CompareStep::Done => {
                self.tokens.push_back(Token::Done);
                for l in &mut self.lanes[..2] {
                    l.active.as_mut().unwrap().cmp_done = true;
                }
                if cmp.egress {
                    self.lanes[2].finish_egress();
                }
                self.cmp = None;
                return Ok(());
            }
        }
        for (s, &popped) in pop.iter().enumerate() {
            if !popped {
                continue;
            }
            let idx = heads[s].unwrap();
            let c = self.cmp.as_mut().unwrap();
            if c.last[s].is_some_and(|last| idx <= last) {
                return Err(SimError::UnsortedIndices { lane: s });
            }
            c.last[s] = Some(idx);
            self.lanes[s].active.as_mut().unwrap().ser.as_mut().unwrap().pop();
        }
        Ok(())
    }
}
