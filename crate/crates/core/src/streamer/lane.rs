use std::collections::VecDeque;

use super::config::{Direction, ShadowRegs, StreamConfig, StreamMode};
use super::pure::{advance, affine_at, extract_index};
use super::StreamerParams;
use crate::timing::{Channel, PortArbiter};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Slot {
    pub ready_at: u64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy)]
struct WordSlot {
    ready_at: u64,
    word: u64,
}

/// Index fetch plus serializer for one indexed job.
#[derive(Debug, Clone)]
pub(crate) struct Serializer {
    base: u64,
    width_bytes: u64,
    width: crate::formats::IndexWidth,
    count: u64,
    words_total: u64,
    words_requested: u64,
    words: VecDeque<WordSlot>,
    pub consumed: u64,
}

impl Serializer {
    fn new(cfg: &StreamConfig) -> Self {
        let wb = u64::from(cfg.idx_width.bytes());
        let count = cfg.len();
        let words_total = if count == 0 { 0 } else { ((cfg.idx_base % 8) + count * wb).div_ceil(8) };
        Self {
            base: cfg.idx_base,
            width_bytes: wb,
            width: cfg.idx_width,
            count,
            words_total,
            words_requested: 0,
            words: VecDeque::new(),
            consumed: 0,
        }
    }

    pub fn exhausted(&self) -> bool {
        self.consumed == self.count
    }

    fn needs_word(&self, cap: usize) -> bool {
        self.words_requested < self.words_total && self.words.len() < cap
    }

    fn next_word_addr(&self) -> u64 {
        (self.base & !7) + 8 * self.words_requested
    }

    fn head_word_no(&self) -> u64 {
        self.words_requested - self.words.len() as u64
    }

    pub fn peek(&self, now: u64) -> Option<u64> {
        if self.exhausted() {
            return None;
        }
        let b = (self.base % 8) + self.consumed * self.width_bytes;
        let head = self.words.front()?;
        if head.ready_at > now || b / 8 != self.head_word_no() {
            return None;
        }
        Some(extract_index(head.word, b % 8, self.width))
    }

    pub fn pop(&mut self) {
        let b = (self.base % 8) + self.consumed * self.width_bytes;
        self.consumed += 1;
        let next = b + self.width_bytes;
        if next / 8 != b / 8 || self.exhausted() {
            self.words.pop_front();
        }
    }

    fn in_flight(&self, now: u64) -> usize {
        self.words.iter().filter(|w| w.ready_at > now).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum MatchDirective {
    Emit(u64),
    Zero,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Egress {
    pub accepted: u64,
    cur: Option<(u64, u64, u8, u64)>,
    ready: VecDeque<(u64, u64, u8, u64)>,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct Job {
    pub cfg: StreamConfig,
    pub total: u64,
    /// Elements moved between memory and the FIFO.
    pub issued: u64,
    /// Write jobs: values the register side has pushed for this job.
    pub accepted: u64,
    ctr: Vec<u64>,
    pub ser: Option<Serializer>,
    pub directives: VecDeque<MatchDirective>,
    pub match_pos: u64,
    pub cmp_done: bool,
    pub eg: Egress,
}

impl Job {
    pub fn new(cfg: StreamConfig) -> Self {
        let ser = cfg.mode.uses_indices().then(|| Serializer::new(&cfg));
        let total = cfg.len();
        Self {
            ctr: vec![0; cfg.loops.len()],
            cfg,
            total,
            issued: 0,
            accepted: 0,
            ser,
            directives: VecDeque::new(),
            match_pos: 0,
            cmp_done: false,
            eg: Egress::default(),
        }
    }

    pub fn mode(&self) -> StreamMode {
        self.cfg.mode
    }

    fn finished(&self) -> bool {
        match self.cfg.mode {
            StreamMode::Affine | StreamMode::Indirect => self.issued == self.total,
            StreamMode::MatchIntersect | StreamMode::MatchUnion => self.cmp_done && self.directives.is_empty(),
            StreamMode::Egress => {
                self.eg.done && self.eg.cur.is_none() && self.eg.ready.is_empty() && self.issued == self.eg.accepted
            }
        }
    }

    /// Whether a register-side write may still be attributed to this job.
    fn takes_writes(&self) -> bool {
        match self.cfg.mode {
            StreamMode::Egress => !(self.eg.done && self.accepted >= self.eg.accepted),
            _ => self.accepted < self.total,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReqKind {
    Read,
    Write { value: u64, mask: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LaneRequest {
    pub lane: usize,
    pub channel: Channel,
    pub addr: u64,
    pub kind: ReqKind,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LaneStats {
    pub data_accesses: u64,
    pub index_accesses: u64,
    pub zeros_injected: u64,
    pub skips: u64,
    pub first_data_cycle: Option<u64>,
    pub last_data_cycle: u64,
    pub jobs_completed: u64,
}

impl LaneStats {
    /// Data words per cycle between the first and last data access.
    pub fn data_throughput(&self) -> f64 {
        match self.first_data_cycle {
            Some(f) if self.data_accesses > 0 => self.data_accesses as f64 / (self.last_data_cycle - f + 1) as f64,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Lane {
    pub id: usize,
    pub(crate) shadow: ShadowRegs,
    pub(crate) active: Option<Job>,
    pub(crate) pending: Option<Job>,
    pub(crate) fifo: VecDeque<Slot>,
    fifo_dir: Direction,
    pub(crate) arb: PortArbiter,
    pub length: u64,
    pub stats: LaneStats,
}

impl Lane {
    pub fn new(id: usize) -> Self {
        Self {
            id,
            shadow: ShadowRegs::default(),
            active: None,
            pending: None,
            fifo: VecDeque::new(),
            fifo_dir: Direction::Read,
            arb: PortArbiter::default(),
            length: 0,
            stats: LaneStats::default(),
        }
    }

    pub fn idle(&self) -> bool {
        self.active.is_none() && self.pending.is_none() && (self.fifo_dir == Direction::Read || self.fifo.is_empty())
    }

    /// Direction seen by register accesses, if any job or data is around.
    pub fn access_dir(&self) -> Option<Direction> {
        if let Some(j) = &self.active {
            return Some(j.cfg.direction);
        }
        if let Some(j) = &self.pending {
            if self.fifo.is_empty() || self.fifo_dir == j.cfg.direction {
                return Some(j.cfg.direction);
            }
        }
        (!self.fifo.is_empty()).then_some(self.fifo_dir)
    }

    pub(crate) fn promote(&mut self) {
        if self.active.is_none() {
            if let Some(j) = &self.pending {
                if self.fifo.is_empty() || self.fifo_dir == j.cfg.direction {
                    self.fifo_dir = j.cfg.direction;
                    self.active = self.pending.take();
                }
            }
        }
    }

    /// Retires a finished active job. Returns true if one completed.
    pub(crate) fn retire(&mut self) -> bool {
        let done = self.active.as_ref().is_some_and(Job::finished);
        if done {
            let j = self.active.take().unwrap();
            if j.cfg.mode == StreamMode::Egress {
                self.length = j.eg.accepted;
            }
            self.stats.jobs_completed += 1;
        }
        done
    }

    pub fn ready_reads(&self, now: u64) -> usize {
        self.fifo.iter().take_while(|s| s.ready_at <= now).count()
    }

    pub(crate) fn pop_read(&mut self) -> f64 {
        self.fifo.pop_front().expect("caller checked readiness").value
    }

    /// Which job a register write would land in; `None` if no job takes it.
    pub(crate) fn write_target_ok(&self) -> bool {
        let pending_ok = |p: &Job| p.cfg.direction == Direction::Write && p.takes_writes();
        match (&self.active, &self.pending) {
            (Some(a), _) if a.cfg.direction == Direction::Write && a.takes_writes() => true,
            (Some(a), Some(p)) => a.cfg.direction == Direction::Write && pending_ok(p),
            (None, Some(p)) => pending_ok(p) && (self.fifo.is_empty() || self.fifo_dir == Direction::Write),
            _ => false,
        }
    }

    pub(crate) fn push_write(&mut self, value: f64, ready_at: u64) {
        match &mut self.active {
            Some(a) if a.cfg.direction == Direction::Write && a.takes_writes() => a.accepted += 1,
            _ => self.pending.as_mut().expect("caller checked the target").accepted += 1,
        }
        self.fifo_dir = Direction::Write;
        self.fifo.push_back(Slot { ready_at, value });
    }

    fn outstanding(&self, now: u64) -> usize {
        let data = if self.fifo_dir == Direction::Read {
            self.fifo.iter().filter(|s| s.ready_at > now).count()
        } else {
            0
        };
        data + self.active.as_ref().and_then(|j| j.ser.as_ref()).map_or(0, |s| s.in_flight(now))
    }

    /// Handles non-memory directive work (zero injection).
    pub(crate) fn inject(&mut self, now: u64, p: &StreamerParams) {
        let Some(j) = &mut self.active else { return };
        if j.directives.front() == Some(&MatchDirective::Zero) && self.fifo.len() < p.fifo_depth {
            j.directives.pop_front();
            j.issued += 1;
            self.fifo.push_back(Slot { ready_at: now + p.mem_latency, value: 0.0 });
            self.stats.zeros_injected += 1;
        }
    }

    pub(crate) fn can_accept_index(&self, p: &StreamerParams) -> bool {
        match &self.active {
            Some(j) if j.cfg.mode == StreamMode::Egress && !j.eg.done => {
                j.eg.accepted < j.issued + u64::from(j.cfg.idx_lead) + p.fifo_depth as u64
            }
            _ => false,
        }
    }

    /// Joint index from the comparator, coalesced into index words.
    pub(crate) fn accept_index(&mut self, idx: u64) {
        let j = self.active.as_mut().expect("checked by can_accept_index");
        let wb = u64::from(j.cfg.idx_width.bytes());
        let pos = j.eg.accepted;
        let addr = j.cfg.idx_base + pos * wb;
        let (waddr, off) = (addr & !7, addr % 8);
        if j.eg.cur.is_some_and(|c| c.0 != waddr) {
            let c = j.eg.cur.take().unwrap();
            j.eg.ready.push_back(c);
        }
        let c = j.eg.cur.get_or_insert((waddr, 0, 0, pos));
        c.1 |= (idx & j.cfg.idx_width.max_index()) << (8 * off);
        c.2 |= (((1u16 << wb) - 1) as u8) << off;
        c.3 = pos;
        if off + wb == 8 {
            let c = j.eg.cur.take().unwrap();
            j.eg.ready.push_back(c);
        }
        j.eg.accepted += 1;
    }

    pub(crate) fn finish_egress(&mut self) {
        let j = self.active.as_mut().expect("egress job present");
        j.eg.done = true;
        if let Some(c) = j.eg.cur.take() {
            j.eg.ready.push_back(c);
        }
    }

    /// The request this lane puts on its port this cycle.
    pub(crate) fn request(&self, now: u64, p: &StreamerParams) -> Option<LaneRequest> {
        let j = self.active.as_ref()?;
        let room = self.fifo.len() < p.fifo_depth;
        let head_ready = self.fifo_dir == Direction::Write && self.fifo.front().is_some_and(|s| s.ready_at <= now);
        let may_fetch = self.outstanding(now) < p.outstanding;
        let cfg = &j.cfg;
        let ser_needs = j.ser.as_ref().is_some_and(|s| s.needs_word(p.idx_fifo_words)) && may_fetch;
        let (idx_pending, data_pending) = match (cfg.mode, cfg.direction) {
            (StreamMode::Affine, Direction::Read) => (false, j.issued < j.total && room && may_fetch),
            (StreamMode::Affine, Direction::Write) => (false, j.issued < j.total && head_ready),
            (StreamMode::Indirect, Direction::Read) => {
                (ser_needs, j.ser.as_ref().unwrap().peek(now).is_some() && room && may_fetch)
            }
            (StreamMode::Indirect, Direction::Write) => {
                (ser_needs, j.ser.as_ref().unwrap().peek(now).is_some() && head_ready)
            }
            (StreamMode::MatchIntersect | StreamMode::MatchUnion, _) => (
                ser_needs && !j.cmp_done,
                matches!(j.directives.front(), Some(MatchDirective::Emit(_))) && room && may_fetch,
            ),
            (StreamMode::Egress, _) => (
                j.eg.ready.front().is_some_and(|w| w.3 < j.issued + u64::from(cfg.idx_lead)),
                head_ready && j.issued < j.eg.accepted,
            ),
        };
        let ch = self.arb.pick(idx_pending, data_pending)?;
        let (addr, kind) = match ch {
            Channel::Index => match cfg.mode {
                StreamMode::Egress => {
                    let w = j.eg.ready.front().unwrap();
                    (w.0, ReqKind::Write { value: w.1, mask: w.2 })
                }
                _ => (j.ser.as_ref().unwrap().next_word_addr(), ReqKind::Read),
            },
            Channel::Data => {
                let addr = match cfg.mode {
                    StreamMode::Affine => affine_at(cfg.data_base, &cfg.loops, &j.ctr),
                    StreamMode::Indirect => {
                        cfg.data_base.wrapping_add(j.ser.as_ref().unwrap().peek(now).unwrap() << cfg.shift)
                    }
                    StreamMode::MatchIntersect | StreamMode::MatchUnion => match j.directives.front() {
                        Some(MatchDirective::Emit(pos)) => cfg.data_base.wrapping_add(pos << cfg.shift),
                        _ => unreachable!("data pending implies an emit directive"),
                    },
                    StreamMode::Egress => cfg.data_base.wrapping_add(j.issued << cfg.shift),
                };
                let kind = match cfg.direction {
                    Direction::Read => ReqKind::Read,
                    Direction::Write => ReqKind::Write { value: self.fifo.front().unwrap().value.to_bits(), mask: 0xff },
                };
                (addr, kind)
            }
        };
        Some(LaneRequest { lane: self.id, channel: ch, addr, kind })
    }

    /// Applies a granted request. `loaded` carries the word for reads.
    pub(crate) fn commit(&mut self, req: &LaneRequest, loaded: u64, now: u64, p: &StreamerParams) {
        self.arb.granted(req.channel);
        let j = self.active.as_mut().expect("requests come from the active job");
        match req.channel {
            Channel::Index => {
                self.stats.index_accesses += 1;
                if j.cfg.mode == StreamMode::Egress {
                    j.eg.ready.pop_front();
                } else {
                    let s = j.ser.as_mut().unwrap();
                    s.words.push_back(WordSlot { ready_at: now + p.mem_latency, word: loaded });
                    s.words_requested += 1;
                }
            }
            Channel::Data => {
                self.stats.data_accesses += 1;
                self.stats.first_data_cycle.get_or_insert(now);
                self.stats.last_data_cycle = now;
                match j.cfg.direction {
                    Direction::Read => self
                        .fifo
                        .push_back(Slot { ready_at: now + p.mem_latency, value: f64::from_bits(loaded) }),
                    Direction::Write => {
                        self.fifo.pop_front();
                    }
                }
                j.issued += 1;
                match j.cfg.mode {
                    StreamMode::Affine => advance(&mut j.ctr, &j.cfg.loops),
                    StreamMode::Indirect => j.ser.as_mut().unwrap().pop(),
                    StreamMode::MatchIntersect | StreamMode::MatchUnion => {
                        j.directives.pop_front();
                    }
                    StreamMode::Egress => {}
                }
            }
        }
    }
}
