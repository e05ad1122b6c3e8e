//! Stateless reference semantics of the address generators and comparator.
//! The cycle model steps through the same helpers one element at a time.

use super::config::{StreamConfig, StreamMode};
use crate::formats::IndexWidth;

/// Buffered 64-bit index word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexWord {
    pub raw: u64,
    pub valid_count: u32,
}

impl IndexWord {
    pub fn full(raw: u64, width: IndexWidth) -> Self {
        Self { raw, valid_count: width.per_word() }
    }
}

/// Nested-loop address stream, innermost level first.
pub fn affine_addresses(cfg: &StreamConfig) -> Vec<u64> {
    let total = cfg.loops.iter().map(|l| l.1).product::<u64>();
    let mut out = Vec::with_capacity(total as usize);
    let mut ctr = vec![0u64; cfg.loops.len()];
    for _ in 0..total {
        out.push(affine_at(cfg.data_base, &cfg.loops, &ctr));
        advance(&mut ctr, &cfg.loops);
    }
    out
}

pub(crate) fn affine_at(base: u64, loops: &[(u64, u64)], ctr: &[u64]) -> u64 {
    loops.iter().zip(ctr).fold(base, |a, (l, c)| a.wrapping_add(c.wrapping_mul(l.0)))
}

pub(crate) fn advance(ctr: &mut [u64], loops: &[(u64, u64)]) {
    for (c, l) in ctr.iter_mut().zip(loops) {
        *c += 1;
        if *c < l.1 {
            return;
        }
        *c = 0;
    }
}

/// Extracts one little-endian index lane.
pub fn extract_index(word: u64, byte_offset: u64, width: IndexWidth) -> u64 {
    let v = word >> (8 * byte_offset);
    match width {
        IndexWidth::W64 => v,
        w => v & w.max_index(),
    }
}

/// Serializes `count` indices starting `byte_offset` bytes into the first word.
pub fn serialize_indices(words: &[IndexWord], width: IndexWidth, byte_offset: u64, count: usize) -> Vec<u64> {
    let w = u64::from(width.bytes());
    (0..count as u64)
        .map(|i| {
            let b = byte_offset + i * w;
            extract_index(words[(b / 8) as usize].raw, b % 8, width)
        })
        .collect()
}

/// Reverses [`serialize_indices`]: packs indices into words with byte-enable masks.
/// Returns (word offset from the aligned base, word, mask).
pub fn coalesce_indices(indices: &[u64], width: IndexWidth, byte_offset: u64) -> Vec<(u64, u64, u8)> {
    let w = u64::from(width.bytes());
    let mut out: Vec<(u64, u64, u8)> = Vec::new();
    for (i, &idx) in indices.iter().enumerate() {
        let b = byte_offset + i as u64 * w;
        let (k, off) = (b / 8, b % 8);
        if out.last().map(|e| e.0) != Some(k) {
            out.push((k, 0, 0));
        }
        let e = out.last_mut().unwrap();
        e.1 |= (idx & width.max_index()) << (8 * off);
        e.2 |= (((1u16 << w) - 1) as u8) << off;
    }
    out
}

/// `data_base + (index << shift)` for each index, bounds-checked against memory.
pub fn indirect_addresses(data_base: u64, shift: u32, indices: &[u64], mem_size: u64) -> Result<Vec<u64>, u64> {
    indices
        .iter()
        .map(|&i| {
            let a = data_base.wrapping_add(i << shift);
            if a.checked_add(8).is_some_and(|e| e <= mem_size) {
                Ok(a)
            } else {
                Err(a)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Directive {
    EmitValue,
    InjectZero,
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Pair,
    LeftOnly,
    RightOnly,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointStreamEvent {
    pub kind: EventKind,
    pub index: u64,
    pub left: Directive,
    pub right: Directive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchKind {
    Intersect,
    Union,
}

impl MatchKind {
    pub fn of(mode: StreamMode) -> Option<Self> {
        match mode {
            StreamMode::MatchIntersect => Some(Self::Intersect),
            StreamMode::MatchUnion => Some(Self::Union),
            _ => None,
        }
    }
}

/// Outcome of one comparison. `None` heads mean that side is exhausted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareStep {
    /// Consume the heads flagged true and emit an event.
    Emit { event: JointStreamEvent, pop_left: bool, pop_right: bool },
    /// Intersection fast-forward of one side; nothing reaches the registers.
    SkipLeft,
    SkipRight,
    Done,
}

pub fn compare_step(left: Option<u64>, right: Option<u64>, kind: MatchKind) -> CompareStep {
    use Directive::*;
    let emit = |kind, index, l, r, pop_left, pop_right| CompareStep::Emit {
        event: JointStreamEvent { kind, index, left: l, right: r },
        pop_left,
        pop_right,
    };
    match (left, right, kind) {
        (Some(l), Some(r), _) if l == r => emit(EventKind::Pair, l, EmitValue, EmitValue, true, true),
        (Some(l), Some(r), MatchKind::Intersect) => {
            if l < r {
                CompareStep::SkipLeft
            } else {
                CompareStep::SkipRight
            }
        }
        (_, _, MatchKind::Intersect) => CompareStep::Done,
        (Some(l), Some(r), MatchKind::Union) if l < r => emit(EventKind::LeftOnly, l, EmitValue, InjectZero, true, false),
        (Some(_), Some(r), MatchKind::Union) => emit(EventKind::RightOnly, r, InjectZero, EmitValue, false, true),
        (Some(l), None, MatchKind::Union) => emit(EventKind::LeftOnly, l, EmitValue, InjectZero, true, false),
        (None, Some(r), MatchKind::Union) => emit(EventKind::RightOnly, r, InjectZero, EmitValue, false, true),
        (None, None, MatchKind::Union) => CompareStep::Done,
    }
}

/// Full joint stream of two sorted index sequences, ending in `Done`.
/// Errors with the side (0 left, 1 right) whose input is not strictly increasing.
pub fn compare_streams(left: &[u64], right: &[u64], kind: MatchKind) -> Result<Vec<JointStreamEvent>, usize> {
    for (side, s) in [left, right].into_iter().enumerate() {
        if s.windows(2).any(|w| w[0] >= w[1]) {
            return Err(side);
        }
    }
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    loop {
        match compare_step(left.get(i).copied(), right.get(j).copied(), kind) {
            CompareStep::Emit { event, pop_left, pop_right } => {
                out.push(event);
                i += pop_left as usize;
                j += pop_right as usize;
            }
            CompareStep::SkipLeft => i += 1,
            CompareStep::SkipRight => j += 1,
            CompareStep::Done => {
                out.push(JointStreamEvent {
                    kind: EventKind::Done,
                    index: 0,
                    left: Directive::Skip,
                    right: Directive::Skip,
                });
                return Ok(out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streamer::config::Direction;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[test]
    fn affine_examples() {
        let c = StreamConfig::affine(0x100, vec![(8, 4)], Direction::Read);
        assert_eq!(affine_addresses(&c), vec![0x100, 0x108, 0x110, 0x118]);
        let c = StreamConfig::affine(0, vec![(8, 2), (64, 3)], Direction::Read);
        let mut oracle = Vec::new();
        for j in 0..3u64 {
            for i in 0..2u64 {
                oracle.push(i * 8 + j * 64);
            }
        }
        assert_eq!(affine_addresses(&c), oracle);
        assert_eq!(affine_addresses(&StreamConfig::affine(0x40, vec![(8, 1)], Direction::Read)), vec![0x40]);
        assert!(affine_addresses(&StreamConfig::affine(0x40, vec![(8, 0)], Direction::Read)).is_empty());
    }

    #[test]
    fn serializer_examples() {
        let w = IndexWord::full(0x0004_0003_0002_0001, IndexWidth::W16);
        // Oracle: slice the little-endian byte image two bytes at a time.
        let bytes = w.raw.to_le_bytes();
        let lanes: Vec<u64> = bytes.chunks(2).map(|c| u64::from(u16::from_le_bytes([c[0], c[1]]))).collect();
        assert_eq!(serialize_indices(&[w], IndexWidth::W16, 0, 4), lanes);
        assert_eq!(serialize_indices(&[w], IndexWidth::W16, 2, 3), lanes[1..].to_vec());
        let words = [IndexWord::full(7, IndexWidth::W64), IndexWord::full(u64::MAX, IndexWidth::W64)];
        assert_eq!(serialize_indices(&words, IndexWidth::W64, 0, 2), vec![7, u64::MAX]);
    }

    #[test]
    fn indirect_examples() {
        assert_eq!(indirect_addresses(0x1000, 3, &[0, 2, 5], 1 << 20).unwrap(), vec![0x1000, 0x1000 + 16, 0x1000 + 40]);
        assert_eq!(indirect_addresses(0x1000, 0, &[0], 1 << 20).unwrap(), vec![0x1000]);
        // Row j of a row-major matrix with 2^3 columns of 8-byte elements is 64 bytes.
        assert_eq!(indirect_addresses(0x2000, 6, &[5], 1 << 20).unwrap(), vec![0x2000 + 5 * 64]);
        assert_eq!(indirect_addresses(0, 3, &[1000], 64), Err(8000));
    }

    #[test]
    fn compare_examples() {
        let ev = compare_streams(&[1, 3, 5, 7], &[3, 4, 7, 9], MatchKind::Intersect).unwrap();
        let got: Vec<_> = ev.iter().map(|e| (e.kind, e.index)).collect();
        assert_eq!(got, vec![(EventKind::Pair, 3), (EventKind::Pair, 7), (EventKind::Done, 0)]);

        let ev = compare_streams(&[1, 3], &[3, 9], MatchKind::Union).unwrap();
        let got: Vec<_> = ev.iter().map(|e| (e.kind, e.index)).collect();
        assert_eq!(
            got,
            vec![(EventKind::LeftOnly, 1), (EventKind::Pair, 3), (EventKind::RightOnly, 9), (EventKind::Done, 0)]
        );
        assert_eq!(ev[0].right, Directive::InjectZero);
        assert_eq!(ev[2].left, Directive::InjectZero);

        let ev = compare_streams(&[1, 2], &[], MatchKind::Intersect).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!(compare_streams(&[2, 1], &[], MatchKind::Union), Err(0));
    }

    fn sorted_set(max_len: usize) -> impl Strategy<Value = Vec<u64>> {
        proptest::collection::btree_set(0u64..200, 0..=max_len).prop_map(|s| s.into_iter().collect())
    }

    proptest! {
        #[test]
        fn matches_set_operations(a in sorted_set(64), b in sorted_set(64)) {
            let sa: BTreeSet<u64> = a.iter().copied().collect();
            let sb: BTreeSet<u64> = b.iter().copied().collect();
            let inter = compare_streams(&a, &b, MatchKind::Intersect).unwrap();
            let got: Vec<u64> = inter.iter().filter(|e| e.kind != EventKind::Done).map(|e| e.index).collect();
            prop_assert_eq!(got, sa.intersection(&sb).copied().collect::<Vec<_>>());
            prop_assert!(inter.iter().all(|e| e.left != Directive::InjectZero && e.right != Directive::InjectZero));

            let uni = compare_streams(&a, &b, MatchKind::Union).unwrap();
            let got: Vec<u64> = uni.iter().filter(|e| e.kind != EventKind::Done).map(|e| e.index).collect();
            prop_assert_eq!(got, sa.union(&sb).copied().collect::<Vec<_>>());
            prop_assert!(uni.iter().all(|e| e.left != Directive::Skip || e.kind == EventKind::Done));
            prop_assert_eq!(uni.last().unwrap().kind, EventKind::Done);
        }

        #[test]
        fn coalesce_inverts_serialize(
            raw in proptest::collection::vec(any::<u64>(), 0..100),
            wi in 0usize..4,
            misalign in 0u64..8,
        ) {
            let width = IndexWidth::ALL[wi];
            let wb = u64::from(width.bytes());
            let off = (misalign / wb) * wb;
            let idx: Vec<u64> = raw.iter().map(|v| v & width.max_index()).collect();
            let words = coalesce_indices(&idx, width, off);
            let mut image: Vec<IndexWord> = Vec::new();
            for (k, w, _) in &words {
                prop_assert_eq!(*k as usize, image.len());
                image.push(IndexWord::full(*w, width));
            }
            prop_assert_eq!(serialize_indices(&image, width, off, idx.len()), idx);
        }
    }
}
