/// What the SSSR sM×dV program does for one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowPlan {
    /// Writes a zero, no FP work.
    Empty,
    /// Straight-line products and a short reduction; no hardware loop.
    Unrolled(usize),
    /// `unrolled` straight-line products, then a hardware loop of
    /// `frep_iters` staggered fmadds and a full accumulator reduction.
    Looped { unrolled: usize, frep_iters: usize },
}

impl RowPlan {
    pub fn uses_frep(self) -> bool {
        matches!(self, Self::Looped { .. })
    }
}

/// Mirrors the per-row branch chain of the SSSR sM×dV program.
pub fn smxdv_row_schedule(row_lens: &[usize], unroll: usize) -> Vec<RowPlan> {
    row_lens
        .iter()
        .map(|&n| match n {
            0 => RowPlan::Empty,
            n if n <= unroll => RowPlan::Unrolled(n),
            n => RowPlan::Looped { unrolled: unroll, frep_iters: n - unroll },
        })
        .collect()
}
