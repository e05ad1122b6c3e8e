//! Assembly for every kernel variant. Register contracts are documented per
//! kernel in `super::prepare`.

use crate::formats::IndexWidth;
use crate::streamer::{encode_idx_cfg, mode_code};

macro_rules! emit {
    ($s:expr, $($t:tt)*) => {{
        $s.push_str(&format!($($t)*));
        $s.push('\n');
    }};
}

/// Static parameters shared by the generators.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Gen {
    pub w: IndexWidth,
    /// Left shift turning a dense index into a byte offset.
    pub sh: u32,
    pub acc: usize,
    pub unroll: usize,
    pub idx_lead: u32,
}

impl Gen {
    fn wb(&self) -> u32 {
        self.w.bytes()
    }

    fn lx(&self) -> &'static str {
        match self.w {
            IndexWidth::W8 => "lbu",
            IndexWidth::W16 => "lhu",
            IndexWidth::W32 => "lwu",
            IndexWidth::W64 => "ld",
        }
    }

    fn sx(&self) -> &'static str {
        match self.w {
            IndexWidth::W8 => "sb",
            IndexWidth::W16 => "sh",
            IndexWidth::W32 => "sw",
            IndexWidth::W64 => "sd",
        }
    }

    fn logw(&self) -> u32 {
        self.w.log2_bytes()
    }

    /// Shift from an index-array byte offset to a value-array byte offset.
    fn vs(&self) -> u32 {
        3 - self.logw()
    }

    fn cfg(&self, code: u64, shift: u32) -> u64 {
        encode_idx_cfg(self.w, shift, code, self.idx_lead)
    }
}

fn acc(k: usize) -> String {
    format!("f{}", 3 + k)
}

fn zero_accs(s: &mut String, from: usize, to: usize) {
    for k in from..to {
        emit!(s, "fmv {}, zero", acc(k));
    }
}

/// Linear chain reduction of accumulators f3.. into `dst`.
fn reduce(s: &mut String, n: usize, dst: &str) {
    match n {
        0 => emit!(s, "fmv {dst}, zero"),
        1 => emit!(s, "fmv {dst}, f3"),
        _ => {
            for k in 1..n - 1 {
                emit!(s, "fadd f3, f3, {}", acc(k));
            }
            emit!(s, "fadd {dst}, f3, {}", acc(n - 1));
        }
    }
}

// ---------------------------------------------------------------- sV×dV
// a0 a_vals, a1 a_idcs, a2 n, a3 b, a7 &result

pub(crate) fn svxdv_base(g: &Gen) -> String {
    let mut s = String::new();
    let (lx, w, sh) = (g.lx(), g.wb(), g.sh);
    emit!(s, "fmv fa0, zero");
    emit!(s, "beq a2, zero, done");
    emit!(s, "{lx} t0, 0(a1)");
    emit!(s, "sll t4, a2, 3");
    emit!(s, "add t4, t4, a0");
    emit!(s, "loop:");
    emit!(s, "sll t1, t0, {sh}");
    emit!(s, "add t1, t1, a3");
    emit!(s, "fld ft1, 0(t1)");
    emit!(s, "fld ft0, 0(a0)");
    emit!(s, "{lx} t0, {w}(a1)");
    emit!(s, "fmadd fa0, ft0, ft1, fa0");
    emit!(s, "add a0, a0, 8");
    emit!(s, "add a1, a1, {w}");
    emit!(s, "bne a0, t4, loop");
    emit!(s, "done:");
    emit!(s, "fsd fa0, 0(a7)");
    emit!(s, "halt");
    s
}

pub(crate) fn svxdv_ssr(g: &Gen) -> String {
    let mut s = String::new();
    let (lx, w, sh, lw) = (g.lx(), g.wb(), g.sh, g.logw());
    emit!(s, "fmv fa0, zero");
    emit!(s, "beq a2, zero, done");
    emit!(s, "li t2, 8");
    emit!(s, "scfgw a2, 0, BOUND0");
    emit!(s, "scfgw t2, 0, STRIDE0");
    emit!(s, "scfgw a0, 0, LAUNCH_READ");
    emit!(s, "ssr.enable");
    emit!(s, "{lx} t0, 0(a1)");
    emit!(s, "sll t4, a2, {lw}");
    emit!(s, "add t4, t4, a1");
    emit!(s, "loop:");
    emit!(s, "sll t1, t0, {sh}");
    emit!(s, "add t1, t1, a3");
    emit!(s, "fld ft4, 0(t1)");
    emit!(s, "{lx} t0, {w}(a1)");
    emit!(s, "add a1, a1, {w}");
    emit!(s, "fmadd fa0, ft0, ft4, fa0");
    emit!(s, "bne a1, t4, loop");
    emit!(s, "done:");
    emit!(s, "ssr.disable");
    emit!(s, "fsd fa0, 0(a7)");
    emit!(s, "halt");
    s
}

/// Compute and teardown shared by the streamed dot products.
fn dot_compute(s: &mut String, g: &Gen, frep: &str) {
    zero_accs(s, 0, g.acc);
    emit!(s, "{frep}");
    emit!(s, "fmadd f3, ft0, ft1, f3");
    reduce(s, g.acc, "fa0");
    emit!(s, "ssr.disable");
    emit!(s, "fsd fa0, 0(a7)");
    emit!(s, "halt");
}

pub(crate) fn svxdv_sssr(g: &Gen) -> String {
    let mut s = String::new();
    emit!(s, "ssr.enable");
    emit!(s, "li t0, {}", g.cfg(mode_code::INDIRECT, g.sh));
    emit!(s, "li t1, 8");
    emit!(s, "scfgw t0, 1, IDX_CFG");
    emit!(s, "scfgw a2, 31, BOUND0");
    emit!(s, "scfgw t1, 0, STRIDE0");
    emit!(s, "scfgw a0, 0, LAUNCH_READ");
    emit!(s, "scfgw a1, 1, IDX_BASE");
    emit!(s, "scfgw a3, 1, LAUNCH_READ");
    dot_compute(&mut s, g, &format!("frep a2, 1, {}, f3", g.acc));
    s
}

// ---------------------------------------------------------------- sV×sV
// a0 a_vals, a1 a_idcs, a2 na, a3 b_vals, a4 b_idcs, a5 nb, a7 &result

pub(crate) fn svxsv_sssr(g: &Gen) -> String {
    let mut s = String::new();
    emit!(s, "ssr.enable");
    emit!(s, "li t0, {}", g.cfg(mode_code::INTERSECT, 3));
    emit!(s, "scfgw t0, 31, IDX_CFG");
    emit!(s, "scfgw a2, 0, BOUND0");
    emit!(s, "scfgw a1, 0, IDX_BASE");
    emit!(s, "scfgw a0, 0, LAUNCH_READ");
    emit!(s, "scfgw a5, 1, BOUND0");
    emit!(s, "scfgw a4, 1, IDX_BASE");
    emit!(s, "scfgw a3, 1, LAUNCH_READ");
    dot_compute(&mut s, g, &format!("frep.s 1, {}, f3", g.acc));
    s
}

/// Registers of a scalar two-pointer merge.
pub(crate) struct MergeRegs<'a> {
    pub av: &'a str,
    pub ap: &'a str,
    pub ae: &'a str,
    pub ab: &'a str,
    pub bv: &'a str,
    pub bp: &'a str,
    pub be: &'a str,
    pub bb: &'a str,
}

/// Scalar intersection dot product into fa0; jumps to `done` when either side ends.
fn svxsv_base_body(s: &mut String, g: &Gen, r: &MergeRegs, p: &str, done: &str) {
    let (lx, w, vs) = (g.lx(), g.wb(), g.vs());
    let MergeRegs { av, ap, ae, ab, bv, bp, be, bb } = *r;
    emit!(s, "fmv fa0, zero");
    emit!(s, "beq {ap}, {ae}, {done}");
    emit!(s, "beq {bp}, {be}, {done}");
    emit!(s, "{lx} t0, 0({ap})");
    emit!(s, "{lx} t1, 0({bp})");
    emit!(s, "{p}loop:");
    emit!(s, "beq t0, t1, {p}match");
    emit!(s, "blt t0, t1, {p}adv_a");
    emit!(s, "add {bp}, {bp}, {w}");
    emit!(s, "{lx} t1, 0({bp})");
    emit!(s, "bne {bp}, {be}, {p}loop");
    emit!(s, "j {done}");
    emit!(s, "{p}adv_a:");
    emit!(s, "add {ap}, {ap}, {w}");
    emit!(s, "{lx} t0, 0({ap})");
    emit!(s, "bne {ap}, {ae}, {p}loop");
    emit!(s, "j {done}");
    emit!(s, "{p}match:");
    emit!(s, "sub t2, {ap}, {ab}");
    emit!(s, "sll t2, t2, {vs}");
    emit!(s, "add t2, t2, {av}");
    emit!(s, "fld ft0, 0(t2)");
    emit!(s, "sub t3, {bp}, {bb}");
    emit!(s, "sll t3, t3, {vs}");
    emit!(s, "add t3, t3, {bv}");
    emit!(s, "fld ft1, 0(t3)");
    emit!(s, "fmadd fa0, ft0, ft1, fa0");
    emit!(s, "add {ap}, {ap}, {w}");
    emit!(s, "add {bp}, {bp}, {w}");
    emit!(s, "{lx} t0, 0({ap})");
    emit!(s, "{lx} t1, 0({bp})");
    emit!(s, "beq {ap}, {ae}, {done}");
    emit!(s, "beq {bp}, {be}, {done}");
    emit!(s, "j {p}loop");
}

/// End pointers t4/t5 and base copies s0/s1 for the standalone merges.
fn merge_prologue(s: &mut String, g: &Gen) {
    let lw = g.logw();
    emit!(s, "mv s0, a1");
    emit!(s, "mv s1, a4");
    emit!(s, "sll t4, a2, {lw}");
    emit!(s, "add t4, t4, a1");
    emit!(s, "sll t5, a5, {lw}");
    emit!(s, "add t5, t5, a4");
}

const SV_REGS: MergeRegs<'static> =
    MergeRegs { av: "a0", ap: "a1", ae: "t4", ab: "s0", bv: "a3", bp: "a4", be: "t5", bb: "s1" };

pub(crate) fn svxsv_base(g: &Gen) -> String {
    let mut s = String::new();
    merge_prologue(&mut s, g);
    svxsv_base_body(&mut s, g, &SV_REGS, "", "done");
    emit!(s, "done:");
    emit!(s, "fsd fa0, 0(a7)");
    emit!(s, "halt");
    s
}

// ---------------------------------------------------------------- sV+dV, sV⊙dV
// a0 a_vals, a1 a_idcs, a2 n, a3 b; sV⊙dV writes c at a6

pub(crate) fn svpdv_base(g: &Gen) -> String {
    elementwise_dense_base(g, "fadd", None)
}

pub(crate) fn svhdv_base(g: &Gen, c_minus_a: i64) -> String {
    elementwise_dense_base(g, "fmul", Some(c_minus_a))
}

fn elementwise_dense_base(g: &Gen, op: &str, c_off: Option<i64>) -> String {
    let mut s = String::new();
    let (lx, w, sh) = (g.lx(), g.wb(), g.sh);
    emit!(s, "beq a2, zero, done");
    emit!(s, "{lx} t0, 0(a1)");
    emit!(s, "sll t4, a2, 3");
    emit!(s, "add t4, t4, a0");
    emit!(s, "loop:");
    emit!(s, "sll t1, t0, {sh}");
    emit!(s, "add t1, t1, a3");
    emit!(s, "fld ft1, 0(t1)");
    emit!(s, "fld ft0, 0(a0)");
    emit!(s, "{lx} t0, {w}(a1)");
    emit!(s, "{op} ft1, ft0, ft1");
    emit!(s, "add a0, a0, 8");
    emit!(s, "add a1, a1, {w}");
    match c_off {
        None => emit!(s, "fsd ft1, 0(t1)"),
        Some(off) => emit!(s, "fsd ft1, {}(a0)", off - 8),
    }
    emit!(s, "bne a0, t4, loop");
    emit!(s, "done:");
    emit!(s, "halt");
    s
}

pub(crate) fn svpdv_ssr(g: &Gen) -> String {
    elementwise_dense_ssr(g, "fadd", false)
}

pub(crate) fn svhdv_ssr(g: &Gen) -> String {
    elementwise_dense_ssr(g, "fmul", true)
}

fn elementwise_dense_ssr(g: &Gen, op: &str, to_c: bool) -> String {
    let mut s = String::new();
    let (lx, w, sh, lw) = (g.lx(), g.wb(), g.sh, g.logw());
    emit!(s, "beq a2, zero, done");
    emit!(s, "li t2, 8");
    emit!(s, "scfgw a2, 0, BOUND0");
    emit!(s, "scfgw t2, 0, STRIDE0");
    emit!(s, "scfgw a0, 0, LAUNCH_READ");
    if to_c {
        // c is dense in a's order: an affine write stream.
        emit!(s, "scfgw a2, 1, BOUND0");
        emit!(s, "scfgw t2, 1, STRIDE0");
        emit!(s, "scfgw a6, 1, LAUNCH_WRITE");
    }
    emit!(s, "ssr.enable");
    emit!(s, "{lx} t0, 0(a1)");
    emit!(s, "sll t4, a2, {lw}");
    emit!(s, "add t4, t4, a1");
    emit!(s, "loop:");
    emit!(s, "sll t1, t0, {sh}");
    emit!(s, "add t1, t1, a3");
    emit!(s, "fld ft4, 0(t1)");
    emit!(s, "{lx} t0, {w}(a1)");
    if to_c {
        emit!(s, "{op} ft1, ft0, ft4");
        emit!(s, "add a1, a1, {w}");
    } else {
        emit!(s, "{op} ft4, ft0, ft4");
        emit!(s, "add a1, a1, {w}");
        emit!(s, "fsd ft4, 0(t1)");
    }
    emit!(s, "bne a1, t4, loop");
    emit!(s, "done:");
    if to_c {
        emit!(s, "fpu.fence");
    }
    emit!(s, "ssr.disable");
    emit!(s, "halt");
    s
}

/// Gather b through ft0, scatter sums through ft1, stream a's values on ft2.
pub(crate) fn svpdv_sssr(g: &Gen) -> String {
    let mut s = String::new();
    emit!(s, "li t0, {}", g.cfg(mode_code::INDIRECT, g.sh));
    emit!(s, "li t1, 8");
    emit!(s, "scfgw t0, 0, IDX_CFG");
    emit!(s, "scfgw t0, 1, IDX_CFG");
    emit!(s, "scfgw a2, 31, BOUND0");
    emit!(s, "scfgw a1, 0, IDX_BASE");
    emit!(s, "scfgw a1, 1, IDX_BASE");
    emit!(s, "scfgw t1, 2, STRIDE0");
    emit!(s, "scfgw a3, 0, LAUNCH_READ");
    emit!(s, "scfgw a3, 1, LAUNCH_WRITE");
    emit!(s, "scfgw a0, 2, LAUNCH_READ");
    emit!(s, "ssr.enable");
    emit!(s, "frep a2, 1");
    emit!(s, "fadd ft1, ft0, ft2");
    emit!(s, "fpu.fence");
    emit!(s, "ssr.disable");
    emit!(s, "halt");
    s
}

pub(crate) fn svhdv_sssr(g: &Gen) -> String {
    let mut s = String::new();
    emit!(s, "li t0, {}", g.cfg(mode_code::INDIRECT, g.sh));
    emit!(s, "li t1, 8");
    emit!(s, "scfgw t0, 1, IDX_CFG");
    emit!(s, "scfgw a2, 31, BOUND0");
    emit!(s, "scfgw t1, 0, STRIDE0");
    emit!(s, "scfgw t1, 2, STRIDE0");
    emit!(s, "scfgw a1, 1, IDX_BASE");
    emit!(s, "scfgw a0, 0, LAUNCH_READ");
    emit!(s, "scfgw a3, 1, LAUNCH_READ");
    emit!(s, "scfgw a6, 2, LAUNCH_WRITE");
    emit!(s, "ssr.enable");
    emit!(s, "frep a2, 1");
    emit!(s, "fmul ft2, ft0, ft1");
    emit!(s, "fpu.fence");
    emit!(s, "ssr.disable");
    emit!(s, "halt");
    s
}

// ---------------------------------------------------------------- sV+sV, sV⊙sV
// a0 a_vals, a1 a_idcs, a2 na, a3 b_vals, a4 b_idcs, a5 nb,
// a6 c_vals, a7 c_idcs, s2 &c_len

/// Both sides exhausted means done; an exhausted side holds index all-ones.
fn union_prologue(s: &mut String, g: &Gen) {
    let lx = g.lx();
    merge_prologue(s, g);
    emit!(s, "li t6, 0");
    emit!(s, "li t0, -1");
    emit!(s, "li t1, -1");
    emit!(s, "beq a1, t4, skip_a");
    emit!(s, "{lx} t0, 0(a1)");
    emit!(s, "skip_a:");
    emit!(s, "beq a4, t5, skip_b");
    emit!(s, "{lx} t1, 0(a4)");
    emit!(s, "skip_b:");
    emit!(s, "bne a1, t4, loop");
    emit!(s, "bne a4, t5, loop");
    emit!(s, "j done");
}

pub(crate) fn svpsv_base(g: &Gen) -> String {
    let mut s = String::new();
    let (lx, sx, w) = (g.lx(), g.sx(), g.wb());
    union_prologue(&mut s, g);
    emit!(s, "loop:");
    emit!(s, "add t6, t6, 1");
    emit!(s, "blt t1, t0, take_b");
    emit!(s, "beq t0, t1, match");
    // a only: 9 instructions
    emit!(s, "fld ft0, 0(a0)");
    emit!(s, "{sx} t0, 0(a7)");
    emit!(s, "fsd ft0, 0(a6)");
    emit!(s, "add a1, a1, {w}");
    emit!(s, "{lx} t0, 0(a1)");
    emit!(s, "add a0, a0, 8");
    emit!(s, "add a6, a6, 8");
    emit!(s, "add a7, a7, {w}");
    emit!(s, "bne a1, t4, loop");
    emit!(s, "li t0, -1");
    emit!(s, "bne t1, t0, loop");
    emit!(s, "j done");
    emit!(s, "take_b:");
    emit!(s, "fld ft1, 0(a3)");
    emit!(s, "{sx} t1, 0(a7)");
    emit!(s, "fsd ft1, 0(a6)");
    emit!(s, "add a4, a4, {w}");
    emit!(s, "{lx} t1, 0(a4)");
    emit!(s, "add a3, a3, 8");
    emit!(s, "add a6, a6, 8");
    emit!(s, "add a7, a7, {w}");
    emit!(s, "bne a4, t5, loop");
    emit!(s, "li t1, -1");
    emit!(s, "bne t0, t1, loop");
    emit!(s, "j done");
    emit!(s, "match:");
    emit!(s, "fld ft0, 0(a0)");
    emit!(s, "fld ft1, 0(a3)");
    emit!(s, "{sx} t0, 0(a7)");
    emit!(s, "fadd ft0, ft0, ft1");
    emit!(s, "add a1, a1, {w}");
    emit!(s, "add a4, a4, {w}");
    emit!(s, "fsd ft0, 0(a6)");
    emit!(s, "{lx} t0, 0(a1)");
    emit!(s, "{lx} t1, 0(a4)");
    emit!(s, "add a0, a0, 8");
    emit!(s, "add a3, a3, 8");
    emit!(s, "add a6, a6, 8");
    emit!(s, "add a7, a7, {w}");
    emit!(s, "beq a1, t4, ex_a");
    emit!(s, "bne a4, t5, loop");
    emit!(s, "li t1, -1");
    emit!(s, "j loop");
    emit!(s, "ex_a:");
    emit!(s, "li t0, -1");
    emit!(s, "bne a4, t5, loop");
    emit!(s, "done:");
    emit!(s, "sd t6, 0(s2)");
    emit!(s, "halt");
    s
}

pub(crate) fn svpsv_ssr(g: &Gen) -> String {
    let mut s = String::new();
    let (lx, sx, w) = (g.lx(), g.sx(), g.wb());
    emit!(s, "li t2, 8");
    emit!(s, "scfgw a2, 0, BOUND0");
    emit!(s, "scfgw t2, 0, STRIDE0");
    emit!(s, "scfgw a0, 0, LAUNCH_READ");
    emit!(s, "scfgw a5, 1, BOUND0");
    emit!(s, "scfgw t2, 1, STRIDE0");
    emit!(s, "scfgw a3, 1, LAUNCH_READ");
    emit!(s, "ssr.enable");
    union_prologue(&mut s, g);
    emit!(s, "loop:");
    emit!(s, "add t6, t6, 1");
    emit!(s, "blt t1, t0, take_b");
    emit!(s, "beq t0, t1, match");
    emit!(s, "{sx} t0, 0(a7)");
    emit!(s, "fsd ft0, 0(a6)");
    emit!(s, "add a1, a1, {w}");
    emit!(s, "{lx} t0, 0(a1)");
    emit!(s, "add a6, a6, 8");
    emit!(s, "add a7, a7, {w}");
    emit!(s, "bne a1, t4, loop");
    emit!(s, "li t0, -1");
    emit!(s, "bne t1, t0, loop");
    emit!(s, "j done");
    emit!(s, "take_b:");
    emit!(s, "{sx} t1, 0(a7)");
    emit!(s, "fsd ft1, 0(a6)");
    emit!(s, "add a4, a4, {w}");
    emit!(s, "{lx} t1, 0(a4)");
    emit!(s, "add a6, a6, 8");
    emit!(s, "add a7, a7, {w}");
    emit!(s, "bne a4, t5, loop");
    emit!(s, "li t1, -1");
    emit!(s, "bne t0, t1, loop");
    emit!(s, "j done");
    emit!(s, "match:");
    emit!(s, "fadd ft3, ft0, ft1");
    emit!(s, "{sx} t0, 0(a7)");
    emit!(s, "add a1, a1, {w}");
    emit!(s, "add a4, a4, {w}");
    emit!(s, "fsd ft3, 0(a6)");
    emit!(s, "{lx} t0, 0(a1)");
    emit!(s, "{lx} t1, 0(a4)");
    emit!(s, "add a6, a6, 8");
    emit!(s, "add a7, a7, {w}");
    emit!(s, "beq a1, t4, ex_a");
    emit!(s, "bne a4, t5, loop");
    emit!(s, "li t1, -1");
    emit!(s, "j loop");
    emit!(s, "ex_a:");
    emit!(s, "li t0, -1");
    emit!(s, "bne a4, t5, loop");
    emit!(s, "done:");
    emit!(s, "ssr.disable");
    emit!(s, "sd t6, 0(s2)");
    emit!(s, "halt");
    s
}

/// Egress result of a two-fiber match: ESSR launched first, then both ISSRs.
fn sparse_sparse_sssr(g: &Gen, code: u64, op: &str) -> String {
    let mut s = String::new();
    emit!(s, "li t0, {}", g.cfg(code, 3));
    emit!(s, "scfgw t0, 31, IDX_CFG");
    emit!(s, "scfgw a2, 0, BOUND0");
    emit!(s, "scfgw a1, 0, IDX_BASE");
    emit!(s, "scfgw a5, 1, BOUND0");
    emit!(s, "scfgw a4, 1, IDX_BASE");
    emit!(s, "scfgw a7, 2, IDX_BASE");
    emit!(s, "scfgw a6, 2, LAUNCH_WRITE");
    emit!(s, "scfgw a0, 0, LAUNCH_READ");
    emit!(s, "scfgw a3, 1, LAUNCH_READ");
    emit!(s, "ssr.enable");
    emit!(s, "frep.s 1");
    emit!(s, "{op} ft2, ft0, ft1");
    emit!(s, "fpu.fence");
    emit!(s, "scfgr t1, 2, LENGTH");
    emit!(s, "sd t1, 0(s2)");
    emit!(s, "ssr.disable");
    emit!(s, "halt");
    s
}

pub(crate) fn svpsv_sssr(g: &Gen) -> String {
    sparse_sparse_sssr(g, mode_code::UNION, "fadd")
}

pub(crate) fn svhsv_sssr(g: &Gen) -> String {
    sparse_sparse_sssr(g, mode_code::INTERSECT, "fmul")
}

pub(crate) fn svhsv_base(g: &Gen) -> String {
    let mut s = String::new();
    let (lx, sx, w, vs) = (g.lx(), g.sx(), g.wb(), g.vs());
    merge_prologue(&mut s, g);
    emit!(s, "li t6, 0");
    emit!(s, "beq a1, t4, done");
    emit!(s, "beq a4, t5, done");
    emit!(s, "{lx} t0, 0(a1)");
    emit!(s, "{lx} t1, 0(a4)");
    emit!(s, "loop:");
    emit!(s, "beq t0, t1, match");
    emit!(s, "blt t0, t1, adv_a");
    emit!(s, "add a4, a4, {w}");
    emit!(s, "{lx} t1, 0(a4)");
    emit!(s, "bne a4, t5, loop");
    emit!(s, "j done");
    emit!(s, "adv_a:");
    emit!(s, "add a1, a1, {w}");
    emit!(s, "{lx} t0, 0(a1)");
    emit!(s, "bne a1, t4, loop");
    emit!(s, "j done");
    emit!(s, "match:");
    emit!(s, "sub t2, a1, s0");
    emit!(s, "sll t2, t2, {vs}");
    emit!(s, "add t2, t2, a0");
    emit!(s, "fld ft0, 0(t2)");
    emit!(s, "sub t3, a4, s1");
    emit!(s, "sll t3, t3, {vs}");
    emit!(s, "add t3, t3, a3");
    emit!(s, "fld ft1, 0(t3)");
    emit!(s, "fmul ft0, ft0, ft1");
    emit!(s, "{sx} t0, 0(a7)");
    emit!(s, "add a1, a1, {w}");
    emit!(s, "add a4, a4, {w}");
    emit!(s, "fsd ft0, 0(a6)");
    emit!(s, "add a6, a6, 8");
    emit!(s, "add a7, a7, {w}");
    emit!(s, "add t6, t6, 1");
    emit!(s, "{lx} t0, 0(a1)");
    emit!(s, "{lx} t1, 0(a4)");
    emit!(s, "beq a1, t4, done");
    emit!(s, "beq a4, t5, done");
    emit!(s, "j loop");
    emit!(s, "done:");
    emit!(s, "sd t6, 0(s2)");
    emit!(s, "halt");
    s
}

// ---------------------------------------------------------------- sM×dV
// a0 vals, a1 col_idcs, a2 row_ptrs, a3 x, a4 nrows, a5 y, a6 y stride (bytes)

fn smxdv_base_body(s: &mut String, g: &Gen, p: &str) {
    let (lx, w, sh, lw) = (g.lx(), g.wb(), g.sh, g.logw());
    emit!(s, "beq a4, zero, {p}end");
    emit!(s, "lwu t2, 0(a2)");
    emit!(s, "sll s3, t2, 3");
    emit!(s, "add s3, s3, a0");
    emit!(s, "sll s4, t2, {lw}");
    emit!(s, "add s4, s4, a1");
    emit!(s, "{p}row:");
    emit!(s, "lwu t3, 4(a2)");
    emit!(s, "add a2, a2, 4");
    emit!(s, "fmv fa0, zero");
    emit!(s, "beq t2, t3, {p}store");
    emit!(s, "{lx} t0, 0(s4)");
    emit!(s, "sll t4, t3, 3");
    emit!(s, "add t4, t4, a0");
    emit!(s, "{p}loop:");
    emit!(s, "sll t1, t0, {sh}");
    emit!(s, "add t1, t1, a3");
    emit!(s, "fld ft1, 0(t1)");
    emit!(s, "fld ft0, 0(s3)");
    emit!(s, "{lx} t0, {w}(s4)");
    emit!(s, "fmadd fa0, ft0, ft1, fa0");
    emit!(s, "add s3, s3, 8");
    emit!(s, "add s4, s4, {w}");
    emit!(s, "bne s3, t4, {p}loop");
    emit!(s, "{p}store:");
    emit!(s, "fsd fa0, 0(a5)");
    emit!(s, "add a5, a5, a6");
    emit!(s, "mv t2, t3");
    emit!(s, "sub a4, a4, 1");
    emit!(s, "bne a4, zero, {p}row");
    emit!(s, "{p}end:");
}

/// Nonzeros of the row block at a2 (t1) and its value/index bases (t5/t6).
fn chunk_extent(s: &mut String, g: &Gen) {
    let lw = g.logw();
    emit!(s, "lwu t2, 0(a2)");
    emit!(s, "sll t1, a4, 2");
    emit!(s, "add t1, t1, a2");
    emit!(s, "lwu t1, 0(t1)");
    emit!(s, "sub t1, t1, t2");
    emit!(s, "sll t5, t2, 3");
    emit!(s, "add t5, t5, a0");
    emit!(s, "sll t6, t2, {lw}");
    emit!(s, "add t6, t6, a1");
}

fn smxdv_ssr_body(s: &mut String, g: &Gen, p: &str) {
    let (lx, w, sh, lw) = (g.lx(), g.wb(), g.sh, g.logw());
    emit!(s, "beq a4, zero, {p}end");
    chunk_extent(s, g);
    emit!(s, "li t3, 8");
    emit!(s, "scfgw t1, 0, BOUND0");
    emit!(s, "scfgw t3, 0, STRIDE0");
    emit!(s, "scfgw t5, 0, LAUNCH_READ");
    emit!(s, "lwu t2, 0(a2)");
    emit!(s, "sll s4, t2, {lw}");
    emit!(s, "add s4, s4, a1");
    emit!(s, "{p}row:");
    emit!(s, "lwu t3, 4(a2)");
    emit!(s, "add a2, a2, 4");
    emit!(s, "fmv fa0, zero");
    emit!(s, "beq t2, t3, {p}store");
    emit!(s, "{lx} t0, 0(s4)");
    emit!(s, "sll t4, t3, {lw}");
    emit!(s, "add t4, t4, a1");
    emit!(s, "{p}loop:");
    emit!(s, "sll t1, t0, {sh}");
    emit!(s, "add t1, t1, a3");
    emit!(s, "fld ft4, 0(t1)");
    emit!(s, "{lx} t0, {w}(s4)");
    emit!(s, "add s4, s4, {w}");
    emit!(s, "fmadd fa0, ft0, ft4, fa0");
    emit!(s, "bne s4, t4, {p}loop");
    emit!(s, "{p}store:");
    emit!(s, "fsd fa0, 0(a5)");
    emit!(s, "add a5, a5, a6");
    emit!(s, "mv t2, t3");
    emit!(s, "sub a4, a4, 1");
    emit!(s, "bne a4, zero, {p}row");
    emit!(s, "{p}end:");
}

/// k streamed products into the accumulator block (fmul first, fmadd on wrap).
fn unrolled_products(s: &mut String, a: usize, k: usize) {
    for i in 0..k {
        if i < a {
            emit!(s, "fmul {}, ft0, ft1", acc(i));
        } else {
            emit!(s, "fmadd {0}, ft0, ft1, {0}", acc(i % a));
        }
    }
}

/// Whole-matrix streams; per-row branch chain into unrolled short-row code,
/// with a hardware loop and full reduction only for rows longer than the unroll.
fn smxdv_sssr_body(s: &mut String, g: &Gen, p: &str) {
    let (a, u) = (g.acc, g.unroll);
    emit!(s, "li t0, {}", g.cfg(mode_code::INDIRECT, g.sh));
    emit!(s, "scfgw t0, 1, IDX_CFG");
    chunk_extent(s, g);
    emit!(s, "li t3, 8");
    emit!(s, "scfgw t1, 31, BOUND0");
    emit!(s, "scfgw t3, 0, STRIDE0");
    emit!(s, "scfgw t5, 0, LAUNCH_READ");
    emit!(s, "scfgw t6, 1, IDX_BASE");
    emit!(s, "scfgw a3, 1, LAUNCH_READ");
    emit!(s, "scfgw a4, 2, BOUND0");
    emit!(s, "scfgw a6, 2, STRIDE0");
    emit!(s, "scfgw a5, 2, LAUNCH_WRITE");
    for k in 1..=u {
        emit!(s, "li {}, {k}", unroll_const(k));
    }
    emit!(s, "beq a4, zero, {p}end");
    emit!(s, "lwu t2, 0(a2)");
    emit!(s, "{p}row:");
    emit!(s, "lwu t3, 4(a2)");
    emit!(s, "add a2, a2, 4");
    emit!(s, "sub t4, t3, t2");
    emit!(s, "mv t2, t3");
    emit!(s, "beq t4, zero, {p}len0");
    for k in 1..=u {
        emit!(s, "beq t4, {}, {p}len{k}", unroll_const(k));
    }
    // Long row.
    if u > 0 {
        emit!(s, "sub t4, t4, {}", unroll_const(u));
    }
    unrolled_products(s, a, u);
    zero_accs(s, u.min(a), a);
    emit!(s, "frep t4, 1, {a}, f3");
    emit!(s, "fmadd {0}, ft0, ft1, {0}", acc(u % a));
    reduce(s, a, "ft2");
    emit!(s, "j {p}next");
    emit!(s, "{p}len0:");
    emit!(s, "fmv ft2, zero");
    emit!(s, "j {p}next");
    for k in 1..=u {
        emit!(s, "{p}len{k}:");
        if k == 1 {
            emit!(s, "fmul ft2, ft0, ft1");
        } else {
            unrolled_products(s, a, k);
            reduce(s, k.min(a), "ft2");
        }
        emit!(s, "j {p}next");
    }
    emit!(s, "{p}next:");
    emit!(s, "sub a4, a4, 1");
    emit!(s, "bne a4, zero, {p}row");
    emit!(s, "{p}end:");
}

/// Registers holding the constants 1..=unroll for the row-length branch chain.
fn unroll_const(k: usize) -> String {
    // s3..s11 then a7 for long unrolls.
    const REGS: [&str; 10] = ["s3", "s4", "s5", "s6", "s7", "s8", "s9", "s10", "s11", "a7"];
    REGS[k - 1].to_string()
}

pub(crate) const MAX_UNROLL: usize = 6;

pub(crate) fn smxdv(g: &Gen, variant: super::Variant) -> String {
    let mut s = String::new();
    match variant {
        super::Variant::Base => smxdv_base_body(&mut s, g, ""),
        super::Variant::Ssr => {
            emit!(s, "ssr.enable");
            smxdv_ssr_body(&mut s, g, "");
            emit!(s, "ssr.disable");
        }
        super::Variant::Sssr => {
            emit!(s, "ssr.enable");
            smxdv_sssr_body(&mut s, g, "");
            emit!(s, "fpu.fence");
            emit!(s, "ssr.disable");
        }
    }
    emit!(s, "halt");
    s
}

// ---------------------------------------------------------------- sM×dM
// sM×dV registers plus a7 = columns of B; B row-major with power-of-two columns.
// Column j uses x = B + 8j (shift folds in the row pitch) and y = C + 8j.

pub(crate) fn smxdm(g: &Gen, variant: super::Variant) -> String {
    let mut s = String::new();
    emit!(s, "mv s0, a2");
    emit!(s, "mv s1, a4");
    emit!(s, "mv s2, a5");
    emit!(s, "mv s10, a7");
    if variant != super::Variant::Base {
        emit!(s, "ssr.enable");
    }
    emit!(s, "beq s10, zero, fin");
    emit!(s, "col:");
    emit!(s, "mv a2, s0");
    emit!(s, "mv a4, s1");
    emit!(s, "mv a5, s2");
    match variant {
        super::Variant::Base => smxdv_base_body(&mut s, g, "c_"),
        super::Variant::Ssr => smxdv_ssr_body(&mut s, g, "c_"),
        super::Variant::Sssr => smxdv_sssr_body(&mut s, g, "c_"),
    }
    emit!(s, "add a3, a3, 8");
    emit!(s, "add s2, s2, 8");
    emit!(s, "sub s10, s10, 1");
    emit!(s, "bne s10, zero, col");
    emit!(s, "fin:");
    if variant != super::Variant::Base {
        emit!(s, "fpu.fence");
        emit!(s, "ssr.disable");
    }
    emit!(s, "halt");
    s
}

// ---------------------------------------------------------------- sM×sV
// a0 A vals, a1 A idcs, a2 row_ptrs, a3 b_vals, a4 b_idcs, a5 nb, a6 nrows,
// a7 y, s2 y stride (bytes)

fn smxsv_base_body(s: &mut String, g: &Gen, p: &str) {
    let lw = g.logw();
    emit!(s, "sll t5, a5, {lw}");
    emit!(s, "add t5, t5, a4");
    emit!(s, "beq a6, zero, {p}end");
    emit!(s, "lwu s5, 0(a2)");
    emit!(s, "{p}row:");
    emit!(s, "lwu s6, 4(a2)");
    emit!(s, "add a2, a2, 4");
    emit!(s, "sll s8, s5, {lw}");
    emit!(s, "add s8, s8, a1");
    emit!(s, "mv s4, s8");
    emit!(s, "sll t4, s6, {lw}");
    emit!(s, "add t4, t4, a1");
    emit!(s, "sll s3, s5, 3");
    emit!(s, "add s3, s3, a0");
    emit!(s, "mv s7, a4");
    let regs = MergeRegs { av: "s3", ap: "s4", ae: "t4", ab: "s8", bv: "a3", bp: "s7", be: "t5", bb: "a4" };
    svxsv_base_body(s, g, &regs, &format!("{p}d_"), &format!("{p}store"));
    emit!(s, "{p}store:");
    emit!(s, "fsd fa0, 0(a7)");
    emit!(s, "add a7, a7, s2");
    emit!(s, "mv s5, s6");
    emit!(s, "sub a6, a6, 1");
    emit!(s, "bne a6, zero, {p}row");
    emit!(s, "{p}end:");
}

/// One intersection job pair per row; the next row's lane-0 setup overlaps
/// the running row through the shadow registers.
fn smxsv_sssr_body(s: &mut String, g: &Gen, p: &str) {
    let (a, lw) = (g.acc, g.logw());
    emit!(s, "li t0, {}", g.cfg(mode_code::INTERSECT, 3));
    emit!(s, "scfgw t0, 0, IDX_CFG");
    emit!(s, "scfgw t0, 1, IDX_CFG");
    emit!(s, "scfgw a5, 1, BOUND0");
    emit!(s, "scfgw a4, 1, IDX_BASE");
    emit!(s, "scfgw a6, 2, BOUND0");
    emit!(s, "scfgw s2, 2, STRIDE0");
    emit!(s, "scfgw a7, 2, LAUNCH_WRITE");
    emit!(s, "beq a6, zero, {p}end");
    emit!(s, "lwu t2, 0(a2)");
    emit!(s, "{p}row:");
    emit!(s, "lwu t3, 4(a2)");
    emit!(s, "add a2, a2, 4");
    emit!(s, "sll t5, t2, {lw}");
    emit!(s, "add t5, t5, a1");
    emit!(s, "sll t6, t2, 3");
    emit!(s, "add t6, t6, a0");
    emit!(s, "sub t4, t3, t2");
    emit!(s, "mv t2, t3");
    emit!(s, "scfgw t4, 0, BOUND0");
    emit!(s, "scfgw t5, 0, IDX_BASE");
    emit!(s, "scfgw t6, 0, LAUNCH_READ");
    emit!(s, "scfgw a3, 1, LAUNCH_READ");
    zero_accs(s, 0, a);
    emit!(s, "frep.s 1, {a}, f3");
    emit!(s, "fmadd f3, ft0, ft1, f3");
    reduce(s, a, "ft2");
    emit!(s, "sub a6, a6, 1");
    emit!(s, "bne a6, zero, {p}row");
    emit!(s, "{p}end:");
}

pub(crate) fn smxsv(g: &Gen, variant: super::Variant) -> String {
    let mut s = String::new();
    match variant {
        super::Variant::Sssr => {
            emit!(s, "ssr.enable");
            smxsv_sssr_body(&mut s, g, "");
            emit!(s, "fpu.fence");
            emit!(s, "ssr.disable");
        }
        _ => smxsv_base_body(&mut s, g, ""),
    }
    emit!(s, "halt");
    s
}

// ---------------------------------------------------------------- sM×sM (inner)
// sM×sV registers with B in CSC: s9 B col_ptrs, s10 B idcs, s11 B vals,
// s1 = columns of B; y = C + 8j, stride s2. ra/gp hold nrows and the C column.

pub(crate) fn smxsm(g: &Gen, variant: super::Variant) -> String {
    let mut s = String::new();
    let lw = g.logw();
    // Saved A row_ptrs, nrows, C column base.
    emit!(s, "mv s0, a2");
    emit!(s, "mv ra, a6");
    emit!(s, "mv gp, a7");
    if variant == super::Variant::Sssr {
        emit!(s, "ssr.enable");
    }
    emit!(s, "beq s1, zero, fin");
    emit!(s, "col:");
    emit!(s, "mv a2, s0");
    emit!(s, "mv a6, ra");
    emit!(s, "mv a7, gp");
    emit!(s, "lwu t2, 0(s9)");
    emit!(s, "lwu t3, 4(s9)");
    emit!(s, "sub a5, t3, t2");
    emit!(s, "sll a4, t2, {lw}");
    emit!(s, "add a4, a4, s10");
    emit!(s, "sll a3, t2, 3");
    emit!(s, "add a3, a3, s11");
    match variant {
        super::Variant::Sssr => smxsv_sssr_body(&mut s, g, "c_"),
        _ => smxsv_base_body(&mut s, g, "c_"),
    }
    emit!(s, "add gp, gp, 8");
    emit!(s, "add s9, s9, 4");
    emit!(s, "sub s1, s1, 1");
    emit!(s, "bne s1, zero, col");
    emit!(s, "fin:");
    if variant == super::Variant::Sssr {
        emit!(s, "fpu.fence");
        emit!(s, "ssr.disable");
    }
    emit!(s, "halt");
    s
}
