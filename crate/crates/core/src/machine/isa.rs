use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct XReg(pub u8);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FReg(pub u8);

impl XReg {
    pub const ZERO: XReg = XReg(0);
}

impl FReg {
    pub const FT0: FReg = FReg(0);
    pub const FT1: FReg = FReg(1);
    pub const FT2: FReg = FReg(2);
    pub const FA0: FReg = FReg(10);

    /// Lane this register is redirected to while SSRs are enabled.
    pub fn stream_lane(self) -> Option<usize> {
        (self.0 < 3).then_some(self.0 as usize)
    }
}

impl fmt::Display for XReg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

impl fmt::Display for FReg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operand {
    Reg(XReg),
    Imm(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FSrc {
    F(FReg),
    X(XReg),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftDir {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cond {
    /// Unsigned less-than.
    Lt,
    Eq,
    Ne,
}

/// Register staggering for a hardware loop body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Stagger {
    pub count: u8,
    pub base: u8,
}

impl Stagger {
    pub const NONE: Stagger = Stagger { count: 0, base: 0 };

    /// Register used on iteration `iter` in place of `r`.
    pub fn apply(self, r: FReg, iter: u64) -> FReg {
        if self.count <= 1 || r.0 < self.base || r.0 >= self.base + self.count {
            return r;
        }
        let off = (u64::from(r.0 - self.base) + iter) % u64::from(self.count);
        FReg(self.base + off as u8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instr {
    Fmadd { rd: FReg, rs1: FReg, rs2: FReg, rs3: FReg },
    Fadd { rd: FReg, rs1: FReg, rs2: FReg },
    Fmul { rd: FReg, rs1: FReg, rs2: FReg },
    Fmv { rd: FReg, src: FSrc },
    LoadF { rd: FReg, base: XReg, offset: i64 },
    StoreF { rs: FReg, base: XReg, offset: i64 },
    LoadI { rd: XReg, base: XReg, offset: i64, bytes: u8 },
    StoreI { rs: XReg, base: XReg, offset: i64, bytes: u8 },
    AddI { rd: XReg, rs1: XReg, rhs: Operand },
    SubI { rd: XReg, rs1: XReg, rhs: Operand },
    ShiftI { rd: XReg, rs1: XReg, amount: Operand, dir: ShiftDir },
    Branch { cond: Cond, rs1: XReg, rs2: XReg, target: usize },
    Jump { target: usize },
    Frep { iters: XReg, body_len: u32, stagger: Stagger },
    FrepS { body_len: u32, stagger: Stagger },
    SsrCfgWrite { rs: XReg, lane: u8, reg: u8 },
    SsrCfgRead { rd: XReg, lane: u8, reg: u8 },
    SsrEnable,
    SsrDisable,
    FpuFence,
    Halt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Opcode {
    Fmadd,
    Fadd,
    Fmul,
    Fmv,
    LoadF,
    StoreF,
    LoadI,
    StoreI,
    AddI,
    SubI,
    ShiftI,
    BranchLt,
    BranchEq,
    BranchNe,
    Jump,
    Frep,
    FrepS,
    SsrCfgWrite,
    SsrCfgRead,
    SsrEnable,
    SsrDisable,
    FpuFence,
    Halt,
}

impl Instr {
    pub fn opcode(&self) -> Opcode {
        match self {
            Instr::Fmadd { .. } => Opcode::Fmadd,
            Instr::Fadd { .. } => Opcode::Fadd,
            Instr::Fmul { .. } => Opcode::Fmul,
            Instr::Fmv { .. } => Opcode::Fmv,
            Instr::LoadF { .. } => Opcode::LoadF,
            Instr::StoreF { .. } => Opcode::StoreF,
            Instr::LoadI { .. } => Opcode::LoadI,
            Instr::StoreI { .. } => Opcode::StoreI,
            Instr::AddI { .. } => Opcode::AddI,
            Instr::SubI { .. } => Opcode::SubI,
            Instr::ShiftI { .. } => Opcode::ShiftI,
            Instr::Branch { cond: Cond::Lt, .. } => Opcode::BranchLt,
            Instr::Branch { cond: Cond::Eq, .. } => Opcode::BranchEq,
            Instr::Branch { cond: Cond::Ne, .. } => Opcode::BranchNe,
            Instr::Jump { .. } => Opcode::Jump,
            Instr::Frep { .. } => Opcode::Frep,
            Instr::FrepS { .. } => Opcode::FrepS,
            Instr::SsrCfgWrite { .. } => Opcode::SsrCfgWrite,
            Instr::SsrCfgRead { .. } => Opcode::SsrCfgRead,
            Instr::SsrEnable => Opcode::SsrEnable,
            Instr::SsrDisable => Opcode::SsrDisable,
            Instr::FpuFence => Opcode::FpuFence,
            Instr::Halt => Opcode::Halt,
        }
    }

    /// Arithmetic FP ops; the only instructions allowed in a hardware loop body.
    pub fn is_fp_compute(&self) -> bool {
        matches!(self, Instr::Fmadd { .. } | Instr::Fadd { .. } | Instr::Fmul { .. } | Instr::Fmv { .. })
    }

    /// Counts toward FPU utilization.
    pub fn is_useful_fp(&self) -> bool {
        matches!(self, Instr::Fmadd { .. } | Instr::Fadd { .. } | Instr::Fmul { .. })
    }

    /// FP sources in operand order.
    pub fn fp_sources(&self) -> ([FReg; 3], usize) {
        let z = FReg(0);
        match *self {
            Instr::Fmadd { rs1, rs2, rs3, .. } => ([rs1, rs2, rs3], 3),
            Instr::Fadd { rs1, rs2, .. } | Instr::Fmul { rs1, rs2, .. } => ([rs1, rs2, z], 2),
            Instr::Fmv { src: FSrc::F(r), .. } => ([r, z, z], 1),
            Instr::StoreF { rs, .. } => ([rs, z, z], 1),
            _ => ([z, z, z], 0),
        }
    }

    pub fn fp_dest(&self) -> Option<FReg> {
        match *self {
            Instr::Fmadd { rd, .. }
            | Instr::Fadd { rd, .. }
            | Instr::Fmul { rd, .. }
            | Instr::Fmv { rd, .. }
            | Instr::LoadF { rd, .. } => Some(rd),
            _ => None,
        }
    }

    pub fn staggered(&self, s: Stagger, iter: u64) -> Instr {
        let g = |r: FReg| s.apply(r, iter);
        match *self {
            Instr::Fmadd { rd, rs1, rs2, rs3 } => Instr::Fmadd { rd: g(rd), rs1: g(rs1), rs2: g(rs2), rs3: g(rs3) },
            Instr::Fadd { rd, rs1, rs2 } => Instr::Fadd { rd: g(rd), rs1: g(rs1), rs2: g(rs2) },
            Instr::Fmul { rd, rs1, rs2 } => Instr::Fmul { rd: g(rd), rs1: g(rs1), rs2: g(rs2) },
            Instr::Fmv { rd, src: FSrc::F(r) } => Instr::Fmv { rd: g(rd), src: FSrc::F(g(r)) },
            Instr::Fmv { rd, src } => Instr::Fmv { rd: g(rd), src },
            other => other,
        }
    }

    fn regs_valid(&self) -> bool {
        let x = |r: XReg| r.0 < 32;
        let f = |r: FReg| r.0 < 32;
        let op = |o: Operand| match o {
            Operand::Reg(r) => x(r),
            Operand::Imm(_) => true,
        };
        match *self {
            Instr::Fmadd { rd, rs1, rs2, rs3 } => f(rd) && f(rs1) && f(rs2) && f(rs3),
            Instr::Fadd { rd, rs1, rs2 } | Instr::Fmul { rd, rs1, rs2 } => f(rd) && f(rs1) && f(rs2),
            Instr::Fmv { rd, src: FSrc::F(r) } => f(rd) && f(r),
            Instr::Fmv { rd, src: FSrc::X(r) } => f(rd) && x(r),
            Instr::LoadF { rd, base, .. } => f(rd) && x(base),
            Instr::StoreF { rs, base, .. } => f(rs) && x(base),
            Instr::LoadI { rd, base, bytes, .. } => x(rd) && x(base) && matches!(bytes, 1 | 2 | 4 | 8),
            Instr::StoreI { rs, base, bytes, .. } => x(rs) && x(base) && matches!(bytes, 1 | 2 | 4 | 8),
            Instr::AddI { rd, rs1, rhs } | Instr::SubI { rd, rs1, rhs } => x(rd) && x(rs1) && op(rhs),
            Instr::ShiftI { rd, rs1, amount, .. } => x(rd) && x(rs1) && op(amount),
            Instr::Branch { rs1, rs2, .. } => x(rs1) && x(rs2),
            Instr::Frep { iters, body_len, stagger } => x(iters) && body_len >= 1 && stagger_ok(stagger),
            Instr::FrepS { body_len, stagger } => body_len >= 1 && stagger_ok(stagger),
            Instr::SsrCfgWrite { rs, .. } => x(rs),
            Instr::SsrCfgRead { rd, .. } => x(rd),
            _ => true,
        }
    }
}

fn stagger_ok(s: Stagger) -> bool {
    u32::from(s.base) + u32::from(s.count) <= 32
}

/// A decoded program. Branch targets are instruction indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub instrs: Vec<Instr>,
}

impl Program {
    pub fn new(instrs: Vec<Instr>) -> Self {
        Self { instrs }
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    /// Static checks done before simulation. Returns the offending pc and reason.
    pub fn validate(&self) -> Result<(), (usize, String)> {
        if !matches!(self.instrs.last(), Some(Instr::Halt)) {
            return Err((self.instrs.len(), "program does not end in halt".into()));
        }
        for (pc, ins) in self.instrs.iter().enumerate() {
            if !ins.regs_valid() {
                return Err((pc, format!("malformed operands in {ins:?}")));
            }
            match *ins {
                Instr::Branch { target, .. } | Instr::Jump { target } if target >= self.instrs.len() => {
                    return Err((pc, format!("branch target {target} out of range")));
                }
                Instr::Frep { body_len, .. } | Instr::FrepS { body_len, .. } => {
                    let end = pc + 1 + body_len as usize;
                    if end > self.instrs.len() {
                        return Err((pc, "hardware loop body runs past the program end".into()));
                    }
                    if let Some(bad) = self.instrs[pc + 1..end].iter().find(|i| !i.is_fp_compute()) {
                        return Err((pc, format!("non-FP instruction {bad:?} in hardware loop body")));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}
