//! Text assembler for the abstract ISA.
//!
//! One instruction per line, `;` starts a comment, `name:` defines a label.
//! Registers accept numeric (`x5`, `f3`) and ABI names (`t0`, `ft3`, `fa0`).
//! Pseudo-instructions: `li rd, imm`, `mv rd, rs`.

use std::collections::HashMap;

use thiserror::Error;

use super::isa::{Cond, FReg, FSrc, Instr, Operand, Program, ShiftDir, Stagger, XReg};
use crate::streamer::cfg_reg_by_name;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {msg}")]
pub struct AsmError {
    pub line: usize,
    pub msg: String,
}

pub fn parse_xreg(s: &str) -> Option<XReg> {
    let n = match s {
        "zero" => 0,
        "ra" => 1,
        "sp" => 2,
        "gp" => 3,
        "tp" => 4,
        "fp" => 8,
        _ => {
            let (p, rest) = s.split_at(1.min(s.len()));
            let k: u8 = rest.parse().ok()?;
            match p {
                "x" if k < 32 => k,
                "t" if k <= 2 => 5 + k,
                "t" if (3..=6).contains(&k) => 25 + k,
                "s" if k <= 1 => 8 + k,
                "s" if (2..=11).contains(&k) => 16 + k,
                "a" if k <= 7 => 10 + k,
                _ => return None,
            }
        }
    };
    Some(XReg(n))
}

pub fn parse_freg(s: &str) -> Option<FReg> {
    let num = |p: &str| s.strip_prefix(p).and_then(|r| r.parse::<u8>().ok());
    let n = if let Some(k) = num("ft") {
        match k {
            0..=7 => k,
            8..=11 => 20 + k,
            _ => return None,
        }
    } else if let Some(k) = num("fs") {
        match k {
            0..=1 => 8 + k,
            2..=11 => 16 + k,
            _ => return None,
        }
    } else if let Some(k) = num("fa") {
        match k {
            0..=7 => 10 + k,
            _ => return None,
        }
    } else {
        match num("f")? {
            k @ 0..=31 => k,
            _ => return None,
        }
    };
    Some(FReg(n))
}

fn parse_imm(s: &str) -> Option<i64> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let v = if let Some(h) = body.strip_prefix("0x") {
        u64::from_str_radix(&h.replace('_', ""), 16).ok()? as i64
    } else {
        body.replace('_', "").parse::<i64>().ok()?
    };
    Some(if neg { v.wrapping_neg() } else { v })
}

struct Line<'a> {
    no: usize,
    mnemonic: &'a str,
    args: Vec<&'a str>,
}

impl Line<'_> {
    fn err(&self, msg: impl Into<String>) -> AsmError {
        AsmError { line: self.no, msg: msg.into() }
    }

    fn arity(&self, n: usize) -> Result<(), AsmError> {
        if self.args.len() != n {
            return Err(self.err(format!("`{}` takes {n} operands, got {}", self.mnemonic, self.args.len())));
        }
        Ok(())
    }

    fn x(&self, i: usize) -> Result<XReg, AsmError> {
        parse_xreg(self.args[i]).ok_or_else(|| self.err(format!("bad integer register `{}`", self.args[i])))
    }

    fn f(&self, i: usize) -> Result<FReg, AsmError> {
        parse_freg(self.args[i]).ok_or_else(|| self.err(format!("bad FP register `{}`", self.args[i])))
    }

    fn imm(&self, i: usize) -> Result<i64, AsmError> {
        parse_imm(self.args[i]).ok_or_else(|| self.err(format!("bad immediate `{}`", self.args[i])))
    }

    fn operand(&self, i: usize) -> Result<Operand, AsmError> {
        if let Some(r) = parse_xreg(self.args[i]) {
            return Ok(Operand::Reg(r));
        }
        self.imm(i).map(Operand::Imm)
    }

    /// `offset(base)` memory operand.
    fn mem(&self, i: usize) -> Result<(XReg, i64), AsmError> {
        let a = self.args[i];
        let open = a.find('(').ok_or_else(|| self.err(format!("expected offset(base), got `{a}`")))?;
        let inner = a[open + 1..].strip_suffix(')').ok_or_else(|| self.err(format!("unclosed `(` in `{a}`")))?;
        let off = if open == 0 { 0 } else { parse_imm(&a[..open]).ok_or_else(|| self.err(format!("bad offset in `{a}`")))? };
        let base = parse_xreg(inner).ok_or_else(|| self.err(format!("bad base register in `{a}`")))?;
        Ok((base, off))
    }

    fn target(&self, i: usize, labels: &HashMap<String, usize>) -> Result<usize, AsmError> {
        labels.get(self.args[i]).copied().ok_or_else(|| self.err(format!("unknown label `{}`", self.args[i])))
    }

    fn cfg_reg(&self, i: usize) -> Result<u8, AsmError> {
        let a = self.args[i];
        if let Some(v) = cfg_reg_by_name(a) {
            return Ok(v);
        }
        parse_imm(a)
            .filter(|v| (0..32).contains(v))
            .map(|v| v as u8)
            .ok_or_else(|| self.err(format!("bad config register `{a}`")))
    }

    fn lane(&self, i: usize) -> Result<u8, AsmError> {
        parse_imm(self.args[i])
            .filter(|v| (0..32).contains(v))
            .map(|v| v as u8)
            .ok_or_else(|| self.err(format!("bad lane `{}`", self.args[i])))
    }

    fn stagger(&self, first: usize) -> Result<Stagger, AsmError> {
        match self.args.len() - first {
            0 => Ok(Stagger::NONE),
            2 => {
                let count = self.imm(first)?;
                let base = self.f(first + 1)?;
                if !(0..=32).contains(&count) {
                    return Err(self.err("stagger count out of range"));
                }
                Ok(Stagger { count: count as u8, base: base.0 })
            }
            _ => Err(self.err("stagger needs both a count and a base register")),
        }
    }
}

pub fn assemble(src: &str) -> Result<Program, AsmError> {
    let mut lines: Vec<Line> = Vec::new();
    let mut labels: HashMap<String, usize> = HashMap::new();
    for (i, raw) in src.lines().enumerate() {
        let no = i + 1;
        let mut text = raw.split(';').next().unwrap_or("").trim();
        while let Some(colon) = text.find(':') {
            let name = text[..colon].trim();
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(AsmError { line: no, msg: format!("bad label `{name}`") });
            }
            if labels.insert(name.to_string(), lines.len()).is_some() {
                return Err(AsmError { line: no, msg: format!("duplicate label `{name}`") });
            }
            text = text[colon + 1..].trim();
        }
        if text.is_empty() {
            continue;
        }
        let (mnemonic, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
        let args = if rest.trim().is_empty() { Vec::new() } else { rest.split(',').map(str::trim).collect() };
        lines.push(Line { no, mnemonic, args });
    }

    let mut instrs = Vec::with_capacity(lines.len());
    for l in &lines {
        let ins = match l.mnemonic {
            "fmadd" => {
                l.arity(4)?;
                Instr::Fmadd { rd: l.f(0)?, rs1: l.f(1)?, rs2: l.f(2)?, rs3: l.f(3)? }
            }
            "fadd" | "fmul" => {
                l.arity(3)?;
                let (rd, rs1, rs2) = (l.f(0)?, l.f(1)?, l.f(2)?);
                if l.mnemonic == "fadd" {
                    Instr::Fadd { rd, rs1, rs2 }
                } else {
                    Instr::Fmul { rd, rs1, rs2 }
                }
            }
            "fmv" => {
                l.arity(2)?;
                let src = match parse_freg(l.args[1]) {
                    Some(r) => FSrc::F(r),
                    None => FSrc::X(l.x(1)?),
                };
                Instr::Fmv { rd: l.f(0)?, src }
            }
            "fld" => {
                l.arity(2)?;
                let (base, offset) = l.mem(1)?;
                Instr::LoadF { rd: l.f(0)?, base, offset }
            }
            "fsd" => {
                l.arity(2)?;
                let (base, offset) = l.mem(1)?;
                Instr::StoreF { rs: l.f(0)?, base, offset }
            }
            "lbu" | "lhu" | "lwu" | "ld" => {
                l.arity(2)?;
                let bytes = match l.mnemonic {
                    "lbu" => 1,
                    "lhu" => 2,
                    "lwu" => 4,
                    _ => 8,
                };
                let (base, offset) = l.mem(1)?;
                Instr::LoadI { rd: l.x(0)?, base, offset, bytes }
            }
            "sb" | "sh" | "sw" | "sd" => {
                l.arity(2)?;
                let bytes = match l.mnemonic {
                    "sb" => 1,
                    "sh" => 2,
                    "sw" => 4,
                    _ => 8,
                };
                let (base, offset) = l.mem(1)?;
                Instr::StoreI { rs: l.x(0)?, base, offset, bytes }
            }
            "add" | "sub" => {
                l.arity(3)?;
                let (rd, rs1, rhs) = (l.x(0)?, l.x(1)?, l.operand(2)?);
                if l.mnemonic == "add" {
                    Instr::AddI { rd, rs1, rhs }
                } else {
                    Instr::SubI { rd, rs1, rhs }
                }
            }
            "li" => {
                l.arity(2)?;
                Instr::AddI { rd: l.x(0)?, rs1: XReg::ZERO, rhs: Operand::Imm(l.imm(1)?) }
            }
            "mv" => {
                l.arity(2)?;
                Instr::AddI { rd: l.x(0)?, rs1: l.x(1)?, rhs: Operand::Imm(0) }
            }
            "sll" | "srl" => {
                l.arity(3)?;
                let dir = if l.mnemonic == "sll" { ShiftDir::Left } else { ShiftDir::Right };
                Instr::ShiftI { rd: l.x(0)?, rs1: l.x(1)?, amount: l.operand(2)?, dir }
            }
            "blt" | "beq" | "bne" => {
                l.arity(3)?;
                let cond = match l.mnemonic {
                    "blt" => Cond::Lt,
                    "beq" => Cond::Eq,
                    _ => Cond::Ne,
                };
                Instr::Branch { cond, rs1: l.x(0)?, rs2: l.x(1)?, target: l.target(2, &labels)? }
            }
            "j" => {
                l.arity(1)?;
                Instr::Jump { target: l.target(0, &labels)? }
            }
            "frep" => {
                if l.args.len() != 2 && l.args.len() != 4 {
                    return Err(l.err("`frep` takes iters, body_len[, stagger_count, stagger_base]"));
                }
                let body_len = l.imm(1)?;
                if body_len < 1 {
                    return Err(l.err("hardware loop body must hold at least one instruction"));
                }
                Instr::Frep { iters: l.x(0)?, body_len: body_len as u32, stagger: l.stagger(2)? }
            }
            "frep.s" => {
                if l.args.len() != 1 && l.args.len() != 3 {
                    return Err(l.err("`frep.s` takes body_len[, stagger_count, stagger_base]"));
                }
                let body_len = l.imm(0)?;
                if body_len < 1 {
                    return Err(l.err("hardware loop body must hold at least one instruction"));
                }
                Instr::FrepS { body_len: body_len as u32, stagger: l.stagger(1)? }
            }
            "scfgw" => {
                l.arity(3)?;
                Instr::SsrCfgWrite { rs: l.x(0)?, lane: l.lane(1)?, reg: l.cfg_reg(2)? }
            }
            "scfgr" => {
                l.arity(3)?;
                Instr::SsrCfgRead { rd: l.x(0)?, lane: l.lane(1)?, reg: l.cfg_reg(2)? }
            }
            "ssr.enable" | "ssr.disable" | "fpu.fence" | "halt" => {
                l.arity(0)?;
                match l.mnemonic {
                    "ssr.enable" => Instr::SsrEnable,
                    "ssr.disable" => Instr::SsrDisable,
                    "fpu.fence" => Instr::FpuFence,
                    _ => Instr::Halt,
                }
            }
            other => return Err(l.err(format!("unknown mnemonic `{other}`"))),
        };
        instrs.push(ins);
    }
    Ok(Program::new(instrs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn register_aliases() {
        assert_eq!(parse_xreg("a0"), Some(XReg(10)));
        assert_eq!(parse_xreg("t3"), Some(XReg(28)));
        assert_eq!(parse_xreg("s11"), Some(XReg(27)));
        assert_eq!(parse_xreg("zero"), Some(XReg(0)));
        assert_eq!(parse_xreg("x32"), None);
        assert_eq!(parse_freg("ft3"), Some(FReg(3)));
        assert_eq!(parse_freg("fa0"), Some(FReg(10)));
        assert_eq!(parse_freg("ft8"), Some(FReg(28)));
        assert_eq!(parse_freg("f31"), Some(FReg(31)));
        assert_eq!(parse_freg("fa8"), None);
    }

    #[test]
    fn labels_and_operands() {
        let p = assemble(
            "start: li t0, 0x10 ; comment\n\
             loop:\n  fld ft3, -8(t0)\n  sub t0, t0, 8\n  bne t0, zero, loop\n\
             frep a2, 1, 4, ft3\n fmadd ft3, ft0, ft1, ft3\n scfgw a0, 31, IDX_CFG\n halt",
        )
        .unwrap();
        assert_eq!(p.instrs[0], Instr::AddI { rd: XReg(5), rs1: XReg(0), rhs: Operand::Imm(16) });
        assert_eq!(p.instrs[1], Instr::LoadF { rd: FReg(3), base: XReg(5), offset: -8 });
        assert_eq!(p.instrs[3], Instr::Branch { cond: Cond::Ne, rs1: XReg(5), rs2: XReg(0), target: 1 });
        assert_eq!(p.instrs[4], Instr::Frep { iters: XReg(12), body_len: 1, stagger: Stagger { count: 4, base: 3 } });
        assert!(p.validate().is_ok());
    }

    #[test]
    fn errors_name_the_line() {
        assert_eq!(assemble("halt\nfoo x1").unwrap_err().line, 2);
        assert_eq!(assemble("j nowhere").unwrap_err().line, 1);
        assert_eq!(assemble("fadd ft0, ft1").unwrap_err().line, 1);
        assert_eq!(assemble("a:\na:\nhalt").unwrap_err().line, 2);
    }
}
