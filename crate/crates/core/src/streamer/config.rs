use crate::formats::IndexWidth;

/// Config register ids, addressed as (lane, reg). Lane 31 broadcasts writes.
pub mod reg {
    pub const STATUS: u8 = 0;
    pub const BOUND0: u8 = 2;
    pub const STRIDE0: u8 = 6;
    pub const IDX_CFG: u8 = 10;
    pub const IDX_BASE: u8 = 11;
    pub const DIMS: u8 = 13;
    pub const LENGTH: u8 = 14;
    pub const LAUNCH_READ: u8 = 24;
    pub const LAUNCH_WRITE: u8 = 28;

    pub const fn bound(level: u8) -> u8 {
        BOUND0 + level
    }

    pub const fn stride(level: u8) -> u8 {
        STRIDE0 + level
    }
}

pub const BROADCAST_LANE: u8 = 31;
pub const NUM_LANES: usize = 3;
pub const MAX_DIMS: usize = 4;

pub fn cfg_reg_by_name(name: &str) -> Option<u8> {
    Some(match name {
        "STATUS" => reg::STATUS,
        "BOUND0" => reg::bound(0),
        "BOUND1" => reg::bound(1),
        "BOUND2" => reg::bound(2),
        "BOUND3" => reg::bound(3),
        "STRIDE0" => reg::stride(0),
        "STRIDE1" => reg::stride(1),
        "STRIDE2" => reg::stride(2),
        "STRIDE3" => reg::stride(3),
        "IDX_CFG" => reg::IDX_CFG,
        "IDX_BASE" => reg::IDX_BASE,
        "DIMS" => reg::DIMS,
        "LENGTH" => reg::LENGTH,
        "LAUNCH_READ" => reg::LAUNCH_READ,
        "LAUNCH_WRITE" => reg::LAUNCH_WRITE,
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamMode {
    Affine,
    Indirect,
    MatchIntersect,
    MatchUnion,
    Egress,
}

impl StreamMode {
    pub fn is_match(self) -> bool {
        matches!(self, Self::MatchIntersect | Self::MatchUnion)
    }

    pub fn uses_indices(self) -> bool {
        !matches!(self, Self::Affine)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Read,
    Write,
}

/// IDX_CFG field codes.
pub mod mode_code {
    pub const AFFINE: u64 = 0;
    pub const INDIRECT: u64 = 1;
    pub const INTERSECT: u64 = 2;
    pub const UNION: u64 = 3;
}

/// Packs the IDX_CFG register: width in [1:0], shift in [7:4], mode in [10:8], idx_lead in [19:16].
pub fn encode_idx_cfg(width: IndexWidth, shift: u32, mode: u64, idx_lead: u32) -> u64 {
    u64::from(width.log2_bytes()) | (u64::from(shift & 0xf) << 4) | ((mode & 0x7) << 8) | (u64::from(idx_lead & 0xf) << 16)
}

/// Job descriptor committed at launch.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamConfig {
    pub mode: StreamMode,
    /// (stride in bytes, bound) from innermost outwards.
    pub loops: Vec<(u64, u64)>,
    pub data_base: u64,
    pub idx_base: u64,
    pub idx_width: IndexWidth,
    pub shift: u32,
    pub direction: Direction,
    pub idx_lead: u32,
}

impl StreamConfig {
    pub fn affine(data_base: u64, loops: Vec<(u64, u64)>, direction: Direction) -> Self {
        Self {
            mode: StreamMode::Affine,
            loops,
            data_base,
            idx_base: 0,
            idx_width: IndexWidth::W8,
            shift: 0,
            direction,
            idx_lead: 0,
        }
    }

    /// Element count for affine, indirect and match jobs.
    pub fn len(&self) -> u64 {
        match self.mode {
            StreamMode::Affine => self.loops.iter().map(|l| l.1).product(),
            _ => self.loops.first().map_or(0, |l| l.1),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFault(pub String);

/// Shadowed config registers of one lane. Writes persist across launches,
/// so a relaunch only needs the fields that change.
#[derive(Debug, Clone, Default)]
pub struct ShadowRegs {
    regs: [u64; 32],
    written: u32,
}

impl ShadowRegs {
    pub fn write(&mut self, reg: u8, value: u64) {
        self.regs[reg as usize] = value;
        self.written |= 1 << reg;
    }

    pub fn read(&self, reg: u8) -> u64 {
        self.regs[reg as usize]
    }

    fn has(&self, reg: u8) -> bool {
        self.written & (1 << reg) != 0
    }

    /// Builds the job a launch register write commits.
    pub fn launch(&self, lane: usize, direction: Direction, data_base: u64) -> Result<StreamConfig, ConfigFault> {
        let cfg = self.regs[reg::IDX_CFG as usize];
        let idx_width = IndexWidth::from_log2_bytes(cfg & 0x3).expect("two bits always decode");
        let shift = ((cfg >> 4) & 0xf) as u32;
        let code = (cfg >> 8) & 0x7;
        let idx_lead = ((cfg >> 16) & 0xf) as u32;
        let essr = lane == NUM_LANES - 1;
        let mode = match (code, essr) {
            (mode_code::AFFINE, _) => StreamMode::Affine,
            (mode_code::INDIRECT, false) => StreamMode::Indirect,
            (mode_code::INTERSECT, false) => StreamMode::MatchIntersect,
            (mode_code::UNION, false) => StreamMode::MatchUnion,
            (mode_code::INTERSECT | mode_code::UNION, true) => StreamMode::Egress,
            (c, _) => return Err(ConfigFault(format!("lane {lane} does not support mode code {c}"))),
        };
        if mode.is_match() && direction == Direction::Write {
            return Err(ConfigFault(format!("lane {lane}: index matching streams are read-only")));
        }
        if mode == StreamMode::Egress && direction == Direction::Read {
            return Err(ConfigFault(format!("lane {lane}: egress streams are write-only")));
        }
        let dims = if self.has(reg::DIMS) { self.regs[reg::DIMS as usize] } else { 1 };
        if dims == 0 || dims as usize > MAX_DIMS {
            return Err(ConfigFault(format!("lane {lane}: {dims} loop levels, at most {MAX_DIMS} supported")));
        }
        if mode.uses_indices() && dims != 1 {
            return Err(ConfigFault(format!("lane {lane}: indexed streams use a single loop level")));
        }
        let mut loops = Vec::with_capacity(dims as usize);
        for l in 0..dims as u8 {
            let (b, s) = (reg::bound(l), reg::stride(l));
            let need_bound = mode != StreamMode::Egress;
            if need_bound && !self.has(b) {
                return Err(ConfigFault(format!("lane {lane}: BOUND{l} was never written")));
            }
            if mode == StreamMode::Affine && !self.has(s) {
                return Err(ConfigFault(format!("lane {lane}: STRIDE{l} was never written")));
            }
            loops.push((self.regs[s as usize], self.regs[b as usize]));
        }
        if mode.uses_indices() && !self.has(reg::IDX_BASE) {
            return Err(ConfigFault(format!("lane {lane}: IDX_BASE was never written")));
        }
        Ok(StreamConfig {
            mode,
            loops,
            data_base,
            idx_base: self.regs[reg::IDX_BASE as usize],
            idx_width,
            shift,
            direction,
            idx_lead,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_fields_fault() {
        let mut s = ShadowRegs::default();
        assert!(s.launch(0, Direction::Read, 0).is_err());
        s.write(reg::bound(0), 4);
        assert!(s.launch(0, Direction::Read, 0).is_err());
        s.write(reg::stride(0), 8);
        let c = s.launch(0, Direction::Read, 0x100).unwrap();
        assert_eq!((c.mode, c.len(), c.data_base), (StreamMode::Affine, 4, 0x100));
        s.write(reg::IDX_CFG, encode_idx_cfg(IndexWidth::W16, 3, mode_code::INDIRECT, 0));
        assert!(s.launch(0, Direction::Read, 0).is_err());
        s.write(reg::IDX_BASE, 64);
        let c = s.launch(1, Direction::Read, 0).unwrap();
        assert_eq!((c.mode, c.idx_width, c.shift), (StreamMode::Indirect, IndexWidth::W16, 3));
    }

    #[test]
    fn lane_capabilities() {
        let mut s = ShadowRegs::default();
        s.write(reg::IDX_BASE, 0);
        s.write(reg::bound(0), 1);
        s.write(reg::IDX_CFG, encode_idx_cfg(IndexWidth::W16, 3, mode_code::UNION, 0));
        assert_eq!(s.launch(0, Direction::Read, 0).unwrap().mode, StreamMode::MatchUnion);
        assert!(s.launch(0, Direction::Write, 0).is_err());
        assert_eq!(s.launch(2, Direction::Write, 0).unwrap().mode, StreamMode::Egress);
        assert!(s.launch(2, Direction::Read, 0).is_err());
        s.write(reg::IDX_CFG, encode_idx_cfg(IndexWidth::W16, 3, mode_code::INDIRECT, 0));
        assert!(s.launch(2, Direction::Write, 0).is_err());
    }

    #[test]
    fn names_resolve() {
        assert_eq!(cfg_reg_by_name("BOUND3"), Some(5));
        assert_eq!(cfg_reg_by_name("LAUNCH_WRITE"), Some(28));
        assert_eq!(cfg_reg_by_name("nope"), None);
    }
}
