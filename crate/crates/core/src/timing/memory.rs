use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MemoryFault {
    #[error("access of {bytes} bytes at {addr:#x} outside memory of {size} bytes")]
    OutOfRange { addr: u64, bytes: u64, size: u64 },
    #[error("misaligned {bytes}-byte access at {addr:#x}")]
    Misaligned { addr: u64, bytes: u64 },
}

/// Flat little-endian byte-addressed memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Memory {
    bytes: Vec<u8>,
    pub reads: u64,
    pub writes: u64,
}

impl Memory {
    pub fn new(size: usize) -> Self {
        Self { bytes: vec![0; size], reads: 0, writes: 0 }
    }

    pub fn size(&self) -> u64 {
        self.bytes.len() as u64
    }

    fn check(&self, addr: u64, bytes: u64) -> Result<usize, MemoryFault> {
        if !addr.is_multiple_of(bytes) {
            return Err(MemoryFault::Misaligned { addr, bytes });
        }
        match addr.checked_add(bytes) {
            Some(end) if end <= self.size() => Ok(addr as usize),
            _ => Err(MemoryFault::OutOfRange { addr, bytes, size: self.size() }),
        }
    }

    /// Zero-extended naturally aligned load. Counts one word access.
    pub fn load(&mut self, addr: u64, bytes: u64) -> Result<u64, MemoryFault> {
        let a = self.check(addr, bytes)?;
        self.reads += 1;
        let mut buf = [0u8; 8];
        buf[..bytes as usize].copy_from_slice(&self.bytes[a..a + bytes as usize]);
        Ok(u64::from_le_bytes(buf))
    }

    pub fn store(&mut self, addr: u64, bytes: u64, value: u64) -> Result<(), MemoryFault> {
        let a = self.check(addr, bytes)?;
        self.writes += 1;
        self.bytes[a..a + bytes as usize].copy_from_slice(&value.to_le_bytes()[..bytes as usize]);
        Ok(())
    }

    /// Word write keeping the bytes whose mask bit is clear.
    pub fn store_masked(&mut self, addr: u64, value: u64, mask: u8) -> Result<(), MemoryFault> {
        let a = self.check(addr, 8)?;
        self.writes += 1;
        let v = value.to_le_bytes();
        for (i, b) in v.iter().enumerate() {
            if mask & (1 << i) != 0 {
                self.bytes[a + i] = *b;
            }
        }
        Ok(())
    }

    // Host-side accessors below bypass the access counters.

    pub fn peek_f64(&self, addr: u64) -> f64 {
        f64::from_le_bytes(self.bytes[addr as usize..addr as usize + 8].try_into().unwrap())
    }

    pub fn peek_uint(&self, addr: u64, bytes: u64) -> u64 {
        let mut buf = [0u8; 8];
        buf[..bytes as usize].copy_from_slice(&self.bytes[addr as usize..(addr + bytes) as usize]);
        u64::from_le_bytes(buf)
    }

    pub fn poke_f64(&mut self, addr: u64, v: f64) {
        self.bytes[addr as usize..addr as usize + 8].copy_from_slice(&v.to_le_bytes());
    }

    pub fn poke_uint(&mut self, addr: u64, bytes: u64, v: u64) {
        self.bytes[addr as usize..(addr + bytes) as usize].copy_from_slice(&v.to_le_bytes()[..bytes as usize]);
    }

    pub fn slice(&self, addr: u64, len: u64) -> &[u8] {
        &self.bytes[addr as usize..(addr + len) as usize]
    }

    pub fn write_bytes(&mut self, addr: u64, data: &[u8]) {
        self.bytes[addr as usize..addr as usize + data.len()].copy_from_slice(data);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn little_endian_round_trip() {
        let mut m = Memory::new(64);
        m.store(8, 8, 0x0004_0003_0002_0001).unwrap();
        assert_eq!(m.load(8, 2).unwrap(), 1);
        assert_eq!(m.load(10, 2).unwrap(), 2);
        assert_eq!(m.load(14, 2).unwrap(), 4);
        m.store_masked(8, u64::MAX, 0b0000_0011).unwrap();
        assert_eq!(m.load(8, 8).unwrap(), 0x0004_0003_0002_ffff);
        assert_eq!((m.reads, m.writes), (4, 2));
    }

    #[test]
    fn faults() {
        let mut m = Memory::new(64);
        assert!(matches!(m.load(64, 8), Err(MemoryFault::OutOfRange { .. })));
        assert!(matches!(m.load(3, 2), Err(MemoryFault::Misaligned { .. })));
        assert!(matches!(m.load(u64::MAX - 7, 8), Err(MemoryFault::OutOfRange { .. })));
    }
}
