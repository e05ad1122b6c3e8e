use crate::formats::IndexWidth;
use crate::timing::Memory;

/// Bump allocator building a memory image. Every array is 8-byte aligned and
/// followed by one spare word, so scalar loops and word-granular index reads
/// may run one element past the end.
#[derive(Debug, Clone)]
pub(crate) struct Image {
    bytes: Vec<u8>,
}

pub(crate) const IMAGE_BASE: u64 = 0x100;

impl Image {
    pub fn new() -> Self {
        Self { bytes: vec![0; IMAGE_BASE as usize] }
    }

    pub fn alloc(&mut self, len: u64) -> u64 {
        let addr = self.bytes.len() as u64;
        let padded = len.div_ceil(8) * 8 + 8;
        self.bytes.resize(self.bytes.len() + padded as usize, 0);
        addr
    }

    pub fn f64s(&mut self, v: &[f64]) -> u64 {
        let addr = self.alloc(8 * v.len() as u64);
        for (k, x) in v.iter().enumerate() {
            let o = addr as usize + 8 * k;
            self.bytes[o..o + 8].copy_from_slice(&x.to_bits().to_le_bytes());
        }
        addr
    }

    pub fn indices(&mut self, v: &[u64], w: IndexWidth) -> u64 {
        let b = w.bytes() as usize;
        let addr = self.alloc((b * v.len()) as u64);
        for (k, x) in v.iter().enumerate() {
            let o = addr as usize + b * k;
            self.bytes[o..o + b].copy_from_slice(&x.to_le_bytes()[..b]);
        }
        addr
    }

    pub fn u32s(&mut self, v: &[u32]) -> u64 {
        let addr = self.alloc(4 * v.len() as u64);
        for (k, x) in v.iter().enumerate() {
            let o = addr as usize + 4 * k;
            self.bytes[o..o + 4].copy_from_slice(&x.to_le_bytes());
        }
        addr
    }

    pub fn into_memory(self) -> Memory {
        let size = (self.bytes.len() + 64).next_multiple_of(64);
        let mut m = Memory::new(size);
        m.write_bytes(0, &self.bytes);
        m
    }
}
