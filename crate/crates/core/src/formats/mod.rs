//! Sparse tensor containers and their construction.
//!
//! A [`Fiber`] is one compressed axis: a value array paired with a strictly
//! increasing index array. [`CsrMatrix`] stacks fibers behind 32-bit row
//! pointers; the same type doubles as CSC storage after [`csr_to_csc`].

mod csr;
mod fiber;
mod gen;
mod mtx;

pub use csr::{csr_to_csc, CsrMatrix};
pub use fiber::{DenseVector, Fiber};
pub use gen::{gen_csr, gen_dense_vector, gen_sparse_vector, SyntheticCsr};
pub use mtx::{load_csr_cache, load_matrix_market, parse_matrix_market, save_csr_cache, MtxField};

use thiserror::Error;

/// Unsigned index type carried by a fiber or matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum IndexWidth {
    #[serde(rename = "8")]
    W8,
    #[serde(rename = "16")]
    W16,
    #[serde(rename = "32")]
    W32,
    #[serde(rename = "64")]
    W64,
}

impl IndexWidth {
    pub const ALL: [IndexWidth; 4] = [IndexWidth::W8, IndexWidth::W16, IndexWidth::W32, IndexWidth::W64];

    pub fn from_bits(bits: u32) -> Option<Self> {
        match bits {
            8 => Some(Self::W8),
            16 => Some(Self::W16),
            32 => Some(Self::W32),
            64 => Some(Self::W64),
            _ => None,
        }
    }

    pub fn bits(self) -> u32 {
        self.bytes() * 8
    }

    pub fn bytes(self) -> u32 {
        1 << self.log2_bytes()
    }

    pub fn log2_bytes(self) -> u32 {
        match self {
            Self::W8 => 0,
            Self::W16 => 1,
            Self::W32 => 2,
            Self::W64 => 3,
        }
    }

    pub fn from_log2_bytes(log2: u64) -> Option<Self> {
        match log2 {
            0 => Some(Self::W8),
            1 => Some(Self::W16),
            2 => Some(Self::W32),
            3 => Some(Self::W64),
            _ => None,
        }
    }

    /// Largest representable index.
    pub fn max_index(self) -> u64 {
        match self {
            Self::W64 => u64::MAX,
            w => (1u64 << w.bits()) - 1,
        }
    }

    /// Indices packed into one 64-bit memory word.
    pub fn per_word(self) -> u32 {
        8 / self.bytes()
    }

    pub fn fits(self, value: u64) -> bool {
        value <= self.max_index()
    }
}

impl std::fmt::Display for IndexWidth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.bits())
    }
}

impl std::str::FromStr for IndexWidth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<u32>()
            .ok()
            .and_then(IndexWidth::from_bits)
            .ok_or_else(|| format!("index width must be 8, 16, 32 or 64, got `{s}`"))
    }
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("value {value} does not fit a {width}-bit index")]
    WidthOverflow { value: u64, width: IndexWidth },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_geometry() {
        assert_eq!(IndexWidth::W8.per_word(), 8);
        assert_eq!(IndexWidth::W16.per_word(), 4);
        assert_eq!(IndexWidth::W32.per_word(), 2);
        assert_eq!(IndexWidth::W64.per_word(), 1);
        assert_eq!(IndexWidth::W16.max_index(), 65535);
        assert!(IndexWidth::W64.fits(u64::MAX));
        assert!(!IndexWidth::W8.fits(256));
        assert_eq!("16".parse::<IndexWidth>().unwrap(), IndexWidth::W16);
        assert!("12".parse::<IndexWidth>().is_err());
    }
}
