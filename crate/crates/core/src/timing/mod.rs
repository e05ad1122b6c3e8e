//! Memory, port arbitration and stall accounting.

mod arbiter;
mod banks;
mod memory;
mod stalls;

pub use arbiter::{Channel, PortArbiter};
pub use banks::{bank_of, schedule, BankArbiter};
pub use memory::{Memory, MemoryFault};
pub use stalls::{StallBreakdown, StallCause};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TimingMode {
    /// Conflict-free memory with one port per lane.
    #[default]
    Ideal,
    /// Word-interleaved banks, one grant per bank per cycle.
    Banked,
}

impl std::str::FromStr for TimingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ideal" => Ok(Self::Ideal),
            "banked" => Ok(Self::Banked),
            _ => Err(format!("timing must be `ideal` or `banked`, got `{s}`")),
        }
    }
}

impl std::fmt::Display for TimingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Ideal => "ideal",
            Self::Banked => "banked",
        })
    }
}

/// Memory ports of one core. The core LSU and lane 0 share port 0.
pub const PORTS_PER_CORE: usize = 3;

/// A word access a requester wants this cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemRequest {
    pub core: usize,
    pub port: usize,
    pub addr: u64,
}
