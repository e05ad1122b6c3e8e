use super::ClusterError;

/// Cycles to move `bytes` over a `width_bits`-wide channel.
pub fn dma_cycles(bytes: u64, width_bits: u32) -> u64 {
    let per = u64::from(width_bits / 8).max(1);
    bytes.div_ceil(per)
}

/// One matrix transfer into a slot of the double buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DmaJob {
    pub chunk: usize,
    pub bytes: u64,
    /// Which half of the double buffer (0 = A, 1 = B).
    pub buffer: usize,
    /// Slot within the buffer half.
    pub slot: usize,
}

/// Single-channel DMA engine: one job in flight, slots must be free before reuse.
#[derive(Debug, Clone)]
pub struct Dma {
    pub width_bits: u32,
    in_flight: Option<(DmaJob, u64)>,
    /// Chunk occupying each (buffer, slot), until its core finishes it.
    occupant: Vec<Option<usize>>,
    slots: usize,
    pub busy_cycles: u64,
}

impl Dma {
    pub fn new(width_bits: u32, slots_per_buffer: usize) -> Self {
        Self { width_bits, in_flight: None, occupant: vec![None; 2 * slots_per_buffer], slots: slots_per_buffer, busy_cycles: 0 }
    }

    pub fn idle(&self) -> bool {
        self.in_flight.is_none()
    }

    /// Buffer position of chunk `c` in streaming order.
    pub fn placement(&self, c: usize) -> (usize, usize) {
        ((c / self.slots) % 2, c % self.slots)
    }

    pub fn slot_free(&self, c: usize) -> bool {
        let (b, s) = self.placement(c);
        self.occupant[b * self.slots + s].is_none()
    }

    /// Starts a transfer; returns its completion cycle.
    pub fn issue(&mut self, job: DmaJob, now: u64) -> Result<u64, ClusterError> {
        if self.in_flight.is_some() {
            return Err(ClusterError::Dma("a transfer is already in flight".into()));
        }
        let i = job.buffer * self.slots + job.slot;
        if let Some(c) = self.occupant[i] {
            return Err(ClusterError::Dma(format!(
                "chunk {} would overwrite chunk {c} in buffer {} slot {}",
                job.chunk, job.buffer, job.slot
            )));
        }
        self.occupant[i] = Some(job.chunk);
        let done = now + dma_cycles(job.bytes, self.width_bits);
        self.busy_cycles += done - now;
        self.in_flight = Some((job, done));
        Ok(done)
    }

    /// Retires the in-flight job if it has landed by `now`.
    pub fn poll(&mut self, now: u64) -> Option<DmaJob> {
        match self.in_flight {
            Some((j, t)) if t <= now => {
                self.in_flight = None;
                Some(j)
            }
            _ => None,
        }
    }

    /// A core finished chunk `c`; its slot may be refilled.
    pub fn release(&mut self, c: usize) {
        for o in &mut self.occupant {
            if *o == Some(c) {
                *o = None;
            }
        }
    }
}
