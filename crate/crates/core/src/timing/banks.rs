use super::MemRequest;

pub fn bank_of(addr: u64, banks: usize) -> usize {
    ((addr >> 3) % banks as u64) as usize
}

/// One grant per bank per cycle: round-robin across cores, then lowest port
/// within the winning core.
#[derive(Debug, Clone)]
pub struct BankArbiter {
    banks: usize,
    next_core: Vec<usize>,
    pub conflicts: u64,
}

impl BankArbiter {
    pub fn new(banks: usize) -> Self {
        assert!(banks.is_power_of_two(), "bank count must be a power of two");
        Self { banks, next_core: vec![0; banks], conflicts: 0 }
    }

    pub fn banks(&self) -> usize {
        self.banks
    }

    /// Returns one grant flag per request.
    pub fn arbitrate(&mut self, reqs: &[MemRequest], cores: usize) -> Vec<bool> {
        let mut grant = vec![false; reqs.len()];
        let mut winner: Vec<Option<usize>> = vec![None; self.banks];
        for (i, r) in reqs.iter().enumerate() {
            let b = bank_of(r.addr, self.banks);
            let better = match winner[b] {
                None => true,
                Some(w) => {
                    let cur = &reqs[w];
                    let dist = |c: usize| (c + cores - self.next_core[b] % cores) % cores;
                    (dist(r.core), r.port) < (dist(cur.core), cur.port)
                }
            };
            if better {
                winner[b] = Some(i);
            }
        }
        for (b, w) in winner.iter().enumerate() {
            if let Some(w) = *w {
                grant[w] = true;
                self.next_core[b] = (reqs[w].core + 1) % cores;
            }
        }
        self.conflicts += grant.iter().filter(|g| !**g).count() as u64;
        grant
    }
}

/// Completion cycle (relative to issue) of each request in one same-cycle batch.
/// Requests to distinct banks complete at +1; each extra requester on a bank
/// waits one cycle per predecessor.
pub fn schedule(batch: &[MemRequest], banks: usize, cores: usize) -> Vec<u64> {
    let mut arb = BankArbiter::new(banks);
    let mut done = vec![0u64; batch.len()];
    let mut left: Vec<usize> = (0..batch.len()).collect();
    let mut cycle = 0;
    while !left.is_empty() {
        cycle += 1;
        let reqs: Vec<MemRequest> = left.iter().map(|&i| batch[i]).collect();
        let g = arb.arbitrate(&reqs, cores);
        let mut still = Vec::new();
        for (k, &i) in left.iter().enumerate() {
            if g[k] {
                done[i] = cycle;
            } else {
                still.push(i);
            }
        }
        left = still;
    }
    done
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(core: usize, port: usize, addr: u64) -> MemRequest {
        MemRequest { core, port, addr }
    }

    #[test]
    fn distinct_banks_complete_together() {
        assert_eq!(schedule(&[req(0, 0, 0), req(0, 1, 8)], 32, 1), vec![1, 1]);
    }

    #[test]
    fn same_bank_serializes() {
        assert_eq!(schedule(&[req(0, 0, 0), req(0, 1, 256)], 32, 1), vec![1, 2]);
        assert_eq!(schedule(&[req(0, 0, 0), req(1, 0, 256), req(2, 2, 512)], 32, 3), vec![1, 2, 3]);
    }

    #[test]
    fn unit_stride_streams_do_not_conflict() {
        // Eight cores, each on its own 4-bank window, stepping one word per cycle.
        let mut arb = BankArbiter::new(32);
        for step in 0..64u64 {
            let reqs: Vec<_> = (0..8).map(|c| req(c, 0, (c as u64 * 4 + step) * 8)).collect();
            assert!(arb.arbitrate(&reqs, 8).iter().all(|g| *g));
        }
        assert_eq!(arb.conflicts, 0);
    }

    #[test]
    fn round_robin_across_cores() {
        let mut arb = BankArbiter::new(4);
        let reqs = [req(0, 0, 0), req(1, 0, 32)];
        let winners: Vec<usize> =
            (0..4).map(|_| arb.arbitrate(&reqs, 2).iter().position(|g| *g).unwrap()).collect();
        assert_eq!(winners, vec![0, 1, 0, 1]);
    }
}
