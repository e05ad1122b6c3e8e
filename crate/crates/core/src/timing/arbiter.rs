/// The two request sources sharing one lane port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Index,
    Data,
}

/// Round-robin between the index and data channels of one lane.
///
/// The pointer only moves on a grant, so a channel that loses a cycle keeps
/// its turn.
#[derive(Debug, Clone, Default)]
pub struct PortArbiter {
    last: Option<Channel>,
    pub index_grants: u64,
    pub data_grants: u64,
}

impl PortArbiter {
    pub fn pick(&self, index_pending: bool, data_pending: bool) -> Option<Channel> {
        match (index_pending, data_pending) {
            (false, false) => None,
            (true, false) => Some(Channel::Index),
            (false, true) => Some(Channel::Data),
            (true, true) => Some(if self.last == Some(Channel::Index) { Channel::Data } else { Channel::Index }),
        }
    }

    pub fn granted(&mut self, ch: Channel) {
        self.last = Some(ch);
        match ch {
            Channel::Index => self.index_grants += 1,
            Channel::Data => self.data_grants += 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn alternates_under_contention() {
        let mut a = PortArbiter::default();
        let mut seq = Vec::new();
        for _ in 0..6 {
            let ch = a.pick(true, true).unwrap();
            a.granted(ch);
            seq.push(ch);
        }
        assert_eq!(seq[0], Channel::Index);
        assert!(seq.windows(2).all(|w| w[0] != w[1]));
    }

    /// With one index word per n data words, the data share is n/(n+1).
    #[test]
    fn data_share_matches_bound() {
        for n in [1u64, 2, 4, 8] {
            let mut a = PortArbiter::default();
            let mut buffered = 0u64;
            let cycles = 4096 * (n + 1);
            for _ in 0..cycles {
                let ch = a.pick(buffered < n, buffered > 0).unwrap();
                a.granted(ch);
                match ch {
                    Channel::Index => buffered += n,
                    Channel::Data => buffered -= 1,
                }
            }
            let share = a.data_grants as f64 / cycles as f64;
            let want = n as f64 / (n + 1) as f64;
            assert!((share - want).abs() / want < 0.01, "n={n}: {share}");
        }
    }

    proptest! {
        #[test]
        fn fair_under_full_contention(
            prefix in proptest::collection::vec((any::<bool>(), any::<bool>()), 0..50),
            len in 1usize..500,
        ) {
            let mut a = PortArbiter::default();
            for (i, d) in prefix {
                if let Some(ch) = a.pick(i, d) {
                    a.granted(ch);
                }
            }
            let (i0, d0) = (a.index_grants as i64, a.data_grants as i64);
            for _ in 0..len {
                let ch = a.pick(true, true).unwrap();
                a.granted(ch);
            }
            let (di, dd) = (a.index_grants as i64 - i0, a.data_grants as i64 - d0);
            prop_assert!((di - dd).abs() <= 1);
        }
    }
}
