use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StallCause {
    StreamData,
    StreamControl,
    BankConflict,
    Dependency,
    FenceDrain,
    Icache,
}

/// Non-issue cycles by cause. Every stalled cycle lands in exactly one counter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StallBreakdown {
    pub stream_data: u64,
    pub stream_control: u64,
    pub bank_conflict: u64,
    pub dependency: u64,
    pub fence_drain: u64,
    pub icache: u64,
}

impl StallBreakdown {
    pub fn add(&mut self, cause: StallCause) {
        *self.slot(cause) += 1;
    }

    pub fn add_n(&mut self, cause: StallCause, n: u64) {
        *self.slot(cause) += n;
    }

    fn slot(&mut self, cause: StallCause) -> &mut u64 {
        match cause {
            StallCause::StreamData => &mut self.stream_data,
            StallCause::StreamControl => &mut self.stream_control,
            StallCause::BankConflict => &mut self.bank_conflict,
            StallCause::Dependency => &mut self.dependency,
            StallCause::FenceDrain => &mut self.fence_drain,
            StallCause::Icache => &mut self.icache,
        }
    }

    pub fn total(&self) -> u64 {
        self.stream_data + self.stream_control + self.bank_conflict + self.dependency + self.fence_drain + self.icache
    }

    pub fn merge(&mut self, o: &StallBreakdown) {
        self.stream_data += o.stream_data;
        self.stream_control += o.stream_control;
        self.bank_conflict += o.bank_conflict;
        self.dependency += o.dependency;
        self.fence_drain += o.fence_drain;
        self.icache += o.icache;
    }
}
