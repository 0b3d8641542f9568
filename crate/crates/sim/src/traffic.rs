//! Upward traffic programs.

use std::collections::BTreeMap;

use brpl_core::{NodeId, SlotIndex};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrafficKind {
    Constant {
        pps: f64,
    },
    /// `burst_pps` for the first `burst_len` slots of every `period`, starting
    /// with the second period; `base_pps` otherwise.
    Burst {
        base_pps: f64,
        burst_pps: f64,
        period: u64,
        burst_len: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficProgram {
    pub kind: TrafficKind,
    /// Constant per-node rates replacing `kind` for those nodes.
    pub overrides: BTreeMap<NodeId, f64>,
}

impl TrafficProgram {
    pub fn constant(pps: f64) -> Self {
        TrafficProgram {
            kind: TrafficKind::Constant { pps },
            overrides: BTreeMap::new(),
        }
    }

    pub fn burst(base_pps: f64, burst_pps: f64, period: u64, burst_len: u64) -> Self {
        TrafficProgram {
            kind: TrafficKind::Burst {
                base_pps,
                burst_pps,
                period,
                burst_len,
            },
            overrides: BTreeMap::new(),
        }
    }

    pub fn in_burst(&self, t: SlotIndex) -> bool {
        match self.kind {
            TrafficKind::Burst {
                period, burst_len, ..
            } => period > 0 && t.0 >= period && t.0 % period < burst_len,
            TrafficKind::Constant { .. } => false,
        }
    }

    /// Packets per slot node `node` generates in slot `t`.
    pub fn rate(&self, node: NodeId, t: SlotIndex) -> f64 {
        if let Some(&pps) = self.overrides.get(&node) {
            return pps;
        }
        match self.kind {
            TrafficKind::Constant { pps } => pps,
            TrafficKind::Burst {
                base_pps,
                burst_pps,
                ..
            } => {
                if self.in_burst(t) {
                    burst_pps
                } else {
                    base_pps
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let rates: Vec<f64> = match self.kind {
            TrafficKind::Constant { pps } => vec![pps],
            TrafficKind::Burst {
                base_pps,
                burst_pps,
                ..
            } => vec![base_pps, burst_pps],
        };
        for r in rates.iter().chain(self.overrides.values()) {
            if !r.is_finite() || *r < 0.0 {
                return Err(format!("traffic rate {r} must be a finite non-negative number"));
            }
        }
        Ok(())
    }
}

/// Turns fractional rates into whole packets, carrying the remainder.
#[derive(Debug, Clone, Default)]
pub struct Accumulator {
    carry: f64,
}

impl Accumulator {
    pub fn take(&mut self, rate: f64) -> u64 {
        self.carry += rate;
        let whole = self.carry.floor();
        self.carry -= whole;
        whole as u64
    }
}
