//! Run metrics, summaries and CSV export.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;

use brpl_core::NodeId;

use crate::error::SimError;

pub const SLOTS_HEADER: [&str; 8] = [
    "slot",
    "generated",
    "delivered",
    "dropped",
    "data_tx",
    "ctrl_tx",
    "mean_theta",
    "mean_beta",
];
pub const PACKETS_HEADER: [&str; 6] = ["origin", "dag", "seq", "created", "delivered_or_dropped", "delay"];
pub const SUMMARY_HEADER: [&str; 2] = ["metric", "value"];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SlotRecord {
    pub slot: u64,
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub data_tx: u64,
    pub ctrl_tx: u64,
    /// Mean θ over BRPL nodes; `None` without BRPL nodes.
    pub mean_theta: Option<f64>,
    pub mean_beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacketRecord {
    pub origin: u32,
    pub dag: u32,
    pub seq: u64,
    pub created: u64,
    /// Slot the packet reached a root or was dropped.
    pub fate_slot: u64,
    /// Slots from creation to delivery; `None` for dropped packets.
    pub delay: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsSink {
    pub slots: Vec<SlotRecord>,
    pub packets: Vec<PacketRecord>,
    pub generated: u64,
    pub delivered: u64,
    pub dropped_queue_full: u64,
    /// Packets that used up their retries in a slot and went back to the queue.
    pub retry_exhausted: u64,
    pub data_tx: u64,
    pub ctrl_tx: u64,
    pub queued_at_end: u64,
    pub interop_errors: u64,
    pub conservation_violations: u64,
    pub capacity_violations: u64,
    pub root_delivered: BTreeMap<NodeId, u64>,
    pub delays: Vec<u64>,
}

impl MetricsSink {
    pub fn dropped(&self) -> u64 {
        self.dropped_queue_full
    }

    pub fn summarize(&self) -> Summary {
        summarize(self)
    }

    /// Writes `slots.csv`, `packets.csv` and `summary.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<(), SimError> {
        write_csv(self, dir)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub queued_at_end: u64,
    pub loss: Option<f64>,
    pub delivery_ratio: Option<f64>,
    pub mean_delay: Option<f64>,
    pub p95_delay: Option<u64>,
    pub data_tx: u64,
    pub ctrl_tx: u64,
    pub overhead: u64,
    pub retry_exhausted: u64,
    pub interop_errors: u64,
    pub conservation_violations: u64,
    pub capacity_violations: u64,
    pub root_share: BTreeMap<NodeId, Option<f64>>,
}

impl Summary {
    pub fn share(&self, root: NodeId) -> Option<f64> {
        self.root_share.get(&root).copied().flatten()
    }

    /// (metric, value) rows in output order; `NA` marks undefined ratios.
    pub fn rows(&self) -> Vec<(String, String)> {
        fn opt<T: Display>(v: Option<T>) -> String {
            v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into())
        }
        let mut rows = vec![
            ("generated".to_string(), self.generated.to_string()),
            ("delivered".into(), self.delivered.to_string()),
            ("dropped".into(), self.dropped.to_string()),
            ("queued_at_end".into(), self.queued_at_end.to_string()),
            ("loss".into(), opt(self.loss)),
            ("delivery_ratio".into(), opt(self.delivery_ratio)),
            ("mean_delay".into(), opt(self.mean_delay)),
            ("p95_delay".into(), opt(self.p95_delay)),
            ("data_tx".into(), self.data_tx.to_string()),
            ("ctrl_tx".into(), self.ctrl_tx.to_string()),
            ("overhead".into(), self.overhead.to_string()),
            ("retry_exhausted".into(), self.retry_exhausted.to_string()),
            ("interop_errors".into(), self.interop_errors.to_string()),
            ("conservation_violations".into(), self.conservation_violations.to_string()),
            ("capacity_violations".into(), self.capacity_violations.to_string()),
        ];
        for (root, share) in &self.root_share {
            rows.push((format!("root_share:{root}"), opt(*share)));
        }
        rows
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Nearest-rank percentile of a sample.
pub fn percentile(sorted: &[u64], p: f64) -> Option<u64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (p / 100.0 * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

pub fn summarize(sink: &MetricsSink) -> Summary {
    let mut delays = sink.delays.clone();
    delays.sort_unstable();
    let mean_delay = (!delays.is_empty()).then(|| delays.iter().sum::<u64>() as f64 / delays.len() as f64);
    Summary {
        generated: sink.generated,
        delivered: sink.delivered,
        dropped: sink.dropped(),
        queued_at_end: sink.queued_at_end,
        loss: ratio(sink.dropped(), sink.generated),
        delivery_ratio: ratio(sink.delivered, sink.generated),
        mean_delay,
        p95_delay: percentile(&delays, 95.0),
        data_tx: sink.data_tx,
        ctrl_tx: sink.ctrl_tx,
        overhead: sink.data_tx + sink.ctrl_tx,
        retry_exhausted: sink.retry_exhausted,
        interop_errors: sink.interop_errors,
        conservation_violations: sink.conservation_violations,
        capacity_violations: sink.capacity_violations,
        root_share: sink
            .root_delivered
            .iter()
            .map(|(&r, &n)| (r, ratio(n, sink.delivered)))
            .collect(),
    }
}

fn opt_field<T: Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> SimError + '_ {
    move |source| SimError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_csv(sink: &MetricsSink, dir: &Path) -> Result<(), SimError> {
    std::fs::create_dir_all(dir).map_err(|source| SimError::Io {
        path: dir.to_path_buf(),
        source,
    })?;

    let path = dir.join("slots.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(SLOTS_HEADER).map_err(csv_err(&path))?;
    for s in &sink.slots {
        w.write_record([
            s.slot.to_string(),
            s.generated.to_string(),
            s.delivered.to_string(),
            s.dropped.to_string(),
            s.data_tx.to_string(),
            s.ctrl_tx.to_string(),
            opt_field(s.mean_theta),
            opt_field(s.mean_beta),
        ])
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(|source| SimError::Io {
        path: path.clone(),
        source,
    })?;

    let path = dir.join("packets.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(PACKETS_HEADER).map_err(csv_err(&path))?;
    for p in &sink.packets {
        w.write_record([
            p.origin.to_string(),
            p.dag.to_string(),
            p.seq.to_string(),
            p.created.to_string(),
            p.fate_slot.to_string(),
            opt_field(p.delay),
        ])
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(|source| SimError::Io {
        path: path.clone(),
        source,
    })?;

    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(SUMMARY_HEADER).map_err(csv_err(&path))?;
    for (k, v) in summarize(sink).rows() {
        w.write_record([k, v]).map_err(csv_err(&path))?;
    }
    w.flush().map_err(|source| SimError::Io { path, source })?;
    Ok(())
}

fn parse_opt<T: std::str::FromStr>(s: &str) -> Option<T> {
    if s.is_empty() {
        None
    } else {
        s.parse().ok()
    }
}

/// Reads back a `slots.csv` written by [`write_csv`].
pub fn read_slots_csv(path: &Path) -> Result<Vec<SlotRecord>, SimError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let num = |i: usize| rec.get(i).and_then(|s| s.parse::<u64>().ok()).unwrap_or(0);
        out.push(SlotRecord {
            slot: num(0),
            generated: num(1),
            delivered: num(2),
            dropped: num(3),
            data_tx: num(4),
            ctrl_tx: num(5),
            mean_theta: rec.get(6).and_then(parse_opt),
            mean_beta: rec.get(7).and_then(parse_opt),
        });
    }
    Ok(out)
}

/// Reads back a `packets.csv` written by [`write_csv`].
pub fn read_packets_csv(path: &Path) -> Result<Vec<PacketRecord>, SimError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let num = |i: usize| rec.get(i).and_then(|s| s.parse::<u64>().ok()).unwrap_or(0);
        out.push(PacketRecord {
            origin: num(0) as u32,
            dag: num(1) as u32,
            seq: num(2),
            created: num(3),
            fate_slot: num(4),
            delay: rec.get(5).and_then(parse_opt),
        });
    }
    Ok(out)
}

/// Reads back `summary.csv` as (metric, value) pairs.
pub fn read_summary_csv(path: &Path) -> Result<Vec<(String, String)>, SimError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        out.push((rec.get(0).unwrap_or("").to_string(), rec.get(1).unwrap_or("").to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_run_has_zero_loss() {
        let sink = MetricsSink {
            generated: 1000,
            delivered: 1000,
            ..MetricsSink::default()
        };
        assert_eq!(sink.summarize().loss, Some(0.0));
    }

    #[test]
    fn uniform_delay() {
        let sink = MetricsSink {
            delays: vec![2; 50],
            delivered: 50,
            generated: 50,
            ..MetricsSink::default()
        };
        let s = sink.summarize();
        assert_eq!(s.mean_delay, Some(2.0));
        assert_eq!(s.p95_delay, Some(2));
    }

    #[test]
    fn nothing_generated_is_not_applicable() {
        let s = MetricsSink::default().summarize();
        assert_eq!(s.loss, None);
        assert_eq!(s.mean_delay, None);
        assert!(s.rows().iter().any(|(k, v)| k == "loss" && v == "NA"));
    }

    #[test]
    fn nearest_rank() {
        let v: Vec<u64> = (1..=20).collect();
        assert_eq!(percentile(&v, 95.0), Some(19));
        assert_eq!(percentile(&[7], 95.0), Some(7));
        assert_eq!(percentile(&[], 95.0), None);
    }

    #[test]
    fn root_shares() {
        let mut sink = MetricsSink {
            delivered: 4,
            ..MetricsSink::default()
        };
        sink.root_delivered.insert(NodeId(0), 3);
        sink.root_delivered.insert(NodeId(9), 1);
        let s = sink.summarize();
        assert_eq!(s.share(NodeId(0)), Some(0.75));
        assert!(s.rows().iter().any(|(k, v)| k == "root_share:9" && v == "0.25"));
    }
}
