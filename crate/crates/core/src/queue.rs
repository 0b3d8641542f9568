//! Per-DAG packet buffers with LIFO service and drop-newest admission.

use thiserror::Error;

use crate::ids::{DagId, NodeId, SlotIndex};

/// Default on-air size of a data packet in bytes. Only used for accounting.
pub const DEFAULT_PACKET_BYTES: u16 = 160;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataPacket {
    pub dag: DagId,
    pub origin: NodeId,
    pub sequence: u64,
    pub created_at: SlotIndex,
    pub size_bytes: u16,
}

impl DataPacket {
    pub fn new(dag: DagId, origin: NodeId, sequence: u64, created_at: SlotIndex) -> Self {
        DataPacket {
            dag,
            origin,
            sequence,
            created_at,
            size_bytes: DEFAULT_PACKET_BYTES,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueueError {
    #[error("packet for DAG {packet} offered to queue of DAG {queue}")]
    DagMismatch { queue: DagId, packet: DagId },
}

/// Buffer of packets one node holds for one DAG.
///
/// The most recently admitted packet is served first. A full queue rejects
/// the arriving packet and leaves its contents untouched, so the length never
/// exceeds `max_len`. A sink queue (the one a root owns) absorbs every packet
/// and always reports length zero.
#[derive(Debug, Clone)]
pub struct PacketQueue {
    dag: DagId,
    owner: NodeId,
    contents: Vec<DataPacket>,
    max_len: usize,
    sink: bool,
    absorbed: u64,
}

impl PacketQueue {
    pub fn new(dag: DagId, owner: NodeId, max_len: usize) -> Self {
        PacketQueue {
            dag,
            owner,
            contents: Vec::with_capacity(max_len.min(1024)),
            max_len,
            sink: false,
            absorbed: 0,
        }
    }

    pub fn sink(dag: DagId, owner: NodeId) -> Self {
        PacketQueue {
            sink: true,
            ..PacketQueue::new(dag, owner, 0)
        }
    }

    pub fn dag(&self) -> DagId {
        self.dag
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn len(&self) -> usize {
        self.contents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contents.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn is_sink(&self) -> bool {
        self.sink
    }

    /// Packets a sink queue has absorbed so far.
    pub fn absorbed(&self) -> u64 {
        self.absorbed
    }

    /// Admits `pkt` if there is room. Returns `Ok(false)` when the queue is
    /// full and the arriving packet was dropped.
    pub fn enqueue(&mut self, pkt: DataPacket) -> Result<bool, QueueError> {
        if pkt.dag != self.dag {
            return Err(QueueError::DagMismatch {
                queue: self.dag,
                packet: pkt.dag,
            });
        }
        if self.sink {
            self.absorbed += 1;
            return Ok(true);
        }
        if self.contents.len() >= self.max_len {
            return Ok(false);
        }
        self.contents.push(pkt);
        Ok(true)
    }

    /// Removes up to `n` packets, most recently enqueued first.
    pub fn dequeue_batch(&mut self, n: usize) -> Vec<DataPacket> {
        let take = n.min(self.contents.len());
        let split = self.contents.len() - take;
        let mut out = self.contents.split_off(split);
        out.reverse();
        out
    }

    /// Puts back packets that were taken with [`dequeue_batch`] but not
    /// transmitted, restoring their original service order. `pkts` must be in
    /// the order `dequeue_batch` produced them. Packets that no longer fit are
    /// returned.
    ///
    /// [`dequeue_batch`]: PacketQueue::dequeue_batch
    pub fn restore(&mut self, pkts: Vec<DataPacket>) -> Vec<DataPacket> {
        let mut rejected = Vec::new();
        for pkt in pkts.into_iter().rev() {
            if self.contents.len() < self.max_len {
                self.contents.push(pkt);
            } else {
                rejected.push(pkt);
            }
        }
        rejected
    }

    pub fn iter(&self) -> impl Iterator<Item = &DataPacket> {
        self.contents.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dag() -> DagId {
        DagId::new(30, 0)
    }

    fn pkt(seq: u64) -> DataPacket {
        DataPacket::new(dag(), NodeId(7), seq, SlotIndex(0))
    }

    #[test]
    fn empty_queue_accepts() {
        let mut q = PacketQueue::new(dag(), NodeId(7), 250);
        assert_eq!(q.enqueue(pkt(1)), Ok(true));
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn full_queue_drops_the_newcomer() {
        let mut q = PacketQueue::new(dag(), NodeId(7), 150);
        for i in 0..150 {
            assert_eq!(q.enqueue(pkt(i)), Ok(true));
        }
        assert_eq!(q.enqueue(pkt(999)), Ok(false));
        assert_eq!(q.len(), 150);
        assert!(q.iter().all(|p| p.sequence != 999));
    }

    #[test]
    fn boundary_admits_exactly_one_more() {
        let mut q = PacketQueue::new(dag(), NodeId(7), 250);
        for i in 0..249 {
            q.enqueue(pkt(i)).unwrap();
        }
        assert_eq!(q.enqueue(pkt(1000)), Ok(true));
        assert_eq!(q.enqueue(pkt(1001)), Ok(false));
        assert_eq!(q.len(), 250);
    }

    #[test]
    fn dag_mismatch_is_rejected() {
        let mut q = PacketQueue::new(dag(), NodeId(7), 10);
        let other = DataPacket::new(DagId::new(31, 1), NodeId(7), 0, SlotIndex(0));
        assert!(q.enqueue(other).is_err());
        assert!(q.is_empty());
    }

    #[test]
    fn lifo_batch() {
        let mut q = PacketQueue::new(dag(), NodeId(7), 10);
        for i in 1..=3 {
            q.enqueue(pkt(i)).unwrap();
        }
        let out: Vec<u64> = q.dequeue_batch(2).iter().map(|p| p.sequence).collect();
        assert_eq!(out, vec![3, 2]);
        let rest: Vec<u64> = q.iter().map(|p| p.sequence).collect();
        assert_eq!(rest, vec![1]);
    }

    #[test]
    fn zero_batch_is_a_no_op() {
        let mut q = PacketQueue::new(dag(), NodeId(7), 10);
        q.enqueue(pkt(1)).unwrap();
        assert!(q.dequeue_batch(0).is_empty());
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn batch_underflow_clamps() {
        let mut q = PacketQueue::new(dag(), NodeId(7), 10);
        q.enqueue(pkt(1)).unwrap();
        let out = q.dequeue_batch(5);
        assert_eq!(out.len(), 1);
        assert!(q.is_empty());
    }

    #[test]
    fn restore_keeps_service_order() {
        let mut q = PacketQueue::new(dag(), NodeId(7), 10);
        for i in 1..=4 {
            q.enqueue(pkt(i)).unwrap();
        }
        let batch = q.dequeue_batch(3);
        // only the first one went out
        let unsent = batch[1..].to_vec();
        assert!(q.restore(unsent).is_empty());
        let order: Vec<u64> = q.dequeue_batch(10).iter().map(|p| p.sequence).collect();
        assert_eq!(order, vec![3, 2, 1]);
    }

    #[test]
    fn sink_never_grows() {
        let mut q = PacketQueue::sink(dag(), NodeId(0));
        for i in 0..1000 {
            assert_eq!(q.enqueue(pkt(i)), Ok(true));
            assert_eq!(q.len(), 0);
        }
        assert_eq!(q.absorbed(), 1000);
    }
}
