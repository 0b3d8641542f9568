use std::fmt;

/// Node identifier, shared by sensors and roots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

/// One logical routing topology: the RPL instance it runs under plus its
/// position in the scenario's DAG list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DagId {
    pub instance_id: u8,
    pub dag_index: u32,
}

impl DagId {
    pub fn new(instance_id: u8, dag_index: u32) -> Self {
        DagId {
            instance_id,
            dag_index,
        }
    }
}

impl fmt::Display for DagId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.dag_index)
    }
}

/// Simulation time slot. One slot is one second of model time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SlotIndex(pub u64);

impl SlotIndex {
    pub fn next(self) -> SlotIndex {
        SlotIndex(self.0 + 1)
    }

    /// Slots elapsed since `earlier`, saturating at zero.
    pub fn since(self, earlier: SlotIndex) -> u64 {
        self.0.saturating_sub(earlier.0)
    }
}

impl fmt::Display for SlotIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
