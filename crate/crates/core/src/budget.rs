use std::time::{Duration, Instant};

/// Search limits shared by the master and slave solvers.
#[derive(Debug, Clone, Copy, Default)]
pub struct Budget {
    pub deadline: Option<Instant>,
    pub node_limit: Option<u64>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget::default()
    }

    pub fn with_time_limit(limit: Duration) -> Self {
        Budget {
            deadline: Some(Instant::now() + limit),
            node_limit: None,
        }
    }

    pub fn nodes(limit: u64) -> Self {
        Budget {
            deadline: None,
            node_limit: Some(limit),
        }
    }

    /// True once `nodes` exceeds the node limit or the deadline has passed.
    /// The clock is only read every 1024 nodes.
    pub fn exhausted(&self, nodes: u64) -> bool {
        if self.node_limit.is_some_and(|lim| nodes >= lim) {
            return true;
        }
        match self.deadline {
            Some(d) if nodes.is_multiple_of(1024) => Instant::now() >= d,
            _ => false,
        }
    }

    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}
