//! Instance data and the quantities derived from it.
//!
//! Tasks and cranes are addressed by zero-based indices throughout the
//! library. File formats and printed output use one-based ids, so task
//! index `i` is written as `i + 1`.

pub mod io;
mod validate;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use validate::{
    is_unidirectional, validate_schedule, validate_schedule_with, Direction, Schedule,
    UnidirectionalReport, ValidateError, Violation, ViolationCode,
};

use crate::taskset::TaskSet;

/// Integer time unit used for every duration and timestamp.
pub type Time = i64;

/// Largest number of tasks an instance may contain (task sets are 128-bit masks).
pub const MAX_TASKS: usize = 128;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("instance must have at least one {0}")]
    Empty(&'static str),
    #[error("too many tasks: {0} (limit {MAX_TASKS})")]
    TooManyTasks(usize),
    #[error("task {task} has bay {bay} outside [1, {bays}]")]
    BayOutOfRange { task: usize, bay: usize, bays: usize },
    #[error("crane {crane} has {what} bay {bay} outside [0, {bays}]")]
    CraneBayOutOfRange {
        crane: usize,
        what: &'static str,
        bay: usize,
        bays: usize,
    },
    #[error("task {0} has negative processing time")]
    NegativeProcessing(usize),
    #[error("crane {0} has negative ready time")]
    NegativeReady(usize),
    #[error("travel time per bay must be nonnegative")]
    NegativeTravel,
    #[error("cranes must be numbered by initial position (crane {0} starts left of crane {1})")]
    CranesUnsorted(usize, usize),
    #[error("pair ({0}, {1}) references an unknown task")]
    UnknownTask(usize, usize),
    #[error("pair ({0}, {0}) relates a task to itself")]
    SelfPair(usize),
    #[error("precedence relation contains a cycle through task {0}")]
    CyclicPrecedence(usize),
    #[error("kinds required for derivation (task {0} has none)")]
    MissingKind(usize),
    #[error("crane {0} has empty operating range")]
    EmptyCraneRange(usize),
    #[error("delta is undefined for a crane paired with itself")]
    SameCrane,
}

/// Operation type of a container group; only used to derive precedences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskKind {
    UnloadDeck,
    UnloadHold,
    LoadHold,
    LoadDeck,
}

impl TaskKind {
    // Within a bay, a lower rank is always processed first.
    fn rank(self) -> u8 {
        match self {
            TaskKind::UnloadDeck => 0,
            TaskKind::UnloadHold => 1,
            TaskKind::LoadHold => 2,
            TaskKind::LoadDeck => 3,
        }
    }

    pub const ALL: [TaskKind; 4] = [
        TaskKind::UnloadDeck,
        TaskKind::UnloadHold,
        TaskKind::LoadHold,
        TaskKind::LoadDeck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::UnloadDeck => "unload-deck",
            TaskKind::UnloadHold => "unload-hold",
            TaskKind::LoadHold => "load-hold",
            TaskKind::LoadDeck => "load-deck",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub bay: usize,
    pub processing: Time,
    pub kind: Option<TaskKind>,
}

impl Task {
    pub fn new(bay: usize, processing: Time) -> Self {
        Task {
            bay,
            processing,
            kind: None,
        }
    }

    pub fn with_kind(bay: usize, processing: Time, kind: TaskKind) -> Self {
        Task {
            bay,
            processing,
            kind: Some(kind),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crane {
    pub ready: Time,
    pub start_bay: usize,
    /// Final bay; `0` leaves the final position free.
    pub end_bay: usize,
}

/// Position in a crane route: the artificial start, a task, or the artificial end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Node {
    Start,
    Task(usize),
    End,
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Start => write!(f, "0"),
            Node::Task(i) => write!(f, "{}", i + 1),
            Node::End => write!(f, "T"),
        }
    }
}

/// A vessel with its tasks, cranes and the precedence / non-simultaneity relations.
///
/// The non-simultaneity relation is always stored closed: it contains every
/// precedence pair and every pair of tasks sharing a bay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    tasks: Vec<Task>,
    cranes: Vec<Crane>,
    bays: usize,
    safety: usize,
    travel_unit: Time,
    prec: Vec<(usize, usize)>,
    nonsim: Vec<(usize, usize)>,
    prec_matrix: Vec<bool>,
    nonsim_matrix: Vec<bool>,
    prec_closure: Vec<TaskSet>,
    limits: bool,
}

impl Instance {
    /// Builds and validates an instance. `extra_nonsim` lists only the pairs
    /// that are not already implied by precedences or shared bays.
    pub fn new(
        tasks: Vec<Task>,
        cranes: Vec<Crane>,
        bays: usize,
        safety: usize,
        travel_unit: Time,
        prec: impl IntoIterator<Item = (usize, usize)>,
        extra_nonsim: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, ModelError> {
        let n = tasks.len();
        if n == 0 {
            return Err(ModelError::Empty("task"));
        }
        if cranes.is_empty() {
            return Err(ModelError::Empty("crane"));
        }
        if bays == 0 {
            return Err(ModelError::Empty("bay"));
        }
        if n > MAX_TASKS {
            return Err(ModelError::TooManyTasks(n));
        }
        if travel_unit < 0 {
            return Err(ModelError::NegativeTravel);
        }
        for (i, task) in tasks.iter().enumerate() {
            if task.bay == 0 || task.bay > bays {
                return Err(ModelError::BayOutOfRange {
                    task: i + 1,
                    bay: task.bay,
                    bays,
                });
            }
            if task.processing < 0 {
                return Err(ModelError::NegativeProcessing(i + 1));
            }
        }
        for (k, crane) in cranes.iter().enumerate() {
            if crane.ready < 0 {
                return Err(ModelError::NegativeReady(k + 1));
            }
            for (what, bay) in [("start", crane.start_bay), ("end", crane.end_bay)] {
                if bay > bays {
                    return Err(ModelError::CraneBayOutOfRange {
                        crane: k + 1,
                        what,
                        bay,
                        bays,
                    });
                }
            }
            if k > 0 && cranes[k - 1].start_bay > crane.start_bay {
                return Err(ModelError::CranesUnsorted(k, k + 1));
            }
        }

        let check_pair = |(i, j): (usize, usize)| -> Result<(usize, usize), ModelError> {
            if i >= n || j >= n {
                return Err(ModelError::UnknownTask(i + 1, j + 1));
            }
            if i == j {
                return Err(ModelError::SelfPair(i + 1));
            }
            Ok((i, j))
        };
        let prec: BTreeSet<(usize, usize)> = prec
            .into_iter()
            .map(check_pair)
            .collect::<Result<_, _>>()?;
        let extra: BTreeSet<(usize, usize)> = extra_nonsim
            .into_iter()
            .map(check_pair)
            .collect::<Result<_, _>>()?;

        let prec_closure = transitive_closure(n, &prec)?;
        let nonsim = close_nonsim(&tasks, &prec, &extra);

        let mut prec_matrix = vec![false; n * n];
        for &(i, j) in &prec {
            prec_matrix[i * n + j] = true;
        }
        let mut nonsim_matrix = vec![false; n * n];
        for &(i, j) in &nonsim {
            nonsim_matrix[i * n + j] = true;
            nonsim_matrix[j * n + i] = true;
        }

        Ok(Instance {
            tasks,
            cranes,
            bays,
            safety,
            travel_unit,
            prec: prec.into_iter().collect(),
            nonsim: nonsim.into_iter().collect(),
            prec_matrix,
            nonsim_matrix,
            prec_closure,
            limits: true,
        })
    }

    /// Same instance with the crane operating limits switched off.
    pub fn without_crane_limits(mut self) -> Self {
        self.limits = false;
        self
    }

    pub fn with_crane_limits(mut self, enabled: bool) -> Self {
        self.limits = enabled;
        self
    }

    pub fn crane_limits_enabled(&self) -> bool {
        self.limits
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn n_cranes(&self) -> usize {
        self.cranes.len()
    }

    pub fn bays(&self) -> usize {
        self.bays
    }

    pub fn safety(&self) -> usize {
        self.safety
    }

    pub fn travel_unit(&self) -> Time {
        self.travel_unit
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn cranes(&self) -> &[Crane] {
        &self.cranes
    }

    pub fn task(&self, i: usize) -> &Task {
        &self.tasks[i]
    }

    pub fn crane(&self, k: usize) -> &Crane {
        &self.cranes[k]
    }

    pub fn bay(&self, i: usize) -> usize {
        self.tasks[i].bay
    }

    pub fn processing(&self, i: usize) -> Time {
        self.tasks[i].processing
    }

    /// Precedence pairs `(i, j)`: `i` completes before `j` starts.
    pub fn prec_pairs(&self) -> &[(usize, usize)] {
        &self.prec
    }

    /// Closed non-simultaneity pairs, normalized to `i < j`.
    pub fn nonsim_pairs(&self) -> &[(usize, usize)] {
        &self.nonsim
    }

    pub fn is_prec(&self, i: usize, j: usize) -> bool {
        self.prec_matrix[i * self.n_tasks() + j]
    }

    pub fn is_nonsim(&self, i: usize, j: usize) -> bool {
        self.nonsim_matrix[i * self.n_tasks() + j]
    }

    /// Tasks reachable from `i` through one or more precedence pairs.
    pub fn prec_successors(&self, i: usize) -> TaskSet {
        self.prec_closure[i]
    }

    /// `i` must complete before `j` starts, directly or through a chain.
    pub fn prec_implied(&self, i: usize, j: usize) -> bool {
        self.prec_closure[i].contains(j)
    }

    fn bay_of(&self, node: Node, k: usize) -> Option<usize> {
        match node {
            Node::Start => Some(self.cranes[k].start_bay),
            Node::Task(i) => Some(self.tasks[i].bay),
            Node::End => match self.cranes[k].end_bay {
                0 => None,
                bay => Some(bay),
            },
        }
    }

    /// Travel time of crane `k` between two route positions.
    ///
    /// Moving to or from a free final position costs nothing.
    pub fn travel(&self, from: Node, to: Node, k: usize) -> Time {
        match (self.bay_of(from, k), self.bay_of(to, k)) {
            (Some(a), Some(b)) => self.travel_unit * a.abs_diff(b) as Time,
            _ => 0,
        }
    }

    pub fn travel_tasks(&self, i: usize, j: usize) -> Time {
        self.travel_unit * self.tasks[i].bay.abs_diff(self.tasks[j].bay) as Time
    }

    /// Minimum time between task `i` on crane `v` and task `j` on crane `w`.
    pub fn delta(&self, i: usize, j: usize, v: usize, w: usize) -> Result<Time, ModelError> {
        if v == w {
            return Err(ModelError::SameCrane);
        }
        Ok(self.gap(i, j, v, w))
    }

    /// [`Instance::delta`] without the crane check; returns 0 for `v == w`.
    pub fn gap(&self, i: usize, j: usize, v: usize, w: usize) -> Time {
        let (li, lj) = (self.tasks[i].bay as i64, self.tasks[j].bay as i64);
        let sep = self.safety as i64 + 1;
        let needed = match v.cmp(&w) {
            std::cmp::Ordering::Less => li + (w - v) as i64 * sep - lj,
            std::cmp::Ordering::Greater => lj + (v - w) as i64 * sep - li,
            std::cmp::Ordering::Equal => 0,
        };
        self.travel_unit * needed.max(0)
    }

    /// Leftmost and rightmost bays crane `k` may serve, `(l_m, l_M)`.
    pub fn crane_limits(&self, k: usize) -> Result<(usize, usize), ModelError> {
        let q = self.n_cranes() as i64;
        let sep = self.safety as i64 + 1;
        let lo = k as i64 * sep + 1;
        let hi = self.bays as i64 - (q - 1 - k as i64) * sep;
        if lo > hi {
            return Err(ModelError::EmptyCraneRange(k + 1));
        }
        Ok((lo as usize, hi as usize))
    }

    pub fn check_crane_ranges(&self) -> Result<(), ModelError> {
        if !self.limits {
            return Ok(());
        }
        (0..self.n_cranes()).try_for_each(|k| self.crane_limits(k).map(|_| ()))
    }

    /// Bays crane `k` may serve under the current limit setting.
    pub fn bay_range(&self, k: usize) -> (usize, usize) {
        if !self.limits {
            return (1, self.bays);
        }
        self.crane_limits(k).unwrap_or((1, 0))
    }

    pub fn admissible(&self, i: usize, k: usize) -> bool {
        let (lo, hi) = self.bay_range(k);
        (lo..=hi).contains(&self.tasks[i].bay)
    }

    /// All `(i, j, v, w)` with `i < j`, `v != w` and a positive temporal distance.
    pub fn theta(&self) -> Vec<(usize, usize, usize, usize)> {
        let (n, q) = (self.n_tasks(), self.n_cranes());
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for v in 0..q {
                    for w in 0..q {
                        if v != w && self.gap(i, j, v, w) > 0 {
                            out.push((i, j, v, w));
                        }
                    }
                }
            }
        }
        out
    }
}

/// Precedence pairs implied by operation kinds within each bay.
///
/// Unloading precedes loading, deck unloading precedes hold unloading and
/// hold loading precedes deck loading. Only direct rule applications are
/// emitted.
pub fn derive_precedences(tasks: &[Task]) -> Result<Vec<(usize, usize)>, ModelError> {
    let kinds = tasks
        .iter()
        .enumerate()
        .map(|(i, t)| t.kind.ok_or(ModelError::MissingKind(i + 1)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::new();
    for i in 0..tasks.len() {
        for j in 0..tasks.len() {
            if i != j && tasks[i].bay == tasks[j].bay && kinds[i].rank() < kinds[j].rank() {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

/// Non-simultaneity closure: `nonsim ∪ prec ∪ {same-bay pairs}`, normalized to `i < j`.
pub fn close_nonsim(
    tasks: &[Task],
    prec: &BTreeSet<(usize, usize)>,
    nonsim: &BTreeSet<(usize, usize)>,
) -> BTreeSet<(usize, usize)> {
    let norm = |(i, j): (usize, usize)| (i.min(j), i.max(j));
    let mut out: BTreeSet<_> = nonsim.iter().copied().map(norm).collect();
    out.extend(prec.iter().copied().map(norm));
    for i in 0..tasks.len() {
        for j in i + 1..tasks.len() {
            if tasks[i].bay == tasks[j].bay {
                out.insert((i, j));
            }
        }
    }
    out
}

fn transitive_closure(n: usize, prec: &BTreeSet<(usize, usize)>) -> Result<Vec<TaskSet>, ModelError> {
    let mut succ = vec![TaskSet::empty(); n];
    for &(i, j) in prec {
        succ[i].insert(j);
    }
    // Warshall over bitsets.
    for via in 0..n {
        for i in 0..n {
            if succ[i].contains(via) {
                let add = succ[via];
                succ[i] |= add;
            }
        }
    }
    if let Some(i) = (0..n).find(|&i| succ[i].contains(i)) {
        return Err(ModelError::CyclicPrecedence(i + 1));
    }
    Ok(succ)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn crane(start: usize) -> Crane {
        Crane {
            ready: 0,
            start_bay: start,
            end_bay: 0,
        }
    }

    fn two_task(bays: (usize, usize), b: usize, q: usize, delta: usize) -> Instance {
        Instance::new(
            vec![Task::new(bays.0, 3), Task::new(bays.1, 4)],
            (0..q).map(|k| crane(k + 1)).collect(),
            b,
            delta,
            1,
            [],
            [],
        )
        .unwrap()
    }

    #[test]
    fn derive_unload_before_load() {
        let tasks = vec![
            Task::with_kind(2, 1, TaskKind::UnloadDeck),
            Task::with_kind(2, 1, TaskKind::LoadDeck),
        ];
        assert_eq!(derive_precedences(&tasks).unwrap(), vec![(0, 1)]);
    }

    #[test]
    fn derive_ignores_other_bays() {
        let tasks = vec![
            Task::with_kind(2, 1, TaskKind::UnloadDeck),
            Task::with_kind(3, 1, TaskKind::LoadDeck),
        ];
        assert!(derive_precedences(&tasks).unwrap().is_empty());
    }

    #[test]
    fn derive_full_bay() {
        // a, b, c, d in one bay; every ordered rule application by hand.
        let tasks = vec![
            Task::with_kind(4, 1, TaskKind::UnloadDeck),
            Task::with_kind(4, 1, TaskKind::UnloadHold),
            Task::with_kind(4, 1, TaskKind::LoadHold),
            Task::with_kind(4, 1, TaskKind::LoadDeck),
        ];
        let got: BTreeSet<_> = derive_precedences(&tasks).unwrap().into_iter().collect();
        let want: BTreeSet<_> = [(0, 1), (1, 2), (2, 3), (0, 2), (0, 3), (1, 3)]
            .into_iter()
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn derive_requires_kinds() {
        let tasks = vec![Task::with_kind(1, 1, TaskKind::LoadDeck), Task::new(1, 1)];
        assert_eq!(derive_precedences(&tasks), Err(ModelError::MissingKind(2)));
    }

    #[test]
    fn close_nonsim_examples() {
        let tasks = vec![Task::new(1, 1), Task::new(2, 1)];
        let prec: BTreeSet<_> = [(0, 1)].into_iter().collect();
        let closed = close_nonsim(&tasks, &prec, &BTreeSet::new());
        assert_eq!(closed, [(0, 1)].into_iter().collect());

        let same_bay = vec![Task::new(3, 1), Task::new(3, 1)];
        let closed = close_nonsim(&same_bay, &BTreeSet::new(), &BTreeSet::new());
        assert_eq!(closed, [(0, 1)].into_iter().collect());

        let again = close_nonsim(&same_bay, &BTreeSet::new(), &closed);
        assert_eq!(again, closed);
    }

    #[test]
    fn travel_examples() {
        let inst = Instance::new(
            vec![Task::new(3, 1), Task::new(7, 1), Task::new(7, 2)],
            vec![crane(1)],
            10,
            1,
            1,
            [],
            [],
        )
        .unwrap();
        assert_eq!(inst.travel(Node::Task(0), Node::Task(1), 0), 4);
        assert_eq!(inst.travel(Node::Task(1), Node::Task(2), 0), 0);
        assert_eq!(inst.travel(Node::Task(1), Node::End, 0), 0);
        assert_eq!(inst.travel(Node::Start, Node::Task(1), 0), 6);
    }

    #[test]
    fn delta_examples() {
        let inst = two_task((5, 5), 10, 2, 1);
        assert_eq!(inst.delta(0, 1, 0, 1), Ok(2));
        let inst = two_task((5, 8), 10, 2, 1);
        assert_eq!(inst.delta(0, 1, 0, 1), Ok(0));
        let inst = two_task((4, 4), 10, 2, 2);
        assert_eq!(inst.delta(0, 1, 1, 0), Ok(3));
        assert_eq!(inst.delta(0, 1, 1, 1), Err(ModelError::SameCrane));
    }

    #[test]
    fn crane_limit_examples() {
        let inst = two_task((1, 2), 10, 2, 1);
        assert_eq!(inst.crane_limits(0), Ok((1, 8)));
        assert_eq!(inst.crane_limits(1), Ok((3, 10)));
        let inst = two_task((1, 2), 10, 1, 4);
        assert_eq!(inst.crane_limits(0), Ok((1, 10)));
        let crowded = Instance::new(
            vec![Task::new(1, 1)],
            vec![crane(1), crane(2), crane(3)],
            4,
            1,
            1,
            [],
            [],
        )
        .unwrap();
        assert_eq!(crowded.crane_limits(1), Err(ModelError::EmptyCraneRange(2)));
        assert!(crowded.check_crane_ranges().is_err());
        assert!(crowded.without_crane_limits().check_crane_ranges().is_ok());
    }

    #[test]
    fn theta_examples() {
        let single = two_task((1, 1), 10, 1, 1);
        assert!(single.theta().is_empty());
        let same_bay = two_task((4, 4), 10, 2, 1);
        assert_eq!(same_bay.theta(), vec![(0, 1, 0, 1), (0, 1, 1, 0)]);
        // bays 1 and B, B > (delta + 1) q: only task 1 on the right crane conflicts
        let apart = two_task((1, 10), 10, 3, 1);
        assert_eq!(
            apart.theta(),
            vec![(0, 1, 1, 0), (0, 1, 2, 0), (0, 1, 2, 1)]
        );
    }

    #[test]
    fn rejects_bad_instances() {
        let mk = |prec: Vec<(usize, usize)>| {
            Instance::new(
                vec![Task::new(1, 1), Task::new(2, 1), Task::new(3, 1)],
                vec![crane(1)],
                3,
                1,
                1,
                prec,
                [],
            )
        };
        assert_eq!(
            mk(vec![(0, 1), (1, 2), (2, 0)]),
            Err(ModelError::CyclicPrecedence(1))
        );
        assert_eq!(mk(vec![(1, 1)]), Err(ModelError::SelfPair(2)));
        assert_eq!(mk(vec![(1, 5)]), Err(ModelError::UnknownTask(2, 6)));
        let bad_bay = Instance::new(vec![Task::new(4, 1)], vec![crane(1)], 3, 1, 1, [], []);
        assert!(matches!(bad_bay, Err(ModelError::BayOutOfRange { .. })));
        let unsorted = Instance::new(
            vec![Task::new(1, 1)],
            vec![crane(3), crane(1)],
            10,
            1,
            1,
            [],
            [],
        );
        assert_eq!(unsorted, Err(ModelError::CranesUnsorted(1, 2)));
    }

    #[test]
    fn closure_is_kept_on_instances() {
        let inst = Instance::new(
            vec![Task::new(1, 1), Task::new(5, 1), Task::new(5, 1)],
            vec![crane(1)],
            6,
            1,
            1,
            [(0, 1)],
            [],
        )
        .unwrap();
        assert!(inst.is_nonsim(0, 1) && inst.is_nonsim(1, 0));
        assert!(inst.is_nonsim(1, 2));
        assert!(!inst.is_nonsim(0, 2));
        assert_eq!(inst.nonsim_pairs(), &[(0, 1), (1, 2)]);
    }

    proptest! {
        #[test]
        fn delta_swap_symmetry(
            li in 1usize..=12, lj in 1usize..=12,
            v in 0usize..4, w in 0usize..4,
            safety in 0usize..3, t in 1i64..3,
        ) {
            prop_assume!(v != w);
            let inst = Instance::new(
                vec![Task::new(li, 1), Task::new(lj, 1)],
                (0..4).map(|k| crane(k + 1)).collect(),
                12, safety, t, [], [],
            ).unwrap();
            prop_assert_eq!(inst.gap(0, 1, v, w), inst.gap(1, 0, w, v));
            // correct sides with enough room -> no gap
            let sep = (v.abs_diff(w) * (safety + 1)) as i64;
            let (left, right) = if v < w { (li as i64, lj as i64) } else { (lj as i64, li as i64) };
            if right - left >= sep {
                prop_assert_eq!(inst.gap(0, 1, v, w), 0);
            }
        }

        #[test]
        fn crane_ranges_tile(b in 1usize..30, q in 1usize..5, safety in 0usize..3) {
            let inst = Instance::new(
                vec![Task::new(1, 1)],
                (0..q).map(|_| crane(1)).collect(),
                b, safety, 1, [], [],
            ).unwrap();
            let feasible = b > (q - 1) * (safety + 1);
            let ranges: Vec<_> = (0..q).map(|k| inst.crane_limits(k)).collect();
            prop_assert_eq!(ranges.iter().all(|r| r.is_ok()), feasible);
            if feasible {
                for k in 1..q {
                    let (a, b) = (ranges[k - 1].clone().unwrap(), ranges[k].clone().unwrap());
                    prop_assert!(a.0 < b.0 && a.1 < b.1);
                }
            }
        }

        #[test]
        fn close_nonsim_idempotent_and_monotone(
            bays in proptest::collection::vec(1usize..4, 2..7),
            pairs in proptest::collection::vec((0usize..6, 0usize..6), 0..6),
        ) {
            let n = bays.len();
            let tasks: Vec<_> = bays.iter().map(|&b| Task::new(b, 1)).collect();
            let prec: BTreeSet<_> = pairs.iter().copied()
                .filter(|&(i, j)| i < j && j < n).collect();
            let nonsim: BTreeSet<_> = pairs.iter().copied()
                .filter(|&(i, j)| i != j && i < n && j < n).map(|(i, j)| (j, i)).collect();
            let once = close_nonsim(&tasks, &prec, &nonsim);
            let twice = close_nonsim(&tasks, &prec, &once);
            prop_assert_eq!(&once, &twice);
            for &(i, j) in nonsim.iter().chain(prec.iter()) {
                prop_assert!(once.contains(&(i.min(j), i.max(j))));
            }
        }
    }
}
