//! Min-max crane routing: assignment and sequencing of tasks per crane,
//! ignoring interference. Its optimum is a lower bound on the makespan.

mod cuts;
mod precedence;
mod search;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Instance, Node, Time};
use crate::taskset::TaskSet;

pub use cuts::{
    arcs_from, arcs_within, find_subtour_cuts, make_cross_prec_cut, make_lifted_sec, seed_cut_pool, separation_cut, ArcLit, Cut,
    CutError, CutFamily, CutPool,
};
pub use precedence::{precedence_feasible, CycleLink, PrecedenceWitness};
pub use search::{solve_master, solve_master_warm, MasterOutcome, MasterResult, WarmStart};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RoutingError {
    #[error("routing has {got} crane sequences, instance has {want} cranes")]
    CraneCount { got: usize, want: usize },
    #[error("task {0} does not exist")]
    UnknownTask(usize),
    #[error("task {0} is not assigned")]
    Unassigned(usize),
    #[error("task {0} is assigned more than once")]
    Duplicate(usize),
    #[error("task {task} lies outside the operating range of crane {crane}")]
    Inadmissible { task: usize, crane: usize },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// Route costs: leaving the start, moving between tasks, reaching the end.
///
/// `c0[k][i] = r_k + travel(0, i) + p_i`, `c[i][j] = travel(i, j) + p_j`,
/// `cT[i][k] = travel(i, T)`; an empty route costs `travel(0, T)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostTable {
    n: usize,
    q: usize,
    start: Vec<Time>,
    between: Vec<Time>,
    end: Vec<Time>,
    empty: Vec<Time>,
}

impl CostTable {
    pub fn c0(&self, k: usize, i: usize) -> Time {
        self.start[k * self.n + i]
    }

    pub fn c(&self, i: usize, j: usize) -> Time {
        self.between[i * self.n + j]
    }

    pub fn ct(&self, i: usize, k: usize) -> Time {
        self.end[i * self.q + k]
    }

    /// Cost of a crane that performs no task.
    pub fn empty_route(&self, k: usize) -> Time {
        self.empty[k]
    }

    /// Arc cost for crane `k`; arcs that cannot occur cost nothing.
    pub fn arc(&self, k: usize, from: Node, to: Node) -> Time {
        match (from, to) {
            (Node::Start, Node::Task(i)) => self.c0(k, i),
            (Node::Task(i), Node::Task(j)) => self.c(i, j),
            (Node::Task(i), Node::End) => self.ct(i, k),
            (Node::Start, Node::End) => self.empty_route(k),
            _ => 0,
        }
    }

    pub fn route_cost(&self, k: usize, seq: &[usize]) -> Time {
        match (seq.first(), seq.last()) {
            (Some(&first), Some(&last)) => {
                self.c0(k, first) + seq.windows(2).map(|w| self.c(w[0], w[1])).sum::<Time>() + self.ct(last, k)
            }
            _ => self.empty_route(k),
        }
    }
}

pub fn build_costs(inst: &Instance) -> CostTable {
    let (n, q) = (inst.n_tasks(), inst.n_cranes());
    let mut start = vec![0; q * n];
    let mut between = vec![0; n * n];
    let mut end = vec![0; n * q];
    let mut empty = vec![0; q];
    for k in 0..q {
        empty[k] = inst.travel(Node::Start, Node::End, k);
        for i in 0..n {
            start[k * n + i] = inst.crane(k).ready + inst.travel(Node::Start, Node::Task(i), k) + inst.processing(i);
            end[i * q + k] = inst.travel(Node::Task(i), Node::End, k);
        }
    }
    for i in 0..n {
        for j in 0..n {
            between[i * n + j] = inst.travel_tasks(i, j) + inst.processing(j);
        }
    }
    CostTable {
        n,
        q,
        start,
        between,
        end,
        empty,
    }
}

/// One task sequence per crane together with the route costs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Routing {
    sequences: Vec<Vec<usize>>,
    route_cost: Vec<Time>,
    eta: Time,
    #[serde(skip)]
    crane_of: Vec<usize>,
    #[serde(skip)]
    position: Vec<usize>,
}

impl Routing {
    /// Checks assignment and crane limits; precedence feasibility is checked
    /// separately by [`precedence_feasible`].
    pub fn new(inst: &Instance, costs: &CostTable, sequences: Vec<Vec<usize>>) -> Result<Self, RoutingError> {
        let (n, q) = (inst.n_tasks(), inst.n_cranes());
        if sequences.len() != q {
            return Err(RoutingError::CraneCount {
                got: sequences.len(),
                want: q,
            });
        }
        let mut crane_of = vec![usize::MAX; n];
        let mut position = vec![0; n];
        for (k, seq) in sequences.iter().enumerate() {
            for (pos, &i) in seq.iter().enumerate() {
                if i >= n {
                    return Err(RoutingError::UnknownTask(i + 1));
                }
                if crane_of[i] != usize::MAX {
                    return Err(RoutingError::Duplicate(i + 1));
                }
                if !inst.admissible(i, k) {
                    return Err(RoutingError::Inadmissible { task: i + 1, crane: k + 1 });
                }
                crane_of[i] = k;
                position[i] = pos;
            }
        }
        if let Some(i) = crane_of.iter().position(|&k| k == usize::MAX) {
            return Err(RoutingError::Unassigned(i + 1));
        }
        let route_cost: Vec<Time> = sequences
            .iter()
            .enumerate()
            .map(|(k, s)| costs.route_cost(k, s))
            .collect();
        let eta = route_cost.iter().copied().max().unwrap_or(0);
        Ok(Routing {
            sequences,
            route_cost,
            eta,
            crane_of,
            position,
        })
    }

    pub fn sequences(&self) -> &[Vec<usize>] {
        &self.sequences
    }

    pub fn route_cost(&self) -> &[Time] {
        &self.route_cost
    }

    /// Longest route cost.
    pub fn eta(&self) -> Time {
        self.eta
    }

    pub fn n_cranes(&self) -> usize {
        self.sequences.len()
    }

    pub fn crane_of(&self, i: usize) -> usize {
        self.crane_of[i]
    }

    pub fn position(&self, i: usize) -> usize {
        self.position[i]
    }

    /// Route predecessor of `i` (the start node for a first task).
    pub fn predecessor(&self, i: usize) -> Node {
        let (k, pos) = (self.crane_of[i], self.position[i]);
        if pos == 0 {
            Node::Start
        } else {
            Node::Task(self.sequences[k][pos - 1])
        }
    }

    pub fn successor(&self, i: usize) -> Node {
        let (k, pos) = (self.crane_of[i], self.position[i]);
        self.sequences[k].get(pos + 1).map_or(Node::End, |&j| Node::Task(j))
    }

    /// Arcs `0 → … → T` of crane `k`, including `0 → T` for an empty route.
    pub fn crane_arcs(&self, k: usize) -> Vec<ArcLit> {
        let seq = &self.sequences[k];
        let nodes: Vec<Node> = std::iter::once(Node::Start)
            .chain(seq.iter().map(|&i| Node::Task(i)))
            .chain(std::iter::once(Node::End))
            .collect();
        nodes
            .windows(2)
            .map(|w| ArcLit {
                crane: k,
                from: w[0],
                to: w[1],
            })
            .collect()
    }

    pub fn arcs(&self) -> Vec<ArcLit> {
        (0..self.n_cranes()).flat_map(|k| self.crane_arcs(k)).collect()
    }

    pub fn has_arc(&self, arc: &ArcLit) -> bool {
        let k = arc.crane;
        if k >= self.n_cranes() {
            return false;
        }
        match arc.from {
            Node::Start => match self.sequences[k].first() {
                Some(&first) => arc.to == Node::Task(first),
                None => arc.to == Node::End,
            },
            Node::Task(i) => i < self.crane_of.len() && self.crane_of[i] == k && self.successor(i) == arc.to,
            Node::End => false,
        }
    }

    pub fn is_assigned(&self, i: usize, k: usize) -> bool {
        self.crane_of.get(i) == Some(&k)
    }

    /// Tasks on crane `k` before `i`.
    pub fn prefix(&self, i: usize) -> &[usize] {
        &self.sequences[self.crane_of[i]][..self.position[i]]
    }

    /// Tasks on crane `k` after `i`.
    pub fn suffix(&self, i: usize) -> &[usize] {
        &self.sequences[self.crane_of[i]][self.position[i] + 1..]
    }

    /// `k: i1 i2 ... | cost` per crane, then `eta: <value>`, one-based ids.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, seq) in self.sequences.iter().enumerate() {
            let _ = write!(out, "{}:", k + 1);
            for &i in seq {
                let _ = write!(out, " {}", i + 1);
            }
            let _ = writeln!(out, " | {}", self.route_cost[k]);
        }
        let _ = writeln!(out, "eta: {}", self.eta);
        out
    }

    /// Reads the sequences written by [`Routing::to_text`]; costs are recomputed.
    pub fn parse(inst: &Instance, costs: &CostTable, text: &str) -> Result<Self, RoutingError> {
        let sequences = parse_sequences(text, inst.n_cranes())?;
        Routing::new(inst, costs, sequences)
    }
}

/// Crane sequences from `k: i1 i2 ... [| cost]` lines; other lines are ignored.
pub fn parse_sequences(text: &str, q: usize) -> Result<Vec<Vec<usize>>, RoutingError> {
    let mut seqs: Vec<Option<Vec<usize>>> = vec![None; q];
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        let Some((head, rest)) = line.split_once(':') else {
            continue;
        };
        let Ok(k) = head.trim().parse::<usize>() else {
            continue;
        };
        let syntax = |message: String| RoutingError::Syntax { line: idx + 1, message };
        if k == 0 || k > q {
            return Err(syntax(format!("crane {k} outside [1, {q}]")));
        }
        let body = rest.split('|').next().unwrap_or("");
        let seq = body
            .split_whitespace()
            .map(|t| match t.parse::<usize>() {
                Ok(id) if id > 0 => Ok(id - 1),
                _ => Err(syntax(format!("bad task id `{t}`"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if seqs[k - 1].replace(seq).is_some() {
            return Err(syntax(format!("crane {k} listed twice")));
        }
    }
    seqs.into_iter()
        .enumerate()
        .map(|(k, s)| {
            s.ok_or(RoutingError::Syntax {
                line: 0,
                message: format!("missing route of crane {}", k + 1),
            })
        })
        .collect()
}

/// A routing under construction: each crane has a committed prefix and is
/// either still open or closed (its route ends there).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialRouting {
    pub sequences: Vec<Vec<usize>>,
    pub closed: Vec<bool>,
}

impl PartialRouting {
    pub fn empty(q: usize) -> Self {
        PartialRouting {
            sequences: vec![Vec::new(); q],
            closed: vec![false; q],
        }
    }
}

/// Admissible lower bound on the best η of any completion of `node`.
///
/// Maximum of: every crane's committed cost plus its cheapest way home;
/// for each unrouted task, the cheapest crane that could still take it;
/// and the committed plus unavoidable remaining work spread evenly over
/// the open cranes. Returns `Time::MAX` when some task has no open crane.
pub fn lower_bound(inst: &Instance, costs: &CostTable, node: &PartialRouting) -> Time {
    let committed: Vec<Time> = node
        .sequences
        .iter()
        .enumerate()
        .map(|(k, seq)| match (seq.first(), seq.last()) {
            (Some(&f), Some(&l)) => {
                costs.c0(k, f) + seq.windows(2).map(|w| costs.c(w[0], w[1])).sum::<Time>()
                    + if node.closed[k] { costs.ct(l, k) } else { 0 }
            }
            _ => {
                if node.closed[k] {
                    costs.empty_route(k)
                } else {
                    0
                }
            }
        })
        .collect();
    let routed: TaskSet = node.sequences.iter().flatten().copied().collect();
    let last: Vec<Option<usize>> = node.sequences.iter().map(|s| s.last().copied()).collect();
    bound_parts(inst, costs, &committed, &node.closed, &last, routed)
}

pub(crate) fn bound_parts(
    inst: &Instance,
    costs: &CostTable,
    committed: &[Time],
    closed: &[bool],
    last: &[Option<usize>],
    routed: TaskSet,
) -> Time {
    let (n, q) = (inst.n_tasks(), inst.n_cranes());
    let mut lb: Time = 0;
    let mut open_count = 0;
    let mut total: Time = 0;
    for k in 0..q {
        if closed[k] {
            lb = lb.max(committed[k]);
            continue;
        }
        open_count += 1;
        total += committed[k];
        let home = match last[k] {
            Some(u) => costs.ct(u, k),
            None => costs.empty_route(k),
        };
        lb = lb.max(committed[k] + home);
    }
    let unrouted = TaskSet::full(n) - routed;
    if unrouted.is_empty() {
        return lb;
    }
    if open_count == 0 {
        return Time::MAX;
    }
    for j in unrouted.iter() {
        let p = inst.processing(j);
        let mut best_finish = Time::MAX;
        let mut min_entry = Time::MAX;
        for k in 0..q {
            if closed[k] || !inst.admissible(j, k) {
                continue;
            }
            let arrive = match last[k] {
                Some(u) => committed[k] + costs.c(u, j),
                None => costs.c0(k, j),
            };
            best_finish = best_finish.min(arrive + costs.ct(j, k));
            let entry = match last[k] {
                Some(u) => costs.c(u, j) - p,
                None => costs.c0(k, j) - p,
            };
            min_entry = min_entry.min(entry);
        }
        if best_finish == Time::MAX {
            return Time::MAX;
        }
        lb = lb.max(best_finish);
        for u in unrouted.iter() {
            if u != j {
                min_entry = min_entry.min(inst.travel_tasks(u, j));
            }
        }
        total += p + min_entry;
    }
    let open = open_count as Time;
    lb.max((total + open - 1) / open)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Crane, Task};

    pub(crate) fn two_task() -> Instance {
        Instance::new(
            vec![Task::new(1, 5), Task::new(3, 7)],
            vec![Crane {
                ready: 0,
                start_bay: 1,
                end_bay: 0,
            }],
            4,
            1,
            1,
            [],
            [],
        )
        .unwrap()
    }

    #[test]
    fn cost_examples() {
        let inst = two_task();
        let c = build_costs(&inst);
        assert_eq!(c.c0(0, 0), 5);
        assert_eq!(c.c(0, 1), 2 + 7);
        assert_eq!(c.ct(0, 0), 0);
        assert_eq!(c.ct(1, 0), 0);

        let same_bay = Instance::new(
            vec![Task::new(2, 3), Task::new(2, 7)],
            vec![Crane {
                ready: 4,
                start_bay: 1,
                end_bay: 5,
            }],
            5,
            1,
            1,
            [],
            [],
        )
        .unwrap();
        let c = build_costs(&same_bay);
        assert_eq!(c.c(0, 1), 7);
        assert_eq!(c.c0(0, 0), 4 + 1 + 3);
        assert_eq!(c.ct(1, 0), 3);
        assert_eq!(c.empty_route(0), 4);
    }

    #[test]
    fn routing_text_round_trip() {
        let inst = two_task();
        let costs = build_costs(&inst);
        let r = Routing::new(&inst, &costs, vec![vec![0, 1]]).unwrap();
        assert_eq!(r.eta(), 14);
        assert_eq!(r.to_text(), "1: 1 2 | 14\neta: 14\n");
        assert_eq!(Routing::parse(&inst, &costs, &r.to_text()).unwrap(), r);
        let r2 = Routing::new(&inst, &costs, vec![vec![1, 0]]).unwrap();
        assert_eq!(r2.eta(), 16);
        assert_eq!(
            Routing::new(&inst, &costs, vec![vec![0]]),
            Err(RoutingError::Unassigned(2))
        );
        assert_eq!(
            Routing::new(&inst, &costs, vec![vec![0, 1, 0]]),
            Err(RoutingError::Duplicate(1))
        );
    }

    #[test]
    fn routing_arcs() {
        let inst = two_task();
        let costs = build_costs(&inst);
        let r = Routing::new(&inst, &costs, vec![vec![1, 0]]).unwrap();
        let arcs = r.arcs();
        assert_eq!(arcs.len(), 3);
        assert!(arcs.iter().all(|a| r.has_arc(a)));
        assert!(!r.has_arc(&ArcLit {
            crane: 0,
            from: Node::Task(0),
            to: Node::Task(1)
        }));
        assert_eq!(r.predecessor(0), Node::Task(1));
        assert_eq!(r.successor(0), Node::End);
    }

    #[test]
    fn bound_examples() {
        let inst = two_task();
        let costs = build_costs(&inst);
        let root = PartialRouting::empty(1);
        let lb = lower_bound(&inst, &costs, &root);
        assert!(lb >= 12, "at least total processing, got {lb}");
        assert!(lb <= 14, "admissible against the hand optimum, got {lb}");
        let done = PartialRouting {
            sequences: vec![vec![1, 0]],
            closed: vec![true],
        };
        assert_eq!(lower_bound(&inst, &costs, &done), 16);
    }
}
