//! Completion times for a fixed routing.
//!
//! Route order is fixed; what remains is the order of conflicting tasks on
//! different cranes. Those choices are disjunctions in a graph whose longest
//! paths give earliest completion times, and a depth-first branch and bound
//! over the disjunctions finds the minimum makespan.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::Budget;
use crate::master::Routing;
use crate::model::{Instance, Node, Schedule, Time};

/// Ordering decisions implied by a routing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedOrder {
    /// `(i, j)`: `i` completes before `j` starts.
    pub fixed: Vec<(usize, usize)>,
    /// Cross-crane pairs whose order is still open, `i < j`.
    pub free: Vec<(usize, usize)>,
}

/// Orders forced by the routing: route order on each crane and precedence
/// pairs across cranes. Conflicting cross-crane pairs without a precedence
/// pair stay free.
pub fn fix_z_from_routing(inst: &Instance, routing: &Routing) -> FixedOrder {
    let n = inst.n_tasks();
    let mut fixed = Vec::new();
    for seq in routing.sequences() {
        for (a, &i) in seq.iter().enumerate() {
            for &j in &seq[a + 1..] {
                if inst.is_nonsim(i, j) || conflicts_across(inst, routing, i, j) {
                    fixed.push((i, j));
                }
            }
        }
    }
    let mut free = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if routing.crane_of(i) == routing.crane_of(j) {
                continue;
            }
            if inst.is_prec(i, j) {
                fixed.push((i, j));
            } else if inst.is_prec(j, i) {
                fixed.push((j, i));
            } else if conflicts_across(inst, routing, i, j) {
                free.push((i, j));
            }
        }
    }
    fixed.sort_unstable();
    FixedOrder { fixed, free }
}

fn conflicts_across(inst: &Instance, routing: &Routing, i: usize, j: usize) -> bool {
    let (v, w) = (routing.crane_of(i), routing.crane_of(j));
    v != w && (inst.is_nonsim(i, j) || inst.gap(i, j, v, w) > 0)
}

/// Graph node: a task, a crane source `σ_k` or a crane sink `τ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GraphNode {
    Task(usize),
    Source(usize),
    Sink(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub from: GraphNode,
    pub to: GraphNode,
    pub weight: Time,
}

/// Exactly one of `i → j` (weight `w_ij`) and `j → i` (weight `w_ji`) must hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disjunction {
    pub i: usize,
    pub j: usize,
    pub w_ij: Time,
    pub w_ji: Time,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisjunctiveGraph {
    n: usize,
    q: usize,
    crane_of: Vec<usize>,
    fixed: Vec<Arc>,
    disjunctions: Vec<Disjunction>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("routing does not match the instance")]
    Mismatch,
    #[error("fixed arcs contain a cycle; the routing violates the precedence order")]
    CyclicRouting,
}

impl DisjunctiveGraph {
    pub fn n_tasks(&self) -> usize {
        self.n
    }

    pub fn n_cranes(&self) -> usize {
        self.q
    }

    pub fn fixed_arcs(&self) -> &[Arc] {
        &self.fixed
    }

    pub fn disjunctions(&self) -> &[Disjunction] {
        &self.disjunctions
    }

    pub fn crane_of(&self, i: usize) -> usize {
        self.crane_of[i]
    }

    fn index(&self, node: GraphNode) -> usize {
        match node {
            GraphNode::Task(i) => i,
            GraphNode::Source(k) => self.n + k,
            GraphNode::Sink(k) => self.n + self.q + k,
        }
    }

    fn size(&self) -> usize {
        self.n + 2 * self.q
    }
}

/// Disjunctive graph of `routing`: route arcs, cross-crane precedence arcs
/// and one disjunction per remaining conflicting cross-crane pair.
pub fn build_graph(inst: &Instance, routing: &Routing) -> Result<DisjunctiveGraph, GraphError> {
    let (n, q) = (inst.n_tasks(), inst.n_cranes());
    if routing.n_cranes() != q || routing.sequences().iter().map(Vec::len).sum::<usize>() != n {
        return Err(GraphError::Mismatch);
    }
    // same-crane pairs get no arc below, so a reversed one would go unnoticed
    let reversed = inst
        .prec_pairs()
        .iter()
        .any(|&(i, j)| routing.crane_of(i) == routing.crane_of(j) && routing.position(i) > routing.position(j));
    if reversed {
        return Err(GraphError::CyclicRouting);
    }
    let mut fixed = Vec::new();
    for (k, seq) in routing.sequences().iter().enumerate() {
        let Some((&first, &last)) = seq.first().zip(seq.last()) else {
            fixed.push(Arc {
                from: GraphNode::Source(k),
                to: GraphNode::Sink(k),
                weight: inst.travel(Node::Start, Node::End, k),
            });
            continue;
        };
        fixed.push(Arc {
            from: GraphNode::Source(k),
            to: GraphNode::Task(first),
            weight: inst.crane(k).ready + inst.travel(Node::Start, Node::Task(first), k) + inst.processing(first),
        });
        for w in seq.windows(2) {
            fixed.push(Arc {
                from: GraphNode::Task(w[0]),
                to: GraphNode::Task(w[1]),
                weight: inst.travel_tasks(w[0], w[1]) + inst.processing(w[1]),
            });
        }
        fixed.push(Arc {
            from: GraphNode::Task(last),
            to: GraphNode::Sink(k),
            weight: inst.travel(Node::Task(last), Node::End, k),
        });
    }
    let order = fix_z_from_routing(inst, routing);
    for &(i, j) in &order.fixed {
        let (v, w) = (routing.crane_of(i), routing.crane_of(j));
        if v != w {
            fixed.push(Arc {
                from: GraphNode::Task(i),
                to: GraphNode::Task(j),
                weight: inst.processing(j) + inst.gap(i, j, v, w),
            });
        }
    }
    let disjunctions = order
        .free
        .iter()
        .map(|&(i, j)| {
            let gap = inst.gap(i, j, routing.crane_of(i), routing.crane_of(j));
            Disjunction {
                i,
                j,
                w_ij: inst.processing(j) + gap,
                w_ji: inst.processing(i) + gap,
            }
        })
        .collect();
    let graph = DisjunctiveGraph {
        n,
        q,
        crane_of: (0..n).map(|i| routing.crane_of(i)).collect(),
        fixed,
        disjunctions,
    };
    if longest_paths(&graph, &vec![None; graph.disjunctions.len()]).is_err() {
        return Err(GraphError::CyclicRouting);
    }
    Ok(graph)
}

/// Earliest completion times under the fixed and oriented arcs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathTimes {
    /// Completion time per task.
    pub completion: Vec<Time>,
    /// Completion time per crane (its sink).
    pub crane_completion: Vec<Time>,
    pub makespan: Time,
}

/// Oriented arcs contain a cycle; no schedule exists for that orientation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleReport {
    /// Tasks left unordered by the topological pass, each on or behind a cycle.
    pub blocked: Vec<usize>,
}

/// `orientation[d]`: `Some(true)` for `i → j`, `Some(false)` for `j → i`,
/// `None` leaves disjunction `d` out.
pub fn longest_paths(graph: &DisjunctiveGraph, orientation: &[Option<bool>]) -> Result<PathTimes, CycleReport> {
    let dist = longest_dist(graph, orientation)?;
    let (n, q) = (graph.n, graph.q);
    let crane_completion: Vec<Time> = (0..q).map(|k| dist[n + q + k]).collect();
    Ok(PathTimes {
        completion: dist[..n].to_vec(),
        makespan: crane_completion.iter().copied().max().unwrap_or(0),
        crane_completion,
    })
}

fn oriented_arcs<'a>(
    graph: &'a DisjunctiveGraph,
    orientation: &'a [Option<bool>],
) -> impl Iterator<Item = (usize, usize, Time)> + 'a {
    let fixed = graph
        .fixed
        .iter()
        .map(|a| (graph.index(a.from), graph.index(a.to), a.weight));
    let chosen = graph
        .disjunctions
        .iter()
        .zip(orientation)
        .filter_map(|(d, o)| match o {
            Some(true) => Some((d.i, d.j, d.w_ij)),
            Some(false) => Some((d.j, d.i, d.w_ji)),
            None => None,
        });
    fixed.chain(chosen)
}

fn longest_dist(graph: &DisjunctiveGraph, orientation: &[Option<bool>]) -> Result<Vec<Time>, CycleReport> {
    let size = graph.size();
    let mut out: Vec<Vec<(usize, Time)>> = vec![Vec::new(); size];
    let mut indeg = vec![0usize; size];
    for (u, v, w) in oriented_arcs(graph, orientation) {
        out[u].push((v, w));
        indeg[v] += 1;
    }
    let mut dist = vec![0 as Time; size];
    let mut queue: VecDeque<usize> = (0..size).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(u) = queue.pop_front() {
        seen += 1;
        for &(v, w) in &out[u] {
            dist[v] = dist[v].max(dist[u] + w);
            indeg[v] -= 1;
            if indeg[v] == 0 {
                queue.push_back(v);
            }
        }
    }
    if seen < size {
        return Err(CycleReport {
            blocked: (0..graph.n).filter(|&i| indeg[i] > 0).collect(),
        });
    }
    Ok(dist)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlaveSolution {
    pub completion: Vec<Time>,
    pub crane_completion: Vec<Time>,
    pub makespan: Time,
    /// Per disjunction, `true` when `i` precedes `j`.
    pub orientation: Vec<bool>,
    /// The makespan is proven minimal.
    pub exact: bool,
    /// The search ran to the end; false when a budget interrupted it.
    pub complete: bool,
    pub nodes: u64,
}

impl SlaveSolution {
    pub fn schedule(&self) -> Schedule {
        Schedule {
            completion: self.completion.clone(),
            crane_completion: self.crane_completion.clone(),
            makespan: self.makespan,
        }
    }
}

/// Minimum makespan over all orientations. With `ub`, only schedules
/// finishing strictly before it are sought; if none exists the returned
/// solution is feasible but `exact` is false.
pub fn solve_slave(graph: &DisjunctiveGraph, ub: Option<Time>) -> SlaveSolution {
    solve_slave_with(graph, ub, &Budget::unlimited())
}

pub fn solve_slave_with(graph: &DisjunctiveGraph, ub: Option<Time>, budget: &Budget) -> SlaveSolution {
    let d = graph.disjunctions.len();
    let initial = topological_orientation(graph);
    let times = longest_paths(graph, &initial.iter().map(|&o| Some(o)).collect::<Vec<_>>())
        .expect("topological orientation is acyclic");
    let mut s = SlaveSearch {
        graph,
        budget: *budget,
        orientation: vec![None; d],
        best_w: times.makespan,
        best: (times, initial),
        bound: ub.unwrap_or(Time::MAX),
        nodes: 0,
        aborted: false,
    };
    s.bound = s.bound.min(s.best_w);
    if d > 0 {
        s.dfs();
    }
    let (times, orientation) = s.best;
    // pruning below `ub` only hides schedules when the incumbent is above it
    let exact = !s.aborted && ub.is_none_or(|u| times.makespan <= u);
    SlaveSolution {
        completion: times.completion,
        crane_completion: times.crane_completion,
        makespan: times.makespan,
        orientation,
        exact,
        complete: !s.aborted,
        nodes: s.nodes,
    }
}

/// Orients every disjunction along a topological order of the fixed arcs.
fn topological_orientation(graph: &DisjunctiveGraph) -> Vec<bool> {
    let size = graph.size();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); size];
    let mut indeg = vec![0usize; size];
    for a in &graph.fixed {
        let (u, v) = (graph.index(a.from), graph.index(a.to));
        out[u].push(v);
        indeg[v] += 1;
    }
    let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<usize>> =
        (0..size).filter(|&v| indeg[v] == 0).map(std::cmp::Reverse).collect();
    let mut rank = vec![usize::MAX; size];
    let mut next = 0;
    while let Some(std::cmp::Reverse(u)) = heap.pop() {
        rank[u] = next;
        next += 1;
        for &v in &out[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                heap.push(std::cmp::Reverse(v));
            }
        }
    }
    graph.disjunctions.iter().map(|d| rank[d.i] < rank[d.j]).collect()
}

struct SlaveSearch<'a> {
    graph: &'a DisjunctiveGraph,
    budget: Budget,
    orientation: Vec<Option<bool>>,
    best: (PathTimes, Vec<bool>),
    best_w: Time,
    /// Schedules must finish strictly before this.
    bound: Time,
    nodes: u64,
    aborted: bool,
}

impl SlaveSearch<'_> {
    fn dfs(&mut self) {
        self.nodes += 1;
        if self.budget.exhausted(self.nodes) {
            self.aborted = true;
            return;
        }
        let Ok(dist) = longest_dist(self.graph, &self.orientation) else {
            return;
        };
        let g = self.graph;
        let (n, q) = (g.n, g.q);
        let w = (0..q).map(|k| dist[n + q + k]).max().unwrap_or(0);
        if w >= self.bound {
            return;
        }
        let violated: Vec<usize> = (0..g.disjunctions.len())
            .filter(|&d| {
                let dj = &g.disjunctions[d];
                self.orientation[d].is_none()
                    && dist[dj.i] + dj.w_ij > dist[dj.j]
                    && dist[dj.j] + dj.w_ji > dist[dj.i]
            })
            .collect();
        if violated.is_empty() {
            let orientation = g
                .disjunctions
                .iter()
                .zip(&self.orientation)
                .map(|(dj, o)| o.unwrap_or(dist[dj.i] + dj.w_ij <= dist[dj.j]))
                .collect();
            let times = PathTimes {
                completion: dist[..n].to_vec(),
                crane_completion: (0..q).map(|k| dist[n + q + k]).collect(),
                makespan: w,
            };
            self.best = (times, orientation);
            self.best_w = w;
            self.bound = w;
            return;
        }
        let critical = self.critical(&dist, w);
        let pick = violated
            .iter()
            .copied()
            .min_by_key(|&d| {
                let dj = &g.disjunctions[d];
                (!(critical[dj.i] && critical[dj.j]), dj.i, dj.j)
            })
            .expect("nonempty");
        let dj = g.disjunctions[pick];
        // start with the order the current times already suggest
        let first = dist[dj.i] - dj.w_ji <= dist[dj.j] - dj.w_ij;
        for dir in [first, !first] {
            self.orientation[pick] = Some(dir);
            self.dfs();
            if self.aborted {
                break;
            }
        }
        self.orientation[pick] = None;
    }

    /// Nodes lying on some longest path to a sink of length `w`.
    fn critical(&self, dist: &[Time], w: Time) -> Vec<bool> {
        let g = self.graph;
        let size = g.size();
        let mut out: Vec<Vec<(usize, Time)>> = vec![Vec::new(); size];
        for (u, v, wt) in oriented_arcs(g, &self.orientation) {
            out[u].push((v, wt));
        }
        // process in decreasing distance; arcs have nonnegative weight so heads come later
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by_key(|&v| std::cmp::Reverse((dist[v], v)));
        let mut on = vec![false; size];
        let sink0 = g.n + g.q;
        for &v in &order {
            on[v] = (v >= sink0 && dist[v] == w)
                || out[v].iter().any(|&(u, wt)| on[u] && dist[v] + wt == dist[u]);
        }
        on
    }
}

/// Plain-text schedule block: tasks with crane, start and completion, crane
/// completion times and the makespan. Ids are one-based.
pub fn schedule_to_text(inst: &Instance, routing: &Routing, schedule: &Schedule) -> String {
    let mut out = String::from("[schedule]\ntasks:\n");
    for i in 0..inst.n_tasks() {
        let _ = writeln!(
            out,
            "  {}: crane {}, start {}, completion {}",
            i + 1,
            routing.crane_of(i) + 1,
            schedule.start(inst, i),
            schedule.completion[i]
        );
    }
    out.push_str("cranes:\n");
    for (k, c) in schedule.crane_completion.iter().enumerate() {
        let _ = writeln!(out, "  {}: {}", k + 1, c);
    }
    let _ = writeln!(out, "W: {}", schedule.makespan);
    out
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("schedule line {line}: {message}")]
pub struct ScheduleParseError {
    pub line: usize,
    pub message: String,
}

/// A schedule read back from text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedSchedule {
    pub crane_of: Vec<usize>,
    pub start: Vec<Time>,
    pub schedule: Schedule,
}

impl ParsedSchedule {
    /// Crane sequences ordered by start time, then completion, then id.
    pub fn sequences(&self) -> Vec<Vec<usize>> {
        let q = self.schedule.crane_completion.len();
        let mut seqs = vec![Vec::new(); q];
        let mut order: Vec<usize> = (0..self.crane_of.len()).collect();
        order.sort_by_key(|&i| (self.start[i], self.schedule.completion[i], i));
        for i in order {
            if let Some(s) = seqs.get_mut(self.crane_of[i]) {
                s.push(i);
            }
        }
        seqs
    }
}

/// Reads the `[schedule]` block written by [`schedule_to_text`]. Text before
/// the block header, if any, is skipped; the block ends at the next `[` header.
pub fn parse_schedule(text: &str) -> Result<ParsedSchedule, ScheduleParseError> {
    #[derive(PartialEq)]
    enum Part {
        Before,
        Head,
        Tasks,
        Cranes,
    }
    let has_header = text.lines().any(|l| l.trim() == "[schedule]");
    let mut part = if has_header { Part::Before } else { Part::Head };
    let mut tasks: Vec<(usize, usize, Time, Time)> = Vec::new();
    let mut cranes: Vec<(usize, Time)> = Vec::new();
    let mut makespan = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let err = |message: String| ScheduleParseError { line: idx + 1, message };
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if line == "[schedule]" {
                part = Part::Head;
                continue;
            }
            if part != Part::Before {
                break;
            }
            continue;
        }
        if part == Part::Before {
            continue;
        }
        match line {
            "tasks:" => {
                part = Part::Tasks;
                continue;
            }
            "cranes:" => {
                part = Part::Cranes;
                continue;
            }
            _ => {}
        }
        let (head, rest) = line
            .split_once(':')
            .ok_or_else(|| err(format!("expected `key: value`, found `{line}`")))?;
        let head = head.trim();
        if head == "W" {
            makespan = Some(parse_int(rest.trim()).ok_or_else(|| err(format!("bad makespan `{}`", rest.trim())))?);
            continue;
        }
        let id: usize = match head.parse() {
            Ok(v) if v > 0 => v,
            _ => return Err(err(format!("bad id `{head}`"))),
        };
        match part {
            Part::Tasks => {
                let mut crane = None;
                let mut start = None;
                let mut completion = None;
                for field in rest.split(',') {
                    let mut it = field.split_whitespace();
                    let (Some(key), Some(val), None) = (it.next(), it.next(), it.next()) else {
                        return Err(err(format!("bad field `{}`", field.trim())));
                    };
                    let v = parse_int(val).ok_or_else(|| err(format!("bad number `{val}`")))?;
                    match key {
                        "crane" => crane = Some(v),
                        "start" => start = Some(v),
                        "completion" => completion = Some(v),
                        _ => return Err(err(format!("unknown field `{key}`"))),
                    }
                }
                let (Some(c), Some(s), Some(d)) = (crane, start, completion) else {
                    return Err(err("task line needs crane, start and completion".into()));
                };
                if c < 1 {
                    return Err(err(format!("bad crane id {c}")));
                }
                tasks.push((id, c as usize, s, d));
            }
            Part::Cranes => {
                let v = parse_int(rest.trim()).ok_or_else(|| err(format!("bad time `{}`", rest.trim())))?;
                cranes.push((id, v));
            }
            _ => return Err(err(format!("line outside `tasks:` / `cranes:`: `{line}`"))),
        }
    }
    let missing = |message: &str| ScheduleParseError {
        line: 0,
        message: message.into(),
    };
    let makespan = makespan.ok_or_else(|| missing("missing `W:` line"))?;
    tasks.sort_unstable();
    cranes.sort_unstable();
    if tasks.iter().enumerate().any(|(pos, t)| t.0 != pos + 1) {
        return Err(missing("task ids must be 1..n, each once"));
    }
    if cranes.iter().enumerate().any(|(pos, c)| c.0 != pos + 1) {
        return Err(missing("crane ids must be 1..q, each once"));
    }
    Ok(ParsedSchedule {
        crane_of: tasks.iter().map(|t| t.1 - 1).collect(),
        start: tasks.iter().map(|t| t.2).collect(),
        schedule: Schedule {
            completion: tasks.iter().map(|t| t.3).collect(),
            crane_completion: cranes.iter().map(|c| c.1).collect(),
            makespan,
        },
    })
}

fn parse_int(s: &str) -> Option<Time> {
    s.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::master::build_costs;
    use crate::model::{validate_schedule, Crane, Task};

    fn crane(ready: Time, start: usize) -> Crane {
        Crane {
            ready,
            start_bay: start,
            end_bay: 0,
        }
    }

    fn routing(inst: &Instance, seqs: Vec<Vec<usize>>) -> Routing {
        Routing::new(inst, &build_costs(inst), seqs).unwrap()
    }

    #[test]
    fn single_crane_is_a_chain() {
        let inst = Instance::new(
            vec![Task::new(1, 5), Task::new(3, 7), Task::new(3, 2)],
            vec![crane(0, 1)],
            4,
            1,
            1,
            [],
            [],
        )
        .unwrap();
        let r = routing(&inst, vec![vec![0, 1, 2]]);
        let z = fix_z_from_routing(&inst, &r);
        assert!(z.free.is_empty());
        assert!(z.fixed.contains(&(1, 2)));
        let g = build_graph(&inst, &r).unwrap();
        assert!(g.disjunctions().is_empty());
        let sol = solve_slave(&g, None);
        assert_eq!(sol.makespan, r.eta());
        assert_eq!(sol.completion, vec![5, 14, 16]);
    }

    #[test]
    fn reversed_same_crane_precedence_is_cyclic() {
        let inst = Instance::new(
            vec![Task::new(1, 2), Task::new(1, 13)],
            vec![crane(0, 2), crane(0, 3)],
            5,
            1,
            1,
            [(0, 1)],
            [],
        )
        .unwrap();
        assert_eq!(build_graph(&inst, &routing(&inst, vec![vec![1, 0], vec![]])).err(), Some(GraphError::CyclicRouting));
        assert!(build_graph(&inst, &routing(&inst, vec![vec![0, 1], vec![]])).is_ok());
    }

    #[test]
    fn chain_path_sum() {
        let g = DisjunctiveGraph {
            n: 1,
            q: 1,
            crane_of: vec![0],
            fixed: vec![
                Arc {
                    from: GraphNode::Source(0),
                    to: GraphNode::Task(0),
                    weight: 5,
                },
                Arc {
                    from: GraphNode::Task(0),
                    to: GraphNode::Sink(0),
                    weight: 2,
                },
            ],
            disjunctions: vec![],
        };
        let t = longest_paths(&g, &[]).unwrap();
        assert_eq!((t.completion[0], t.crane_completion[0], t.makespan), (5, 7, 7));
    }

    fn two_crane_same_bay() -> Instance {
        // one task per crane in bay 3, cranes start at bays 1 and 5
        Instance::new(
            vec![Task::new(3, 4), Task::new(3, 6)],
            vec![crane(0, 1), crane(0, 5)],
            5,
            1,
            1,
            [],
            [],
        )
        .unwrap()
        .without_crane_limits()
    }

    #[test]
    fn same_bay_pair_gets_inflated_disjunction() {
        let inst = two_crane_same_bay();
        let r = routing(&inst, vec![vec![0], vec![1]]);
        let z = fix_z_from_routing(&inst, &r);
        assert_eq!(z.free, vec![(0, 1)]);
        let g = build_graph(&inst, &r).unwrap();
        assert_eq!(
            g.disjunctions(),
            &[Disjunction {
                i: 0,
                j: 1,
                w_ij: 6 + 2,
                w_ji: 4 + 2
            }]
        );
        let a = longest_paths(&g, &[Some(true)]).unwrap().makespan;
        let b = longest_paths(&g, &[Some(false)]).unwrap().makespan;
        let sol = solve_slave(&g, None);
        assert_eq!(sol.makespan, a.min(b));
        assert!(sol.exact);
        let v = validate_schedule(&inst, r.sequences(), &sol.schedule()).unwrap();
        assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn both_orientations_of_a_cycle_are_reported() {
        let inst = two_crane_same_bay();
        let r = routing(&inst, vec![vec![0], vec![1]]);
        let mut g = build_graph(&inst, &r).unwrap();
        let d = g.disjunctions[0];
        g.disjunctions.push(d);
        assert!(longest_paths(&g, &[Some(true), Some(false)]).is_err());
    }

    #[test]
    fn zero_gap_nonsim_pair_uses_plain_processing() {
        let inst = Instance::new(
            vec![Task::new(1, 4), Task::new(5, 6)],
            vec![crane(0, 1), crane(0, 5)],
            5,
            1,
            1,
            [],
            [(0, 1)],
        )
        .unwrap();
        let r = routing(&inst, vec![vec![0], vec![1]]);
        let g = build_graph(&inst, &r).unwrap();
        assert_eq!(
            g.disjunctions(),
            &[Disjunction {
                i: 0,
                j: 1,
                w_ij: 6,
                w_ji: 4
            }]
        );
        assert_eq!(solve_slave(&g, None).makespan, 10);
    }

    #[test]
    fn cross_crane_precedence_is_fixed() {
        let inst = Instance::new(
            vec![Task::new(1, 4), Task::new(5, 6)],
            vec![crane(0, 1), crane(0, 5)],
            5,
            1,
            1,
            [(1, 0)],
            [],
        )
        .unwrap();
        let r = routing(&inst, vec![vec![0], vec![1]]);
        let z = fix_z_from_routing(&inst, &r);
        assert_eq!(z.fixed, vec![(1, 0)]);
        assert!(z.free.is_empty());
        let sol = solve_slave(&build_graph(&inst, &r).unwrap(), None);
        assert_eq!(sol.completion, vec![10, 6]);
    }

    #[test]
    fn independent_cranes_meet_eta() {
        let inst = Instance::new(
            vec![Task::new(1, 4), Task::new(2, 3), Task::new(7, 6), Task::new(8, 1)],
            vec![crane(0, 1), crane(0, 8)],
            8,
            1,
            1,
            [],
            [],
        )
        .unwrap();
        let r = routing(&inst, vec![vec![0, 1], vec![2, 3]]);
        let sol = solve_slave(&build_graph(&inst, &r).unwrap(), None);
        assert_eq!(sol.makespan, r.eta());
    }

    #[test]
    fn ub_prunes_but_stays_feasible() {
        let inst = two_crane_same_bay();
        let r = routing(&inst, vec![vec![0], vec![1]]);
        let g = build_graph(&inst, &r).unwrap();
        let opt = solve_slave(&g, None).makespan;
        let capped = solve_slave(&g, Some(opt));
        assert!(capped.makespan >= opt);
        assert!(!capped.exact || capped.makespan == opt);
        let loose = solve_slave(&g, Some(opt + 1));
        assert!(loose.exact);
        assert_eq!(loose.makespan, opt);
    }

    #[test]
    fn schedule_text_round_trip() {
        let inst = two_crane_same_bay();
        let r = routing(&inst, vec![vec![0], vec![1]]);
        let sol = solve_slave(&build_graph(&inst, &r).unwrap(), None);
        let text = schedule_to_text(&inst, &r, &sol.schedule());
        let parsed = parse_schedule(&format!("status: OPTIMAL\n{text}[other]\nx: 1\n")).unwrap();
        assert_eq!(parsed.schedule, sol.schedule());
        assert_eq!(parsed.sequences(), r.sequences());
        assert!(parse_schedule("[schedule]\ntasks:\n  1: crane 1, start 0\nW: 3\n").is_err());
    }
}
