use super::cuts::LiteralIndex;
use super::{bound_parts, CostTable, CutPool, Routing};
use crate::budget::Budget;
use crate::model::{Instance, Node, Time};
use crate::taskset::TaskSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MasterOutcome {
    /// Minimum η over routings satisfying the pool; among those with that η,
    /// the lexicographically smallest one when the tie-break search finished.
    Optimal(Routing),
    /// No routing satisfying the pool has η below `ub` (or exists at all when `None`).
    Exhausted { ub: Option<Time> },
    /// Budget ran out; `lb` is valid for every routing satisfying the pool.
    Timeout { lb: Time, best: Option<Routing> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MasterResult {
    pub outcome: MasterOutcome,
    pub nodes: u64,
    /// The optimal routing is certified lexicographically first among those
    /// with its η; false when the tie-break search ran out of nodes.
    pub lex_first: bool,
}

/// What an earlier solve on a smaller pool (and no smaller bound) proved.
#[derive(Debug, Clone, Copy, Default)]
pub struct WarmStart<'r> {
    /// No routing satisfying the pool has η below this.
    pub floor: Time,
    /// A routing with η equal to `floor` that was lexicographically first
    /// among those with η at most `floor`; the search resumes after it.
    pub after: Option<&'r Routing>,
}

const TIE_BREAK_MIN_NODES: u64 = 20_000;
/// Node allowance for finding some routing after a timeout.
const DIVE_NODES: u64 = 100_000;

/// Exact min-max routing subject to the cuts in `pool`. With `ub`, only
/// routings with η strictly below it are sought.
pub fn solve_master(
    inst: &Instance,
    costs: &CostTable,
    pool: &CutPool,
    ub: Option<Time>,
    budget: &Budget,
) -> MasterResult {
    solve_master_warm(inst, costs, pool, ub, WarmStart::default(), budget)
}

/// [`solve_master`] reusing what an earlier solve proved. Cuts only ever
/// remove routings, so the previous optimum of a pool that has only grown
/// since is a valid floor. A wrong warm start can return a non-minimal routing.
pub fn solve_master_warm(
    inst: &Instance,
    costs: &CostTable,
    pool: &CutPool,
    ub: Option<Time>,
    warm: WarmStart<'_>,
    budget: &Budget,
) -> MasterResult {
    let index = pool.index(inst.n_tasks(), inst.n_cranes());
    let index: &LiteralIndex = &index;
    if index.infeasible {
        return MasterResult {
            outcome: MasterOutcome::Exhausted { ub },
            nodes: 0,
            lex_first: false,
        };
    }
    let to_routing = |seqs: Vec<Vec<usize>>| Routing::new(inst, costs, seqs).expect("search builds complete routings");
    let limit = ub.unwrap_or(Time::MAX);
    let mut nodes = 0;

    // a routing at the floor is optimal, so the lexicographic search alone decides
    let root = Search::new(inst, costs, index, *budget, Mode::LexFirst, limit).node_bound();
    let mut floor = warm.floor.max(root);
    if floor < limit {
        let mut lex = Search::new(inst, costs, index, *budget, Mode::LexFirst, floor + 1);
        if let Some(r) = warm.after.filter(|r| r.eta() == floor) {
            lex.resume_after(r);
        }
        lex.run();
        nodes += lex.nodes;
        if lex.found {
            let (_, seqs) = lex.best.expect("found implies a routing");
            return MasterResult {
                outcome: MasterOutcome::Optimal(to_routing(seqs)),
                nodes,
                lex_first: true,
            };
        }
        if lex.aborted {
            return MasterResult {
                outcome: MasterOutcome::Timeout {
                    lb: floor,
                    best: dive(inst, costs, index, limit).map(to_routing),
                },
                nodes,
                lex_first: false,
            };
        }
        floor += 1;
    }

    let rest = Budget {
        deadline: budget.deadline,
        node_limit: budget.node_limit.map(|l| l.saturating_sub(nodes)),
    };
    let mut s = Search::new(inst, costs, index, rest, Mode::Optimize, limit);
    s.run();
    nodes += s.nodes;
    if s.aborted {
        let lb = s.open_lb.min(s.bound).max(floor);
        return MasterResult {
            outcome: MasterOutcome::Timeout {
                lb,
                best: s.best.map(|(_, seqs)| seqs).or_else(|| dive(inst, costs, index, limit)).map(to_routing),
            },
            nodes,
            lex_first: false,
        };
    }
    let Some((eta, seqs)) = s.best else {
        return MasterResult {
            outcome: MasterOutcome::Exhausted { ub },
            nodes,
            lex_first: false,
        };
    };

    let tie_budget = Budget {
        deadline: budget.deadline,
        node_limit: Some(TIE_BREAK_MIN_NODES.max(4 * nodes)),
    };
    let mut lex = Search::new(inst, costs, index, tie_budget, Mode::LexFirst, eta + 1);
    lex.run();
    nodes += lex.nodes;
    let (chosen, lex_first) = match lex.best {
        Some((_, lex_seqs)) if !lex.aborted || lex.found => (lex_seqs, true),
        _ => (seqs, false),
    };
    MasterResult {
        outcome: MasterOutcome::Optimal(to_routing(chosen)),
        nodes,
        lex_first,
    }
}

/// Some routing satisfying the pool, from a short greedy search that ignores the deadline.
fn dive(inst: &Instance, costs: &CostTable, index: &LiteralIndex, limit: Time) -> Option<Vec<Vec<usize>>> {
    let mut s = Search::new(inst, costs, index, Budget::nodes(DIVE_NODES), Mode::Optimize, limit);
    s.run();
    s.best.map(|(_, seqs)| seqs)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Minimise η; crane with least committed cost first, cheapest extension first.
    Optimize,
    /// First routing in lexicographic order with η below the bound.
    LexFirst,
}

struct Search<'a> {
    inst: &'a Instance,
    costs: &'a CostTable,
    index: &'a LiteralIndex,
    budget: Budget,
    mode: Mode,
    n: usize,
    q: usize,
    all: TaskSet,
    admissible: Vec<TaskSet>,
    seq: Vec<Vec<usize>>,
    cost: Vec<Time>,
    closed: Vec<bool>,
    routed: TaskSet,
    /// Tasks reachable through route arcs and precedence pairs.
    reach: Vec<TaskSet>,
    /// Earlier `reach` rows, `n` per append that had a predecessor.
    reach_saved: Vec<TaskSet>,
    last: Vec<Option<usize>>,
    counts: Vec<i64>,
    log: Vec<u32>,
    nodes: u64,
    aborted: bool,
    found: bool,
    open_lb: Time,
    /// Leaves must have η strictly below this; nodes with a bound at or above it are pruned.
    bound: Time,
    best: Option<(Time, Vec<Vec<usize>>)>,
    /// Lexicographic mode only: decisions of a routing to resume after.
    after: Vec<Step>,
    /// The decisions so far equal a prefix of `after`.
    tight: bool,
    depth: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Step {
    Close,
    Task(usize),
}

struct Mark {
    log_len: usize,
    ok: bool,
}

impl<'a> Search<'a> {
    fn new(
        inst: &'a Instance,
        costs: &'a CostTable,
        index: &'a LiteralIndex,
        budget: Budget,
        mode: Mode,
        bound: Time,
    ) -> Self {
        let (n, q) = (inst.n_tasks(), inst.n_cranes());
        Search {
            inst,
            costs,
            index,
            budget,
            mode,
            n,
            q,
            all: TaskSet::full(n),
            admissible: (0..q).map(|k| (0..n).filter(|&i| inst.admissible(i, k)).collect()).collect(),
            seq: vec![Vec::new(); q],
            cost: vec![0; q],
            closed: vec![false; q],
            routed: TaskSet::empty(),
            reach: (0..n).map(|i| inst.prec_successors(i)).collect(),
            reach_saved: Vec::new(),
            last: vec![None; q],
            counts: vec![0; index.rhs.len()],
            log: Vec::new(),
            nodes: 0,
            aborted: false,
            found: false,
            open_lb: Time::MAX,
            bound,
            best: None,
            after: Vec::new(),
            tight: false,
            depth: 0,
        }
    }

    /// Skip every routing that comes before `r` in lexicographic order.
    fn resume_after(&mut self, r: &Routing) {
        let mut steps = Vec::new();
        let mut placed = 0;
        for seq in r.sequences() {
            steps.extend(seq.iter().map(|&j| Step::Task(j)));
            placed += seq.len();
            if placed == self.n {
                break;
            }
            steps.push(Step::Close);
        }
        self.after = steps;
        self.tight = true;
    }

    /// `None` when `step` comes before the resume point, else whether the child stays on it.
    fn child_tight(&self, step: Step) -> Option<bool> {
        if !self.tight {
            return Some(false);
        }
        match (self.after.get(self.depth), step) {
            (None, _) => Some(false),
            (Some(&t), _) if t == step => Some(true),
            (Some(Step::Task(_)), Step::Close) => None,
            (Some(&Step::Task(t)), Step::Task(j)) if j < t => None,
            _ => Some(false),
        }
    }

    /// Runs `child` one decision deeper unless it lies before the resume point.
    fn descend(&mut self, step: Step, child: impl FnOnce(&mut Self)) {
        let Some(tight) = self.child_tight(step) else {
            return;
        };
        let saved = self.tight;
        self.tight = tight;
        self.depth += 1;
        child(self);
        self.depth -= 1;
        self.tight = saved;
    }

    fn run(&mut self) {
        self.dfs();
    }

    fn last_node(&self, k: usize) -> Node {
        self.seq[k].last().map_or(Node::Start, |&u| Node::Task(u))
    }

    fn bump(&mut self, lits: &[u32]) -> bool {
        let mut ok = true;
        for &c in lits {
            let c_us = c as usize;
            self.counts[c_us] += 1;
            self.log.push(c);
            if self.counts[c_us] > self.index.rhs[c_us] {
                ok = false;
            }
        }
        ok
    }

    fn rollback(&mut self, log_len: usize) {
        while self.log.len() > log_len {
            let c = self.log.pop().unwrap_or_default();
            self.counts[c as usize] -= 1;
        }
    }

    /// `None` when the arc would close a cycle with the precedence order.
    fn append(&mut self, k: usize, j: usize) -> Option<Mark> {
        let last = self.seq[k].last().copied();
        if let Some(u) = last {
            if self.reach[j].contains(u) {
                return None;
            }
        }
        let log_len = self.log.len();
        let index = self.index;
        let mut ok = self.bump(index.arc(k, self.last_node(k), Node::Task(j)));
        ok &= self.bump(index.assign(j, k));
        let step = match last {
            Some(u) => self.costs.c(u, j),
            None => self.costs.c0(k, j),
        };
        if let Some(u) = last {
            self.reach_saved.extend_from_slice(&self.reach);
            let add = self.reach[j] | TaskSet::singleton(j);
            for x in 0..self.n {
                if x == u || self.reach[x].contains(u) {
                    self.reach[x] |= add;
                }
            }
        }
        self.seq[k].push(j);
        self.last[k] = Some(j);
        self.routed.insert(j);
        self.cost[k] += step;
        Some(Mark { log_len, ok })
    }

    fn undo_append(&mut self, k: usize, mark: Mark) {
        let j = self.seq[k].pop().expect("append pushed a task");
        self.last[k] = self.seq[k].last().copied();
        self.routed.remove(j);
        let step = match self.seq[k].last() {
            Some(&u) => {
                let from = self.reach_saved.len() - self.n;
                self.reach.copy_from_slice(&self.reach_saved[from..]);
                self.reach_saved.truncate(from);
                self.costs.c(u, j)
            }
            None => self.costs.c0(k, j),
        };
        self.cost[k] -= step;
        self.rollback(mark.log_len);
    }

    fn close(&mut self, k: usize) -> Mark {
        let log_len = self.log.len();
        let index = self.index;
        let ok = self.bump(index.arc(k, self.last_node(k), Node::End));
        self.cost[k] += self.exit_cost(k);
        self.closed[k] = true;
        Mark { log_len, ok }
    }

    fn undo_close(&mut self, k: usize, mark: Mark) {
        self.closed[k] = false;
        self.cost[k] -= self.exit_cost(k);
        self.rollback(mark.log_len);
    }

    fn exit_cost(&self, k: usize) -> Time {
        match self.seq[k].last() {
            Some(&u) => self.costs.ct(u, k),
            None => self.costs.empty_route(k),
        }
    }

    fn node_bound(&self) -> Time {
        bound_parts(self.inst, self.costs, &self.cost, &self.closed, &self.last, self.routed)
    }

    /// Some unrouted task can no longer be appended to any open crane.
    fn dead_end(&self) -> bool {
        let unrouted = self.all - self.routed;
        unrouted.iter().any(|j| {
            !(0..self.q).any(|k| {
                !self.closed[k]
                    && self.admissible[k].contains(j)
                    && self.seq[k].last().is_none_or(|&u| !self.reach[j].contains(u))
            })
        })
    }

    fn dfs(&mut self) {
        self.nodes += 1;
        if self.budget.exhausted(self.nodes) {
            self.aborted = true;
            return;
        }
        if self.routed == self.all {
            self.leaf();
            return;
        }
        let lb = self.node_bound();
        if lb >= self.bound || self.dead_end() {
            return;
        }
        let open: Vec<usize> = (0..self.q).filter(|&k| !self.closed[k]).collect();
        let k = match self.mode {
            Mode::Optimize => *open.iter().min_by_key(|&&k| (self.cost[k], k)).expect("open crane exists"),
            Mode::LexFirst => open[0],
        };
        let mut tasks: Vec<usize> = (self.admissible[k] - self.routed).iter().collect();
        if self.mode == Mode::Optimize {
            let from = self.seq[k].last().copied();
            tasks.sort_by_key(|&j| {
                let c = match from {
                    Some(u) => self.costs.c(u, j),
                    None => self.costs.c0(k, j),
                };
                (c, j)
            });
        }
        let may_close = open.len() > 1;
        if self.mode == Mode::LexFirst && may_close {
            self.descend(Step::Close, |s| s.close_branch(k));
            if self.stop(lb) {
                return;
            }
        }
        for j in tasks {
            self.descend(Step::Task(j), |s| {
                if let Some(mark) = s.append(k, j) {
                    if mark.ok {
                        s.dfs();
                    }
                    s.undo_append(k, mark);
                }
            });
            if self.stop(lb) {
                return;
            }
        }
        if self.mode == Mode::Optimize && may_close {
            self.close_branch(k);
            self.stop(lb);
        }
    }

    fn close_branch(&mut self, k: usize) {
        let mark = self.close(k);
        if mark.ok {
            self.dfs();
        }
        self.undo_close(k, mark);
    }

    /// Whether the current node should stop exploring children.
    fn stop(&mut self, lb: Time) -> bool {
        if self.aborted {
            self.open_lb = self.open_lb.min(lb);
            return true;
        }
        self.found || lb >= self.bound
    }

    fn leaf(&mut self) {
        let open: Vec<usize> = (0..self.q).filter(|&k| !self.closed[k]).collect();
        let mut marks = Vec::with_capacity(open.len());
        let mut ok = true;
        for &k in &open {
            let m = self.close(k);
            ok &= m.ok;
            marks.push(m);
        }
        let eta = self.cost.iter().copied().max().unwrap_or(0);
        if ok && eta < self.bound && !self.index.excluded.contains(&self.seq) {
            self.best = Some((eta, self.seq.clone()));
            match self.mode {
                Mode::Optimize => self.bound = eta,
                Mode::LexFirst => self.found = true,
            }
        }
        for (&k, m) in open.iter().zip(marks).rev() {
            self.undo_close(k, m);
        }
    }
}
