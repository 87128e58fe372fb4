//! Master/slave loop: routings give lower bounds, their schedules give upper
//! bounds, and cuts keep the master away from routings that cannot beat the
//! incumbent.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::budget::Budget;
use crate::master::{
    arcs_from, arcs_within, build_costs, precedence_feasible, seed_cut_pool, solve_master_warm, WarmStart, ArcLit, CostTable, Cut, CutFamily, MasterOutcome,
    Routing,
};
use crate::model::{Instance, Node, Schedule, Time};
use crate::oracle::OracleSolution;
use crate::slave::{build_graph, schedule_to_text, solve_slave_with, SlaveSolution};

/// Slave allowance for the last routing seen when the time limit hits.
const FALLBACK_SLAVE_NODES: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DriverConfig {
    pub time_limit: Option<Duration>,
    /// Per master solve.
    pub master_node_limit: Option<u64>,
    /// Per slave solve.
    pub slave_node_limit: Option<u64>,
    pub same_bay: bool,
    pub sset: bool,
    /// Largest number of reorderings checked before a same-bay strengthening.
    pub same_bay_variants: usize,
    /// Keep every generated cut with the routing it was derived from.
    pub record_cuts: bool,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            time_limit: None,
            master_node_limit: None,
            slave_node_limit: None,
            same_bay: true,
            sset: true,
            same_bay_variants: 720,
            record_cuts: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Optimal,
    TimeLimit,
    InfeasibleInput,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Optimal => "OPTIMAL",
            Status::TimeLimit => "TIME_LIMIT",
            Status::InfeasibleInput => "INFEASIBLE_INPUT",
        }
    }
}

/// Bounds after one master/slave round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IterationRecord {
    pub eta: Time,
    pub makespan: Time,
    pub lb: Time,
    pub ub: Time,
    pub cuts: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Incumbent {
    pub routing: Routing,
    pub schedule: Schedule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SolveReport {
    pub status: Status,
    pub lb: Option<Time>,
    pub ub: Option<Time>,
    pub best: Option<Incumbent>,
    pub iterations: usize,
    /// Generated cuts per family; the initial pool is not counted.
    pub cuts_added: BTreeMap<CutFamily, usize>,
    pub master_nodes: u64,
    pub slave_nodes: u64,
    pub wall_ms: u128,
    pub trace: Vec<IterationRecord>,
    /// Reason for `INFEASIBLE_INPUT`.
    pub message: Option<String>,
    /// Filled only with `DriverConfig::record_cuts`.
    #[serde(skip)]
    pub emitted: Vec<EmittedCut>,
}

/// A generated cut and the routing that triggered it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedCut {
    pub iteration: usize,
    pub routing: Routing,
    pub cut: Cut,
}

impl SolveReport {
    fn empty(status: Status) -> Self {
        SolveReport {
            status,
            lb: None,
            ub: None,
            best: None,
            iterations: 0,
            cuts_added: CutFamily::ALL.iter().map(|&f| (f, 0)).collect(),
            master_nodes: 0,
            slave_nodes: 0,
            wall_ms: 0,
            trace: Vec::new(),
            message: None,
            emitted: Vec::new(),
        }
    }

    pub fn makespan(&self) -> Option<Time> {
        self.best.as_ref().map(|b| b.schedule.makespan)
    }

    /// Report for a brute-force solution in the same layout.
    pub fn from_oracle(inst: &Instance, sol: &OracleSolution, wall: Duration) -> Self {
        let costs = build_costs(inst);
        let routing = Routing::new(inst, &costs, sol.sequences.clone()).expect("oracle routings respect crane limits");
        SolveReport {
            lb: Some(sol.makespan),
            ub: Some(sol.makespan),
            best: Some(Incumbent {
                routing,
                schedule: sol.schedule.clone(),
            }),
            wall_ms: wall.as_millis(),
            ..SolveReport::empty(Status::Optimal)
        }
    }

    /// Key/value text followed by the `[routing]` and `[schedule]` blocks.
    pub fn to_text(&self, inst: &Instance, timing: bool) -> String {
        let opt = |v: Option<Time>| v.map_or_else(|| "none".to_string(), |t| t.to_string());
        let mut out = String::new();
        let _ = writeln!(out, "status: {}", self.status.name());
        if let Some(m) = &self.message {
            let _ = writeln!(out, "message: {m}");
        }
        let _ = writeln!(out, "lb: {}", opt(self.lb));
        let _ = writeln!(out, "ub: {}", opt(self.ub));
        let _ = writeln!(out, "W: {}", opt(self.makespan()));
        let _ = writeln!(out, "iterations: {}", self.iterations);
        for (family, count) in &self.cuts_added {
            let _ = writeln!(out, "cuts.{}: {}", family.name(), count);
        }
        let _ = writeln!(out, "nodes.master: {}", self.master_nodes);
        let _ = writeln!(out, "nodes.slave: {}", self.slave_nodes);
        if timing {
            let _ = writeln!(out, "wall_ms: {}", self.wall_ms);
        }
        if let Some(best) = &self.best {
            out.push_str("[routing]\n");
            out.push_str(&best.routing.to_text());
            out.push_str(&schedule_to_text(inst, &best.routing, &best.schedule));
        }
        out
    }
}

/// Lines between `[name]` and the next block header, if the block exists.
pub fn section(text: &str, name: &str) -> Option<String> {
    let header = format!("[{name}]");
    let mut lines = text.lines().skip_while(|l| l.trim() != header);
    lines.next()?;
    Some(
        lines
            .take_while(|l| !l.trim_start().starts_with('['))
            .map(|l| format!("{l}\n"))
            .collect(),
    )
}

/// Solves `inst` to optimality unless a limit stops the loop first.
pub fn run(inst: &Instance, config: &DriverConfig) -> SolveReport {
    let started = Instant::now();
    let deadline = config.time_limit.map(|d| started + d);
    let mut report = SolveReport::empty(Status::TimeLimit);
    if let Err(e) = inst.check_crane_ranges() {
        report.status = Status::InfeasibleInput;
        report.message = Some(e.to_string());
        return report;
    }
    let costs = build_costs(inst);
    let mut pool = seed_cut_pool(inst);
    let mut lb: Time = 0;
    let mut ub: Option<Time> = None;
    // the pool only grows and ub only falls, so master optima never decrease
    let mut floor: Time = 0;
    let mut lex_point: Option<Routing> = None;

    loop {
        report.iterations += 1;
        let master_budget = Budget {
            deadline,
            node_limit: config.master_node_limit,
        };
        let warm = WarmStart {
            floor,
            after: lex_point.as_ref(),
        };
        let res = solve_master_warm(inst, &costs, &pool, ub, warm, &master_budget);
        report.master_nodes += res.nodes;
        let routing = match res.outcome {
            MasterOutcome::Optimal(r) => r,
            MasterOutcome::Exhausted { ub: Some(u) } => {
                lb = u;
                report.status = Status::Optimal;
                break;
            }
            MasterOutcome::Exhausted { ub: None } => {
                report.status = Status::InfeasibleInput;
                report.message = Some("no routing satisfies the precedence order".into());
                break;
            }
            MasterOutcome::Timeout { lb: l, best } => {
                lb = lb.max(l);
                if let Some(r) = best {
                    // out of time: any schedule of this routing still bounds the optimum
                    let graph = build_graph(inst, &r).expect("master routings respect the precedence order");
                    let sol = solve_slave_with(&graph, ub, &Budget::nodes(FALLBACK_SLAVE_NODES));
                    report.slave_nodes += sol.nodes;
                    if ub.is_none_or(|u| sol.makespan < u) {
                        ub = Some(sol.makespan);
                        report.best = Some(Incumbent {
                            routing: r,
                            schedule: sol.schedule(),
                        });
                    }
                }
                break;
            }
        };
        lb = lb.max(routing.eta());
        floor = routing.eta();
        lex_point = res.lex_first.then(|| routing.clone());

        let graph = build_graph(inst, &routing).expect("master routings respect the precedence order");
        let slave_budget = Budget {
            deadline,
            node_limit: config.slave_node_limit,
        };
        let sol = solve_slave_with(&graph, ub, &slave_budget);
        report.slave_nodes += sol.nodes;
        let improved = ub.is_none_or(|u| sol.makespan < u);
        if improved {
            ub = Some(sol.makespan);
            report.best = Some(Incumbent {
                routing: routing.clone(),
                schedule: sol.schedule(),
            });
        }
        let u = ub.expect("set by the first slave");
        lb = lb.min(u);
        let mut record = IterationRecord {
            eta: routing.eta(),
            makespan: sol.makespan,
            lb,
            ub: u,
            cuts: 0,
        };
        if lb >= u {
            report.status = Status::Optimal;
            report.trace.push(record);
            break;
        }
        // an interrupted slave proves nothing about this routing
        if !sol.complete {
            report.trace.push(record);
            break;
        }
        let cuts = generate_cuts_with(inst, &costs, &routing, u, improved, config);
        for cut in cuts {
            if config.record_cuts {
                report.emitted.push(EmittedCut {
                    iteration: report.iterations,
                    routing: routing.clone(),
                    cut: cut.clone(),
                });
            }
            let family = cut.family();
            if pool.insert(cut.at_iteration(report.iterations)) {
                *report.cuts_added.entry(family).or_default() += 1;
                record.cuts += 1;
            }
        }
        report.trace.push(record);
        if master_budget.expired() {
            break;
        }
    }
    report.lb = Some(lb.min(ub.unwrap_or(Time::MAX)));
    report.ub = ub;
    if report.status == Status::Optimal {
        report.lb = ub;
    }
    report.wall_ms = started.elapsed().as_millis();
    report
}

/// Cuts for `routing` whose schedule is `sol`, with `ub` already updated.
/// S-set cuts first; a no-good cut when the incumbent improved or no S-set
/// cut applies.
pub fn generate_cuts(inst: &Instance, routing: &Routing, sol: &SlaveSolution, ub: Time) -> Vec<Cut> {
    let improved = sol.makespan <= ub;
    generate_cuts_with(inst, &build_costs(inst), routing, ub, improved, &DriverConfig::default())
}

fn generate_cuts_with(
    inst: &Instance,
    costs: &CostTable,
    routing: &Routing,
    ub: Time,
    improved: bool,
    config: &DriverConfig,
) -> Vec<Cut> {
    let mut cuts = if config.sset { sset_cuts(inst, costs, routing, ub) } else { Vec::new() };
    if improved || cuts.is_empty() {
        cuts.push(nogood_cut(inst, costs, routing, ub, config));
    }
    cuts
}

fn task_nodes(tasks: &[usize]) -> Vec<Node> {
    tasks.iter().map(|&t| Node::Task(t)).collect()
}

/// For each precedence pair `(i, j)` split across cranes: the work before
/// `i` on its crane, `i`, `j` and the work after `j` on its crane already
/// exceed `ub`.
fn sset_cuts(inst: &Instance, costs: &CostTable, routing: &Routing, ub: Time) -> Vec<Cut> {
    let mut out = Vec::new();
    for &(i, j) in inst.prec_pairs() {
        let (ki, kj) = (routing.crane_of(i), routing.crane_of(j));
        if ki == kj {
            continue;
        }
        let before = routing.prefix(i);
        let after = routing.suffix(j);
        let p = |ts: &[usize]| ts.iter().map(|&t| inst.processing(t)).sum::<Time>();
        let mut longest = p(before) + inst.processing(i) + inst.processing(j) + p(after);
        if before.len() <= 1 && after.len() <= 1 {
            // with at most one task on each side the order is fixed
            let into_i = match before {
                [] => costs.c0(ki, i),
                [u] => costs.c0(ki, *u) + costs.c(*u, i),
                _ => unreachable!(),
            };
            let from_j = match after {
                [] => costs.ct(j, kj),
                [w] => costs.c(j, *w) + costs.ct(*w, kj),
                _ => unreachable!(),
            };
            let path = into_i + inst.processing(j) + inst.gap(i, j, ki, kj) + from_j;
            longest = longest.max(path);
        }
        if longest <= ub {
            continue;
        }
        let mut s_i = vec![Node::Start];
        s_i.extend(task_nodes(before));
        let mut s_j = task_nodes(after);
        s_j.push(Node::End);
        let mut arcs = arcs_within(ki, &s_i);
        arcs.extend(s_i.iter().map(|&u| ArcLit::new(ki, u, Node::Task(i))));
        arcs.extend(arcs_from(kj, Node::Task(j), &s_j));
        arcs.extend(arcs_within(kj, &s_j));
        let rhs = (s_i.len() + s_j.len()) as i64 - 1;
        out.push(Cut::new(CutFamily::Sset, arcs, [], rhs));
    }
    out
}

/// Maximal runs of same-bay tasks on one crane, split so that no run holds
/// two tasks ordered by precedence. `(crane, first position, length)`.
fn same_bay_runs(inst: &Instance, routing: &Routing) -> Vec<(usize, usize, usize)> {
    let mut runs = Vec::new();
    for (k, seq) in routing.sequences().iter().enumerate() {
        let mut start = 0;
        while start < seq.len() {
            let mut end = start + 1;
            while end < seq.len()
                && inst.bay(seq[end]) == inst.bay(seq[start])
                && !seq[start..end]
                    .iter()
                    .any(|&a| inst.prec_implied(a, seq[end]) || inst.prec_implied(seq[end], a))
            {
                end += 1;
            }
            if end - start >= 2 {
                runs.push((k, start, end - start));
            }
            start = end;
        }
    }
    runs
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// All orderings of `items`.
fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (pos, &first) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(pos);
        for mut tail in permutations(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

/// Every reordering of the chosen runs leads to no schedule below `ub`.
fn reorderings_cannot_improve(
    inst: &Instance,
    costs: &CostTable,
    routing: &Routing,
    runs: &[(usize, usize, usize)],
    ub: Time,
) -> bool {
    let perms: Vec<Vec<Vec<usize>>> = runs
        .iter()
        .map(|&(k, s, len)| permutations(&routing.sequences()[k][s..s + len]))
        .collect();
    let mut choice = vec![0usize; runs.len()];
    loop {
        let mut seqs = routing.sequences().to_vec();
        for (r, &(k, s, len)) in runs.iter().enumerate() {
            seqs[k][s..s + len].copy_from_slice(&perms[r][choice[r]]);
        }
        if precedence_feasible(inst, &seqs).is_ok() {
            let variant = Routing::new(inst, costs, seqs).expect("reordering keeps the assignment");
            if variant.eta() < ub {
                let graph = build_graph(inst, &variant).expect("precedence feasible");
                let sol = solve_slave_with(&graph, Some(ub), &Budget::unlimited());
                if sol.makespan < ub {
                    return false;
                }
            }
        }
        // next combination
        let mut r = 0;
        loop {
            if r == runs.len() {
                return true;
            }
            choice[r] += 1;
            if choice[r] < perms[r].len() {
                break;
            }
            choice[r] = 0;
            r += 1;
        }
    }
}

/// Excludes `routing`; same-bay runs are widened to all their orders when
/// none of those orders can beat `ub`.
fn nogood_cut(inst: &Instance, costs: &CostTable, routing: &Routing, ub: Time, config: &DriverConfig) -> Cut {
    let mut chosen: Vec<(usize, usize, usize)> = Vec::new();
    if config.same_bay {
        for run in same_bay_runs(inst, routing) {
            let (k, s, _) = run;
            if chosen.iter().any(|&(ck, cs, cl)| ck == k && cs + cl == s) {
                continue;
            }
            let size: usize = chosen.iter().chain([&run]).map(|r| factorial(r.2)).product();
            if size > config.same_bay_variants {
                continue;
            }
            let mut trial = chosen.clone();
            trial.push(run);
            if reorderings_cannot_improve(inst, costs, routing, &trial, ub) {
                chosen = trial;
            }
        }
    }
    let total = routing.arcs().len() as i64;
    let mut arcs = Vec::new();
    for k in 0..routing.n_cranes() {
        let seq = &routing.sequences()[k];
        let mut nodes = vec![Node::Start];
        nodes.extend(task_nodes(seq));
        nodes.push(Node::End);
        let mut pos = 0;
        while pos + 1 < nodes.len() {
            // node index pos + 1 is sequence position pos
            if let Some(&(_, s, len)) = chosen.iter().find(|&&(ck, cs, _)| ck == k && cs == pos) {
                let set = &nodes[s + 1..s + 1 + len];
                let (p, q) = (nodes[s], nodes[s + 1 + len]);
                arcs.extend(arcs_from(k, p, set));
                arcs.extend(arcs_within(k, set));
                arcs.extend(set.iter().map(|&u| ArcLit::new(k, u, q)));
                pos += len + 1;
                continue;
            }
            arcs.push(ArcLit::new(k, nodes[pos], nodes[pos + 1]));
            pos += 1;
        }
    }
    let family = if chosen.is_empty() { CutFamily::Nogood } else { CutFamily::NogoodSamebay };
    Cut::new(family, arcs, [], total - 1)
}

/// No routing that violates `cut` has a schedule finishing before `ub`.
/// Exhaustive; meant for small instances in tests.
pub fn check_cut_validity(cut: &Cut, inst: &Instance, ub: Time) -> bool {
    let costs = build_costs(inst);
    crate::oracle::all_routings(inst).into_iter().all(|seqs| {
        let Ok(r) = Routing::new(inst, &costs, seqs) else {
            return true;
        };
        if !cut.is_violated_by(&r) || precedence_feasible(inst, r.sequences()).is_err() {
            return true;
        }
        crate::oracle::best_makespan_below(inst, r.sequences(), ub).is_none()
    })
}
