//! Brute-force reference solver and random instance generator.
//!
//! The solver enumerates every routing and every cross-crane order and
//! shares no routing or scheduling code with the decomposition, so the two
//! can be checked against each other.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{derive_precedences, Crane, Instance, ModelError, Schedule, Task, TaskKind, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleLimits {
    pub max_tasks: usize,
    /// Largest number of open cross-crane orders in one routing.
    pub max_disjunctions: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_tasks: 8,
            max_disjunctions: 20,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance has {0} tasks, oracle limit is {1}")]
    TooManyTasks(usize, usize),
    #[error("a routing has {0} open cross-crane orders, oracle limit is {1}")]
    TooManyDisjunctions(usize, usize),
    #[error("crane {0} has an empty operating range")]
    EmptyRange(usize),
    #[error("no routing satisfies crane limits and the precedence order")]
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub makespan: Time,
    pub sequences: Vec<Vec<usize>>,
    pub schedule: Schedule,
    /// Routings whose order problem was solved.
    pub routings_evaluated: usize,
}

/// Minimum makespan by full enumeration.
pub fn brute_force(inst: &Instance, limits: &OracleLimits) -> Result<OracleSolution, OracleError> {
    let (n, q) = (inst.n_tasks(), inst.n_cranes());
    if n > limits.max_tasks {
        return Err(OracleError::TooManyTasks(n, limits.max_tasks));
    }
    let ranges: Vec<(usize, usize)> = (0..q).map(|k| crane_range(inst, k)).collect();
    if let Some(k) = ranges.iter().position(|&(lo, hi)| lo > hi) {
        return Err(OracleError::EmptyRange(k + 1));
    }

    let mut all = Vec::new();
    let mut seqs = vec![Vec::new(); q];
    enumerate(inst, &ranges, 0, &mut seqs, &mut all);
    let mut candidates: Vec<(Time, Vec<Vec<usize>>)> = all
        .into_iter()
        .filter(|s| order_is_acyclic(inst, s))
        .map(|s| (routing_length(inst, &s), s))
        .collect();
    candidates.sort_by_key(|c| c.0);

    let mut best: Option<(Time, Vec<Vec<usize>>, Schedule)> = None;
    let mut evaluated = 0;
    for (eta, s) in candidates {
        if best.as_ref().is_some_and(|b| eta >= b.0) {
            break;
        }
        evaluated += 1;
        let bound = best.as_ref().map_or(Time::MAX, |b| b.0);
        if let Some(sched) = best_schedule(inst, &s, bound, limits)? {
            best = Some((sched.makespan, s, sched));
        }
    }
    let (makespan, sequences, schedule) = best.ok_or(OracleError::Infeasible)?;
    Ok(OracleSolution {
        makespan,
        sequences,
        schedule,
        routings_evaluated: evaluated,
    })
}

/// Every assignment and order of tasks on cranes that respects crane limits.
/// Precedence is not checked.
pub fn all_routings(inst: &Instance) -> Vec<Vec<Vec<usize>>> {
    let q = inst.n_cranes();
    let ranges: Vec<(usize, usize)> = (0..q).map(|k| crane_range(inst, k)).collect();
    let mut out = Vec::new();
    enumerate(inst, &ranges, 0, &mut vec![Vec::new(); q], &mut out);
    out
}

/// Best makespan of a fixed routing if some schedule finishes before `bound`.
/// Returns `None` as well when the routing violates the precedence order.
pub fn best_makespan_below(inst: &Instance, seqs: &[Vec<usize>], bound: Time) -> Option<Time> {
    if !order_is_acyclic(inst, seqs) {
        return None;
    }
    let limits = OracleLimits {
        max_tasks: usize::MAX,
        max_disjunctions: usize::MAX,
    };
    best_schedule(inst, seqs, bound, &limits).ok().flatten().map(|s| s.makespan)
}

fn crane_range(inst: &Instance, k: usize) -> (usize, usize) {
    if !inst.crane_limits_enabled() {
        return (1, inst.bays());
    }
    let gap = (inst.safety() + 1) as i64;
    let q = inst.n_cranes() as i64;
    let lo = k as i64 * gap + 1;
    let hi = inst.bays() as i64 - (q - 1 - k as i64) * gap;
    if hi < lo {
        return (1, 0);
    }
    (lo as usize, hi as usize)
}

/// Every assignment of tasks to cranes with every order, built by inserting
/// task `i` at every position of every admissible crane.
fn enumerate(
    inst: &Instance,
    ranges: &[(usize, usize)],
    i: usize,
    seqs: &mut Vec<Vec<usize>>,
    out: &mut Vec<Vec<Vec<usize>>>,
) {
    if i == inst.n_tasks() {
        out.push(seqs.clone());
        return;
    }
    let bay = inst.task(i).bay;
    for k in 0..seqs.len() {
        if bay < ranges[k].0 || bay > ranges[k].1 {
            continue;
        }
        for pos in 0..=seqs[k].len() {
            seqs[k].insert(pos, i);
            enumerate(inst, ranges, i + 1, seqs, out);
            seqs[k].remove(pos);
        }
    }
}

/// Route order plus precedence pairs must not form a cycle.
fn order_is_acyclic(inst: &Instance, seqs: &[Vec<usize>]) -> bool {
    let n = inst.n_tasks();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in seqs {
        for w in s.windows(2) {
            succ[w[0]].push(w[1]);
        }
    }
    for &(i, j) in inst.prec_pairs() {
        succ[i].push(j);
    }
    let mut indeg = vec![0; n];
    for v in succ.iter().flatten() {
        indeg[*v] += 1;
    }
    let mut ready: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut done = 0;
    while let Some(u) = ready.pop() {
        done += 1;
        for &v in &succ[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                ready.push(v);
            }
        }
    }
    done == n
}

fn bays_apart(inst: &Instance, a: usize, b: usize) -> Time {
    inst.travel_unit() * (a as Time - b as Time).abs()
}

fn end_leg(inst: &Instance, k: usize, from_bay: usize) -> Time {
    match inst.crane(k).end_bay {
        0 => 0,
        e => bays_apart(inst, from_bay, e),
    }
}

/// Longest crane route when cranes never wait for each other.
fn routing_length(inst: &Instance, seqs: &[Vec<usize>]) -> Time {
    (0..seqs.len())
        .map(|k| {
            let c = inst.crane(k);
            if seqs[k].is_empty() {
                return end_leg(inst, k, c.start_bay);
            }
            let mut t = c.ready;
            let mut at = c.start_bay;
            for &i in &seqs[k] {
                let task = inst.task(i);
                t += bays_apart(inst, at, task.bay) + task.processing;
                at = task.bay;
            }
            t + end_leg(inst, k, at)
        })
        .max()
        .unwrap_or(0)
}

/// Minimum time between `i` on crane `v` and `j` on crane `w`.
fn spacing(inst: &Instance, i: usize, j: usize, v: usize, w: usize) -> Time {
    let (bi, bj) = (inst.task(i).bay as Time, inst.task(j).bay as Time);
    let room = (inst.safety() + 1) as Time;
    let need = if v < w {
        bi - bj + (w - v) as Time * room
    } else {
        bj - bi + (v - w) as Time * room
    };
    inst.travel_unit() * need.max(0)
}

/// `D[to] >= D[from] + weight`.
#[derive(Clone, Copy)]
struct Edge {
    from: usize,
    to: usize,
    weight: Time,
}

/// Best schedule of a fixed routing with makespan below `bound`, if any.
fn best_schedule(
    inst: &Instance,
    seqs: &[Vec<usize>],
    bound: Time,
    limits: &OracleLimits,
) -> Result<Option<Schedule>, OracleError> {
    let n = inst.n_tasks();
    let mut crane = vec![0; n];
    for (k, s) in seqs.iter().enumerate() {
        for &i in s {
            crane[i] = k;
        }
    }
    let mut fixed = Vec::new();
    let mut floor = vec![0 as Time; n];
    for (k, s) in seqs.iter().enumerate() {
        let c = inst.crane(k);
        if let Some(&first) = s.first() {
            floor[first] = c.ready + bays_apart(inst, c.start_bay, inst.task(first).bay) + inst.task(first).processing;
        }
        for w in s.windows(2) {
            let (a, b) = (inst.task(w[0]), inst.task(w[1]));
            fixed.push(Edge {
                from: w[0],
                to: w[1],
                weight: bays_apart(inst, a.bay, b.bay) + b.processing,
            });
        }
    }
    for i in 0..n {
        floor[i] = floor[i].max(inst.task(i).processing);
    }
    let prec: BTreeSet<(usize, usize)> = inst.prec_pairs().iter().copied().collect();
    let nonsim: BTreeSet<(usize, usize)> = inst.nonsim_pairs().iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    let mut choices: Vec<(Edge, Edge)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (v, w) = (crane[i], crane[j]);
            if v == w {
                continue;
            }
            let sp = spacing(inst, i, j, v, w);
            let (pi, pj) = (inst.task(i).processing, inst.task(j).processing);
            let ij = Edge {
                from: i,
                to: j,
                weight: pj + sp,
            };
            let ji = Edge {
                from: j,
                to: i,
                weight: pi + sp,
            };
            if prec.contains(&(i, j)) {
                fixed.push(ij);
            } else if prec.contains(&(j, i)) {
                fixed.push(ji);
            } else if sp > 0 || nonsim.contains(&(i, j)) || inst.task(i).bay == inst.task(j).bay {
                choices.push((ij, ji));
            }
        }
    }
    if choices.len() > limits.max_disjunctions {
        return Err(OracleError::TooManyDisjunctions(choices.len(), limits.max_disjunctions));
    }
    let mut search = OrderSearch {
        inst,
        seqs,
        floor,
        fixed,
        choices,
        picked: Vec::new(),
        bound,
        best: None,
    };
    search.go(0);
    Ok(search.best)
}

struct OrderSearch<'a> {
    inst: &'a Instance,
    seqs: &'a [Vec<usize>],
    floor: Vec<Time>,
    fixed: Vec<Edge>,
    choices: Vec<(Edge, Edge)>,
    picked: Vec<Edge>,
    bound: Time,
    best: Option<Schedule>,
}

impl OrderSearch<'_> {
    fn go(&mut self, depth: usize) {
        let Some(times) = self.relax() else {
            return;
        };
        let sched = self.finish(times);
        if sched.makespan >= self.bound {
            return;
        }
        if depth == self.choices.len() {
            self.bound = sched.makespan;
            self.best = Some(sched);
            return;
        }
        let (a, b) = self.choices[depth];
        for e in [a, b] {
            self.picked.push(e);
            self.go(depth + 1);
            self.picked.pop();
        }
    }

    /// Least fixed point of all constraints, or `None` if it diverges.
    fn relax(&self) -> Option<Vec<Time>> {
        let mut d = self.floor.clone();
        let n = d.len();
        for _ in 0..=n {
            let mut changed = false;
            for e in self.fixed.iter().chain(&self.picked) {
                if d[e.from] + e.weight > d[e.to] {
                    d[e.to] = d[e.from] + e.weight;
                    changed = true;
                }
            }
            if !changed {
                return Some(d);
            }
        }
        None
    }

    fn finish(&self, completion: Vec<Time>) -> Schedule {
        let inst = self.inst;
        let crane_completion: Vec<Time> = self
            .seqs
            .iter()
            .enumerate()
            .map(|(k, s)| match s.last() {
                Some(&l) => completion[l] + end_leg(inst, k, inst.task(l).bay),
                None => end_leg(inst, k, inst.crane(k).start_bay),
            })
            .collect();
        Schedule {
            makespan: crane_completion.iter().copied().max().unwrap_or(0),
            completion,
            crane_completion,
        }
    }
}

/// Random instance parameters. Ranges are inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub n: RangeInclusive<usize>,
    pub q: RangeInclusive<usize>,
    pub bays: RangeInclusive<usize>,
    pub safety: RangeInclusive<usize>,
    pub travel: RangeInclusive<Time>,
    pub processing: RangeInclusive<Time>,
    pub ready: RangeInclusive<Time>,
    /// Average number of tasks per occupied bay.
    pub tasks_per_bay: f64,
    /// Share of the kind-derived precedence pairs that are kept.
    pub prec_density: f64,
    /// Chance that a pair of tasks in neighbouring bays is declared non-simultaneous.
    pub nonsim_density: f64,
    /// Chance that a crane gets a fixed final bay instead of a free one.
    pub fixed_end: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n: 5..=7,
            q: 2..=3,
            bays: 6..=8,
            safety: 0..=1,
            travel: 1..=1,
            processing: 1..=20,
            ready: 0..=0,
            tasks_per_bay: 1.5,
            prec_density: 1.0,
            nonsim_density: 0.0,
            fixed_end: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("empty range for {0}")]
    EmptyRange(&'static str),
    #[error("{what} must lie in [0, 1], got {value}")]
    BadProbability { what: &'static str, value: f64 },
    #[error("tasks per bay must be positive, got {0}")]
    BadRatio(f64),
    #[error("{q} cranes with safety margin {safety} need at least {need} bays, at most {bays} allowed")]
    TooFewBays { q: usize, safety: usize, need: usize, bays: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn pick<T>(rng: &mut ChaCha8Rng, r: &RangeInclusive<T>, what: &'static str) -> Result<T, GenError>
where
    T: rand::distributions::uniform::SampleUniform + PartialOrd + Copy,
{
    if r.start() > r.end() {
        return Err(GenError::EmptyRange(what));
    }
    Ok(rng.gen_range(*r.start()..=*r.end()))
}

/// Deterministic in `params.seed`.
pub fn generate(params: &GenParams) -> Result<Instance, GenError> {
    for (what, value) in [
        ("precedence density", params.prec_density),
        ("non-simultaneity density", params.nonsim_density),
        ("fixed end share", params.fixed_end),
    ] {
        if !(0.0..=1.0).contains(&value) {
            return Err(GenError::BadProbability { what, value });
        }
    }
    if !(params.tasks_per_bay > 0.0) {
        return Err(GenError::BadRatio(params.tasks_per_bay));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = pick(&mut rng, &params.n, "n")?;
    let q = pick(&mut rng, &params.q, "q")?;
    let safety = pick(&mut rng, &params.safety, "safety margin")?;
    let travel = pick(&mut rng, &params.travel, "travel time")?;
    if n == 0 || q == 0 {
        return Err(GenError::EmptyRange(if n == 0 { "n" } else { "q" }));
    }
    let need = (q - 1) * (safety + 1) + 1;
    if *params.bays.end() < need.max(*params.bays.start()) {
        return Err(GenError::TooFewBays {
            q,
            safety,
            need,
            bays: *params.bays.end(),
        });
    }
    let bays = rng.gen_range(need.max(*params.bays.start())..=*params.bays.end());

    let gap = safety + 1;
    // bays inside at least one crane range
    let mut servable: Vec<usize> = (1..=bays)
        .filter(|&b| (0..q).any(|k| k * gap < b && b + (q - 1 - k) * gap <= bays))
        .collect();
    let occupied = ((n as f64 / params.tasks_per_bay).round() as usize).clamp(1, n.min(servable.len()));
    servable.shuffle(&mut rng);
    let mut used: Vec<usize> = servable[..occupied].to_vec();
    used.sort_unstable();
    let mut task_bays: Vec<usize> = used.clone();
    while task_bays.len() < n {
        task_bays.push(used[rng.gen_range(0..used.len())]);
    }
    task_bays.sort_unstable();
    let mut tasks = Vec::with_capacity(n);
    for &bay in &task_bays {
        let p = pick(&mut rng, &params.processing, "processing time")?;
        let kind = TaskKind::ALL[rng.gen_range(0..4)];
        tasks.push(Task::with_kind(bay, p, kind));
    }
    let prec: Vec<(usize, usize)> = derive_precedences(&tasks)?
        .into_iter()
        .filter(|_| rng.gen_bool(params.prec_density))
        .collect();
    let mut nonsim = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let d = tasks[i].bay.abs_diff(tasks[j].bay);
            if d > 0 && d <= safety + 1 && rng.gen_bool(params.nonsim_density) {
                nonsim.push((i, j));
            }
        }
    }

    let mut cranes = Vec::with_capacity(q);
    let mut prev = 0;
    for k in 0..q {
        let lo = (k * gap + 1).max(prev + 1);
        let hi = bays - (q - 1 - k) * gap;
        let start_bay = rng.gen_range(lo..=hi);
        prev = start_bay;
        let ready = pick(&mut rng, &params.ready, "ready time")?;
        let end_bay = if rng.gen_bool(params.fixed_end) {
            rng.gen_range(k * gap + 1..=hi)
        } else {
            0
        };
        cranes.push(Crane {
            ready,
            start_bay,
            end_bay,
        });
    }
    Ok(Instance::new(tasks, cranes, bays, safety, travel, prec, nonsim)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::io::write_canonical;
    use crate::model::validate_schedule;

    #[test]
    fn single_task_closed_form() {
        let inst = Instance::new(
            vec![Task::new(4, 6)],
            vec![Crane {
                ready: 2,
                start_bay: 1,
                end_bay: 2,
            }],
            5,
            1,
            3,
            [],
            [],
        )
        .unwrap();
        let sol = brute_force(&inst, &OracleLimits::default()).unwrap();
        assert_eq!(sol.makespan, 2 + 9 + 6 + 6);
    }

    #[test]
    fn two_task_single_crane() {
        let inst = Instance::new(
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
        .unwrap();
        let sol = brute_force(&inst, &OracleLimits::default()).unwrap();
        assert_eq!(sol.makespan, 14);
        assert_eq!(sol.sequences, vec![vec![0, 1]]);
    }

    #[test]
    fn mirrored_instance_has_same_optimum() {
        let params = GenParams {
            n: 5..=5,
            q: 2..=2,
            seed: 11,
            ..GenParams::default()
        };
        let inst = generate(&params).unwrap();
        let b = inst.bays();
        let tasks: Vec<Task> = inst.tasks().iter().map(|t| Task::new(b + 1 - t.bay, t.processing)).collect();
        let cranes: Vec<Crane> = inst
            .cranes()
            .iter()
            .rev()
            .map(|c| Crane {
                ready: c.ready,
                start_bay: b + 1 - c.start_bay,
                end_bay: if c.end_bay == 0 { 0 } else { b + 1 - c.end_bay },
            })
            .collect();
        let extra: Vec<(usize, usize)> = inst.nonsim_pairs().to_vec();
        let mirrored = Instance::new(
            tasks,
            cranes,
            b,
            inst.safety(),
            inst.travel_unit(),
            inst.prec_pairs().iter().copied(),
            extra,
        )
        .unwrap();
        let lim = OracleLimits::default();
        assert_eq!(
            brute_force(&inst, &lim).unwrap().makespan,
            brute_force(&mirrored, &lim).unwrap().makespan
        );
    }

    #[test]
    fn oracle_schedules_validate() {
        for seed in 0..20 {
            let inst = generate(&GenParams {
                seed,
                ..GenParams::default()
            })
            .unwrap();
            let sol = brute_force(&inst, &OracleLimits::default()).unwrap();
            let v = validate_schedule(&inst, &sol.sequences, &sol.schedule).unwrap();
            assert!(v.is_empty(), "seed {seed}: {v:?}");
        }
    }

    #[test]
    fn caps_refuse() {
        let inst = generate(&GenParams {
            n: 9..=9,
            ..GenParams::default()
        })
        .unwrap();
        assert_eq!(
            brute_force(&inst, &OracleLimits::default()),
            Err(OracleError::TooManyTasks(9, 8))
        );
    }

    #[test]
    fn generation_is_deterministic() {
        let p = GenParams {
            seed: 42,
            ..GenParams::default()
        };
        assert_eq!(write_canonical(&generate(&p).unwrap()), write_canonical(&generate(&p).unwrap()));
        let other = GenParams { seed: 43, ..p.clone() };
        assert_ne!(write_canonical(&generate(&p).unwrap()), write_canonical(&generate(&other).unwrap()));
    }

    #[test]
    fn one_task_per_bay_has_no_precedence() {
        for seed in 0..10 {
            let inst = generate(&GenParams {
                n: 6..=6,
                bays: 6..=6,
                tasks_per_bay: 1.0,
                seed,
                ..GenParams::default()
            })
            .unwrap();
            assert!(inst.prec_pairs().is_empty());
            let bays: BTreeSet<usize> = inst.tasks().iter().map(|t| t.bay).collect();
            assert_eq!(bays.len(), 6);
        }
    }

    #[test]
    fn full_density_keeps_derived_pairs() {
        for seed in 0..10 {
            let inst = generate(&GenParams {
                n: 8..=8,
                tasks_per_bay: 4.0,
                prec_density: 1.0,
                seed,
                ..GenParams::default()
            })
            .unwrap();
            let derived: BTreeSet<(usize, usize)> = derive_precedences(inst.tasks()).unwrap().into_iter().collect();
            let kept: BTreeSet<(usize, usize)> = inst.prec_pairs().iter().copied().collect();
            assert_eq!(derived, kept);
        }
    }

    #[test]
    fn too_many_cranes_rejected() {
        let p = GenParams {
            q: 5..=5,
            bays: 4..=6,
            safety: 1..=1,
            ..GenParams::default()
        };
        assert!(matches!(generate(&p), Err(GenError::TooFewBays { .. })));
    }
}
