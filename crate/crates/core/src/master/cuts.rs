use std::cell::{Ref, RefCell};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::precedence::{CycleLink, PrecedenceWitness};
use super::Routing;
use crate::model::{Instance, Node};

/// Arc literal `x_{from,to}^crane`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArcLit {
    pub crane: usize,
    pub from: Node,
    pub to: Node,
}

impl ArcLit {
    pub fn new(crane: usize, from: Node, to: Node) -> Self {
        ArcLit { crane, from, to }
    }

    /// False for arcs no route can contain.
    pub fn is_possible(&self) -> bool {
        !matches!(self.to, Node::Start) && !matches!(self.from, Node::End) && self.from != self.to
    }
}

impl fmt::Display for ArcLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x[{},{}]^{}", self.from, self.to, self.crane + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CutFamily {
    Sec2,
    Pcb,
    LiftedSec,
    CrossPrec,
    Nogood,
    NogoodSamebay,
    Sset,
    Sec,
}

impl CutFamily {
    pub const ALL: [CutFamily; 8] = [
        CutFamily::Sec2,
        CutFamily::Pcb,
        CutFamily::LiftedSec,
        CutFamily::CrossPrec,
        CutFamily::Nogood,
        CutFamily::NogoodSamebay,
        CutFamily::Sset,
        CutFamily::Sec,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CutFamily::Sec2 => "SEC2",
            CutFamily::Pcb => "PCB",
            CutFamily::LiftedSec => "LIFTED_SEC",
            CutFamily::CrossPrec => "CROSS_PREC",
            CutFamily::Nogood => "NOGOOD",
            CutFamily::NogoodSamebay => "NOGOOD_SAMEBAY",
            CutFamily::Sset => "SSET",
            CutFamily::Sec => "SEC",
        }
    }
}

impl fmt::Display for CutFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `Σ arcs + Σ assignments ≤ rhs`, every coefficient one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cut {
    arcs: Vec<ArcLit>,
    assigns: Vec<(usize, usize)>,
    rhs: i64,
    family: CutFamily,
    iteration: usize,
}

impl Cut {
    /// Literals are sorted and deduplicated; arcs that can never be used are dropped.
    /// Assignment literals are `(task, crane)`.
    pub fn new(
        family: CutFamily,
        arcs: impl IntoIterator<Item = ArcLit>,
        assigns: impl IntoIterator<Item = (usize, usize)>,
        rhs: i64,
    ) -> Self {
        let mut arcs: Vec<ArcLit> = arcs.into_iter().filter(ArcLit::is_possible).collect();
        arcs.sort_unstable();
        arcs.dedup();
        let mut assigns: Vec<(usize, usize)> = assigns.into_iter().collect();
        assigns.sort_unstable();
        assigns.dedup();
        Cut {
            arcs,
            assigns,
            rhs,
            family,
            iteration: 0,
        }
    }

    pub fn at_iteration(mut self, iteration: usize) -> Self {
        self.iteration = iteration;
        self
    }

    pub fn arcs(&self) -> &[ArcLit] {
        &self.arcs
    }

    pub fn assigns(&self) -> &[(usize, usize)] {
        &self.assigns
    }

    pub fn rhs(&self) -> i64 {
        self.rhs
    }

    pub fn family(&self) -> CutFamily {
        self.family
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn lhs(&self, routing: &Routing) -> i64 {
        let arcs = self.arcs.iter().filter(|a| routing.has_arc(a)).count();
        let assigns = self.assigns.iter().filter(|&&(i, k)| routing.is_assigned(i, k)).count();
        (arcs + assigns) as i64
    }

    pub fn is_violated_by(&self, routing: &Routing) -> bool {
        self.lhs(routing) > self.rhs
    }
}

impl fmt::Display for Cut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.family)?;
        let mut first = true;
        for a in &self.arcs {
            write!(f, "{}{a}", if first { " " } else { " + " })?;
            first = false;
        }
        for &(i, k) in &self.assigns {
            write!(f, "{}y[{}]^{}", if first { " " } else { " + " }, i + 1, k + 1)?;
            first = false;
        }
        if first {
            write!(f, " 0")?;
        }
        write!(f, " <= {}", self.rhs)
    }
}

type CutKey = (Vec<ArcLit>, Vec<(usize, usize)>, i64);

/// Cuts accumulated over the decomposition; identical cuts are stored once.
#[derive(Debug, Clone, Default)]
pub struct CutPool {
    cuts: Vec<Cut>,
    seen: HashSet<CutKey>,
    /// Built on demand and extended as cuts arrive.
    index: RefCell<Option<LiteralIndex>>,
}

impl CutPool {
    pub fn new() -> Self {
        CutPool::default()
    }

    /// Adds the cut unless an identical one is present; reports whether it was added.
    pub fn insert(&mut self, cut: Cut) -> bool {
        let key = (cut.arcs.clone(), cut.assigns.clone(), cut.rhs);
        if !self.seen.insert(key) {
            return false;
        }
        self.cuts.push(cut);
        true
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn iter(&self) -> impl Iterator<Item = &Cut> {
        self.cuts.iter()
    }

    pub fn counts_by_family(&self) -> BTreeMap<CutFamily, usize> {
        let mut out: BTreeMap<CutFamily, usize> = CutFamily::ALL.iter().map(|&f| (f, 0)).collect();
        for c in &self.cuts {
            *out.entry(c.family).or_default() += 1;
        }
        out
    }

    pub fn violated_by<'a>(&'a self, routing: &'a Routing) -> impl Iterator<Item = &'a Cut> + 'a {
        self.cuts.iter().filter(move |c| c.is_violated_by(routing))
    }

    pub(crate) fn index(&self, n: usize, q: usize) -> Ref<'_, LiteralIndex> {
        {
            let mut slot = self.index.borrow_mut();
            match slot.as_mut() {
                Some(idx) if idx.n == n && idx.q == q => idx.extend(&self.cuts),
                _ => {
                    let mut idx = LiteralIndex::new(n, q);
                    idx.extend(&self.cuts);
                    *slot = Some(idx);
                }
            }
        }
        Ref::map(self.index.borrow(), |slot| slot.as_ref().expect("filled above"))
    }
}

/// Cut ids per literal, for incremental counting during the master search.
///
/// Cuts that forbid exactly one complete routing are kept apart in
/// `excluded` and checked at the leaves only.
#[derive(Debug, Clone)]
pub(crate) struct LiteralIndex {
    n: usize,
    q: usize,
    arc_cuts: Vec<Vec<u32>>,
    assign_cuts: Vec<Vec<u32>>,
    pub rhs: Vec<i64>,
    pub excluded: HashSet<Vec<Vec<usize>>>,
    /// Some cut can never be satisfied.
    pub infeasible: bool,
}

impl LiteralIndex {
    fn new(n: usize, q: usize) -> Self {
        LiteralIndex {
            n,
            q,
            arc_cuts: vec![Vec::new(); q * (n + 1) * (n + 1)],
            assign_cuts: vec![Vec::new(); q * n],
            rhs: Vec::new(),
            excluded: HashSet::new(),
            infeasible: false,
        }
    }

    /// Indexes `cuts` beyond those already seen.
    fn extend(&mut self, cuts: &[Cut]) {
        let (n, q) = (self.n, self.q);
        for (c, cut) in cuts.iter().enumerate().skip(self.rhs.len()) {
            self.rhs.push(cut.rhs);
            self.infeasible |= cut.rhs < 0;
            if let Some(seqs) = single_routing(cut, n, q) {
                self.excluded.insert(seqs);
                continue;
            }
            for a in &cut.arcs {
                if let Some(id) = self.arc_id(a.crane, a.from, a.to) {
                    self.arc_cuts[id].push(c as u32);
                }
            }
            for &(i, k) in &cut.assigns {
                if i < n && k < q {
                    self.assign_cuts[k * n + i].push(c as u32);
                }
            }
        }
    }

    fn arc_id(&self, k: usize, from: Node, to: Node) -> Option<usize> {
        let n = self.n;
        let f = match from {
            Node::Start => 0,
            Node::Task(i) if i < n => i + 1,
            _ => return None,
        };
        let t = match to {
            Node::Task(j) if j < n => j,
            Node::End => n,
            _ => return None,
        };
        let id = (k * (n + 1) + f) * (n + 1) + t;
        (id < self.arc_cuts.len()).then_some(id)
    }

    pub fn arc(&self, k: usize, from: Node, to: Node) -> &[u32] {
        self.arc_id(k, from, to).map_or(&[], |id| &self.arc_cuts[id])
    }

    pub fn assign(&self, i: usize, k: usize) -> &[u32] {
        &self.assign_cuts[k * self.n + i]
    }
}

/// The routing a cut forbids when it forbids exactly one: no assignment
/// literals, `rhs` one below the arc count, and arcs that chain every task
/// from each crane's start to its end.
fn single_routing(cut: &Cut, n: usize, q: usize) -> Option<Vec<Vec<usize>>> {
    if !cut.assigns.is_empty() || cut.arcs.len() != n + q || cut.rhs != (n + q) as i64 - 1 {
        return None;
    }
    let mut next: HashMap<(usize, Node), Node> = HashMap::with_capacity(n + q);
    for a in &cut.arcs {
        if a.crane >= q || next.insert((a.crane, a.from), a.to).is_some() {
            return None;
        }
    }
    let mut seqs = vec![Vec::new(); q];
    let mut seen = 0;
    for (k, seq) in seqs.iter_mut().enumerate() {
        let mut at = Node::Start;
        loop {
            match next.get(&(k, at))? {
                Node::End => break,
                &Node::Task(j) if j < n && seq.len() < n => {
                    seq.push(j);
                    at = Node::Task(j);
                }
                _ => return None,
            }
        }
        seen += seq.len();
    }
    let distinct: HashSet<usize> = seqs.iter().flatten().copied().collect();
    (seen == n && distinct.len() == n).then_some(seqs)
}

/// All arcs of crane `k` between two members of `set`.
pub fn arcs_within(k: usize, set: &[Node]) -> Vec<ArcLit> {
    let mut out = Vec::new();
    for &u in set {
        for &v in set {
            let a = ArcLit::new(k, u, v);
            if a.is_possible() {
                out.push(a);
            }
        }
    }
    out
}

pub fn arcs_from(k: usize, u: Node, set: &[Node]) -> Vec<ArcLit> {
    set.iter().map(|&v| ArcLit::new(k, u, v)).filter(ArcLit::is_possible).collect()
}

/// Two-cycle eliminations and precedence-pair bans known before any master solve.
///
/// `x_ij + x_ji ≤ 1` for each crane and task pair, and for precedence pairs
/// `(i1, j1)`, `(i2, j2)` on four distinct tasks, `x_{i1 j2} + x_{j1 i2} ≤ 1`.
/// Only cranes admitting every task involved get a cut.
pub fn seed_cut_pool(inst: &Instance) -> CutPool {
    let (n, q) = (inst.n_tasks(), inst.n_cranes());
    let mut pool = CutPool::new();
    for k in 0..q {
        for i in 0..n {
            for j in i + 1..n {
                if inst.admissible(i, k) && inst.admissible(j, k) {
                    pool.insert(Cut::new(
                        CutFamily::Sec2,
                        [
                            ArcLit::new(k, Node::Task(i), Node::Task(j)),
                            ArcLit::new(k, Node::Task(j), Node::Task(i)),
                        ],
                        [],
                        1,
                    ));
                }
            }
        }
    }
    let prec = inst.prec_pairs();
    for &(i1, j1) in prec {
        for &(i2, j2) in prec {
            let mut four = [i1, j1, i2, j2];
            four.sort_unstable();
            if four.windows(2).any(|w| w[0] == w[1]) {
                continue;
            }
            for k in 0..q {
                if four.iter().all(|&t| inst.admissible(t, k)) {
                    pool.insert(Cut::new(
                        CutFamily::Pcb,
                        [
                            ArcLit::new(k, Node::Task(i1), Node::Task(j2)),
                            ArcLit::new(k, Node::Task(j1), Node::Task(i2)),
                        ],
                        [],
                        1,
                    ));
                }
            }
        }
    }
    pool
}

/// `x(S) + y_i^k ≤ |S| - 1` for a set `S` holding the start node and a
/// successor of `i` in the precedence order, with `i ∉ S`.
pub fn make_lifted_sec(crane: usize, pred: usize, set: &[Node]) -> Cut {
    debug_assert!(set.contains(&Node::Start));
    debug_assert!(!set.contains(&Node::Task(pred)));
    Cut::new(
        CutFamily::LiftedSec,
        arcs_within(crane, set),
        [(pred, crane)],
        set.len() as i64 - 1,
    )
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CutError {
    #[error("a cycle through a single crane segment yields no cross-precedence cut")]
    SingleSegment,
    #[error("malformed cycle witness: {0}")]
    Malformed(String),
}

/// `Σ_m (x(j_m, S_m) + x(S_m)) ≤ Σ_m |S_m| - 1` for a precedence cycle
/// alternating between precedence chains and route segments.
pub fn make_cross_prec_cut(links: &[CycleLink]) -> Result<Cut, CutError> {
    if links.len() < 2 {
        return Err(CutError::SingleSegment);
    }
    let mut seen = HashSet::new();
    let mut arcs = Vec::new();
    let mut size = 0i64;
    for link in links {
        if link.path.is_empty() {
            return Err(CutError::Malformed(format!("empty segment after task {}", link.succ + 1)));
        }
        for &t in std::iter::once(&link.succ).chain(&link.path) {
            if !seen.insert(t) {
                return Err(CutError::Malformed(format!("task {} appears twice", t + 1)));
            }
        }
        let set: Vec<Node> = link.path.iter().map(|&t| Node::Task(t)).collect();
        arcs.extend(arcs_from(link.crane, Node::Task(link.succ), &set));
        arcs.extend(arcs_within(link.crane, &set));
        size += set.len() as i64;
    }
    Ok(Cut::new(CutFamily::CrossPrec, arcs, [], size - 1))
}

/// Cut violated by `routing` that excludes the infeasibility shown by `witness`.
pub fn separation_cut(routing: &Routing, witness: &PrecedenceWitness) -> Result<Cut, CutError> {
    match witness {
        PrecedenceWitness::SameCrane { crane, pred, succ } => {
            let set: Vec<Node> = std::iter::once(Node::Start)
                .chain(routing.prefix(*succ).iter().map(|&t| Node::Task(t)))
                .chain(std::iter::once(Node::Task(*succ)))
                .collect();
            Ok(make_lifted_sec(*crane, *pred, &set))
        }
        PrecedenceWitness::Cycle(links) => make_cross_prec_cut(links),
    }
}

/// Subtour eliminations for every cycle among task arcs that is not
/// reachable from a crane's start node. `x(C) ≤ |C| - 1` per cycle `C`.
pub fn find_subtour_cuts(n: usize, arcs: &[ArcLit]) -> Vec<Cut> {
    let mut by_crane: BTreeMap<usize, Vec<Option<Node>>> = BTreeMap::new();
    let mut starts: BTreeMap<usize, Node> = BTreeMap::new();
    for a in arcs {
        let succ = by_crane.entry(a.crane).or_insert_with(|| vec![None; n]);
        match a.from {
            Node::Start => {
                starts.entry(a.crane).or_insert(a.to);
            }
            Node::Task(i) if i < n => {
                succ[i].get_or_insert(a.to);
            }
            _ => {}
        }
    }
    let mut cuts = Vec::new();
    for (&k, succ) in &by_crane {
        // 0 = unvisited, 1 = on the start path or already handled
        let mut state = vec![0u8; n];
        let mut cur = starts.get(&k).copied();
        while let Some(Node::Task(i)) = cur {
            if i >= n || state[i] != 0 {
                break;
            }
            state[i] = 1;
            cur = succ[i];
        }
        for s in 0..n {
            if state[s] != 0 || succ[s].is_none() {
                continue;
            }
            let mut walk = Vec::new();
            let mut cur = Some(Node::Task(s));
            let mut on_walk = vec![false; n];
            while let Some(Node::Task(i)) = cur {
                if i >= n || state[i] != 0 {
                    break;
                }
                if on_walk[i] {
                    let from = walk.iter().position(|&t| t == i).unwrap_or(0);
                    let cycle: Vec<Node> = walk[from..].iter().map(|&t| Node::Task(t)).collect();
                    let family = if cycle.len() == 2 { CutFamily::Sec2 } else { CutFamily::Sec };
                    let rhs = cycle.len() as i64 - 1;
                    cuts.push(Cut::new(family, arcs_within(k, &cycle), [], rhs));
                    break;
                }
                on_walk[i] = true;
                walk.push(i);
                cur = succ[i];
            }
            for t in walk {
                state[t] = 1;
            }
        }
    }
    cuts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::master::{build_costs, Routing};
    use crate::model::{Crane, Task};

    fn crane(start: usize) -> Crane {
        Crane {
            ready: 0,
            start_bay: start,
            end_bay: 0,
        }
    }

    #[test]
    fn pool_dedups_by_literals_and_rhs() {
        let mut pool = CutPool::new();
        let a = ArcLit::new(0, Node::Task(0), Node::Task(1));
        let b = ArcLit::new(0, Node::Task(1), Node::Task(0));
        assert!(pool.insert(Cut::new(CutFamily::Sec2, [a, b], [], 1)));
        assert!(!pool.insert(Cut::new(CutFamily::Sec, [b, a], [], 1)));
        assert!(pool.insert(Cut::new(CutFamily::Sec, [b, a], [], 0)));
        assert_eq!(pool.len(), 2);
        assert_eq!(pool.counts_by_family()[&CutFamily::Sec2], 1);
    }

    #[test]
    fn impossible_arcs_are_dropped() {
        let c = Cut::new(
            CutFamily::Sec,
            [
                ArcLit::new(0, Node::Task(1), Node::Start),
                ArcLit::new(0, Node::End, Node::Task(1)),
                ArcLit::new(0, Node::Task(1), Node::Task(1)),
                ArcLit::new(0, Node::Start, Node::End),
            ],
            [],
            0,
        );
        assert_eq!(c.arcs(), &[ArcLit::new(0, Node::Start, Node::End)]);
    }

    #[test]
    fn seed_pool_sizes() {
        let tasks = vec![Task::new(1, 1), Task::new(2, 1), Task::new(3, 1), Task::new(4, 1)];
        let inst = Instance::new(tasks, vec![crane(1)], 4, 1, 1, [(0, 1), (2, 3)], []).unwrap();
        let pool = seed_cut_pool(&inst);
        let counts = pool.counts_by_family();
        assert_eq!(counts[&CutFamily::Sec2], 6);
        // ordered pairs of the two disjoint precedence pairs
        assert_eq!(counts[&CutFamily::Pcb], 2);
        let pcb: Vec<&Cut> = pool.iter().filter(|c| c.family() == CutFamily::Pcb).collect();
        assert!(pcb.iter().any(|c| c.arcs()
            == [
                ArcLit::new(0, Node::Task(0), Node::Task(3)),
                ArcLit::new(0, Node::Task(1), Node::Task(2)),
            ]));
    }

    #[test]
    fn lifted_sec_cuts_off_reversed_pair() {
        let tasks = vec![Task::new(1, 1), Task::new(2, 1)];
        let inst = Instance::new(tasks, vec![crane(1)], 2, 1, 1, [(0, 1)], []).unwrap();
        let costs = build_costs(&inst);
        let bad = Routing::new(&inst, &costs, vec![vec![1, 0]]).unwrap();
        let good = Routing::new(&inst, &costs, vec![vec![0, 1]]).unwrap();
        let cut = make_lifted_sec(0, 0, &[Node::Start, Node::Task(1)]);
        assert_eq!(cut.rhs(), 1);
        assert_eq!(cut.arcs(), &[ArcLit::new(0, Node::Start, Node::Task(1))]);
        assert!(cut.is_violated_by(&bad));
        assert!(!cut.is_violated_by(&good));
    }

    #[test]
    fn cross_prec_single_segment_rejected() {
        let link = CycleLink {
            pred: 0,
            succ: 1,
            crane: 0,
            path: vec![0],
        };
        assert_eq!(make_cross_prec_cut(&[link]), Err(CutError::SingleSegment));
    }

    #[test]
    fn cross_prec_literals() {
        // 1 ≺ 2, 3 ≺ 4; crane 1 does 2 then 3, crane 2 does 4 then 1
        let links = vec![
            CycleLink {
                pred: 0,
                succ: 1,
                crane: 0,
                path: vec![2],
            },
            CycleLink {
                pred: 2,
                succ: 3,
                crane: 1,
                path: vec![0],
            },
        ];
        let cut = make_cross_prec_cut(&links).unwrap();
        assert_eq!(cut.rhs(), 1);
        assert_eq!(
            cut.arcs(),
            &[
                ArcLit::new(0, Node::Task(1), Node::Task(2)),
                ArcLit::new(1, Node::Task(3), Node::Task(0)),
            ]
        );
    }

    #[test]
    fn subtours_found() {
        let arcs = vec![
            ArcLit::new(0, Node::Start, Node::Task(0)),
            ArcLit::new(0, Node::Task(0), Node::End),
            ArcLit::new(0, Node::Task(1), Node::Task(2)),
            ArcLit::new(0, Node::Task(2), Node::Task(3)),
            ArcLit::new(0, Node::Task(3), Node::Task(1)),
        ];
        let cuts = find_subtour_cuts(4, &arcs);
        assert_eq!(cuts.len(), 1);
        assert_eq!(cuts[0].rhs(), 2);
        assert_eq!(cuts[0].family(), CutFamily::Sec);
        assert_eq!(cuts[0].arcs().len(), 6);
    }
}
