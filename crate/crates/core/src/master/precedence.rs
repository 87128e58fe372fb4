use serde::{Deserialize, Serialize};

use crate::model::Instance;

/// One chain-plus-segment piece of a precedence cycle: `pred ≺ … ≺ succ`
/// through precedence pairs, then crane `crane` routes `succ` directly
/// followed by `path`, whose last task is the next link's `pred`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleLink {
    pub pred: usize,
    pub succ: usize,
    pub crane: usize,
    pub path: Vec<usize>,
}

/// Why a routing admits no schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrecedenceWitness {
    /// `pred` must precede `succ`, yet `crane` performs `succ` first.
    SameCrane { crane: usize, pred: usize, succ: usize },
    /// A cycle of precedence chains and route segments over two or more segments.
    Cycle(Vec<CycleLink>),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Edge {
    Route,
    Prec,
}

/// Checks that route order together with the precedence pairs is acyclic.
pub fn precedence_feasible(inst: &Instance, sequences: &[Vec<usize>]) -> Result<(), PrecedenceWitness> {
    let n = inst.n_tasks();
    for (k, seq) in sequences.iter().enumerate() {
        for (a, &first) in seq.iter().enumerate() {
            for &later in &seq[a + 1..] {
                if inst.prec_implied(later, first) {
                    return Err(PrecedenceWitness::SameCrane {
                        crane: k,
                        pred: later,
                        succ: first,
                    });
                }
            }
        }
    }

    let mut route_next = vec![None; n];
    let mut crane_of = vec![usize::MAX; n];
    for (k, seq) in sequences.iter().enumerate() {
        for (pos, &i) in seq.iter().enumerate() {
            crane_of[i] = k;
            route_next[i] = seq.get(pos + 1).copied();
        }
    }
    let mut prec_out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in inst.prec_pairs() {
        if route_next[i] != Some(j) {
            prec_out[i].push(j);
        }
    }
    let edges = |u: usize| {
        route_next[u]
            .map(|v| (v, Edge::Route))
            .into_iter()
            .chain(prec_out[u].iter().map(|&v| (v, Edge::Prec)))
            .collect::<Vec<_>>()
    };

    // 0 white, 1 on stack, 2 done
    let mut color = vec![0u8; n];
    for root in 0..n {
        if color[root] != 0 {
            continue;
        }
        // (node, outgoing edges, next edge index); `via[d]` is the edge into stack[d + 1]
        let mut stack: Vec<(usize, Vec<(usize, Edge)>, usize)> = vec![(root, edges(root), 0)];
        let mut via: Vec<Edge> = Vec::new();
        color[root] = 1;
        while let Some(top) = stack.last_mut() {
            let u = top.0;
            if top.2 == top.1.len() {
                color[u] = 2;
                stack.pop();
                via.pop();
                continue;
            }
            let (v, e) = top.1[top.2];
            top.2 += 1;
            match color[v] {
                0 => {
                    color[v] = 1;
                    via.push(e);
                    stack.push((v, edges(v), 0));
                }
                1 => {
                    let from = stack.iter().position(|s| s.0 == v).unwrap_or(0);
                    let nodes: Vec<usize> = stack[from..].iter().map(|s| s.0).collect();
                    let mut kinds: Vec<Edge> = via[from..].to_vec();
                    kinds.push(e);
                    return Err(witness_from_cycle(&nodes, &kinds, &crane_of));
                }
                _ => {}
            }
        }
    }
    Ok(())
}

/// `nodes[t] → nodes[t+1]` has kind `kinds[t]`, cyclically.
fn witness_from_cycle(nodes: &[usize], kinds: &[Edge], crane_of: &[usize]) -> PrecedenceWitness {
    let len = nodes.len();
    // rotate so position 0 begins a precedence run
    let start = (0..len)
        .find(|&t| kinds[t] == Edge::Prec && kinds[(t + len - 1) % len] == Edge::Route)
        .unwrap_or(0);
    let at = |t: usize| (nodes[(start + t) % len], kinds[(start + t) % len]);
    let mut links = Vec::new();
    let mut t = 0;
    while t < len {
        let pred = at(t).0;
        while t < len && at(t).1 == Edge::Prec {
            t += 1;
        }
        let succ = at(t).0;
        let mut path = Vec::new();
        while t < len && at(t).1 == Edge::Route {
            t += 1;
            path.push(at(t).0);
        }
        links.push(CycleLink {
            pred,
            succ,
            crane: crane_of[succ],
            path,
        });
    }
    if links.len() == 1 {
        let l = &links[0];
        return PrecedenceWitness::SameCrane {
            crane: l.crane,
            pred: l.pred,
            succ: l.succ,
        };
    }
    PrecedenceWitness::Cycle(links)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Crane, Task};

    fn inst(n: usize, q: usize, prec: &[(usize, usize)]) -> Instance {
        let tasks = (0..n).map(|i| Task::new(i + 1, 1)).collect();
        let cranes = (0..q)
            .map(|k| Crane {
                ready: 0,
                start_bay: k + 1,
                end_bay: 0,
            })
            .collect();
        Instance::new(tasks, cranes, n.max(q), 0, 1, prec.iter().copied(), [])
            .unwrap()
            .without_crane_limits()
    }

    #[test]
    fn same_crane_reversal() {
        let i = inst(2, 1, &[(0, 1)]);
        assert_eq!(precedence_feasible(&i, &[vec![0, 1]]), Ok(()));
        assert_eq!(
            precedence_feasible(&i, &[vec![1, 0]]),
            Err(PrecedenceWitness::SameCrane {
                crane: 0,
                pred: 0,
                succ: 1
            })
        );
    }

    #[test]
    fn transitive_reversal_on_one_crane() {
        let i = inst(3, 2, &[(0, 1), (1, 2)]);
        let w = precedence_feasible(&i, &[vec![2, 0], vec![1]]).unwrap_err();
        assert_eq!(
            w,
            PrecedenceWitness::SameCrane {
                crane: 0,
                pred: 0,
                succ: 2
            }
        );
    }

    #[test]
    fn two_crane_cycle() {
        // 1 ≺ 2, 3 ≺ 4; crane 1 does 2 then 3, crane 2 does 4 then 1
        let i = inst(4, 2, &[(0, 1), (2, 3)]);
        let w = precedence_feasible(&i, &[vec![1, 2], vec![3, 0]]).unwrap_err();
        let PrecedenceWitness::Cycle(links) = w else {
            panic!("expected a cycle, got {w:?}");
        };
        assert_eq!(links.len(), 2);
        let mut got: Vec<(usize, usize, usize, Vec<usize>)> =
            links.into_iter().map(|l| (l.pred, l.succ, l.crane, l.path)).collect();
        got.sort();
        assert_eq!(got, vec![(0, 1, 0, vec![2]), (2, 3, 1, vec![0])]);
    }

    #[test]
    fn independent_routes_are_fine() {
        let i = inst(4, 2, &[(0, 1), (2, 3)]);
        assert_eq!(precedence_feasible(&i, &[vec![0, 2], vec![1, 3]]), Ok(()));
    }
}
