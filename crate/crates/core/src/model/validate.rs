//! Independent feasibility check of a (routing, schedule) pair.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Instance, Node, Time};

/// Completion times of a full solution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    /// `D_i` per task.
    pub completion: Vec<Time>,
    /// `C_k` per crane.
    pub crane_completion: Vec<Time>,
    /// `W`.
    pub makespan: Time,
}

impl Schedule {
    pub fn start(&self, inst: &Instance, i: usize) -> Time {
        self.completion[i] - inst.processing(i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    UnassignedTask,
    DoubleAssignment,
    Precedence,
    NonsimOverlap,
    InterferenceGap,
    CraneLimit,
    CompletionArithmetic,
    ReadyTime,
    MakespanMismatch,
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationCode::UnassignedTask => "UNASSIGNED_TASK",
            ViolationCode::DoubleAssignment => "DOUBLE_ASSIGNMENT",
            ViolationCode::Precedence => "PRECEDENCE",
            ViolationCode::NonsimOverlap => "NONSIM_OVERLAP",
            ViolationCode::InterferenceGap => "INTERFERENCE_GAP",
            ViolationCode::CraneLimit => "CRANE_LIMIT",
            ViolationCode::CompletionArithmetic => "COMPLETION_ARITHMETIC",
            ViolationCode::ReadyTime => "READY_TIME",
            ViolationCode::MakespanMismatch => "MAKESPAN_MISMATCH",
        };
        f.write_str(s)
    }
}

/// One violated constraint. Task and crane indices are zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub tasks: Vec<usize>,
    pub cranes: Vec<usize>,
    pub times: Vec<Time>,
}

impl Violation {
    fn new(code: ViolationCode, tasks: Vec<usize>, cranes: Vec<usize>, times: Vec<Time>) -> Self {
        Violation {
            code,
            tasks,
            cranes,
            times,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code)?;
        if !self.tasks.is_empty() {
            let ids: Vec<String> = self.tasks.iter().map(|i| (i + 1).to_string()).collect();
            write!(f, " tasks={}", ids.join(","))?;
        }
        if !self.cranes.is_empty() {
            let ids: Vec<String> = self.cranes.iter().map(|k| (k + 1).to_string()).collect();
            write!(f, " cranes={}", ids.join(","))?;
        }
        if !self.times.is_empty() {
            let ts: Vec<String> = self.times.iter().map(|t| t.to_string()).collect();
            write!(f, " times={}", ts.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValidateError {
    #[error("routing has {got} crane sequences, instance has {want} cranes")]
    CraneCount { got: usize, want: usize },
    #[error("routing references task {0}, which does not exist")]
    UnknownTask(usize),
    #[error("schedule has {got} task completion times, instance has {want} tasks")]
    TaskCount { got: usize, want: usize },
    #[error("schedule has {got} crane completion times, instance has {want} cranes")]
    CraneTimes { got: usize, want: usize },
}

/// Checks every model constraint, crane limits included when the instance enforces them.
pub fn validate_schedule(
    inst: &Instance,
    sequences: &[Vec<usize>],
    schedule: &Schedule,
) -> Result<Vec<Violation>, ValidateError> {
    validate_schedule_with(inst, sequences, schedule, inst.crane_limits_enabled())
}

pub fn validate_schedule_with(
    inst: &Instance,
    sequences: &[Vec<usize>],
    schedule: &Schedule,
    enforce_limits: bool,
) -> Result<Vec<Violation>, ValidateError> {
    use ViolationCode::*;

    let (n, q) = (inst.n_tasks(), inst.n_cranes());
    if sequences.len() != q {
        return Err(ValidateError::CraneCount {
            got: sequences.len(),
            want: q,
        });
    }
    if let Some(&bad) = sequences.iter().flatten().find(|&&i| i >= n) {
        return Err(ValidateError::UnknownTask(bad + 1));
    }
    if schedule.completion.len() != n {
        return Err(ValidateError::TaskCount {
            got: schedule.completion.len(),
            want: n,
        });
    }
    if schedule.crane_completion.len() != q {
        return Err(ValidateError::CraneTimes {
            got: schedule.crane_completion.len(),
            want: q,
        });
    }

    let d = &schedule.completion;
    let p = |i: usize| inst.processing(i);
    let mut out = Vec::new();

    let mut crane_of: Vec<Option<usize>> = vec![None; n];
    for (k, seq) in sequences.iter().enumerate() {
        for &i in seq {
            match crane_of[i] {
                None => crane_of[i] = Some(k),
                Some(first) => out.push(Violation::new(DoubleAssignment, vec![i], vec![first, k], vec![])),
            }
        }
    }
    for (i, c) in crane_of.iter().enumerate() {
        if c.is_none() {
            out.push(Violation::new(UnassignedTask, vec![i], vec![], vec![]));
        }
    }

    for (k, seq) in sequences.iter().enumerate() {
        if enforce_limits {
            let (lo, hi) = inst.crane_limits(k).unwrap_or((1, 0));
            for &i in seq {
                if !(lo..=hi).contains(&inst.bay(i)) {
                    out.push(Violation::new(CraneLimit, vec![i], vec![k], vec![]));
                }
            }
        }
        let mut prev = Node::Start;
        let mut prev_done = 0;
        for &i in seq {
            let earliest = match prev {
                Node::Task(_) => prev_done + inst.travel(prev, Node::Task(i), k) + p(i),
                _ => inst.crane(k).ready + inst.travel(Node::Start, Node::Task(i), k) + p(i),
            };
            if d[i] < earliest {
                let code = if prev == Node::Start { ReadyTime } else { CompletionArithmetic };
                let tasks = match prev {
                    Node::Task(h) => vec![h, i],
                    _ => vec![i],
                };
                out.push(Violation::new(code, tasks, vec![k], vec![d[i], earliest]));
            }
            prev = Node::Task(i);
            prev_done = d[i];
        }
        let finish = prev_done + inst.travel(prev, Node::End, k);
        if schedule.crane_completion[k] < finish {
            let tasks = match prev {
                Node::Task(h) => vec![h],
                _ => vec![],
            };
            out.push(Violation::new(
                CompletionArithmetic,
                tasks,
                vec![k],
                vec![schedule.crane_completion[k], finish],
            ));
        }
    }

    for &(i, j) in inst.prec_pairs() {
        if d[j] - p(j) < d[i] {
            out.push(Violation::new(Precedence, vec![i, j], vec![], vec![d[i], d[j] - p(j)]));
        }
    }

    for &(i, j) in inst.nonsim_pairs() {
        if inst.is_prec(i, j) || inst.is_prec(j, i) {
            continue;
        }
        if !(d[i] <= d[j] - p(j) || d[j] <= d[i] - p(i)) {
            out.push(Violation::new(NonsimOverlap, vec![i, j], vec![], vec![d[i], d[j]]));
        }
    }

    for i in 0..n {
        for j in i + 1..n {
            let (Some(v), Some(w)) = (crane_of[i], crane_of[j]) else {
                continue;
            };
            if v == w {
                continue;
            }
            let gap = inst.gap(i, j, v, w);
            if gap == 0 {
                continue;
            }
            let i_first = d[i] + gap + p(j) <= d[j];
            let j_first = d[j] + gap + p(i) <= d[i];
            let ok = if inst.is_prec(i, j) {
                i_first
            } else if inst.is_prec(j, i) {
                j_first
            } else {
                i_first || j_first
            };
            if !ok {
                out.push(Violation::new(InterferenceGap, vec![i, j], vec![v, w], vec![d[i], d[j], gap]));
            }
        }
    }

    let max_c = schedule.crane_completion.iter().copied().max().unwrap_or(0);
    if schedule.makespan != max_c {
        out.push(Violation::new(MakespanMismatch, vec![], vec![], vec![schedule.makespan, max_c]));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Empty,
    Stationary,
    Rightward,
    Leftward,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnidirectionalReport {
    pub directions: Vec<Direction>,
    pub unidirectional: bool,
}

/// Whether each crane visits its bays in one monotone direction.
pub fn is_unidirectional(inst: &Instance, sequences: &[Vec<usize>]) -> UnidirectionalReport {
    let directions: Vec<Direction> = sequences
        .iter()
        .map(|seq| {
            let bays: Vec<usize> = seq.iter().map(|&i| inst.bay(i)).collect();
            if bays.is_empty() {
                return Direction::Empty;
            }
            let up = bays.windows(2).all(|w| w[0] <= w[1]);
            let down = bays.windows(2).all(|w| w[0] >= w[1]);
            match (up, down) {
                (true, true) => Direction::Stationary,
                (true, false) => Direction::Rightward,
                (false, true) => Direction::Leftward,
                (false, false) => Direction::Mixed,
            }
        })
        .collect();
    let unidirectional = !directions.contains(&Direction::Mixed);
    UnidirectionalReport {
        directions,
        unidirectional,
    }
}
