//! Instance file formats.
//!
//! The canonical format is line oriented, with `#` starting a comment:
//!
//! ```text
//! QCSP 1
//! n q B delta t
//! TASK id bay p [kind]     (n lines; kind is unload-deck, unload-hold,
//!                          load-hold or load-deck)
//! CRANE id r l0 lT         (q lines; lT = 0 leaves the final position free)
//! PREC i j                 (i precedes j)
//! NSIM i j                 (extra non-simultaneous pairs)
//! ```
//!
//! Two adapters read third-party benchmark layouts, see [`parse_kim`] and
//! [`parse_meisel`].

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use super::{Crane, Instance, ModelError, Task, TaskKind, Time};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid instance: {0}")]
    Model(#[from] ModelError),
}

impl ParseError {
    fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    Canonical,
    Kim,
    Meisel,
}

pub fn parse_as(text: &str, format: SourceFormat) -> Result<Instance, ParseError> {
    match format {
        SourceFormat::Canonical => parse_canonical(text),
        SourceFormat::Kim => parse_kim(text),
        SourceFormat::Meisel => parse_meisel(text),
    }
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

impl Token<'_> {
    fn int(&self) -> Result<i64, ParseError> {
        self.text
            .parse::<i64>()
            .map_err(|_| ParseError::at(self.line, self.column, format!("expected an integer, found `{}`", self.text)))
    }

    fn nonneg(&self) -> Result<usize, ParseError> {
        let v = self.int()?;
        usize::try_from(v)
            .map_err(|_| ParseError::at(self.line, self.column, format!("expected a nonnegative integer, found {v}")))
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::at(self.line, self.column, message)
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn line_tokens(line: &str, lineno: usize) -> Vec<Token<'_>> {
    let body = strip_comment(line);
    let mut out = Vec::new();
    let mut start = None;
    for (pos, ch) in body.char_indices().chain(std::iter::once((body.len(), ' '))) {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(pos),
            (true, Some(s)) => {
                out.push(Token {
                    text: &body[s..pos],
                    line: lineno,
                    column: s + 1,
                });
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// Parses the canonical format.
pub fn parse_canonical(text: &str) -> Result<Instance, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, line_tokens(l, i + 1)))
        .filter(|(_, toks)| !toks.is_empty());

    let (lineno, magic) = lines.next().ok_or_else(|| ParseError::at(1, 1, "empty file"))?;
    if magic.len() != 2 || magic[0].text != "QCSP" || magic[1].text != "1" {
        return Err(ParseError::at(lineno, 1, "expected header `QCSP 1`"));
    }
    let (lineno, header) = lines
        .next()
        .ok_or_else(|| ParseError::at(lineno + 1, 1, "missing `n q B delta t` line"))?;
    if header.len() != 5 {
        return Err(ParseError::at(lineno, 1, "expected `n q B delta t`"));
    }
    let n = header[0].nonneg()?;
    let q = header[1].nonneg()?;
    let bays = header[2].nonneg()?;
    let safety = header[3].nonneg()?;
    let travel = header[4].int()?;

    let mut tasks: Vec<Option<Task>> = vec![None; n];
    let mut cranes: Vec<Option<Crane>> = vec![None; q];
    let mut prec = Vec::new();
    let mut nonsim = Vec::new();

    let id_in = |tok: &Token, count: usize, what: &str| -> Result<usize, ParseError> {
        let id = tok.nonneg()?;
        if id == 0 || id > count {
            return Err(tok.err(format!("{what} id {id} outside [1, {count}]")));
        }
        Ok(id - 1)
    };

    for (lineno, toks) in lines {
        let arity = |k: usize| -> Result<(), ParseError> {
            if toks.len() != k {
                return Err(ParseError::at(
                    lineno,
                    1,
                    format!("`{}` takes {} fields, found {}", toks[0].text, k - 1, toks.len() - 1),
                ));
            }
            Ok(())
        };
        match toks[0].text {
            "TASK" => {
                if toks.len() != 5 {
                    arity(4)?;
                }
                let id = id_in(&toks[1], n, "task")?;
                if tasks[id].is_some() {
                    return Err(toks[1].err(format!("duplicate task id {}", id + 1)));
                }
                let bay = toks[2].nonneg()?;
                if bay == 0 || bay > bays {
                    return Err(toks[2].err(format!("bay {bay} outside [1, {bays}]")));
                }
                let p = toks[3].int()?;
                tasks[id] = Some(match toks.get(4) {
                    None => Task::new(bay, p),
                    Some(t) => {
                        let kind = TaskKind::from_name(t.text).ok_or_else(|| t.err(format!("unknown task kind `{}`", t.text)))?;
                        Task::with_kind(bay, p, kind)
                    }
                });
            }
            "CRANE" => {
                arity(5)?;
                let id = id_in(&toks[1], q, "crane")?;
                if cranes[id].is_some() {
                    return Err(toks[1].err(format!("duplicate crane id {}", id + 1)));
                }
                let ready = toks[2].int()?;
                let start_bay = toks[3].nonneg()?;
                let end_bay = toks[4].nonneg()?;
                for (tok, bay) in [(&toks[3], start_bay), (&toks[4], end_bay)] {
                    if bay > bays {
                        return Err(tok.err(format!("bay {bay} outside [0, {bays}]")));
                    }
                }
                cranes[id] = Some(Crane {
                    ready,
                    start_bay,
                    end_bay,
                });
            }
            "PREC" | "NSIM" => {
                arity(3)?;
                let i = id_in(&toks[1], n, "task")?;
                let j = id_in(&toks[2], n, "task")?;
                if toks[0].text == "PREC" {
                    prec.push((i, j));
                } else {
                    nonsim.push((i, j));
                }
            }
            other => return Err(toks[0].err(format!("unknown record `{other}`"))),
        }
    }

    let tasks = tasks
        .into_iter()
        .enumerate()
        .map(|(i, t)| t.ok_or_else(|| ParseError::at(0, 0, format!("missing TASK {}", i + 1))))
        .collect::<Result<Vec<_>, _>>()?;
    let cranes = cranes
        .into_iter()
        .enumerate()
        .map(|(k, c)| c.ok_or_else(|| ParseError::at(0, 0, format!("missing CRANE {}", k + 1))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Instance::new(tasks, cranes, bays, safety, travel, prec, nonsim)?)
}

/// Writes the canonical format. Only non-simultaneous pairs that are not
/// implied by precedences or shared bays are listed.
pub fn write_canonical(inst: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "QCSP 1");
    let _ = writeln!(
        out,
        "{} {} {} {} {}",
        inst.n_tasks(),
        inst.n_cranes(),
        inst.bays(),
        inst.safety(),
        inst.travel_unit()
    );
    for (i, t) in inst.tasks().iter().enumerate() {
        let _ = match t.kind {
            Some(kind) => writeln!(out, "TASK {} {} {} {}", i + 1, t.bay, t.processing, kind.name()),
            None => writeln!(out, "TASK {} {} {}", i + 1, t.bay, t.processing),
        };
    }
    for (k, c) in inst.cranes().iter().enumerate() {
        let _ = writeln!(out, "CRANE {} {} {} {}", k + 1, c.ready, c.start_bay, c.end_bay);
    }
    for &(i, j) in inst.prec_pairs() {
        let _ = writeln!(out, "PREC {} {}", i + 1, j + 1);
    }
    for &(i, j) in inst.nonsim_pairs() {
        if inst.is_prec(i, j) || inst.is_prec(j, i) || inst.bay(i) == inst.bay(j) {
            continue;
        }
        let _ = writeln!(out, "NSIM {} {}", i + 1, j + 1);
    }
    out
}

struct Cursor<'t, 'a> {
    toks: std::slice::Iter<'t, Token<'a>>,
    last_line: usize,
}

impl<'a> Cursor<'_, 'a> {
    fn next(&mut self, what: &str) -> Result<Token<'a>, ParseError> {
        self.toks
            .next()
            .copied()
            .ok_or_else(|| ParseError::at(self.last_line, 1, format!("unexpected end of file, expected {what}")))
    }
}

/// `count` followed by that many one-based task pairs.
fn read_pairs<'a>(
    count_tok: Token<'a>,
    n: usize,
    next: &mut impl FnMut(&str) -> Result<Token<'a>, ParseError>,
) -> Result<Vec<(usize, usize)>, ParseError> {
    let m = count_tok.nonneg()?;
    let mut pairs = Vec::with_capacity(m);
    for _ in 0..m {
        let a = next("pair")?;
        let b = next("pair")?;
        let (i, j) = (a.nonneg()?, b.nonneg()?);
        if i == 0 || i > n {
            return Err(a.err(format!("task id {i} outside [1, {n}]")));
        }
        if j == 0 || j > n {
            return Err(b.err(format!("task id {j} outside [1, {n}]")));
        }
        pairs.push((i - 1, j - 1));
    }
    Ok(pairs)
}

/// Defaults of the Kim–Park benchmark: zero ready times, one time unit per
/// bay, one empty bay between cranes, free final positions.
pub const KIM_DEFAULT_SAFETY: usize = 1;
pub const KIM_DEFAULT_TRAVEL: Time = 1;

/// Reads the positional Kim–Park layout.
///
/// Whitespace-separated integers, line breaks insignificant, `#` comments:
///
/// ```text
/// n q [B]
/// bay_1 p_1 ... bay_n p_n
/// l0_1 ... l0_q                 initial crane bays
/// m   i_1 j_1 ... i_m j_m       precedence pairs, one-based
/// [s  i_1 j_1 ... i_s j_s]      optional non-simultaneous pairs
/// ```
///
/// `B` defaults to the largest bay referenced.
pub fn parse_kim(text: &str) -> Result<Instance, ParseError> {
    let toks: Vec<Token> = text
        .lines()
        .enumerate()
        .flat_map(|(i, l)| line_tokens(l, i + 1))
        .collect();
    let mut cur = Cursor {
        toks: toks.iter(),
        last_line: text.lines().count().max(1),
    };
    let mut next = |what: &str| cur.next(what);

    // header may have 2 or 3 fields; decide by the line of the first token
    let first = next("task count")?;
    let n = first.nonneg()?;
    let q = next("crane count")?.nonneg()?;
    let header_line = first.line;
    let mut bays_hint = None;
    let mut pending = None;
    let tok = next("task data")?;
    if tok.line == header_line {
        bays_hint = Some(tok.nonneg()?);
    } else {
        pending = Some(tok);
    }

    let mut raw_tasks = Vec::with_capacity(n);
    for _ in 0..n {
        let bay_tok = match pending.take() {
            Some(t) => t,
            None => next("task bay")?,
        };
        let bay = bay_tok.nonneg()?;
        let p = next("processing time")?.int()?;
        raw_tasks.push((bay, p));
    }
    let mut starts = Vec::with_capacity(q);
    for _ in 0..q {
        starts.push(next("initial crane bay")?.nonneg()?);
    }
    let prec = read_pairs(next("precedence count")?, n, &mut next)?;
    let nonsim = match next("") {
        Ok(tok) => read_pairs(tok, n, &mut next)?,
        Err(_) => Vec::new(),
    };
    if let Ok(extra) = next("") {
        return Err(extra.err("trailing data"));
    }

    let max_bay = raw_tasks
        .iter()
        .map(|t| t.0)
        .chain(starts.iter().copied())
        .max()
        .unwrap_or(1);
    let bays = bays_hint.unwrap_or(max_bay);
    let tasks = raw_tasks.into_iter().map(|(b, p)| Task::new(b, p)).collect();
    let cranes = starts
        .into_iter()
        .map(|s| Crane {
            ready: 0,
            start_bay: s,
            end_bay: 0,
        })
        .collect();
    Ok(Instance::new(
        tasks,
        cranes,
        bays,
        KIM_DEFAULT_SAFETY,
        KIM_DEFAULT_TRAVEL,
        prec,
        nonsim,
    )?)
}

/// Reads the keyed layout used by generated benchmark sets.
///
/// Each record is `key = values` or `key: values`; values may continue on
/// following lines that carry no key. Keys are matched case-insensitively
/// with spaces, dashes and underscores ignored. Integers are extracted from
/// the value text, so `(1,2), (3,4)` and `1 2 3 4` are equivalent.
///
/// | key | content | default |
/// |-----|---------|---------|
/// | `tasks` | task count | required |
/// | `cranes` | crane count | 2 |
/// | `bays` | bay count | 10 |
/// | `safetymargin` | empty bays between cranes | 1 |
/// | `traveltime` | time per bay | 1 |
/// | `processingtimes` | n values | required |
/// | `locations` | n bays | required |
/// | `readytimes` | q values | zeros |
/// | `initialpositions` | q bays | evenly spread |
/// | `finalpositions` | q bays | zeros (free) |
/// | `precedences` | one-based pairs | none |
/// | `nonsimultaneous` | one-based pairs | none |
pub fn parse_meisel(text: &str) -> Result<Instance, ParseError> {
    let mut records: Vec<(String, usize, Vec<(i64, usize, usize)>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw);
        if line.trim().is_empty() {
            continue;
        }
        let split = line.find(['=', ':']);
        let (key, value, offset) = match split {
            Some(pos) if line[..pos].chars().any(|c| c.is_alphabetic()) => {
                (Some(&line[..pos]), &line[pos + 1..], pos + 1)
            }
            _ => (None, line, 0),
        };
        let nums = extract_ints(value, lineno, offset);
        match key {
            Some(k) => {
                let norm: String = k
                    .chars()
                    .filter(|c| c.is_alphanumeric())
                    .flat_map(|c| c.to_lowercase())
                    .collect();
                records.push((norm, lineno, nums));
            }
            None => match records.last_mut() {
                Some(rec) => rec.2.extend(nums),
                None => return Err(ParseError::at(lineno, 1, "value without a key")),
            },
        }
    }

    let find = |names: &[&str]| {
        records
            .iter()
            .find(|(k, _, _)| names.iter().any(|n| k == n))
            .or_else(|| {
                records
                    .iter()
                    .find(|(k, _, _)| names.iter().any(|n| n.len() > 2 && k.contains(n)))
            })
    };
    let scalar = |names: &[&str], default: Option<i64>| -> Result<i64, ParseError> {
        match find(names) {
            Some((k, line, nums)) => nums
                .first()
                .map(|v| v.0)
                .ok_or_else(|| ParseError::at(*line, 1, format!("`{k}` has no value"))),
            None => default.ok_or_else(|| ParseError::at(0, 0, format!("missing `{}` record", names[0]))),
        }
    };
    let list = |names: &[&str], len: usize| -> Result<Option<Vec<i64>>, ParseError> {
        match find(names) {
            Some((k, line, nums)) => {
                if nums.len() != len {
                    return Err(ParseError::at(*line, 1, format!("`{k}` needs {len} values, found {}", nums.len())));
                }
                Ok(Some(nums.iter().map(|v| v.0).collect()))
            }
            None => Ok(None),
        }
    };
    let nonneg = |v: i64, what: &str| usize::try_from(v).map_err(|_| ParseError::at(0, 0, format!("negative {what}")));

    let n = nonneg(scalar(&["numberoftasks", "tasks", "n"], None)?, "task count")?;
    let q = nonneg(scalar(&["numberofcranes", "cranes", "q"], Some(2))?, "crane count")?;
    let bays = nonneg(scalar(&["numberofbays", "bays"], Some(10))?, "bay count")?;
    let safety = nonneg(scalar(&["safetymargin", "safety", "delta"], Some(1))?, "safety margin")?;
    let travel = scalar(&["traveltime", "travel"], Some(1))?;
    let processing = list(&["processingtimes", "processing"], n)?
        .ok_or_else(|| ParseError::at(0, 0, "missing `processingtimes` record"))?;
    let locations = list(&["tasklocations", "locations", "bayoftask"], n)?
        .ok_or_else(|| ParseError::at(0, 0, "missing `locations` record"))?;
    let ready = list(&["readytimes", "ready"], q)?.unwrap_or_else(|| vec![0; q]);
    let starts = match list(&["initialpositions", "startbays", "initial"], q)? {
        Some(v) => v,
        None => (0..q).map(|k| (1 + k * bays / q.max(1)) as i64).collect(),
    };
    let ends = list(&["finalpositions", "endbays", "final"], q)?.unwrap_or_else(|| vec![0; q]);

    let pairs = |names: &[&str]| -> Result<Vec<(usize, usize)>, ParseError> {
        let Some((k, line, nums)) = find(names) else {
            return Ok(Vec::new());
        };
        if nums.len() % 2 != 0 {
            return Err(ParseError::at(*line, 1, format!("`{k}` has an odd number of ids")));
        }
        nums.chunks(2)
            .map(|c| {
                let (a, b) = (c[0], c[1]);
                for v in [a, b] {
                    if v.0 < 1 || v.0 as usize > n {
                        return Err(ParseError::at(v.1, v.2, format!("task id {} outside [1, {n}]", v.0)));
                    }
                }
                Ok((a.0 as usize - 1, b.0 as usize - 1))
            })
            .collect()
    };
    let prec = pairs(&["precedences", "precedence"])?;
    let nonsim = pairs(&["nonsimultaneous", "nonsimultaneity", "nonsim"])?;

    let tasks = processing
        .iter()
        .zip(&locations)
        .map(|(&p, &l)| Ok(Task::new(nonneg(l, "bay")?, p)))
        .collect::<Result<Vec<_>, ParseError>>()?;
    let cranes = (0..q)
        .map(|k| {
            Ok(Crane {
                ready: ready[k],
                start_bay: nonneg(starts[k], "bay")?,
                end_bay: nonneg(ends[k], "bay")?,
            })
        })
        .collect::<Result<Vec<_>, ParseError>>()?;
    Ok(Instance::new(tasks, cranes, bays, safety, travel, prec, nonsim)?)
}

fn extract_ints(text: &str, line: usize, offset: usize) -> Vec<(i64, usize, usize)> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let neg = bytes[i] == b'-' && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit();
        if bytes[i].is_ascii_digit() || neg {
            let start = i;
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if let Ok(v) = text[start..i].parse() {
                out.push((v, line, offset + start + 1));
            }
        } else {
            i += 1;
        }
    }
    out
}

/// Pairs listed as extra non-simultaneous in the canonical writer.
pub fn extra_nonsim(inst: &Instance) -> BTreeSet<(usize, usize)> {
    inst.nonsim_pairs()
        .iter()
        .copied()
        .filter(|&(i, j)| !(inst.is_prec(i, j) || inst.is_prec(j, i) || inst.bay(i) == inst.bay(j)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
# two cranes
QCSP 1
4 2 6 1 1
TASK 1 1 10
TASK 2 3 5   # same bay as 3
TASK 3 3 7
TASK 4 6 2
CRANE 1 0 1 0
CRANE 2 4 4 6
PREC 2 3
NSIM 1 4
";

    #[test]
    fn canonical_round_trip() {
        let inst = parse_canonical(SMALL).unwrap();
        assert_eq!(inst.n_tasks(), 4);
        assert_eq!(inst.crane(1).ready, 4);
        assert!(inst.is_prec(1, 2));
        assert!(inst.is_nonsim(0, 3));
        let text = write_canonical(&inst);
        let again = parse_canonical(&text).unwrap();
        assert_eq!(inst, again);
        assert_eq!(write_canonical(&again), text);
    }

    #[test]
    fn rejects_duplicates_and_ranges() {
        let dup = SMALL.replace("TASK 4 6 2", "TASK 3 6 2");
        match parse_canonical(&dup) {
            Err(ParseError::Syntax { line, column, .. }) => assert_eq!((line, column), (7, 6)),
            other => panic!("{other:?}"),
        }
        let far = SMALL.replace("TASK 4 6 2", "TASK 4 7 2");
        assert!(matches!(parse_canonical(&far), Err(ParseError::Syntax { line: 7, column: 8, .. })));
        let junk = SMALL.replace("PREC 2 3", "PREC 2 x");
        assert!(matches!(parse_canonical(&junk), Err(ParseError::Syntax { line: 10, .. })));
        assert!(parse_canonical("QCSP 2\n").is_err());
    }

    #[test]
    fn task_kind_is_optional() {
        let with = SMALL.replace("TASK 1 1 10", "TASK 1 1 10 load-deck");
        let inst = parse_canonical(&with).unwrap();
        assert_eq!(inst.tasks()[0].kind, Some(TaskKind::LoadDeck));
        assert_eq!(inst.tasks()[1].kind, None);
        assert_eq!(parse_canonical(&write_canonical(&inst)).unwrap(), inst);
        let bad = SMALL.replace("TASK 1 1 10", "TASK 1 1 10 deck");
        assert!(matches!(parse_canonical(&bad), Err(ParseError::Syntax { line: 4, column: 13, .. })));
    }

    #[test]
    fn kim_layout_defaults() {
        let text = "\
10 2
1 30  2 40  3 20  4 50  5 10
6 25  7 35  8 15  9 45  10 20
1 6
2  1 2  4 5
";
        let inst = parse_kim(text).unwrap();
        assert_eq!((inst.n_tasks(), inst.n_cranes(), inst.bays()), (10, 2, 10));
        assert_eq!(inst.safety(), 1);
        assert_eq!(inst.travel_unit(), 1);
        assert!(inst.cranes().iter().all(|c| c.ready == 0 && c.end_bay == 0));
        assert_eq!(inst.prec_pairs(), &[(0, 1), (3, 4)]);

        let with_b = "3 1 12\n1 5 2 5 3 5\n1\n0\n";
        assert_eq!(parse_kim(with_b).unwrap().bays(), 12);
    }

    #[test]
    fn meisel_layout() {
        let text = "\
Number of tasks = 3
Number of cranes = 2
Number of bays: 10
Safety margin: 1
Travel time: 1
Processing times: 100, 50, 80
Task locations: 2 2 9
Initial positions: 1 10
Precedences: (1,2)
";
        let inst = parse_meisel(text).unwrap();
        assert_eq!((inst.n_tasks(), inst.n_cranes(), inst.bays()), (3, 2, 10));
        assert_eq!(inst.prec_pairs(), &[(0, 1)]);
        assert_eq!(inst.crane(1).start_bay, 10);
        assert!(parse_meisel("Number of tasks = 2\nProcessing times: 1 2\n").is_err());
    }
}
