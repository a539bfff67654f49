//! Exact m-multicover search over external lines.
//!
//! Depth-first with propagation: a point that already has m chosen lines
//! excludes its remaining undecided lines, and a point whose chosen plus
//! undecided lines number exactly m forces all of them in. Branching is on
//! the uncovered point with the fewest undecided lines (lowest index on
//! ties); branch i takes the i-th candidate line and excludes the earlier ones.
//!
//! The top of the tree is expanded into a fixed list of tasks independent of
//! the thread count, so results and node counts do not depend on scheduling
//! unless a wall-clock budget cuts the run short.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::{cover_degree_profile, CoverCandidate};
use crate::geometry::GeometryBundle;
use crate::par;

const TASK_TARGET: usize = 64;
const DEFAULT_BUDGET_NODES: u64 = 2_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("m must satisfy 0 < m < q (got m = {m}, q = {q})")]
    BadM { m: usize, q: u32 },
    #[error("forced line position {0} is out of range")]
    BadForced(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Exhaustive,
    Budgeted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub mode: SearchMode,
    /// Node budget; budgeted mode falls back to a default when unset.
    pub budget_nodes: Option<u64>,
    pub budget_seconds: Option<f64>,
    /// Permutes the order in which candidate lines are tried.
    pub seed: u64,
    /// Report one representative per {R, R^sigma} orbit, also folding in complements when m = q/2.
    pub dedup_sigma: bool,
    /// External-line positions forced into / out of every solution.
    pub forced_in: Vec<usize>,
    pub forced_out: Vec<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            mode: SearchMode::Exhaustive,
            budget_nodes: None,
            budget_seconds: None,
            seed: 0,
            dedup_sigma: false,
            forced_in: Vec::new(),
            forced_out: Vec::new(),
        }
    }
}

impl SearchConfig {
    pub fn exhaustive() -> Self {
        Self::default()
    }

    pub fn budgeted(nodes: u64) -> Self {
        Self {
            mode: SearchMode::Budgeted,
            budget_nodes: Some(nodes),
            ..Self::default()
        }
    }

    fn node_budget(&self) -> Option<u64> {
        match self.mode {
            SearchMode::Exhaustive => self.budget_nodes,
            SearchMode::Budgeted => Some(self.budget_nodes.unwrap_or(DEFAULT_BUDGET_NODES)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub q: u32,
    pub m: usize,
    pub mode: SearchMode,
    pub solutions: Vec<CoverCandidate>,
    /// Solutions found before deduplication.
    pub raw_solutions: usize,
    pub nodes: u64,
    pub elapsed: Duration,
    /// Set only in exhaustive mode when the whole tree was closed.
    pub exhausted: bool,
    /// Whether every branch was explored, in either mode.
    pub tree_closed: bool,
    /// Whether every solution passed the independent degree recount.
    pub all_verified: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Status {
    Open,
    In,
    Out,
}

struct Problem {
    m: u32,
    line_pts: Vec<Vec<u32>>,
    pt_lines: Vec<Vec<u32>>,
    // position of each line in the seeded trial order
    rank: Vec<u32>,
}

#[derive(Clone)]
struct State {
    status: Vec<Status>,
    deg: Vec<u32>,
    avail: Vec<u32>,
    trail: Vec<usize>,
}

struct Limits<'a> {
    nodes: Option<u64>,
    deadline: Option<Instant>,
    timed_out: &'a AtomicBool,
}

struct Run {
    nodes: u64,
    solutions: Vec<Vec<usize>>,
    closed: bool,
}

impl Problem {
    fn new(b: &GeometryBundle, m: usize, seed: u64) -> Self {
        let n = b.num_ext_lines();
        let line_pts: Vec<Vec<u32>> = (0..n)
            .map(|l| {
                b.ext_line_points(l)
                    .iter()
                    .map(|&p| b.ext_point_pos(p).expect("external") as u32)
                    .collect()
            })
            .collect();
        let mut pt_lines = vec![Vec::new(); b.num_ext_points()];
        for (l, pts) in line_pts.iter().enumerate() {
            for &p in pts {
                pt_lines[p as usize].push(l as u32);
            }
        }
        let mut order: Vec<u32> = (0..n as u32).collect();
        if seed != 0 {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        let mut rank = vec![0; n];
        for (i, &l) in order.iter().enumerate() {
            rank[l as usize] = i as u32;
        }
        Self {
            m: m as u32,
            line_pts,
            pt_lines,
            rank,
        }
    }

    fn fresh(&self) -> State {
        State {
            status: vec![Status::Open; self.line_pts.len()],
            deg: vec![0; self.pt_lines.len()],
            avail: self.pt_lines.iter().map(|l| l.len() as u32).collect(),
            trail: Vec::new(),
        }
    }

    /// Sets `line` and propagates; false on conflict. Changes stay on the trail.
    fn assign(&self, st: &mut State, line: usize, value: Status) -> bool {
        let mut queue = vec![(line, value)];
        while let Some((l, val)) = queue.pop() {
            match st.status[l] {
                Status::Open => {}
                s if s == val => continue,
                _ => return false,
            }
            st.status[l] = val;
            st.trail.push(l);
            for &p in &self.line_pts[l] {
                st.avail[p as usize] -= 1;
                if val == Status::In {
                    st.deg[p as usize] += 1;
                }
            }
            for &p in &self.line_pts[l] {
                let p = p as usize;
                let (d, a) = (st.deg[p], st.avail[p]);
                if d > self.m || d + a < self.m {
                    return false;
                }
                if a > 0 && (d == self.m || d + a == self.m) {
                    let forced = if d == self.m { Status::Out } else { Status::In };
                    for &o in &self.pt_lines[p] {
                        if st.status[o as usize] == Status::Open {
                            queue.push((o as usize, forced));
                        }
                    }
                }
            }
        }
        true
    }

    fn undo(&self, st: &mut State, mark: usize) {
        while st.trail.len() > mark {
            let l = st.trail.pop().unwrap();
            let was_in = st.status[l] == Status::In;
            st.status[l] = Status::Open;
            for &p in &self.line_pts[l] {
                st.avail[p as usize] += 1;
                if was_in {
                    st.deg[p as usize] -= 1;
                }
            }
        }
    }

    /// Candidate lines at the most constrained uncovered point, or None when all points are covered.
    fn branch_lines(&self, st: &State) -> Option<Vec<usize>> {
        let mut best: Option<(u32, usize)> = None;
        for p in 0..st.deg.len() {
            if st.deg[p] < self.m && best.is_none_or(|(a, _)| st.avail[p] < a) {
                best = Some((st.avail[p], p));
            }
        }
        let (_, p) = best?;
        let mut cands: Vec<usize> = self.pt_lines[p]
            .iter()
            .map(|&l| l as usize)
            .filter(|&l| st.status[l] == Status::Open)
            .collect();
        cands.sort_by_key(|&l| self.rank[l]);
        Some(cands)
    }

    fn solution(st: &State) -> Vec<usize> {
        (0..st.status.len())
            .filter(|&l| st.status[l] == Status::In)
            .collect()
    }

    /// Applies branch `i` at a node: exclude candidates before i, include candidate i.
    fn take_branch(&self, st: &mut State, cands: &[usize], i: usize) -> bool {
        cands[..i].iter().all(|&l| self.assign(st, l, Status::Out))
            && self.assign(st, cands[i], Status::In)
    }

    fn dfs(&self, st: &mut State, limits: &Limits, run: &mut Run) {
        if !run.closed {
            return;
        }
        let Some(cands) = self.branch_lines(st) else {
            run.solutions.push(Self::solution(st));
            return;
        };
        for i in 0..cands.len() {
            if limits.nodes.is_some_and(|n| run.nodes >= n)
                || limits.timed_out.load(Ordering::Relaxed)
            {
                run.closed = false;
                return;
            }
            run.nodes += 1;
            if run.nodes % 1024 == 0 && limits.deadline.is_some_and(|d| Instant::now() >= d) {
                limits.timed_out.store(true, Ordering::Relaxed);
            }
            let mark = st.trail.len();
            if self.take_branch(st, &cands, i) {
                self.dfs(st, limits, run);
            }
            self.undo(st, mark);
            if !run.closed {
                return;
            }
        }
    }
}

/// Splits the top of the tree into branch paths (each a list of branch indices).
fn split_tasks(pr: &Problem, root: &State) -> (Vec<Vec<usize>>, Vec<Vec<usize>>, u64) {
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    let mut solved = Vec::new();
    let mut nodes = 0;
    while frontier.len() < TASK_TARGET {
        let mut next = Vec::new();
        let mut expanded = false;
        for path in &frontier {
            let mut st = root.clone();
            replay(pr, &mut st, path);
            match pr.branch_lines(&st) {
                None => solved.push(Problem::solution(&st)),
                Some(cands) => {
                    expanded = true;
                    for i in 0..cands.len() {
                        nodes += 1;
                        let mark = st.trail.len();
                        if pr.take_branch(&mut st, &cands, i) {
                            let mut p = path.clone();
                            p.push(i);
                            next.push(p);
                        }
                        pr.undo(&mut st, mark);
                    }
                }
            }
        }
        frontier = next;
        if !expanded || frontier.is_empty() {
            break;
        }
    }
    (frontier, solved, nodes)
}

fn replay(pr: &Problem, st: &mut State, path: &[usize]) {
    for &i in path {
        let cands = pr.branch_lines(st).expect("path was expanded");
        let ok = pr.take_branch(st, &cands, i);
        debug_assert!(ok);
    }
}

/// Enumerates relative m-covers under `config`.
pub fn search_covers(
    b: &GeometryBundle,
    m: usize,
    config: &SearchConfig,
) -> Result<SearchOutcome, SearchError> {
    let q = b.q();
    if m == 0 || m >= q as usize {
        return Err(SearchError::BadM { m, q });
    }
    let n = b.num_ext_lines();
    if let Some(&bad) = config
        .forced_in
        .iter()
        .chain(&config.forced_out)
        .find(|&&l| l >= n)
    {
        return Err(SearchError::BadForced(bad));
    }
    let start = Instant::now();
    let pr = Problem::new(b, m, config.seed);
    let mut root = pr.fresh();
    let consistent = config
        .forced_in
        .iter()
        .all(|&l| pr.assign(&mut root, l, Status::In))
        && config
            .forced_out
            .iter()
            .all(|&l| pr.assign(&mut root, l, Status::Out));

    let timed_out = AtomicBool::new(false);
    let deadline = config
        .budget_seconds
        .map(|s| start + Duration::from_secs_f64(s.max(0.0)));
    let mut raw: Vec<Vec<usize>> = Vec::new();
    let mut nodes = 0u64;
    let mut closed = true;
    if consistent {
        let (tasks, solved, split_nodes) = split_tasks(&pr, &root);
        raw.extend(solved);
        nodes += split_nodes;
        let budget = config.node_budget();
        let share = budget.map(|b| b.saturating_sub(split_nodes) / tasks.len().max(1) as u64);
        if budget.is_some_and(|b| split_nodes >= b) && !tasks.is_empty() {
            closed = false;
        } else {
            let runs = par::map_slice(&tasks, |path| {
                let mut st = root.clone();
                replay(&pr, &mut st, path);
                let limits = Limits {
                    nodes: share,
                    deadline,
                    timed_out: &timed_out,
                };
                let mut run = Run {
                    nodes: 0,
                    solutions: Vec::new(),
                    closed: true,
                };
                pr.dfs(&mut st, &limits, &mut run);
                run
            });
            for r in runs {
                nodes += r.nodes;
                closed &= r.closed;
                raw.extend(r.solutions);
            }
        }
    }

    let mut found: Vec<CoverCandidate> = raw
        .iter()
        .map(|s| CoverCandidate::from_positions(n, s.iter().copied()))
        .collect();
    found.sort();
    found.dedup();
    let raw_solutions = found.len();
    let all_verified = found
        .iter()
        .all(|c| cover_degree_profile(b, c).m == Some(m));
    if config.dedup_sigma {
        found = dedup_orbits(b, m, found);
    }
    Ok(SearchOutcome {
        q,
        m,
        mode: config.mode,
        solutions: found,
        raw_solutions,
        nodes,
        elapsed: start.elapsed(),
        exhausted: config.mode == SearchMode::Exhaustive && closed,
        tree_closed: closed,
        all_verified,
    })
}

/// Keeps the least member of each orbit under sigma (and complement when it preserves m).
fn dedup_orbits(b: &GeometryBundle, m: usize, sols: Vec<CoverCandidate>) -> Vec<CoverCandidate> {
    let with_complement = 2 * m == b.q() as usize;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for s in sols {
        let mut orbit = vec![s.clone(), s.sigma(b)];
        if with_complement {
            orbit.push(s.complement());
            orbit.push(s.sigma(b).complement());
        }
        let key = orbit.into_iter().min().unwrap();
        if seen.insert(key.positions()) {
            out.push(key);
        }
    }
    out.sort();
    out
}
