//! Generalised-quadrangle verification and spread-level facts about external
//! lines: subtended spreads, antipodes, spread intersections, and the counts
//! of lines concurrent with pairs of external lines.
//!
//! Public functions that take "a line" use global line indices and reject
//! non-external input; the bulk checks iterate over external-line positions.

use std::collections::{BTreeMap, HashMap};

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use crate::geometry::GeometryBundle;
use crate::par;
use crate::verdict::Verdict;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IncidenceError {
    #[error("line {0} is not an external line")]
    NotExternal(usize),
    #[error("external line {line} subtends a spread of size {size}, expected {expected}")]
    BadSpread {
        line: usize,
        size: usize,
        expected: usize,
    },
    #[error("spread subtended by external line {line} is subtended by {count} external lines, expected 2")]
    NotDoublySubtended { line: usize, count: usize },
}

/// A point-line incidence structure with a declared order (s,t).
#[derive(Debug, Clone)]
pub struct Quadrangle {
    pub s: usize,
    pub t: usize,
    line_points: Vec<FixedBitSet>,
    point_lines: Vec<FixedBitSet>,
}

impl Quadrangle {
    /// Builds from per-line point lists over `0..num_points`.
    pub fn new(num_points: usize, lines: &[Vec<usize>], s: usize, t: usize) -> Self {
        let mut point_lines = vec![FixedBitSet::with_capacity(lines.len()); num_points];
        let line_points = lines
            .iter()
            .enumerate()
            .map(|(l, pts)| {
                let mut bits = FixedBitSet::with_capacity(num_points);
                for &p in pts {
                    bits.insert(p);
                    point_lines[p].insert(l);
                }
                bits
            })
            .collect();
        Self {
            s,
            t,
            line_points,
            point_lines,
        }
    }

    /// H(3,q^2) as an incidence structure of order (q^2, q).
    pub fn hermitian(b: &GeometryBundle) -> Self {
        let q = b.q() as usize;
        let lines: Vec<Vec<usize>> = (0..b.num_lines())
            .map(|l| b.line_points(l).to_vec())
            .collect();
        Self::new(b.num_points(), &lines, q * q, q)
    }

    /// W(3,q) restricted from the bundle, reindexed, of order (q, q).
    pub fn symplectic(b: &GeometryBundle) -> Self {
        let q = b.q() as usize;
        let reindex: HashMap<usize, usize> = b
            .w_points()
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, i))
            .collect();
        let lines: Vec<Vec<usize>> = b
            .w_lines()
            .iter()
            .map(|&l| {
                b.line_points(l)
                    .iter()
                    .filter_map(|p| reindex.get(p).copied())
                    .collect()
            })
            .collect();
        Self::new(b.w_points().len(), &lines, q, q)
    }

    pub fn num_points(&self) -> usize {
        self.point_lines.len()
    }

    pub fn num_lines(&self) -> usize {
        self.line_points.len()
    }

    /// With the declared order replaced.
    pub fn with_order(mut self, s: usize, t: usize) -> Self {
        self.s = s;
        self.t = t;
        self
    }
}

/// Checks the four generalised-quadrangle axioms exhaustively.
pub fn verify_gq(g: &Quadrangle) -> Verdict {
    let mut v = Verdict::new();
    v.fact("points", g.num_points());
    v.fact("lines", g.num_lines());
    v.fact("order", json!([g.s, g.t]));

    let bad_line = (0..g.num_lines()).find(|&l| g.line_points[l].count_ones(..) != g.s + 1);
    v.check_first(
        "every line has s+1 points",
        bad_line.map(|l| json!({"line": l, "points": g.line_points[l].count_ones(..)})),
    );
    let bad_point = (0..g.num_points()).find(|&p| g.point_lines[p].count_ones(..) != g.t + 1);
    v.check_first(
        "every point is on t+1 lines",
        bad_point.map(|p| json!({"point": p, "lines": g.point_lines[p].count_ones(..)})),
    );

    let n = g.num_lines();
    let shared = par::find_first(n, |a| {
        (a + 1..n).find_map(|b| {
            let c = g.line_points[a].intersection_count(&g.line_points[b]);
            (c > 1).then(|| json!({"lines": [a, b], "common_points": c}))
        })
    });
    v.check_first("two points share at most one line", shared.map(|(_, w)| w));

    let collinear: Vec<FixedBitSet> = par::map_range(g.num_points(), |p| {
        let mut bits = FixedBitSet::with_capacity(g.num_points());
        for l in g.point_lines[p].ones() {
            bits.union_with(&g.line_points[l]);
        }
        bits
    });
    let axiom = par::find_first(g.num_points(), |p| {
        (0..n).find_map(|l| {
            if g.line_points[l].contains(p) {
                return None;
            }
            let c = g.line_points[l].intersection_count(&collinear[p]);
            (c != 1).then(|| json!({"point": p, "line": l, "collinear_points_on_line": c}))
        })
    });
    v.check_first(
        "unique collinear point on each non-incident line",
        axiom.map(|(_, w)| w),
    );
    v
}

/// A set of W(3,q) lines (global line indices, sorted).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Spread(pub Vec<usize>);

impl Spread {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn intersection_size(&self, other: &Spread) -> usize {
        let (mut i, mut j, mut c) = (0, 0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    c += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        c
    }

    /// Whether every W point lies on exactly one member.
    pub fn partitions_w(&self, b: &GeometryBundle) -> bool {
        let mut hits = vec![0u32; b.num_points()];
        for &l in &self.0 {
            for &p in b.line_points(l) {
                hits[p] += 1;
            }
        }
        b.w_points().iter().all(|&p| hits[p] == 1)
    }
}

fn ext_pos(b: &GeometryBundle, line: usize) -> Result<usize, IncidenceError> {
    (line < b.num_lines())
        .then(|| b.ext_line_pos(line))
        .flatten()
        .ok_or(IncidenceError::NotExternal(line))
}

/// Spread subtended by the external line at position `pos`: the W lines concurrent with it.
pub(crate) fn spread_at(b: &GeometryBundle, pos: usize) -> Spread {
    let line = b.ext_lines()[pos];
    let members = b
        .w_lines()
        .iter()
        .copied()
        .filter(|&w| b.concurrent(line, w))
        .collect();
    Spread(members)
}

/// Lines concurrent with `line` that meet W(3,q) in q+1 points.
pub fn subtended_spread(b: &GeometryBundle, line: usize) -> Result<Spread, IncidenceError> {
    let pos = ext_pos(b, line)?;
    let s = spread_at(b, pos);
    let q = b.q() as usize;
    if s.len() != q * q + 1 {
        return Err(IncidenceError::BadSpread {
            line,
            size: s.len(),
            expected: q * q + 1,
        });
    }
    Ok(s)
}

/// Antipode map on external-line positions, computed by matching subtended spreads.
pub fn antipodes_by_spread(b: &GeometryBundle) -> Result<Vec<usize>, IncidenceError> {
    let n = b.num_ext_lines();
    let q = b.q() as usize;
    let spreads = par::map_range(n, |pos| spread_at(b, pos));
    let mut groups: BTreeMap<&Spread, Vec<usize>> = BTreeMap::new();
    for (pos, s) in spreads.iter().enumerate() {
        if s.len() != q * q + 1 {
            return Err(IncidenceError::BadSpread {
                line: b.ext_lines()[pos],
                size: s.len(),
                expected: q * q + 1,
            });
        }
        groups.entry(s).or_default().push(pos);
    }
    let mut out = vec![usize::MAX; n];
    for members in groups.values() {
        if members.len() != 2 {
            return Err(IncidenceError::NotDoublySubtended {
                line: b.ext_lines()[members[0]],
                count: members.len(),
            });
        }
        out[members[0]] = members[1];
        out[members[1]] = members[0];
    }
    Ok(out)
}

/// The other external line subtending the same spread as `line`.
pub fn antipode(b: &GeometryBundle, line: usize) -> Result<usize, IncidenceError> {
    let pos = ext_pos(b, line)?;
    let target = spread_at(b, pos);
    let others: Vec<usize> = (0..b.num_ext_lines())
        .filter(|&o| o != pos && spread_at(b, o) == target)
        .collect();
    match others.as_slice() {
        [o] => Ok(b.ext_lines()[*o]),
        _ => Err(IncidenceError::NotDoublySubtended {
            line,
            count: others.len() + 1,
        }),
    }
}

/// External lines concurrent with `line`.
pub fn perp_external(b: &GeometryBundle, line: usize) -> Result<Vec<usize>, IncidenceError> {
    let pos = ext_pos(b, line)?;
    Ok(b.ext_concurrent(pos)
        .ones()
        .map(|o| b.ext_lines()[o])
        .collect())
}

/// External lines neither equal to nor concurrent with `line` or its antipode.
pub fn perp2(b: &GeometryBundle, line: usize) -> Result<Vec<usize>, IncidenceError> {
    let pos = ext_pos(b, line)?;
    Ok(perp2_at(b, pos)
        .into_iter()
        .map(|o| b.ext_lines()[o])
        .collect())
}

pub(crate) fn perp2_at(b: &GeometryBundle, pos: usize) -> Vec<usize> {
    let bar = b.antipode(pos);
    (0..b.num_ext_lines())
        .filter(|&o| {
            o != pos
                && o != bar
                && !b.ext_lines_concurrent(pos, o)
                && !b.ext_lines_concurrent(bar, o)
        })
        .collect()
}

/// Number of external lines concurrent with both `l` and `n`.
pub fn count_common_external(
    b: &GeometryBundle,
    l: usize,
    n: usize,
) -> Result<usize, IncidenceError> {
    let (a, c) = (ext_pos(b, l)?, ext_pos(b, n)?);
    Ok(b.ext_concurrent(a).intersection_count(b.ext_concurrent(c)))
}

/// Sampling policy for pairwise checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    /// Number of random pairs drawn when a check is not run exhaustively.
    pub budget: usize,
    pub seed: u64,
    /// Largest q checked exhaustively.
    pub exhaustive_up_to_q: u32,
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            budget: 10_000,
            seed: 0x5eed,
            exhaustive_up_to_q: 3,
        }
    }
}

impl Sampling {
    pub fn exhaustive(&self, q: u32, total: usize) -> bool {
        q <= self.exhaustive_up_to_q || total <= self.budget
    }

    /// Ordered pairs `(a, b)` with `a != b` from `0..n`: all of them, or a seeded sample.
    pub fn distinct_pairs(&self, q: u32, n: usize) -> Vec<(usize, usize)> {
        if self.exhaustive(q, n * n.saturating_sub(1)) {
            return (0..n)
                .flat_map(|a| (0..n).filter(move |&c| c != a).map(move |c| (a, c)))
                .collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.budget)
            .map(|_| loop {
                let (a, c) = (rng.gen_range(0..n), rng.gen_range(0..n));
                if a != c {
                    break (a, c);
                }
            })
            .collect()
    }

    /// Indices from `0..n`: all of them, or a seeded sample of `budget`.
    pub fn indices(&self, q: u32, n: usize) -> Vec<usize> {
        if self.exhaustive(q, n) {
            return (0..n).collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x9e37_79b9);
        (0..self.budget).map(|_| rng.gen_range(0..n)).collect()
    }

    pub fn describe(&self, q: u32, total: usize) -> serde_json::Value {
        if self.exhaustive(q, total) {
            json!({"mode": "exhaustive", "checked": total})
        } else {
            json!({"mode": "sampled", "checked": self.budget, "population": total, "seed": self.seed})
        }
    }
}

/// Antipodes two ways (spread matching and σ), plus their basic properties.
pub fn check_antipodes(b: &GeometryBundle) -> Verdict {
    let mut v = Verdict::new();
    let n = b.num_ext_lines();
    match antipodes_by_spread(b) {
        Ok(by_spread) => {
            let mismatch = (0..n).find(|&p| by_spread[p] != b.sigma_ext(p));
            v.check_first(
                "antipode by spread matching equals sigma",
                mismatch.map(|p| json!({"position": p, "by_spread": by_spread[p], "by_sigma": b.sigma_ext(p)})),
            );
            let stored = (0..n).find(|&p| by_spread[p] != b.antipode(p));
            v.check_first(
                "stored antipode table agrees",
                stored.map(|p| json!({"position": p})),
            );
        }
        Err(e) => v.check("every subtended spread is doubly subtended", false, || {
            json!(e.to_string())
        }),
    }
    let not_inv = (0..n).find(|&p| b.antipode(b.antipode(p)) != p || b.antipode(p) == p);
    v.check_first(
        "antipode is a fixed-point-free involution",
        not_inv.map(|p| json!({"position": p})),
    );
    let conc = (0..n).find(|&p| b.ext_lines_concurrent(p, b.antipode(p)));
    v.check_first(
        "antipodes are never concurrent",
        conc.map(|p| json!({"position": p})),
    );
    v
}

/// Subtended spreads: size q^2+1 and each partitions the W points.
pub fn check_spreads(b: &GeometryBundle) -> Verdict {
    let mut v = Verdict::new();
    let q = b.q() as usize;
    let spreads = par::map_range(b.num_ext_lines(), |pos| spread_at(b, pos));
    let bad_size = spreads.iter().position(|s| s.len() != q * q + 1);
    v.check_first(
        "subtended spread has q^2+1 lines",
        bad_size.map(|p| json!({"position": p, "size": spreads[p].len()})),
    );
    let bad_part = par::find_first(spreads.len(), |p| {
        (!spreads[p].partitions_w(b)).then_some(())
    });
    v.check_first(
        "subtended spread partitions W points",
        bad_part.map(|(p, _)| json!({"position": p})),
    );
    let not_double = (0..spreads.len()).find(|&p| spreads[p] != spreads[b.sigma_ext(p)]);
    v.check_first(
        "line and its sigma-image subtend the same spread",
        not_double.map(|p| json!({"position": p})),
    );
    v
}

/// Spread intersection sizes with the exact case split.
pub fn spread_intersection_profile(b: &GeometryBundle, sampling: &Sampling) -> Verdict {
    let mut v = Verdict::new();
    let q = b.q() as usize;
    let n = b.num_ext_lines();
    let spreads = par::map_range(n, |pos| spread_at(b, pos));
    let pairs: Vec<(usize, usize)> = if sampling.exhaustive(b.q(), n * n) {
        (0..n).flat_map(|a| (0..n).map(move |c| (a, c))).collect()
    } else {
        sampling.distinct_pairs(b.q(), n)
    };
    let results = par::map_slice(&pairs, |&(l, m)| {
        let size = spreads[l].intersection_size(&spreads[m]);
        let bar = b.antipode(l);
        let expected = if m == l || m == bar {
            q * q + 1
        } else if b.ext_lines_concurrent(l, m) || b.ext_lines_concurrent(bar, m) {
            1
        } else {
            q + 1
        };
        (size, expected)
    });
    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for &(size, _) in &results {
        *histogram.entry(size).or_default() += 1;
    }
    let allowed = [q * q + 1, 1, q + 1];
    let bad_value = results.iter().position(|(s, _)| !allowed.contains(s));
    v.check_first(
        "sizes lie in {q^2+1, 1, q+1}",
        bad_value.map(|i| json!({"pair": pairs[i], "size": results[i].0})),
    );
    let bad_case = results.iter().position(|(s, e)| s != e);
    v.check_first(
        "size matches the concurrency case",
        bad_case.map(|i| json!({"pair": pairs[i], "size": results[i].0, "expected": results[i].1})),
    );
    v.fact(
        "histogram",
        json!(histogram
            .iter()
            .map(|(k, c)| json!([k, c]))
            .collect::<Vec<_>>()),
    );
    v.fact("coverage", sampling.describe(b.q(), pairs.len()));
    v
}

/// A line meeting external `l` is concurrent with its antipode iff it meets W(3,q).
pub fn check_antipode_concurrency(b: &GeometryBundle, sampling: &Sampling) -> Verdict {
    let mut v = Verdict::new();
    let n = b.num_ext_lines();
    // all (external l, line k concurrent with l)
    let mut pairs = Vec::new();
    for pos in 0..n {
        let l = b.ext_lines()[pos];
        for &p in b.line_points(l) {
            for &k in b.point_lines(p) {
                if k != l {
                    pairs.push((pos, k));
                }
            }
        }
    }
    let total = pairs.len();
    if !sampling.exhaustive(b.q(), total) {
        let idx = sampling.indices(b.q(), total);
        pairs = idx.into_iter().map(|i| pairs[i]).collect();
    }
    let failure = par::find_first(pairs.len(), |i| {
        let (pos, k) = pairs[i];
        let bar_line = b.ext_lines()[b.antipode(pos)];
        let lhs = b.concurrent(k, bar_line);
        let rhs = b.meets_w(k);
        (lhs != rhs).then(|| json!({"external_line": b.ext_lines()[pos], "k": k, "concurrent_with_antipode": lhs, "meets_w": rhs}))
    });
    v.check_first(
        "concurrent with antipode iff meets W",
        failure.map(|(_, w)| w),
    );
    let spread_fail = (0..n).find_map(|pos| {
        let bar_line = b.ext_lines()[b.antipode(pos)];
        spread_at(b, pos)
            .0
            .into_iter()
            .find(|&k| !b.concurrent(k, bar_line))
            .map(|k| json!({"position": pos, "k": k}))
    });
    v.check_first("subtended spread meets both line and antipode", spread_fail);
    v.fact("coverage", sampling.describe(b.q(), total));
    v
}

/// Which case of the common-neighbour count a pair of distinct external lines falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
pub enum PairCase {
    Antipode,
    Concurrent,
    ConcurrentWithAntipode,
    Neither,
}

impl PairCase {
    pub fn classify(b: &GeometryBundle, l: usize, n: usize) -> Self {
        let bar = b.antipode(l);
        if n == bar {
            PairCase::Antipode
        } else if b.ext_lines_concurrent(l, n) {
            PairCase::Concurrent
        } else if b.ext_lines_concurrent(bar, n) {
            PairCase::ConcurrentWithAntipode
        } else {
            PairCase::Neither
        }
    }

    pub fn expected_common(self, q: usize) -> usize {
        match self {
            PairCase::Antipode => 0,
            PairCase::Concurrent => q - 2,
            PairCase::ConcurrentWithAntipode => q * q,
            PairCase::Neither => q * q - q,
        }
    }
}

/// Common external neighbours of pairs of distinct external lines, by case.
pub fn check_common_neighbours(b: &GeometryBundle, sampling: &Sampling) -> Verdict {
    let mut v = Verdict::new();
    let q = b.q() as usize;
    let n = b.num_ext_lines();
    let pairs = sampling.distinct_pairs(b.q(), n);
    let results = par::map_slice(&pairs, |&(l, m)| {
        let case = PairCase::classify(b, l, m);
        let count = b.ext_concurrent(l).intersection_count(b.ext_concurrent(m));
        (case, count)
    });
    let bad = results
        .iter()
        .position(|&(case, count)| count != case.expected_common(q));
    v.check_first(
        "common external neighbours match the case count",
        bad.map(|i| {
            json!({"pair": pairs[i], "case": results[i].0, "count": results[i].1, "expected": results[i].0.expected_common(q)})
        }),
    );
    let mut observed: BTreeMap<PairCase, std::collections::BTreeSet<usize>> = BTreeMap::new();
    for &(case, count) in &results {
        observed.entry(case).or_default().insert(count);
    }
    v.fact(
        "observed",
        json!(observed
            .iter()
            .map(|(c, s)| json!({"case": c, "counts": s}))
            .collect::<Vec<_>>()),
    );
    let kq = (q - 1) * (q * q + 1);
    let bad_perp = (0..n).find(|&p| b.ext_concurrent(p).count_ones(..) != kq);
    v.check_first(
        "each external line meets (q-1)(q^2+1) external lines",
        bad_perp.map(|p| json!({"position": p, "size": b.ext_concurrent(p).count_ones(..)})),
    );
    let k2 = q * (q - 2) * (q * q + 1);
    let bad_perp2 = (0..n).find(|&p| perp2_at(b, p).len() != k2);
    v.check_first(
        "perp2 has q(q-2)(q^2+1) lines",
        bad_perp2.map(|p| json!({"position": p})),
    );
    v.check(
        "valency identity",
        1 + 2 * kq + k2 + 1 == n,
        || json!({"sum": 1 + 2 * kq + k2 + 1, "N": n}),
    );
    v.fact("coverage", sampling.describe(b.q(), n * (n - 1)));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundle(q: u32) -> GeometryBundle {
        GeometryBundle::build(q).unwrap()
    }

    #[test]
    fn gq_axioms_small() {
        for q in [2u32, 3] {
            let b = bundle(q);
            assert!(verify_gq(&Quadrangle::hermitian(&b)).pass(), "H q={q}");
            assert!(verify_gq(&Quadrangle::symplectic(&b)).pass(), "W q={q}");
        }
    }

    #[test]
    fn wrong_order_is_reported() {
        let b = bundle(2);
        let v = verify_gq(&Quadrangle::hermitian(&b).with_order(2, 2));
        assert!(!v.pass());
        let f = v.finding("every line has s+1 points").unwrap();
        assert!(!f.pass && f.witness.is_some());
    }

    #[test]
    fn triangle_free_violation_detected() {
        // a 3-cycle of lines: not a GQ
        let g = Quadrangle::new(3, &[vec![0, 1], vec![1, 2], vec![0, 2]], 1, 1);
        let v = verify_gq(&g);
        assert!(
            !v.finding("unique collinear point on each non-incident line")
                .unwrap()
                .pass
        );
    }

    #[test]
    fn spreads_and_antipodes_q2() {
        let b = bundle(2);
        let w: std::collections::BTreeSet<usize> = b.w_points().iter().copied().collect();
        for &l in b.ext_lines() {
            let s = subtended_spread(&b, l).unwrap();
            assert_eq!(s.len(), 5);
            let covered: Vec<usize> =
                s.0.iter()
                    .flat_map(|&k| b.line_points(k).iter().copied().filter(|p| w.contains(p)))
                    .collect();
            assert_eq!(covered.len(), 15);
            assert_eq!(
                covered
                    .iter()
                    .collect::<std::collections::BTreeSet<_>>()
                    .len(),
                15
            );
            let bar = antipode(&b, l).unwrap();
            assert_eq!(antipode(&b, bar).unwrap(), l);
            assert_eq!(subtended_spread(&b, bar).unwrap(), s);
            assert_eq!(bar, b.sigma_line(l));
            assert!(!b.concurrent(l, bar));
        }
        assert!(check_spreads(&b).pass());
        assert!(check_antipodes(&b).pass());
    }

    #[test]
    fn not_external_errors() {
        let b = bundle(2);
        let w = b.w_lines()[0];
        assert_eq!(
            subtended_spread(&b, w).unwrap_err(),
            IncidenceError::NotExternal(w)
        );
        assert_eq!(antipode(&b, w).unwrap_err(), IncidenceError::NotExternal(w));
        assert!(perp_external(&b, 10_000).is_err());
    }

    #[test]
    fn spread_profile_q2() {
        let b = bundle(2);
        let v = spread_intersection_profile(&b, &Sampling::default());
        assert!(v.pass(), "{v:?}");
        // exactly the 24 ordered pairs {l, l-bar} (12 diagonal + 12 antipodal) have size 5
        let n = b.num_ext_lines();
        let spreads: Vec<Spread> = (0..n).map(|p| spread_at(&b, p)).collect();
        let full = (0..n)
            .flat_map(|a| (0..n).map(move |c| (a, c)))
            .filter(|&(a, c)| spreads[a].intersection_size(&spreads[c]) == 5)
            .count();
        assert_eq!(full, 24);
    }

    #[test]
    fn spread_profile_q3_values() {
        let b = bundle(3);
        let v = spread_intersection_profile(&b, &Sampling::default());
        assert!(v.pass());
        let hist = v.facts["histogram"].as_array().unwrap();
        let sizes: Vec<u64> = hist.iter().map(|e| e[0].as_u64().unwrap()).collect();
        assert!(sizes.iter().all(|s| [10, 1, 4].contains(s)));
    }

    #[test]
    fn perp_sizes() {
        for (q, perp, p2) in [(2u32, 5usize, 0usize), (3, 20, 30)] {
            let b = bundle(q);
            for &l in b.ext_lines() {
                assert_eq!(perp_external(&b, l).unwrap().len(), perp);
                assert_eq!(perp2(&b, l).unwrap().len(), p2);
            }
        }
    }

    #[test]
    fn antipode_and_common_neighbour_checks() {
        for q in [2u32, 3] {
            let b = bundle(q);
            assert!(check_antipode_concurrency(&b, &Sampling::default()).pass());
            assert!(check_common_neighbours(&b, &Sampling::default()).pass());
        }
    }

    #[test]
    fn common_external_counts() {
        let b = bundle(2);
        let l = b.ext_lines()[0];
        let bar = antipode(&b, l).unwrap();
        assert_eq!(count_common_external(&b, l, bar).unwrap(), 0);
        let n = perp_external(&b, l).unwrap()[0];
        assert_eq!(count_common_external(&b, l, n).unwrap(), 0);

        let b = bundle(3);
        let pos = 0;
        let l = b.ext_lines()[pos];
        let other = perp2_at(&b, pos)[0];
        assert_eq!(
            count_common_external(&b, l, b.ext_lines()[other]).unwrap(),
            6
        );
    }

    #[test]
    fn sampling_is_seeded() {
        let s = Sampling {
            budget: 100,
            seed: 7,
            exhaustive_up_to_q: 3,
        };
        assert_eq!(s.distinct_pairs(4, 240), s.distinct_pairs(4, 240));
        assert_eq!(s.distinct_pairs(4, 240).len(), 100);
        assert_eq!(s.distinct_pairs(3, 10).len(), 90);
    }
}
