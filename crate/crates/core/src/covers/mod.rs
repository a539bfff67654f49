//! Relative m-covers: sets of external lines with every external point on
//! exactly m of them. Verification here always recomputes from raw incidence
//! and never reuses search state.

mod search;

use fixedbitset::FixedBitSet;
use serde_json::{json, Value};
use thiserror::Error;

use crate::geometry::GeometryBundle;
use crate::scheme::RelationScheme;
use crate::verdict::Verdict;

pub use search::{search_covers, SearchConfig, SearchError, SearchMode, SearchOutcome};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoverError {
    #[error("line set is not a relative m-cover")]
    NotACover,
    #[error("cover is trivial (m = {0})")]
    Trivial(usize),
}

/// A subset of the external lines, by position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoverCandidate {
    bits: FixedBitSet,
}

impl CoverCandidate {
    pub fn empty(n: usize) -> Self {
        Self {
            bits: FixedBitSet::with_capacity(n),
        }
    }

    pub fn full(n: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(n);
        bits.insert_range(..);
        Self { bits }
    }

    pub fn from_positions(n: usize, positions: impl IntoIterator<Item = usize>) -> Self {
        let mut c = Self::empty(n);
        for p in positions {
            c.bits.insert(p);
        }
        c
    }

    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.bits.contains(pos)
    }

    pub fn toggle(&mut self, pos: usize) {
        self.bits.toggle(pos);
    }

    /// Sorted member positions; also the canonical encoding.
    pub fn positions(&self) -> Vec<usize> {
        self.bits.ones().collect()
    }

    pub fn chi(&self) -> Vec<i64> {
        (0..self.universe())
            .map(|i| self.contains(i) as i64)
            .collect()
    }

    pub fn complement(&self) -> Self {
        let mut bits = self.bits.clone();
        bits.toggle_range(..);
        Self { bits }
    }

    pub fn sigma(&self, b: &GeometryBundle) -> Self {
        Self::from_positions(self.universe(), self.bits.ones().map(|p| b.sigma_ext(p)))
    }

    /// Canonical line indices and their 2x4 coordinate matrices.
    pub fn to_json(&self, b: &GeometryBundle) -> Value {
        let lines: Vec<usize> = self.bits.ones().map(|p| b.ext_lines()[p]).collect();
        let coords: Vec<Value> = lines.iter().map(|&l| json!(b.lines()[l].rows())).collect();
        json!({"size": lines.len(), "lines": lines, "coordinates": coords})
    }
}

impl PartialOrd for CoverCandidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CoverCandidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.positions().cmp(&other.positions())
    }
}

/// Number of lines of `r` through each external point, in external-point order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeProfile {
    pub degrees: Vec<usize>,
    pub m: Option<usize>,
}

pub fn cover_degree_profile(b: &GeometryBundle, r: &CoverCandidate) -> DegreeProfile {
    let degrees: Vec<usize> = b
        .ext_points()
        .iter()
        .map(|&p| {
            b.point_lines(p)
                .iter()
                .filter(|&&l| b.ext_line_pos(l).is_some_and(|pos| r.contains(pos)))
                .count()
        })
        .collect();
    let m = match degrees.first() {
        Some(&d) if degrees.iter().all(|&x| x == d) => Some(d),
        _ => None,
    };
    DegreeProfile { degrees, m }
}

/// Cover check plus the size relation |R| = m(q^3 - q).
pub fn verify_cover_size(b: &GeometryBundle, r: &CoverCandidate) -> Verdict {
    let mut v = Verdict::new();
    let prof = cover_degree_profile(b, r);
    match prof.m {
        Some(m) => {
            let q = b.q() as usize;
            let expected = m * (q * q * q - q);
            v.check("is a relative m-cover", true, || Value::Null);
            v.check(
                "|R| = m(q^3-q)",
                r.len() == expected,
                || json!({"size": r.len(), "expected": expected, "m": m}),
            );
            v.fact("m", m);
        }
        None => {
            let (lo, hi) = (prof.degrees.iter().min(), prof.degrees.iter().max());
            v.check(
                "is a relative m-cover",
                false,
                || json!({"min_degree": lo, "max_degree": hi}),
            );
        }
    }
    v.fact("size", r.len());
    v
}

fn mismatch(found: &[i64], expected: &[i64]) -> Option<Value> {
    found
        .iter()
        .zip(expected)
        .position(|(a, b)| a != b)
        .map(|i| json!({"index": i, "found": found[i], "expected": expected[i]}))
}

fn lin(n: usize, terms: &[(i64, &[i64])]) -> Vec<i64> {
    let mut out = vec![0; n];
    for (c, v) in terms {
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o += c * x;
        }
    }
    out
}

/// `chi_R E_i = 0` for i = 2, 3, 4 and `2m j = q (chi_R + chi_{R^sigma})`.
pub fn spectral_certificate(
    b: &GeometryBundle,
    s: &RelationScheme,
    r: &CoverCandidate,
    m: usize,
) -> Verdict {
    let mut v = Verdict::new();
    let n = b.num_ext_lines();
    let chi = r.chi();
    for i in 2..=4 {
        let proj = s.times_idempotent_scaled(&chi, i);
        let nz = proj.iter().position(|&x| x != 0);
        v.check_first(
            format!("chi_R E_{i} = 0"),
            nz.map(|k| json!({"idempotent": i, "index": k})),
        );
    }
    let chi_s = r.sigma(b).chi();
    let q = b.q() as i64;
    let lhs = vec![2 * m as i64; n];
    let rhs = lin(n, &[(q, &chi), (q, &chi_s)]);
    v.check_first("2m j = q (chi_R + chi_R^sigma)", mismatch(&lhs, &rhs));
    if 2 * m as i64 == q {
        let sum = lin(n, &[(1, &chi), (1, &chi_s)]);
        v.check_first("chi_R + chi_R^sigma = j", mismatch(&sum, &vec![1; n]));
    }
    v
}

/// The relation and projection closed forms for a relative m-cover.
pub fn verify_chi_r_relation_identities(
    b: &GeometryBundle,
    s: &RelationScheme,
    r: &CoverCandidate,
    m: usize,
) -> Verdict {
    let mut v = Verdict::new();
    let n = b.num_ext_lines();
    let q = b.q() as i64;
    let m = m as i64;
    let s2 = q * q + 1;
    let j = vec![1i64; n];
    let chi = r.chi();
    let chi_s = r.sigma(b).chi();
    let forms: [(usize, Vec<i64>); 4] = [
        (4, chi_s.clone()),
        (3, lin(n, &[(m * s2, &j), (-s2, &chi)])),
        (1, lin(n, &[(m * s2, &j), (-s2, &chi_s)])),
        (
            2,
            lin(
                n,
                &[
                    (m * (q * q * q - 2 * q * q - q - 2), &j),
                    (q * q, &chi),
                    (q * q, &chi_s),
                ],
            ),
        ),
    ];
    for (k, expected) in &forms {
        let got = s.times_relation(&chi, *k);
        v.check_first(format!("chi_R A_{k} closed form"), mismatch(&got, expected));
    }
    // N * chi_R E_i as integer vectors
    let e_forms: [(usize, Vec<i64>); 3] = [
        (
            2,
            lin(
                n,
                &[
                    (2 * m * q * (q + 1), &j),
                    (-q * q * (q + 1), &chi),
                    (-q * q * (q + 1), &chi_s),
                ],
            ),
        ),
        (3, vec![0; n]),
        (
            4,
            lin(
                n,
                &[
                    (q * q * (q + 1) * (q + 1) / 2, &chi),
                    (q * q * (q + 1) * (q + 1) / 2, &chi_s),
                    (-m * q * (q + 1) * (q + 1), &j),
                ],
            ),
        ),
    ];
    for (i, expected) in &e_forms {
        let got = s.times_idempotent_scaled(&chi, *i);
        v.check_first(format!("chi_R E_{i} closed form"), mismatch(&got, expected));
    }
    v
}

/// Checks for a nontrivial cover: q even, m = q/2, sigma image is the complement.
pub fn cover_structure_check(
    b: &GeometryBundle,
    r: &CoverCandidate,
) -> Result<(Verdict, Verdict), CoverError> {
    let m = cover_degree_profile(b, r).m.ok_or(CoverError::NotACover)?;
    let q = b.q() as usize;
    if m == 0 || m == q {
        return Err(CoverError::Trivial(m));
    }
    let mut a = Verdict::new();
    a.check("q is even", q % 2 == 0, || json!({"q": q, "m": m}));
    a.check("m = q/2", 2 * m == q, || json!({"q": q, "m": m}));
    a.fact("m", m);
    let mut bv = Verdict::new();
    let image = r.sigma(b);
    let comp = r.complement();
    let diff = (0..r.universe()).find(|&p| image.contains(p) != comp.contains(p));
    bv.check_first(
        "sigma(R) is the complement of R",
        diff.map(|p| json!({"position": p, "line": b.ext_lines()[p], "in_sigma_image": image.contains(p)})),
    );
    Ok((a, bv))
}

/// A set is an m-cover iff its complement is a (q-m)-cover.
pub fn complement_closure(b: &GeometryBundle, r: &CoverCandidate) -> bool {
    let q = b.q() as usize;
    let here = cover_degree_profile(b, r).m;
    let there = cover_degree_profile(b, &r.complement()).m;
    match (here, there) {
        (Some(m), Some(k)) => m + k == q,
        (None, None) => true,
        _ => false,
    }
}
