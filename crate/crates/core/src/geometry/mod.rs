//! PG(3,q^2), the Hermitian surface H(3,q^2), the embedded symplectic
//! quadrangle W(3,q), external points and lines, and the Baer involution.
//!
//! Points and lines of H(3,q^2) are stored in ascending canonical order and
//! addressed by index. External lines additionally have a *position* in
//! `0..N`, `N = q^2(q^2-1)`, which indexes every vector and matrix of the
//! association scheme.

mod cache;
mod proj;

use std::collections::{BTreeSet, HashMap};

use fixedbitset::FixedBitSet;
use thiserror::Error;

pub use cache::{CacheError, FORMAT_VERSION, MAGIC};
pub use proj::{all_points, ProjLine, ProjPoint};

use crate::field::{Field, FieldError, FieldTower};
use crate::incidence;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("q = {0} is not a prime power with q^2 <= 65536")]
    UnsupportedQ(u32),
    #[error("{what}: expected {expected}, found {found}")]
    CountMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("construction failed: {0}")]
    Construction(String),
    #[error(transparent)]
    Cache(#[from] CacheError),
}

pub type Gram = [[u32; 4]; 4];

/// The full geometry at one q. Immutable once built.
#[derive(Debug, Clone)]
pub struct GeometryBundle {
    q: u32,
    tower: FieldTower,
    gram: Gram,
    points: Vec<ProjPoint>,
    lines: Vec<ProjLine>,
    line_points: Vec<Vec<usize>>,
    point_lines: Vec<Vec<usize>>,
    line_point_bits: Vec<FixedBitSet>,
    w_points: Vec<usize>,
    w_lines: Vec<usize>,
    is_w_point: FixedBitSet,
    is_w_line: FixedBitSet,
    ext_points: Vec<usize>,
    ext_lines: Vec<usize>,
    ext_point_pos: Vec<Option<usize>>,
    ext_line_pos: Vec<Option<usize>>,
    sigma_points: Vec<usize>,
    sigma_lines: Vec<usize>,
    antipode: Vec<usize>,
    ext_concurrent: Vec<FixedBitSet>,
}

/// `J` with rows [0,1,0,0], [-1,0,0,0], [0,0,0,1], [0,0,-1,0], scaled by the
/// tower's special scalar.
pub fn gram_matrix(f: &Field) -> Result<Gram, FieldError> {
    let eps = f.special_scalar()?;
    let m1 = f.neg(eps);
    let mut g = [[0u32; 4]; 4];
    g[0][1] = eps;
    g[1][0] = m1;
    g[2][3] = eps;
    g[3][2] = m1;
    Ok(g)
}

/// `x G conj(y)^T`.
pub fn hermitian_form(f: &Field, g: &Gram, x: &[u32; 4], y: &[u32; 4]) -> u32 {
    let mut acc = 0;
    for i in 0..4 {
        if x[i] == 0 {
            continue;
        }
        for j in 0..4 {
            if g[i][j] != 0 && y[j] != 0 {
                acc = f.add(acc, f.mul(f.mul(x[i], g[i][j]), f.conj(y[j])));
            }
        }
    }
    acc
}

/// `x G y^T` without conjugation.
pub fn bilinear_form(f: &Field, g: &Gram, x: &[u32; 4], y: &[u32; 4]) -> u32 {
    let mut acc = 0;
    for i in 0..4 {
        for j in 0..4 {
            acc = f.add(acc, f.mul(f.mul(x[i], g[i][j]), y[j]));
        }
    }
    acc
}

/// Largest q accepted without an explicit override.
pub const SAFE_Q: [u32; 3] = [2, 3, 4];

/// Expected sizes for the counts checked at build time.
pub mod counts {
    pub fn hermitian_points(q: usize) -> usize {
        (q * q + 1) * (q * q * q + 1)
    }
    pub fn hermitian_lines(q: usize) -> usize {
        (q * q * q + 1) * (q + 1)
    }
    pub fn w_points(q: usize) -> usize {
        q * q * q + q * q + q + 1
    }
    pub fn w_lines(q: usize) -> usize {
        (q * q + 1) * (q + 1)
    }
    pub fn external_points(q: usize) -> usize {
        (q * q + 1) * (q * q * q - q)
    }
    pub fn external_lines(q: usize) -> usize {
        q * q * (q * q - 1)
    }
}

fn expect_count(what: &'static str, expected: usize, found: usize) -> Result<(), GeometryError> {
    if expected == found {
        Ok(())
    } else {
        Err(GeometryError::CountMismatch {
            what,
            expected,
            found,
        })
    }
}

/// Parts stored in the cache file; everything else is derived.
pub(crate) struct RawParts {
    pub q: u32,
    pub tower: FieldTower,
    pub gram: Gram,
    pub points: Vec<ProjPoint>,
    pub lines: Vec<ProjLine>,
    pub line_points: Vec<Vec<usize>>,
    pub w_points: Vec<usize>,
    pub w_lines: Vec<usize>,
    pub ext_points: Vec<usize>,
    pub ext_lines: Vec<usize>,
    pub sigma_points: Vec<usize>,
    pub sigma_lines: Vec<usize>,
    pub antipode: Vec<usize>,
}

impl GeometryBundle {
    /// Builds the geometry for `q`, verifying every count along the way.
    pub fn build(q: u32) -> Result<Self, GeometryError> {
        if crate::field::prime_power(q).is_none()
            || (q as u64).pow(2) > crate::field::MAX_FIELD_ORDER
        {
            return Err(GeometryError::UnsupportedQ(q));
        }
        let tower = FieldTower::new(q)?;
        let f = &tower.ext;
        let gram = gram_matrix(f)?;
        let qs = q as usize;

        let points: Vec<ProjPoint> = all_points(f)
            .into_iter()
            .filter(|p| hermitian_form(f, &gram, &p.0, &p.0) == 0)
            .collect();
        expect_count(
            "Hermitian points",
            counts::hermitian_points(qs),
            points.len(),
        )?;
        let index: HashMap<ProjPoint, usize> =
            points.iter().enumerate().map(|(i, p)| (*p, i)).collect();

        // Two orthogonal isotropic points span a totally isotropic line.
        let mut line_set = BTreeSet::new();
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                if hermitian_form(f, &gram, &a.0, &b.0) == 0 {
                    line_set.insert(ProjLine::span(f, a.0, b.0).expect("distinct points"));
                }
            }
        }
        let lines: Vec<ProjLine> = line_set.into_iter().collect();
        expect_count("Hermitian lines", counts::hermitian_lines(qs), lines.len())?;

        let mut line_points = Vec::with_capacity(lines.len());
        for l in &lines {
            let mut idx = Vec::with_capacity(qs * qs + 1);
            for p in l.points(f) {
                let Some(&i) = index.get(&p) else {
                    return Err(GeometryError::Construction(format!(
                        "line {l:?} leaves the surface at {p:?}"
                    )));
                };
                idx.push(i);
            }
            idx.sort_unstable();
            line_points.push(idx);
        }

        let is_w = |p: &ProjPoint| p.0.iter().all(|&x| f.in_subfield(x));
        let w_points: Vec<usize> = (0..points.len()).filter(|&i| is_w(&points[i])).collect();
        expect_count("W points", counts::w_points(qs), w_points.len())?;
        let mut w_point_bits = FixedBitSet::with_capacity(points.len());
        w_points.iter().for_each(|&i| w_point_bits.insert(i));

        let mut w_lines = Vec::new();
        let mut ext_lines = Vec::new();
        for (li, pts) in line_points.iter().enumerate() {
            let on_w = pts.iter().filter(|&&p| w_point_bits.contains(p)).count();
            match on_w {
                0 => ext_lines.push(li),
                n if n == qs + 1 => w_lines.push(li),
                n => {
                    return Err(GeometryError::Construction(format!(
                        "line {li} meets W(3,q) in {n} points"
                    )))
                }
            }
        }
        expect_count("W lines", counts::w_lines(qs), w_lines.len())?;
        expect_count(
            "external lines",
            counts::external_lines(qs),
            ext_lines.len(),
        )?;
        let ext_points: Vec<usize> = (0..points.len())
            .filter(|&i| !w_point_bits.contains(i))
            .collect();
        expect_count(
            "external points",
            counts::external_points(qs),
            ext_points.len(),
        )?;

        let sigma_points: Vec<usize> = points.iter().map(|p| index[&p.conjugate(f)]).collect();
        let line_index: HashMap<ProjLine, usize> =
            lines.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        let mut sigma_lines = Vec::with_capacity(lines.len());
        for l in &lines {
            let image = l.conjugate(f);
            let Some(&i) = line_index.get(&image) else {
                return Err(GeometryError::Construction(format!(
                    "sigma maps {l:?} off the surface"
                )));
            };
            sigma_lines.push(i);
        }

        let mut bundle = Self::from_parts(RawParts {
            q,
            tower,
            gram,
            points,
            lines,
            line_points,
            w_points,
            w_lines,
            ext_points,
            ext_lines,
            sigma_points,
            sigma_lines,
            antipode: Vec::new(),
        });

        let by_spread = incidence::antipodes_by_spread(&bundle)
            .map_err(|e| GeometryError::Construction(e.to_string()))?;
        let by_sigma: Vec<usize> = (0..bundle.num_ext_lines())
            .map(|pos| {
                bundle
                    .ext_line_pos(bundle.sigma_lines[bundle.ext_lines[pos]])
                    .expect("sigma keeps external lines")
            })
            .collect();
        if by_spread != by_sigma {
            let pos = (0..by_spread.len())
                .find(|&i| by_spread[i] != by_sigma[i])
                .unwrap();
            return Err(GeometryError::Construction(format!(
                "antipode of external line {pos} is {} by spreads but {} by sigma",
                by_spread[pos], by_sigma[pos]
            )));
        }
        bundle.antipode = by_spread;
        Ok(bundle)
    }

    pub(crate) fn from_parts(raw: RawParts) -> Self {
        let np = raw.points.len();
        let nl = raw.lines.len();
        let mut point_lines = vec![Vec::new(); np];
        let mut line_point_bits = Vec::with_capacity(nl);
        for (li, pts) in raw.line_points.iter().enumerate() {
            let mut bits = FixedBitSet::with_capacity(np);
            for &p in pts {
                point_lines[p].push(li);
                bits.insert(p);
            }
            line_point_bits.push(bits);
        }
        let mut is_w_point = FixedBitSet::with_capacity(np);
        raw.w_points.iter().for_each(|&i| is_w_point.insert(i));
        let mut is_w_line = FixedBitSet::with_capacity(nl);
        raw.w_lines.iter().for_each(|&i| is_w_line.insert(i));
        let mut ext_point_pos = vec![None; np];
        for (pos, &i) in raw.ext_points.iter().enumerate() {
            ext_point_pos[i] = Some(pos);
        }
        let mut ext_line_pos = vec![None; nl];
        for (pos, &i) in raw.ext_lines.iter().enumerate() {
            ext_line_pos[i] = Some(pos);
        }
        let n = raw.ext_lines.len();
        let ext_concurrent = crate::par::map_range(n, |a| {
            let mut bits = FixedBitSet::with_capacity(n);
            let la = raw.ext_lines[a];
            for b in 0..n {
                if b != a {
                    let lb = raw.ext_lines[b];
                    if !line_point_bits[la].is_disjoint(&line_point_bits[lb]) {
                        bits.insert(b);
                    }
                }
            }
            bits
        });
        Self {
            q: raw.q,
            tower: raw.tower,
            gram: raw.gram,
            points: raw.points,
            lines: raw.lines,
            line_points: raw.line_points,
            point_lines,
            line_point_bits,
            w_points: raw.w_points,
            w_lines: raw.w_lines,
            is_w_point,
            is_w_line,
            ext_points: raw.ext_points,
            ext_lines: raw.ext_lines,
            ext_point_pos,
            ext_line_pos,
            sigma_points: raw.sigma_points,
            sigma_lines: raw.sigma_lines,
            antipode: raw.antipode,
            ext_concurrent,
        }
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn tower(&self) -> &FieldTower {
        &self.tower
    }

    pub fn field(&self) -> &Field {
        &self.tower.ext
    }

    pub fn gram(&self) -> &Gram {
        &self.gram
    }

    pub fn points(&self) -> &[ProjPoint] {
        &self.points
    }

    pub fn lines(&self) -> &[ProjLine] {
        &self.lines
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn num_lines(&self) -> usize {
        self.lines.len()
    }

    /// Sorted point indices on line `l`.
    pub fn line_points(&self, l: usize) -> &[usize] {
        &self.line_points[l]
    }

    /// Sorted line indices through point `p`.
    pub fn point_lines(&self, p: usize) -> &[usize] {
        &self.point_lines[p]
    }

    pub fn line_point_bits(&self, l: usize) -> &FixedBitSet {
        &self.line_point_bits[l]
    }

    pub fn incident(&self, p: usize, l: usize) -> bool {
        self.line_point_bits[l].contains(p)
    }

    /// Distinct lines sharing a point.
    pub fn concurrent(&self, a: usize, b: usize) -> bool {
        a != b && !self.line_point_bits[a].is_disjoint(&self.line_point_bits[b])
    }

    pub fn w_points(&self) -> &[usize] {
        &self.w_points
    }

    pub fn w_lines(&self) -> &[usize] {
        &self.w_lines
    }

    pub fn is_w_point(&self, p: usize) -> bool {
        self.is_w_point.contains(p)
    }

    pub fn is_w_line(&self, l: usize) -> bool {
        self.is_w_line.contains(l)
    }

    /// Whether line `l` has at least one point in W(3,q).
    pub fn meets_w(&self, l: usize) -> bool {
        !self.line_point_bits[l].is_disjoint(&self.is_w_point)
    }

    pub fn ext_points(&self) -> &[usize] {
        &self.ext_points
    }

    pub fn ext_lines(&self) -> &[usize] {
        &self.ext_lines
    }

    pub fn num_ext_points(&self) -> usize {
        self.ext_points.len()
    }

    /// N = |external lines|.
    pub fn num_ext_lines(&self) -> usize {
        self.ext_lines.len()
    }

    pub fn ext_point_pos(&self, p: usize) -> Option<usize> {
        self.ext_point_pos[p]
    }

    pub fn ext_line_pos(&self, l: usize) -> Option<usize> {
        self.ext_line_pos[l]
    }

    pub fn sigma_point(&self, p: usize) -> usize {
        self.sigma_points[p]
    }

    pub fn sigma_line(&self, l: usize) -> usize {
        self.sigma_lines[l]
    }

    pub fn sigma_points(&self) -> &[usize] {
        &self.sigma_points
    }

    pub fn sigma_lines(&self) -> &[usize] {
        &self.sigma_lines
    }

    /// σ on external-line positions.
    pub fn sigma_ext(&self, pos: usize) -> usize {
        self.ext_line_pos[self.sigma_lines[self.ext_lines[pos]]]
            .expect("sigma preserves external lines")
    }

    /// Stored antipode map on external-line positions.
    pub fn antipode(&self, pos: usize) -> usize {
        self.antipode[pos]
    }

    pub fn antipodes(&self) -> &[usize] {
        &self.antipode
    }

    /// Positions of external lines concurrent with external line `pos` (excluding itself).
    pub fn ext_concurrent(&self, pos: usize) -> &FixedBitSet {
        &self.ext_concurrent[pos]
    }

    pub fn ext_lines_concurrent(&self, a: usize, b: usize) -> bool {
        self.ext_concurrent[a].contains(b)
    }

    /// External-line positions through external point index `p`.
    pub fn ext_lines_on_point(&self, p: usize) -> Vec<usize> {
        self.point_lines[p]
            .iter()
            .filter_map(|&l| self.ext_line_pos[l])
            .collect()
    }

    /// Point indices of the external line at position `pos`.
    pub fn ext_line_points(&self, pos: usize) -> &[usize] {
        &self.line_points[self.ext_lines[pos]]
    }

    /// Applies σ to an arbitrary point vector (renormalized), without lookup.
    pub fn baer_point(&self, p: &ProjPoint) -> ProjPoint {
        p.conjugate(self.field())
    }

    pub fn baer_line(&self, l: &ProjLine) -> ProjLine {
        l.conjugate(self.field())
    }

    /// Serialized cache image (see [`cache`] layout docs).
    pub fn to_cache_bytes(&self) -> Vec<u8> {
        cache::encode(self)
    }

    pub fn from_cache_bytes(bytes: &[u8]) -> Result<Self, GeometryError> {
        Ok(cache::decode(bytes)?)
    }

    /// Hex SHA-256 of the cache body.
    pub fn checksum(&self) -> String {
        cache::checksum_hex(&self.to_cache_bytes())
    }

    /// Returns a copy whose stored incidence has point `p` on line `l` toggled.
    /// The result is internally inconsistent by construction; it exists so
    /// verification can be exercised against corrupted inputs.
    pub fn with_flipped_incidence(&self, l: usize, p: usize) -> Self {
        let mut line_points = self.line_points.clone();
        match line_points[l].binary_search(&p) {
            Ok(i) => {
                line_points[l].remove(i);
            }
            Err(i) => line_points[l].insert(i, p),
        }
        Self::from_parts(RawParts {
            q: self.q,
            tower: self.tower.clone(),
            gram: self.gram,
            points: self.points.clone(),
            lines: self.lines.clone(),
            line_points,
            w_points: self.w_points.clone(),
            w_lines: self.w_lines.clone(),
            ext_points: self.ext_points.clone(),
            ext_lines: self.ext_lines.clone(),
            sigma_points: self.sigma_points.clone(),
            sigma_lines: self.sigma_lines.clone(),
            antipode: self.antipode.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Oracle: every line of PG(3,q^2) whose points are all Hermitian.
    fn brute_force_lines(b: &GeometryBundle) -> BTreeSet<ProjLine> {
        let f = b.field();
        let pts = all_points(f);
        let herm: std::collections::HashSet<ProjPoint> = b.points().iter().copied().collect();
        let mut out = BTreeSet::new();
        for (i, x) in pts.iter().enumerate() {
            for y in &pts[i + 1..] {
                let l = ProjLine::span(f, x.0, y.0).unwrap();
                if l.points(f).iter().all(|p| herm.contains(p)) {
                    out.insert(l);
                }
            }
        }
        out
    }

    #[test]
    fn gram_is_hermitian_and_alternating_on_subfield() {
        for q in [2, 3, 4, 5] {
            let t = FieldTower::new(q).unwrap();
            let f = &t.ext;
            let g = gram_matrix(f).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    assert_eq!(f.conj(g[j][i]), g[i][j], "q={q}");
                }
            }
            for p in all_points(&t.sub) {
                assert_eq!(bilinear_form(f, &g, &p.0, &p.0), 0);
            }
        }
    }

    #[test]
    fn gram_even_q_is_plain_symplectic() {
        let t = FieldTower::new(2).unwrap();
        let g = gram_matrix(&t.ext).unwrap();
        assert_eq!(g, [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]);
    }

    #[test]
    fn gram_q3_isotropic_on_pg33() {
        let t = FieldTower::new(3).unwrap();
        let g = gram_matrix(&t.ext).unwrap();
        let pts = all_points(&t.sub);
        assert_eq!(pts.len(), 40);
        assert!(pts
            .iter()
            .all(|p| bilinear_form(&t.ext, &g, &p.0, &p.0) == 0));
    }

    #[test]
    fn hermitian_points_match_brute_force() {
        for (q, expect) in [(2u32, 45usize), (3, 280)] {
            let b = GeometryBundle::build(q).unwrap();
            let f = b.field();
            let brute = all_points(f)
                .into_iter()
                .filter(|p| {
                    // x0 conj(x1) - x1 conj(x0) + x2 conj(x3) - x3 conj(x2), times eps
                    let x = p.0;
                    let t1 = f.sub(f.mul(x[0], f.conj(x[1])), f.mul(x[1], f.conj(x[0])));
                    let t2 = f.sub(f.mul(x[2], f.conj(x[3])), f.mul(x[3], f.conj(x[2])));
                    f.add(t1, t2) == 0
                })
                .count();
            assert_eq!(brute, expect);
            assert_eq!(b.num_points(), expect);
        }
    }

    #[test]
    fn hermitian_lines_match_brute_force_q2() {
        let b = GeometryBundle::build(2).unwrap();
        let brute = brute_force_lines(&b);
        assert_eq!(brute.len(), 27);
        assert_eq!(b.lines().iter().copied().collect::<BTreeSet<_>>(), brute);
    }

    #[test]
    fn counts_per_q() {
        for (q, pts, lines, wp, wl, ep, el) in [
            (2u32, 45, 27, 15, 15, 30, 12),
            (3, 280, 112, 40, 40, 240, 72),
            (4, 1105, 325, 85, 85, 1020, 240),
        ] {
            let b = GeometryBundle::build(q).unwrap();
            assert_eq!(
                (
                    b.num_points(),
                    b.num_lines(),
                    b.w_points().len(),
                    b.w_lines().len()
                ),
                (pts, lines, wp, wl)
            );
            assert_eq!((b.num_ext_points(), b.num_ext_lines()), (ep, el));
            let qs = q as usize;
            for l in 0..b.num_lines() {
                assert_eq!(b.line_points(l).len(), qs * qs + 1);
            }
            for p in 0..b.num_points() {
                assert_eq!(b.point_lines(p).len(), qs + 1);
            }
        }
    }

    #[test]
    fn every_w_line_meets_w_in_a_subline() {
        for q in [2u32, 3] {
            let b = GeometryBundle::build(q).unwrap();
            let f = b.field();
            for &l in b.w_lines() {
                let wpts: Vec<usize> = b
                    .line_points(l)
                    .iter()
                    .copied()
                    .filter(|&p| b.is_w_point(p))
                    .collect();
                assert_eq!(wpts.len(), q as usize + 1);
                // the W points span a J-isotropic line of PG(3,q)
                let x = b.points()[wpts[0]].0;
                let y = b.points()[wpts[1]].0;
                assert_eq!(bilinear_form(f, b.gram(), &x, &y), 0);
            }
        }
    }

    #[test]
    fn external_points_have_one_line_meeting_w() {
        for q in [2u32, 3] {
            let b = GeometryBundle::build(q).unwrap();
            for &p in b.ext_points() {
                let meeting = b.point_lines(p).iter().filter(|&&l| b.meets_w(l)).count();
                assert_eq!(meeting, 1);
                assert_eq!(b.ext_lines_on_point(p).len(), q as usize);
            }
        }
    }

    #[test]
    fn sigma_properties() {
        for q in [2u32, 3] {
            let b = GeometryBundle::build(q).unwrap();
            for p in 0..b.num_points() {
                assert_eq!(b.sigma_point(b.sigma_point(p)), p);
            }
            for &p in b.w_points() {
                assert_eq!(b.sigma_point(p), p);
            }
            for &l in b.w_lines() {
                assert_eq!(b.sigma_line(l), l);
            }
            for l in 0..b.num_lines() {
                assert_eq!(b.sigma_line(b.sigma_line(l)), l);
                for p in 0..b.num_points() {
                    assert_eq!(
                        b.incident(p, l),
                        b.incident(b.sigma_point(p), b.sigma_line(l))
                    );
                }
            }
            for pos in 0..b.num_ext_lines() {
                assert_ne!(b.sigma_ext(pos), pos);
                assert_eq!(b.antipode(pos), b.sigma_ext(pos));
            }
        }
    }

    #[test]
    fn sigma_on_q2_external_lines_is_six_transpositions() {
        let b = GeometryBundle::build(2).unwrap();
        let mut pairs = BTreeSet::new();
        for pos in 0..12 {
            let img = b.sigma_ext(pos);
            assert_ne!(img, pos);
            assert_eq!(b.sigma_ext(img), pos);
            pairs.insert((pos.min(img), pos.max(img)));
        }
        assert_eq!(pairs.len(), 6);
    }

    #[test]
    fn unsupported_q() {
        assert!(matches!(
            GeometryBundle::build(6),
            Err(GeometryError::UnsupportedQ(6))
        ));
        assert!(matches!(
            GeometryBundle::build(1),
            Err(GeometryError::UnsupportedQ(1))
        ));
    }
}
