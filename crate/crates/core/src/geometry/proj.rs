//! Canonical projective points and lines of PG(3,F) over a raw-index field.

use serde::{Deserialize, Serialize};

use crate::field::Field;

/// Homogeneous coordinates with the first nonzero entry equal to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProjPoint(pub [u32; 4]);

/// A line as the reduced row-echelon form of a 2x4 spanning matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProjLine(pub [[u32; 4]; 2]);

impl ProjPoint {
    /// Scales `v` so its first nonzero coordinate is 1; `None` for the zero vector.
    pub fn normalize(f: &Field, v: [u32; 4]) -> Option<Self> {
        let lead = v.iter().copied().find(|&x| x != 0)?;
        let inv = f.inv(lead).expect("nonzero");
        Some(Self(v.map(|x| f.mul(x, inv))))
    }

    pub fn coords(&self) -> [u32; 4] {
        self.0
    }

    /// Coordinate-wise conjugation x -> x^q, renormalized.
    pub fn conjugate(&self, f: &Field) -> Self {
        Self::normalize(f, self.0.map(|x| f.conj(x))).expect("conjugation preserves nonzero")
    }
}

/// Every normalized nonzero vector of F^4, in ascending coordinate order.
pub fn all_points(f: &Field) -> Vec<ProjPoint> {
    let n = f.order();
    let mut out = Vec::new();
    for lead in 0..4 {
        let free = 3 - lead;
        let count = (n as u64).pow(free as u32);
        for code in 0..count {
            let mut v = [0u32; 4];
            v[lead] = 1;
            let mut c = code;
            for i in (lead + 1..4).rev() {
                v[i] = (c % n as u64) as u32;
                c /= n as u64;
            }
            out.push(ProjPoint(v));
        }
    }
    out.sort_unstable();
    out
}

impl ProjLine {
    /// The line spanned by two vectors, or `None` if they are dependent.
    pub fn span(f: &Field, a: [u32; 4], b: [u32; 4]) -> Option<Self> {
        let mut m = [a, b];
        let mut row = 0;
        for col in 0..4 {
            if row == 2 {
                break;
            }
            let Some(piv) = (row..2).find(|&r| m[r][col] != 0) else {
                continue;
            };
            m.swap(row, piv);
            let inv = f.inv(m[row][col]).expect("nonzero pivot");
            m[row] = m[row].map(|x| f.mul(x, inv));
            for r in 0..2 {
                if r != row && m[r][col] != 0 {
                    let c = m[r][col];
                    for k in 0..4 {
                        m[r][k] = f.sub(m[r][k], f.mul(c, m[row][k]));
                    }
                }
            }
            row += 1;
        }
        (row == 2).then_some(Self(m))
    }

    pub fn rows(&self) -> [[u32; 4]; 2] {
        self.0
    }

    /// The |F|+1 points of the line, sorted.
    pub fn points(&self, f: &Field) -> Vec<ProjPoint> {
        let [r0, r1] = self.0;
        let mut pts: Vec<ProjPoint> = f
            .elements()
            .map(|c| {
                let v = [0, 1, 2, 3].map(|k| f.add(r0[k], f.mul(c, r1[k])));
                ProjPoint::normalize(f, v).expect("independent rows")
            })
            .collect();
        pts.push(ProjPoint::normalize(f, r1).expect("nonzero row"));
        pts.sort_unstable();
        pts
    }

    pub fn conjugate(&self, f: &Field) -> Self {
        let [r0, r1] = self.0;
        Self::span(f, r0.map(|x| f.conj(x)), r1.map(|x| f.conj(x)))
            .expect("conjugation preserves rank")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldTower;

    #[test]
    fn point_count_of_pg3() {
        for q in [2u32, 3] {
            let t = FieldTower::new(q).unwrap();
            let n = t.ext.order() as usize;
            assert_eq!(all_points(&t.ext).len(), (n.pow(4) - 1) / (n - 1));
        }
    }

    #[test]
    fn span_is_canonical() {
        let t = FieldTower::new(2).unwrap();
        let f = &t.ext;
        let a = [1, 2, 0, 3];
        let b = [0, 1, 1, 1];
        let l1 = ProjLine::span(f, a, b).unwrap();
        // another basis of the same line
        let c = [0, 1, 2, 3].map(|k| f.add(a[k], f.mul(2, b[k])));
        let l2 = ProjLine::span(f, b, c).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(l1.points(f).len(), 5);
        assert!(ProjLine::span(f, a, a).is_none());
    }
}
