//! Exact linear algebra: row echelon bases over the rationals (kept as
//! primitive integer rows), dense integer matrices with checked products, and
//! small rational matrix inversion.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("integer overflow in matrix product")]
    Overflow,
    #[error("matrix is singular")]
    Singular,
}

/// Row space over Q, stored as integer rows in echelon form.
#[derive(Debug, Clone)]
pub struct EchelonBasis {
    width: usize,
    // (pivot column, row with positive pivot, zero left of pivot)
    rows: Vec<(usize, Vec<BigInt>)>,
}

fn primitive(row: &mut [BigInt]) {
    let mut g = BigInt::zero();
    for x in row.iter() {
        if !x.is_zero() {
            g = g.gcd(x);
            if g.is_one() {
                break;
            }
        }
    }
    if g.is_zero() {
        return;
    }
    let neg = row
        .iter()
        .find(|x| !x.is_zero())
        .is_some_and(|x| x.is_negative());
    if neg {
        g = -g;
    }
    if !g.is_one() {
        for x in row.iter_mut() {
            *x = &*x / &g;
        }
    }
}

impl EchelonBasis {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            rows: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `row` against the basis; the result is zero iff `row` is in the span.
    pub fn reduce(&self, row: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(row.len(), self.width, "row width");
        let mut r = row.to_vec();
        for (pc, basis) in &self.rows {
            if r[*pc].is_zero() {
                continue;
            }
            // r <- basis[pc]*r - r[pc]*basis
            let a = basis[*pc].clone();
            let b = r[*pc].clone();
            let g = a.gcd(&b);
            let (a, b) = (&a / &g, &b / &g);
            for (x, y) in r.iter_mut().zip(basis) {
                if y.is_zero() {
                    if !a.is_one() {
                        *x *= &a;
                    }
                } else {
                    *x = &*x * &a - y * &b;
                }
            }
            primitive(&mut r);
        }
        r
    }

    pub fn contains(&self, row: &[BigInt]) -> bool {
        self.reduce(row).iter().all(Zero::is_zero)
    }

    /// Adds `row`; returns whether it was independent of the current basis.
    pub fn insert(&mut self, row: &[BigInt]) -> bool {
        let mut r = self.reduce(row);
        let Some(pc) = r.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        primitive(&mut r);
        let at = self.rows.partition_point(|(c, _)| *c < pc);
        self.rows.insert(at, (pc, r));
        true
    }

    pub fn insert_i64(&mut self, row: &[i64]) -> bool {
        let r: Vec<BigInt> = row.iter().map(|&x| BigInt::from(x)).collect();
        self.insert(&r)
    }

    pub fn contains_i64(&self, row: &[i64]) -> bool {
        let r: Vec<BigInt> = row.iter().map(|&x| BigInt::from(x)).collect();
        self.contains(&r)
    }
}

/// Rank over Q of an integer matrix given by rows.
pub fn rank_i64<R: AsRef<[i64]>>(width: usize, rows: impl IntoIterator<Item = R>) -> usize {
    let mut basis = EchelonBasis::new(width);
    for row in rows {
        if basis.rank() == width {
            break;
        }
        basis.insert_i64(row.as_ref());
    }
    basis.rank()
}

/// Dense row-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::Dimension("ragged rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[i64]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn trace(&self) -> i64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn scale(&self, k: i64) -> Result<Self, LinalgError> {
        let data = self
            .data
            .iter()
            .map(|&x| x.checked_mul(k).ok_or(LinalgError::Overflow))
            .collect::<Result<_, _>>()?;
        Ok(Self { data, ..*self })
    }

    /// `self += k * other`.
    pub fn add_scaled(&mut self, k: i64, other: &IntMatrix) -> Result<(), LinalgError> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(LinalgError::Dimension("add_scaled".into()));
        }
        for (x, &y) in self.data.iter_mut().zip(&other.data) {
            *x = y
                .checked_mul(k)
                .and_then(|t| x.checked_add(t))
                .ok_or(LinalgError::Overflow)?;
        }
        Ok(())
    }

    /// Exact product; any entry outside i64 is an error.
    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::Dimension(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let t = other.transpose();
        let rows: Vec<Result<Vec<i64>, LinalgError>> = crate::par::map_range(self.rows, |i| {
            let a = self.row(i);
            (0..other.cols)
                .map(|j| {
                    let acc: i128 = a
                        .iter()
                        .zip(t.row(j))
                        .map(|(&x, &y)| x as i128 * y as i128)
                        .sum();
                    i64::try_from(acc).map_err(|_| LinalgError::Overflow)
                })
                .collect()
        });
        let mut data = Vec::with_capacity(self.rows * other.cols);
        for r in rows {
            data.extend(r?);
        }
        Ok(IntMatrix {
            rows: self.rows,
            cols: other.cols,
            data,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn rank(&self) -> usize {
        rank_i64(self.cols, self.rows_iter())
    }
}

pub type RatMatrix = Vec<Vec<BigRational>>;

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Gauss-Jordan inverse of a square rational matrix.
pub fn invert(m: &RatMatrix) -> Result<RatMatrix, LinalgError> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return Err(LinalgError::Dimension("not square".into()));
    }
    let mut a: RatMatrix = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { rat(1) } else { rat(0) }));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or(LinalgError::Singular)?;
        a.swap(col, piv);
        let inv = a[col][col].recip();
        for x in a[col].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (x, y) in a[r].iter_mut().zip(&pivot_row) {
                    *x = &*x - &f * y;
                }
            }
        }
    }
    Ok(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn rat_mul(a: &RatMatrix, b: &RatMatrix) -> RatMatrix {
    let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).fold(rat(0), |acc, t| acc + &a[i][t] * &b[t][j]))
                .collect()
        })
        .collect()
}
