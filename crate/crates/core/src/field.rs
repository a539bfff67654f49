//! Small finite fields GF(p^k) and the quadratic tower GF(q^2)/GF(q).
//!
//! Elements are plain `u32` indices. For an extension of degree `k` over a base
//! of order `B`, the element with coefficient vector `(c_0, .., c_{k-1})` over the
//! base has index `c_0 + c_1 B + .. + c_{k-1} B^{k-1}`. In a quadratic tower the
//! embedded base field is therefore exactly the index range `0..B`, and the
//! index order is the enumeration order used wherever a "first element with
//! property X" is needed.
//!
//! [`FieldElement`] wraps an index together with its field for checked,
//! mismatch-detecting arithmetic; the geometry code uses the raw index API.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Largest field order accepted by [`field_create`] and [`Field::extension`].
pub const MAX_FIELD_ORDER: u64 = 1 << 16;

/// Fields up to this order keep full addition and multiplication tables.
const TABLE_LIMIT: u32 = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("extension degree must be positive")]
    ZeroDegree,
    #[error("field order {0} exceeds the bound {MAX_FIELD_ORDER}")]
    TooLarge(u64),
    #[error("operands belong to different fields")]
    Mismatch,
    #[error("division by zero")]
    DivisionByZero,
    #[error("element {value} is out of range for a field of order {order}")]
    OutOfRange { value: u32, order: u32 },
    #[error("field is not a quadratic extension of a base field")]
    NotTower,
    #[error("no irreducible polynomial of degree {0} found")]
    NoIrreducible(u32),
}

pub type Result<T> = std::result::Result<T, FieldError>;

/// GF(p^k), possibly built as an extension of another [`Field`].
pub struct Field {
    p: u32,
    degree: u32,
    base: Option<Arc<Field>>,
    modulus: Vec<u32>,
    order: u32,
    exp: Vec<u32>,
    log: Vec<u32>,
    inv: Vec<u32>,
    neg: Vec<u32>,
    conj: Option<Vec<u32>>,
    add_table: Option<Vec<u32>>,
    mul_table: Option<Vec<u32>>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("p", &self.p)
            .field("order", &self.order)
            .field("degree", &self.degree)
            .field("modulus", &self.modulus)
            .field("base_order", &self.base.as_ref().map(|b| b.order))
            .finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p
            && self.degree == other.degree
            && self.modulus == other.modulus
            && self.base == other.base
    }
}

impl Eq for Field {}

/// Serializable description of a field: characteristic, total degree over the
/// prime field, and the modulus of the topmost extension step.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FieldDescriptor {
    pub p: u32,
    pub k: u32,
    pub modulus: Vec<u32>,
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Builds GF(p^k) over GF(p) with the lexicographically smallest monic
/// irreducible modulus (coefficients compared low degree first).
pub fn field_create(p: u32, k: u32) -> Result<Arc<Field>> {
    if !is_prime(p) {
        return Err(FieldError::NotPrime(p));
    }
    if k == 0 {
        return Err(FieldError::ZeroDegree);
    }
    let order = (p as u64).checked_pow(k).unwrap_or(u64::MAX);
    if order > MAX_FIELD_ORDER {
        return Err(FieldError::TooLarge(order));
    }
    let prime = Field::prime(p)?;
    if k == 1 {
        Ok(prime)
    } else {
        Field::extension(&prime, k)
    }
}

/// Polynomial helpers over a base field; coefficient vectors are low degree first.
mod poly {
    use super::Field;

    pub fn trim(mut a: Vec<u32>) -> Vec<u32> {
        while a.last() == Some(&0) {
            a.pop();
        }
        a
    }

    /// Remainder of `a` modulo the monic polynomial `m`.
    pub fn rem_monic(f: &Field, a: &[u32], m: &[u32]) -> Vec<u32> {
        let mut r = trim(a.to_vec());
        let dm = m.len() - 1;
        while r.len() > dm {
            let lead = *r.last().unwrap();
            let shift = r.len() - 1 - dm;
            for (i, &c) in m.iter().enumerate() {
                let t = f.mul(lead, c);
                r[shift + i] = f.sub(r[shift + i], t);
            }
            r = trim(r);
        }
        r
    }

    pub fn mul(f: &Field, a: &[u32], b: &[u32]) -> Vec<u32> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u32; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = f.add(out[i + j], f.mul(x, y));
            }
        }
        out
    }

    /// Monic polynomial of degree `d` whose lower coefficients are the base-`B`
    /// digits of `code`, least significant digit first.
    pub fn monic_from_code(code: u64, d: u32, base_order: u32) -> Vec<u32> {
        let mut c = code;
        let mut out = Vec::with_capacity(d as usize + 1);
        for _ in 0..d {
            out.push((c % base_order as u64) as u32);
            c /= base_order as u64;
        }
        out.push(1);
        out
    }

    /// Trial division by every monic polynomial of degree `1..=deg/2`.
    pub fn is_irreducible(f: &Field, m: &[u32]) -> bool {
        let deg = (m.len() - 1) as u32;
        let b = f.order() as u64;
        for d in 1..=deg / 2 {
            for code in 0..b.pow(d) {
                let divisor = monic_from_code(code, d, f.order());
                if rem_monic(f, m, &divisor).is_empty() {
                    return false;
                }
            }
        }
        true
    }
}

impl Field {
    fn prime(p: u32) -> Result<Arc<Field>> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        if p as u64 > MAX_FIELD_ORDER {
            return Err(FieldError::TooLarge(p as u64));
        }
        let mul = move |a: u32, b: u32| ((a as u64 * b as u64) % p as u64) as u32;
        let add = move |a: u32, b: u32| ((a as u64 + b as u64) % p as u64) as u32;
        let neg = move |a: u32| (p - a) % p;
        Ok(Arc::new(Self::assemble(
            p,
            1,
            None,
            vec![0, 1],
            p,
            add,
            neg,
            mul,
        )))
    }

    /// Degree-`k` extension of `base` by its lexicographically smallest monic
    /// irreducible polynomial. With `k = 2` this is the tower GF(q^2)/GF(q).
    pub fn extension(base: &Arc<Field>, k: u32) -> Result<Arc<Field>> {
        if k == 0 {
            return Err(FieldError::ZeroDegree);
        }
        let b = base.order as u64;
        let order = b.checked_pow(k).unwrap_or(u64::MAX);
        if order > MAX_FIELD_ORDER {
            return Err(FieldError::TooLarge(order));
        }
        let modulus = smallest_irreducible(base, k)?;
        let bo = base.order;
        let digits = move |x: u32| -> Vec<u32> {
            let mut v = Vec::with_capacity(k as usize);
            let mut x = x;
            for _ in 0..k {
                v.push(x % bo);
                x /= bo;
            }
            v
        };
        let undigits = move |v: &[u32]| -> u32 {
            let mut x = 0u32;
            for &c in v.iter().rev() {
                x = x * bo + c;
            }
            x
        };
        let base_add = Arc::clone(base);
        let add = move |a: u32, b: u32| {
            let (da, db) = (digits(a), digits(b));
            let s: Vec<u32> = da
                .iter()
                .zip(&db)
                .map(|(&x, &y)| base_add.add(x, y))
                .collect();
            undigits(&s)
        };
        let base_neg = Arc::clone(base);
        let neg = move |a: u32| {
            let s: Vec<u32> = digits(a).iter().map(|&x| base_neg.neg(x)).collect();
            undigits(&s)
        };
        let base_mul = Arc::clone(base);
        let m2 = modulus.clone();
        let mul = move |a: u32, b: u32| {
            let prod = poly::mul(&base_mul, &digits(a), &digits(b));
            let mut r = poly::rem_monic(&base_mul, &prod, &m2);
            r.resize(k as usize, 0);
            undigits(&r)
        };
        Ok(Arc::new(Self::assemble(
            base.p,
            k,
            Some(Arc::clone(base)),
            modulus,
            order as u32,
            add,
            neg,
            mul,
        )))
    }

    fn assemble(
        p: u32,
        degree: u32,
        base: Option<Arc<Field>>,
        modulus: Vec<u32>,
        order: u32,
        add: impl Fn(u32, u32) -> u32,
        neg: impl Fn(u32) -> u32,
        mul: impl Fn(u32, u32) -> u32,
    ) -> Field {
        let n = order as usize;
        let neg: Vec<u32> = (0..order).map(neg).collect();
        // smallest generator of the multiplicative group
        let mut exp = Vec::with_capacity(n.saturating_sub(1));
        let mut log = vec![0u32; n];
        if order == 2 {
            exp.push(1);
        } else {
            for g in 2..order {
                exp.clear();
                let mut x = 1u32;
                loop {
                    exp.push(x);
                    x = mul(x, g);
                    if x == 1 {
                        break;
                    }
                }
                if exp.len() == n - 1 {
                    break;
                }
            }
        }
        assert_eq!(
            exp.len(),
            n - 1,
            "multiplicative group is not cyclic: bad modulus"
        );
        for (i, &x) in exp.iter().enumerate() {
            log[x as usize] = i as u32;
        }
        let mut inv = vec![0u32; n];
        for x in 1..order {
            let l = log[x as usize] as usize;
            inv[x as usize] = exp[(n - 1 - l) % (n - 1)];
        }
        let (add_table, mul_table) = if order <= TABLE_LIMIT {
            let mut at = vec![0u32; n * n];
            let mut mt = vec![0u32; n * n];
            for a in 0..order {
                for b in 0..order {
                    at[a as usize * n + b as usize] = add(a, b);
                    mt[a as usize * n + b as usize] = mul(a, b);
                }
            }
            (Some(at), Some(mt))
        } else {
            (None, None)
        };
        let mut field = Field {
            p,
            degree,
            base,
            modulus,
            order,
            exp,
            log,
            inv,
            neg,
            conj: None,
            add_table,
            mul_table,
        };
        if field.degree == 2 {
            if let Some(b) = &field.base {
                let q = b.order;
                let conj: Vec<u32> = (0..order).map(|x| field.pow(x, q as u64)).collect();
                field.conj = Some(conj);
            }
        }
        field
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Degree over the immediate base (1 for a prime field).
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Degree over the prime field.
    pub fn absolute_degree(&self) -> u32 {
        self.degree * self.base.as_ref().map_or(1, |b| b.absolute_degree())
    }

    pub fn base(&self) -> Option<&Arc<Field>> {
        self.base.as_ref()
    }

    /// Monic modulus over the base, low degree first.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn is_tower(&self) -> bool {
        self.conj.is_some()
    }

    pub fn descriptor(&self) -> FieldDescriptor {
        FieldDescriptor {
            p: self.p,
            k: self.absolute_degree(),
            modulus: self.modulus.clone(),
        }
    }

    pub fn elements(&self) -> std::ops::Range<u32> {
        0..self.order
    }

    pub fn contains(&self, x: u32) -> bool {
        x < self.order
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        match &self.add_table {
            Some(t) => t[a as usize * self.order as usize + b as usize],
            None => self.add_slow(a, b),
        }
    }

    fn add_slow(&self, a: u32, b: u32) -> u32 {
        match &self.base {
            None => (a + b) % self.p,
            Some(base) => {
                let bo = base.order;
                let (mut a, mut b) = (a, b);
                let (mut out, mut scale) = (0u32, 1u32);
                for _ in 0..self.degree {
                    out += base.add(a % bo, b % bo) * scale;
                    a /= bo;
                    b /= bo;
                    scale = scale.wrapping_mul(bo);
                }
                out
            }
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        self.neg[a as usize]
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if let Some(t) = &self.mul_table {
            return t[a as usize * self.order as usize + b as usize];
        }
        if a == 0 || b == 0 {
            return 0;
        }
        let n1 = self.order as usize - 1;
        self.exp[(self.log[a as usize] as usize + self.log[b as usize] as usize) % n1]
    }

    /// Multiplicative inverse; `None` for zero.
    #[inline]
    pub fn inv(&self, a: u32) -> Option<u32> {
        (a != 0).then(|| self.inv[a as usize])
    }

    pub fn div(&self, a: u32, b: u32) -> Option<u32> {
        self.inv(b).map(|ib| self.mul(a, ib))
    }

    pub fn pow(&self, a: u32, e: u64) -> u32 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let n1 = self.order as u64 - 1;
        self.exp[((self.log[a as usize] as u64 * (e % n1)) % n1) as usize]
    }

    /// The Frobenius map x -> x^p.
    pub fn frobenius(&self, a: u32) -> u32 {
        self.pow(a, self.p as u64)
    }

    /// x -> x^q in a quadratic tower GF(q^2)/GF(q), obtained by repeated p-th powering.
    pub fn conjugate(&self, a: u32) -> Result<u32> {
        let conj = self.conj.as_ref().ok_or(FieldError::NotTower)?;
        conj.get(a as usize).copied().ok_or(FieldError::OutOfRange {
            value: a,
            order: self.order,
        })
    }

    /// Unchecked conjugation for hot loops; panics outside a tower.
    #[inline]
    pub fn conj(&self, a: u32) -> u32 {
        self.conj
            .as_ref()
            .expect("conjugation needs a quadratic tower")[a as usize]
    }

    /// Image of a base-field element in this tower (zero second coordinate).
    pub fn embed_subfield(&self, x: u32) -> Result<u32> {
        if !self.is_tower() {
            return Err(FieldError::NotTower);
        }
        let base = self.base.as_ref().expect("tower has a base");
        if x >= base.order {
            return Err(FieldError::OutOfRange {
                value: x,
                order: base.order,
            });
        }
        Ok(x)
    }

    /// True when `x` lies in the embedded base field of a tower.
    #[inline]
    pub fn in_subfield(&self, x: u32) -> bool {
        self.base.as_ref().is_some_and(|b| x < b.order)
    }

    /// Coefficients over the immediate base, low degree first.
    pub fn coefficients(&self, x: u32) -> Vec<u32> {
        let bo = self.base.as_ref().map_or(self.order, |b| b.order);
        let mut x = x;
        (0..self.degree)
            .map(|_| {
                let c = x % bo;
                x /= bo;
                c
            })
            .collect()
    }

    /// 1 in characteristic 2, otherwise the first nonzero `e` (index order)
    /// with `e^q = -e`.
    pub fn special_scalar(&self) -> Result<u32> {
        if !self.is_tower() {
            return Err(FieldError::NotTower);
        }
        if self.p == 2 {
            return Ok(1);
        }
        Ok((1..self.order)
            .find(|&e| self.conj(e) == self.neg(e))
            .expect("a trace-zero element exists in odd characteristic"))
    }
}

fn smallest_irreducible(base: &Field, k: u32) -> Result<Vec<u32>> {
    let b = base.order as u64;
    let total = b.pow(k);
    // enumeration order: compare c_0 first, then c_1, ..
    for rank in 0..total {
        // rank's most significant base-B digit is c_0
        let mut digits = vec![0u32; k as usize];
        let mut r = rank;
        for i in (0..k as usize).rev() {
            digits[i] = (r % b) as u32;
            r /= b;
        }
        let mut m = digits;
        m.push(1);
        if poly::is_irreducible(base, &m) {
            return Ok(m);
        }
    }
    Err(FieldError::NoIrreducible(k))
}

/// Public trial-division irreducibility test, for monic `m` over `base`.
pub fn is_irreducible(base: &Field, m: &[u32]) -> bool {
    m.len() >= 2 && m.last() == Some(&1) && poly::is_irreducible(base, m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// A field element bound to its field, for checked arithmetic.
#[derive(Clone)]
pub struct FieldElement {
    field: Arc<Field>,
    value: u32,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?}@GF({})",
            self.field.coefficients(self.value),
            self.field.order
        )
    }
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value && same_field(&self.field, &other.field)
    }
}

impl Eq for FieldElement {}

fn same_field(a: &Arc<Field>, b: &Arc<Field>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl FieldElement {
    pub fn new(field: &Arc<Field>, value: u32) -> Result<Self> {
        if !field.contains(value) {
            return Err(FieldError::OutOfRange {
                value,
                order: field.order,
            });
        }
        Ok(Self {
            field: Arc::clone(field),
            value,
        })
    }

    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    pub fn coefficients(&self) -> Vec<u32> {
        self.field.coefficients(self.value)
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn apply(&self, op: ArithOp, rhs: &FieldElement) -> Result<FieldElement> {
        if !same_field(&self.field, &rhs.field) {
            return Err(FieldError::Mismatch);
        }
        let f = &self.field;
        let value = match op {
            ArithOp::Add => f.add(self.value, rhs.value),
            ArithOp::Sub => f.sub(self.value, rhs.value),
            ArithOp::Mul => f.mul(self.value, rhs.value),
            ArithOp::Div => f
                .div(self.value, rhs.value)
                .ok_or(FieldError::DivisionByZero)?,
        };
        Ok(FieldElement {
            field: Arc::clone(f),
            value,
        })
    }

    pub fn inverse(&self) -> Result<FieldElement> {
        let value = self
            .field
            .inv(self.value)
            .ok_or(FieldError::DivisionByZero)?;
        Ok(FieldElement {
            field: Arc::clone(&self.field),
            value,
        })
    }

    pub fn conjugate(&self) -> Result<FieldElement> {
        let value = self.field.conjugate(self.value)?;
        Ok(FieldElement {
            field: Arc::clone(&self.field),
            value,
        })
    }
}

/// GF(q) together with its quadratic extension GF(q^2).
#[derive(Debug, Clone)]
pub struct FieldTower {
    pub sub: Arc<Field>,
    pub ext: Arc<Field>,
}

impl FieldTower {
    /// Builds GF(q) = GF(p^e) and GF(q^2) as its degree-2 extension.
    pub fn new(q: u32) -> Result<Self> {
        let (p, e) = prime_power(q).ok_or(FieldError::NotPrime(q))?;
        let sub = field_create(p, e)?;
        let ext = Field::extension(&sub, 2)?;
        Ok(Self { sub, ext })
    }

    pub fn q(&self) -> u32 {
        self.sub.order()
    }
}

/// Decomposes `n = p^e` with `p` prime, if possible.
pub fn prime_power(n: u32) -> Option<(u32, u32)> {
    if n < 2 {
        return None;
    }
    let p = (2..=n).find(|d| n % d == 0)?;
    let (mut m, mut e) = (n, 0);
    while m % p == 0 {
        m /= p;
        e += 1;
    }
    (m == 1).then_some((p, e))
}
