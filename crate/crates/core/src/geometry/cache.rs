//! Binary geometry cache.
//!
//! Layout, all integers little-endian `u32` unless noted:
//!
//! ```text
//! magic            8 bytes  "RLCVGEOM"
//! format_version   u32      FORMAT_VERSION
//! q, n_points, n_lines
//! GF(q):    p, k, modulus_len, modulus[..]      (monic, low degree first, over GF(p))
//! GF(q^2):  modulus_len, modulus[..]            (monic quadratic over GF(q))
//! gram      16 x u32                             (row-major)
//! points    n_points x 4 x u32
//! lines     n_lines x 8 x u32                    (RREF rows)
//! incidence for each line: count, point indices[..]
//! w_points, w_lines, ext_points, ext_lines:      each count, indices[..]
//! sigma_points  n_points x u32
//! sigma_lines   n_lines x u32
//! antipode      count, positions[..]            (over external-line positions)
//! checksum      32 bytes SHA-256 of every preceding byte
//! ```
//!
//! Encoding is a pure function of the bundle, so equal geometries give
//! byte-identical files.

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{GeometryBundle, ProjLine, ProjPoint, RawParts};
use crate::field::{Field, FieldTower};

pub const MAGIC: &[u8; 8] = b"RLCVGEOM";
pub const FORMAT_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CacheError {
    #[error("not a geometry cache (bad magic)")]
    BadMagic,
    #[error("unsupported cache format version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("cache truncated")]
    Truncated,
    #[error("cache checksum mismatch")]
    ChecksumMismatch,
    #[error("invalid cache contents: {0}")]
    Invalid(String),
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, x: u32) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn usize(&mut self, x: usize) {
        self.u32(u32::try_from(x).expect("index fits in u32"));
    }
    fn list(&mut self, xs: &[usize]) {
        self.usize(xs.len());
        xs.iter().for_each(|&x| self.usize(x));
    }
    fn words(&mut self, xs: &[u32]) {
        self.usize(xs.len());
        xs.iter().for_each(|&x| self.u32(x));
    }
}

pub(super) fn encode(b: &GeometryBundle) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(FORMAT_VERSION);
    w.u32(b.q);
    w.usize(b.points.len());
    w.usize(b.lines.len());
    let sub = &b.tower.sub;
    w.u32(sub.characteristic());
    w.u32(sub.absolute_degree());
    w.words(sub.modulus());
    w.words(b.tower.ext.modulus());
    b.gram.iter().flatten().for_each(|&x| w.u32(x));
    b.points.iter().flat_map(|p| p.0).for_each(|x| w.u32(x));
    b.lines
        .iter()
        .flat_map(|l| l.0.into_iter().flatten())
        .for_each(|x| w.u32(x));
    b.line_points.iter().for_each(|pts| w.list(pts));
    w.list(&b.w_points);
    w.list(&b.w_lines);
    w.list(&b.ext_points);
    w.list(&b.ext_lines);
    b.sigma_points.iter().for_each(|&x| w.usize(x));
    b.sigma_lines.iter().for_each(|&x| w.usize(x));
    w.list(&b.antipode);
    let digest = Sha256::digest(&w.0);
    w.0.extend_from_slice(&digest);
    w.0
}

pub(super) fn checksum_hex(bytes: &[u8]) -> String {
    bytes[bytes.len() - CHECKSUM_LEN..]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn u32(&mut self) -> Result<u32, CacheError> {
        let bytes = self
            .buf
            .get(self.pos..self.pos + 4)
            .ok_or(CacheError::Truncated)?;
        self.pos += 4;
        Ok(u32::from_le_bytes(bytes.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize, CacheError> {
        self.u32().map(|x| x as usize)
    }
    fn bounded(&mut self, bound: usize) -> Result<usize, CacheError> {
        let x = self.usize()?;
        if x >= bound {
            return Err(CacheError::Invalid(format!(
                "index {x} out of range {bound}"
            )));
        }
        Ok(x)
    }
    fn count(&mut self, cap: usize) -> Result<usize, CacheError> {
        let n = self.usize()?;
        if n > cap {
            return Err(CacheError::Invalid(format!("count {n} exceeds {cap}")));
        }
        Ok(n)
    }
    fn list(&mut self, bound: usize) -> Result<Vec<usize>, CacheError> {
        let n = self.count(bound)?;
        (0..n).map(|_| self.bounded(bound)).collect()
    }
    fn words(&mut self, cap: usize) -> Result<Vec<u32>, CacheError> {
        let n = self.count(cap)?;
        (0..n).map(|_| self.u32()).collect()
    }
}

pub(super) fn decode(bytes: &[u8]) -> Result<GeometryBundle, CacheError> {
    if bytes.len() < MAGIC.len() + 4 + CHECKSUM_LEN {
        return Err(CacheError::Truncated);
    }
    if &bytes[..MAGIC.len()] != MAGIC {
        return Err(CacheError::BadMagic);
    }
    let (body, digest) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    let mut r = Reader {
        buf: body,
        pos: MAGIC.len(),
    };
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(CacheError::UnsupportedVersion(version));
    }
    if Sha256::digest(body).as_slice() != digest {
        return Err(CacheError::ChecksumMismatch);
    }
    let q = r.u32()?;
    let np = r.usize()?;
    let nl = r.usize()?;
    let p = r.u32()?;
    let k = r.u32()?;
    let sub_mod = r.words(64)?;
    let ext_mod = r.words(64)?;
    let tower = FieldTower::new(q).map_err(|e| CacheError::Invalid(e.to_string()))?;
    if tower.sub.characteristic() != p || tower.sub.absolute_degree() != k {
        return Err(CacheError::Invalid(format!(
            "field GF({p}^{k}) does not match q = {q}"
        )));
    }
    check_modulus(&tower.sub, &sub_mod)?;
    check_modulus(&tower.ext, &ext_mod)?;
    let order = tower.ext.order();
    let elem = |r: &mut Reader| -> Result<u32, CacheError> {
        let x = r.u32()?;
        if x >= order {
            return Err(CacheError::Invalid(format!(
                "field element {x} out of range"
            )));
        }
        Ok(x)
    };
    let mut gram = [[0u32; 4]; 4];
    for row in gram.iter_mut() {
        for x in row.iter_mut() {
            *x = elem(&mut r)?;
        }
    }
    let expected_bytes = np.checked_mul(16).ok_or(CacheError::Truncated)?;
    if expected_bytes > body.len() {
        return Err(CacheError::Truncated);
    }
    let mut points = Vec::with_capacity(np);
    for _ in 0..np {
        let mut v = [0u32; 4];
        for x in v.iter_mut() {
            *x = elem(&mut r)?;
        }
        points.push(ProjPoint(v));
    }
    let mut lines = Vec::with_capacity(nl.min(body.len() / 32));
    for _ in 0..nl {
        let mut m = [[0u32; 4]; 2];
        for row in m.iter_mut() {
            for x in row.iter_mut() {
                *x = elem(&mut r)?;
            }
        }
        lines.push(ProjLine(m));
    }
    let mut line_points = Vec::with_capacity(nl);
    for _ in 0..nl {
        line_points.push(r.list(np)?);
    }
    let w_points = r.list(np)?;
    let w_lines = r.list(nl)?;
    let ext_points = r.list(np)?;
    let ext_lines = r.list(nl)?;
    let sigma_points = (0..np)
        .map(|_| r.bounded(np))
        .collect::<Result<Vec<_>, _>>()?;
    let sigma_lines = (0..nl)
        .map(|_| r.bounded(nl))
        .collect::<Result<Vec<_>, _>>()?;
    let antipode = r.list(ext_lines.len())?;
    if antipode.len() != ext_lines.len() {
        return Err(CacheError::Invalid("antipode table length".into()));
    }
    if r.pos != body.len() {
        return Err(CacheError::Invalid(format!(
            "{} trailing bytes",
            body.len() - r.pos
        )));
    }
    Ok(GeometryBundle::from_parts(RawParts {
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
        antipode,
    }))
}

fn check_modulus(f: &Field, stored: &[u32]) -> Result<(), CacheError> {
    if f.modulus() != stored {
        return Err(CacheError::Invalid(format!(
            "modulus {stored:?} differs from the deterministic choice {:?}",
            f.modulus()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        for q in [2, 3] {
            let b = GeometryBundle::build(q).unwrap();
            let bytes = b.to_cache_bytes();
            let back = GeometryBundle::from_cache_bytes(&bytes).unwrap();
            assert_eq!(back.to_cache_bytes(), bytes);
            assert_eq!(back.antipodes(), b.antipodes());
            assert_eq!(back.ext_lines(), b.ext_lines());
        }
    }

    #[test]
    fn rebuild_is_byte_identical() {
        assert_eq!(
            GeometryBundle::build(2).unwrap().to_cache_bytes(),
            GeometryBundle::build(2).unwrap().to_cache_bytes()
        );
    }

    #[test]
    fn header_records_counts() {
        let bytes = GeometryBundle::build(2).unwrap().to_cache_bytes();
        let word = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap());
        assert_eq!(
            (word(0), word(1), word(2), word(3)),
            (FORMAT_VERSION, 2, 45, 27)
        );
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = GeometryBundle::build(2).unwrap().to_cache_bytes();
        let mut flipped = bytes.clone();
        flipped[200] ^= 1;
        assert_eq!(decode(&flipped).unwrap_err(), CacheError::ChecksumMismatch);
        assert_eq!(
            decode(&bytes[..bytes.len() - 1]).unwrap_err(),
            CacheError::ChecksumMismatch
        );
        assert_eq!(decode(&bytes[..10]).unwrap_err(), CacheError::Truncated);
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert_eq!(decode(&magic).unwrap_err(), CacheError::BadMagic);
        let mut version = bytes.clone();
        version[8] = 9;
        assert_eq!(
            decode(&version).unwrap_err(),
            CacheError::UnsupportedVersion(9)
        );
    }
}
