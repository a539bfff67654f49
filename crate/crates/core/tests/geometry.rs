use std::collections::BTreeSet;

use relcover::geometry::{CacheError, GeometryError, FORMAT_VERSION, MAGIC};
use relcover::GeometryBundle;

// Oracle for q = 2: GF(4) = {0, 1, w, w+1} with w^2 = w + 1, indices 0..4.
fn gf4_mul(a: u32, b: u32) -> u32 {
    const LOG: [i32; 4] = [-1, 0, 1, 2];
    const EXP: [u32; 3] = [1, 2, 3];
    if a == 0 || b == 0 {
        0
    } else {
        EXP[((LOG[a as usize] + LOG[b as usize]) % 3) as usize]
    }
}

fn gf4_conj(a: u32) -> u32 {
    gf4_mul(a, a)
}

/// x J conj(y)^T for J the standard symplectic matrix, over GF(4).
fn gf4_form(x: [u32; 4], y: [u32; 4]) -> u32 {
    let t = |a: u32, b: u32| gf4_mul(a, gf4_conj(b));
    t(x[0], y[1]) ^ t(x[1], y[0]) ^ t(x[2], y[3]) ^ t(x[3], y[2])
}

fn normalized_points_pg3_4() -> Vec<[u32; 4]> {
    let mut out = Vec::new();
    for code in 1..256u32 {
        let v = [code & 3, (code >> 2) & 3, (code >> 4) & 3, (code >> 6) & 3];
        if v.iter().find(|&&c| c != 0) == Some(&1) {
            out.push(v);
        }
    }
    out
}

#[test]
fn q2_points_match_brute_force() {
    let b = GeometryBundle::build(2).unwrap();
    let oracle: BTreeSet<[u32; 4]> = normalized_points_pg3_4()
        .into_iter()
        .filter(|&v| gf4_form(v, v) == 0)
        .collect();
    assert_eq!(normalized_points_pg3_4().len(), 85);
    assert_eq!(oracle.len(), 45);
    let built: BTreeSet<[u32; 4]> = b.points().iter().map(|p| p.coords()).collect();
    assert_eq!(built, oracle);
}

fn gf4_normalize(v: [u32; 4]) -> Option<[u32; 4]> {
    const INV: [u32; 4] = [0, 1, 3, 2];
    let lead = v.iter().copied().find(|&z| z != 0)?;
    Some(v.map(|z| gf4_mul(INV[lead as usize], z)))
}

#[test]
fn q2_lines_match_brute_force() {
    let b = GeometryBundle::build(2).unwrap();
    let iso: Vec<[u32; 4]> = normalized_points_pg3_4()
        .into_iter()
        .filter(|&v| gf4_form(v, v) == 0)
        .collect();
    let mut oracle_lines: BTreeSet<Vec<[u32; 4]>> = BTreeSet::new();
    for (i, &a) in iso.iter().enumerate() {
        for &c in &iso[i + 1..] {
            if gf4_form(a, c) != 0 {
                continue;
            }
            let span: BTreeSet<[u32; 4]> = (0..4)
                .flat_map(|s| (0..4).map(move |t| (s, t)))
                .filter_map(|(s, t)| {
                    gf4_normalize(std::array::from_fn(|k| gf4_mul(s, a[k]) ^ gf4_mul(t, c[k])))
                })
                .collect();
            assert_eq!(span.len(), 5);
            assert!(span.iter().all(|&x| gf4_form(x, x) == 0));
            oracle_lines.insert(span.into_iter().collect());
        }
    }
    assert_eq!(oracle_lines.len(), 27);
    let built: BTreeSet<Vec<[u32; 4]>> = (0..b.num_lines())
        .map(|l| {
            let mut v: Vec<[u32; 4]> = b
                .line_points(l)
                .iter()
                .map(|&p| b.points()[p].coords())
                .collect();
            v.sort();
            v
        })
        .collect();
    assert_eq!(built, oracle_lines);
}

#[test]
fn counts_all_q() {
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
                b.w_lines().len(),
                b.num_ext_points(),
                b.num_ext_lines()
            ),
            (pts, lines, wp, wl, ep, el),
            "q={q}"
        );
    }
}

#[test]
fn incidence_regularity_and_sigma() {
    for q in [2u32, 3] {
        let b = GeometryBundle::build(q).unwrap();
        let qs = q as usize;
        for p in 0..b.num_points() {
            assert_eq!(b.point_lines(p).len(), qs + 1);
        }
        for &p in b.ext_points() {
            assert_eq!(
                b.point_lines(p).iter().filter(|&&l| b.meets_w(l)).count(),
                1
            );
        }
        for l in 0..b.num_lines() {
            for &p in b.line_points(l) {
                assert!(b.incident(b.sigma_point(p), b.sigma_line(l)));
            }
            assert_eq!(b.sigma_line(b.sigma_line(l)), l);
        }
        for &p in b.w_points() {
            assert_eq!(b.sigma_point(p), p);
        }
        for &l in b.w_lines() {
            assert_eq!(b.sigma_line(l), l);
        }
        for &l in b.ext_lines() {
            assert_ne!(b.sigma_line(l), l);
        }
    }
}

#[test]
fn subgeometry_points_are_the_rational_points_q3() {
    let b = GeometryBundle::build(3).unwrap();
    let f = b.field();
    let sub: Vec<[u32; 4]> = relcover::geometry::all_points(&b.tower().sub)
        .iter()
        .map(|x| x.coords().map(|c| f.embed_subfield(c).unwrap()))
        .collect();
    assert_eq!(sub.len(), 40);
    for v in &sub {
        assert_eq!(relcover::geometry::hermitian_form(f, b.gram(), v, v), 0);
    }
    let w: BTreeSet<[u32; 4]> = b
        .w_points()
        .iter()
        .map(|&p| b.points()[p].coords())
        .collect();
    assert_eq!(w, sub.into_iter().collect());
}

#[test]
fn cache_roundtrip_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    for q in [2u32, 3] {
        let a = GeometryBundle::build(q).unwrap().to_cache_bytes();
        let b = GeometryBundle::build(q).unwrap().to_cache_bytes();
        assert_eq!(a, b, "build is deterministic");
        assert_eq!(&a[..8], MAGIC);
        let path = dir.path().join(format!("q{q}.geom"));
        std::fs::write(&path, &a).unwrap();
        let loaded = GeometryBundle::from_cache_bytes(&std::fs::read(&path).unwrap()).unwrap();
        assert_eq!(loaded.to_cache_bytes(), a, "round trip is bit exact");
        assert_eq!(
            loaded.antipodes(),
            GeometryBundle::build(q).unwrap().antipodes()
        );
    }
    assert_eq!(FORMAT_VERSION, 1);
}

#[test]
fn cache_corruption_detected() {
    let bytes = GeometryBundle::build(2).unwrap().to_cache_bytes();
    for at in [0usize, 9, bytes.len() / 2, bytes.len() - 1] {
        let mut bad = bytes.clone();
        bad[at] ^= 0x01;
        assert!(
            GeometryBundle::from_cache_bytes(&bad).is_err(),
            "flip at {at}"
        );
    }
    let truncated = &bytes[..bytes.len() - 40];
    assert!(matches!(
        GeometryBundle::from_cache_bytes(truncated),
        Err(GeometryError::Cache(
            CacheError::Truncated | CacheError::ChecksumMismatch
        ))
    ));
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
