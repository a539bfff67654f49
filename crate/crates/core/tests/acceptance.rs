//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! Runs as a plain binary (`harness = false`), so `cargo test --test acceptance`
//! prints the table directly.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use relcover::covers::{
    cover_degree_profile, cover_structure_check, search_covers, spectral_certificate,
    verify_chi_r_relation_identities,
};
use relcover::incidence::Sampling;
use relcover::report::{run_search, CheckRecord, RunReport, Verifier, VerifyOptions};
use relcover::scheme::expected_valencies;
use relcover::{CoverCandidate, GeometryBundle, RelationScheme, SearchConfig, Statement};

const QS: [u32; 3] = [2, 3, 4];

struct Ctx {
    bundles: Vec<GeometryBundle>,
    build_times: Vec<Duration>,
}

impl Ctx {
    fn bundle(&self, q: u32) -> &GeometryBundle {
        &self.bundles[QS.iter().position(|&x| x == q).unwrap()]
    }

    fn verifier(&self, q: u32) -> Verifier<'_> {
        Verifier::new(self.bundle(q), VerifyOptions::default())
    }
}

/// Outcome of one criterion: pass flag and a short summary.
struct Outcome {
    pass: bool,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            pass: true,
            notes: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, note: impl Into<String>) {
        let note = note.into();
        if !ok {
            self.pass = false;
            self.notes.push(format!("FAILED {note}"));
        } else {
            self.notes.push(note);
        }
    }

    fn record(&mut self, rec: &CheckRecord) {
        let first_bad = rec
            .findings
            .iter()
            .find(|f| !f.pass)
            .map(|f| f.name.clone());
        let msg = match first_bad {
            None => format!("{} q={} ok", rec.statement.id(), rec.q),
            Some(n) => format!("{} q={} ({n})", rec.statement.id(), rec.q),
        };
        self.require(rec.pass, msg);
    }

    fn within(&mut self, what: &str, elapsed: Duration, limit: Duration) {
        self.require(
            elapsed <= limit,
            format!(
                "{what} {:.2}s <= {:.0}s",
                elapsed.as_secs_f64(),
                limit.as_secs_f64()
            ),
        );
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn counts(ctx: &Ctx) -> Outcome {
    let mut o = Outcome::new();
    let expected = [(2, 30, 12), (3, 240, 72), (4, 1020, 240)];
    for (i, (q, pe, le)) in expected.into_iter().enumerate() {
        let b = ctx.bundle(q);
        let start = Instant::now();
        let rec = ctx.verifier(q).run(Statement::Eq1Counts);
        let elapsed = ctx.build_times[i] + start.elapsed();
        o.record(&rec);
        o.require(
            (b.num_ext_points(), b.num_ext_lines()) == (pe, le),
            format!(
                "q={q} (|P_E|,|L_E|)=({},{})",
                b.num_ext_points(),
                b.num_ext_lines()
            ),
        );
        o.within(
            &format!("q={q}"),
            elapsed,
            if q == 4 { secs(30) } else { secs(1) },
        );
    }
    o
}

fn statements(ctx: &Ctx, sts: &[Statement]) -> Outcome {
    let mut o = Outcome::new();
    for q in QS {
        let v = ctx.verifier(q);
        for &st in sts {
            o.record(&v.run(st));
        }
    }
    o
}

fn spreads(ctx: &Ctx) -> Outcome {
    let mut o = Outcome::new();
    for q in QS {
        let rec = ctx.verifier(q).run(Statement::BrownTable);
        o.record(&rec);
        let cov = &rec.facts["coverage"];
        if q == 4 {
            let n = cov["checked"].as_u64().unwrap_or(0);
            o.require(n >= 10_000, format!("q=4 sampled pairs {n}"));
        } else {
            o.require(cov["mode"] == "exhaustive", format!("q={q} exhaustive"));
        }
    }
    o
}

fn scheme(ctx: &Ctx) -> Outcome {
    let mut o = Outcome::new();
    let limits = [secs(1), secs(60), secs(600)];
    for (q, limit) in QS.into_iter().zip(limits) {
        let start = Instant::now();
        let b = ctx.bundle(q);
        let s = match RelationScheme::build(b) {
            Ok(s) => s,
            Err(e) => {
                o.require(false, format!("q={q} scheme: {e}"));
                continue;
            }
        };
        o.require(
            s.valencies() == expected_valencies(q),
            format!("q={q} valencies {:?}", s.valencies()),
        );
        let v = ctx.verifier(q);
        for st in [
            Statement::Thm3Scheme,
            Statement::Eq2Q,
            Statement::EIdempotents,
        ] {
            let rec = v.run(st);
            if st == Statement::EIdempotents {
                o.require(
                    true,
                    format!(
                        "q={q} ranks {}",
                        rec.facts
                            .get("ranks")
                            .map(|r| r.to_string())
                            .unwrap_or_default()
                    ),
                );
            }
            o.record(&rec);
        }
        if q == 2 {
            o.require(
                s.multiplicities()[2] == 0 && s.idempotent_scaled(2).is_zero(),
                "q=2 E_2 = 0",
            );
        }
        o.within(&format!("q={q}"), start.elapsed(), limit);
    }
    o
}

fn point_line_rank(ctx: &Ctx) -> Outcome {
    let mut o = Outcome::new();
    for q in QS {
        let v = ctx.verifier(q);
        let rank = v.run(Statement::Thm2Rank);
        o.record(&rank);
        let r = rank.facts.get("rank").and_then(|x| x.as_u64());
        match q {
            2 => o.require(r == Some(11), format!("q=2 rank {r:?}")),
            3 => o.require(r == Some(66), format!("q=3 rank {r:?}")),
            _ => o.require(r.is_some(), format!("q={q} rank {r:?}")),
        }
        o.record(&v.run(Statement::Thm2MStructure));
    }
    o
}

fn check_cover(
    o: &mut Outcome,
    b: &GeometryBundle,
    s: &RelationScheme,
    r: &CoverCandidate,
    label: &str,
) {
    let m = cover_degree_profile(b, r).m;
    o.require(m.is_some(), format!("{label} is a cover (m={m:?})"));
    let Some(m) = m else { return };
    match cover_structure_check(b, r) {
        Ok((a, t)) => o.require(
            a.pass() && t.pass(),
            format!("{label} q even, m=q/2, sigma(R) = complement"),
        ),
        Err(e) => o.require(false, format!("{label} {e}")),
    }
    o.require(
        spectral_certificate(b, s, r, m).pass(),
        format!("{label} spectral certificate"),
    );
}

fn q2_search(ctx: &Ctx) -> Outcome {
    let mut o = Outcome::new();
    let b = ctx.bundle(2);
    let s = RelationScheme::build(b).expect("scheme at q=2");
    let start = Instant::now();
    let out = match search_covers(b, 1, &SearchConfig::exhaustive()) {
        Ok(x) => x,
        Err(e) => {
            o.require(false, e.to_string());
            return o;
        }
    };
    o.within("search", start.elapsed(), secs(1));
    o.require(
        out.exhausted,
        format!("exhausted after {} nodes", out.nodes),
    );
    o.require(
        true,
        format!("{} relative hemisystems", out.solutions.len()),
    );
    for (k, r) in out.solutions.iter().enumerate() {
        o.require(r.len() == 6, format!("#{k} |R|={}", r.len()));
        check_cover(&mut o, b, &s, r, &format!("#{k}"));
    }
    o
}

fn q3_search(ctx: &Ctx) -> Outcome {
    let mut o = Outcome::new();
    let b = ctx.bundle(3);
    let start = Instant::now();
    match search_covers(b, 1, &SearchConfig::exhaustive()) {
        Ok(out) => {
            o.require(
                out.solutions.is_empty(),
                format!("{} solutions", out.solutions.len()),
            );
            o.require(
                out.exhausted,
                format!("exhausted after {} nodes", out.nodes),
            );
        }
        Err(e) => o.require(false, e.to_string()),
    }
    o.within("search", start.elapsed(), secs(600));
    o
}

fn certificates(ctx: &Ctx) -> Outcome {
    let mut o = Outcome::new();
    for q in QS {
        let b = ctx.bundle(q);
        let s = RelationScheme::build(b).expect("scheme");
        let full = CoverCandidate::full(b.num_ext_lines());
        let ok = verify_chi_r_relation_identities(b, &s, &full, q as usize).pass()
            && spectral_certificate(b, &s, &full, q as usize).pass();
        o.require(ok, format!("q={q} trivial cover identities"));
        o.record(&ctx.verifier(q).run(Statement::CorSinv0v1));
    }
    o
}

fn determinism(ctx: &Ctx) -> Outcome {
    let mut o = Outcome::new();
    for q in QS {
        let again = GeometryBundle::build(q).expect("rebuild").to_cache_bytes();
        o.require(
            again == ctx.bundle(q).to_cache_bytes(),
            format!("q={q} cache bytes identical"),
        );
    }
    for q in [2u32, 3] {
        let report = |b: &GeometryBundle| {
            let mut r = RunReport::new(b);
            let opts = VerifyOptions {
                sampling: Sampling::default(),
                ..VerifyOptions::default()
            };
            r.checks = Verifier::new(b, opts).run_all(&Statement::ALL);
            r.to_json_lines()
        };
        o.require(
            report(ctx.bundle(q)) == report(ctx.bundle(q)),
            format!("q={q} verify report identical"),
        );
    }
    let b = ctx.bundle(4);
    let cfg = SearchConfig {
        seed: 11,
        ..SearchConfig::budgeted(20_000)
    };
    let run = || {
        let (rec, checks) = run_search(b, 2, &cfg, false).expect("search");
        let mut s = serde_json::to_string(&rec).unwrap();
        for c in checks {
            s.push_str(&serde_json::to_string(&c).unwrap());
        }
        s
    };
    o.require(run() == run(), "q=4 m=2 seeded search identical");
    o
}

fn main() -> ExitCode {
    let mut bundles = Vec::new();
    let mut build_times = Vec::new();
    for q in QS {
        let start = Instant::now();
        bundles.push(GeometryBundle::build(q).expect("geometry builds"));
        build_times.push(start.elapsed());
    }
    let ctx = Ctx {
        bundles,
        build_times,
    };

    type Criterion = (&'static str, fn(&Ctx) -> Outcome);
    let criteria: [Criterion; 11] = [
        ("counts", counts),
        ("GQ axioms", |c| statements(c, &[Statement::GqAxioms])),
        ("spread intersections", spreads),
        ("common-neighbour counts", |c| {
            statements(c, &[Statement::Lemma2, Statement::Lemma3])
        }),
        ("association scheme", scheme),
        ("point projections", |c| statements(c, &[Statement::Prop1])),
        ("point-line rank and M", point_line_rank),
        ("q=2 cover search", q2_search),
        ("q=3 cover search", q3_search),
        ("certificate identities", certificates),
        ("determinism", determinism),
    ];

    let mut all = true;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = std::panic::catch_unwind(|| f(&ctx)).unwrap_or_else(|_| Outcome {
            pass: false,
            notes: vec!["panicked".into()],
        });
        all &= out.pass;
        println!(
            "criterion {:>2} {:<24} {} [{:.2}s] {}",
            i + 1,
            name,
            if out.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            out.notes.join("; ")
        );
    }
    println!("acceptance: {}", if all { "PASS" } else { "FAIL" });
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
