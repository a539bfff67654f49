//! Statement catalogue, the verification pipeline, and line-delimited JSON
//! report records.

use std::cell::OnceCell;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::covers::{self, CoverCandidate, SearchConfig, SearchMode, SearchOutcome};
use crate::geometry::{counts, GeometryBundle};
use crate::incidence::{self, Quadrangle, Sampling};
use crate::scheme::{self, RelationScheme};
use crate::verdict::{Finding, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Statement {
    GqAxioms,
    Eq1Counts,
    Lemma1,
    BrownTable,
    Lemma2,
    Lemma3,
    Thm3Scheme,
    Eq2Q,
    EIdempotents,
    Prop1,
    Thm2Rank,
    Thm2MStructure,
    LineProjections,
    CorSinv0v1,
    Thm1a,
    Thm1b,
}

impl Statement {
    pub const ALL: [Statement; 16] = [
        Statement::GqAxioms,
        Statement::Eq1Counts,
        Statement::Lemma1,
        Statement::BrownTable,
        Statement::Lemma2,
        Statement::Lemma3,
        Statement::Thm3Scheme,
        Statement::Eq2Q,
        Statement::EIdempotents,
        Statement::Prop1,
        Statement::Thm2Rank,
        Statement::Thm2MStructure,
        Statement::LineProjections,
        Statement::CorSinv0v1,
        Statement::Thm1a,
        Statement::Thm1b,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Statement::GqAxioms => "GQ-AXIOMS",
            Statement::Eq1Counts => "EQ1-COUNTS",
            Statement::Lemma1 => "LEMMA1",
            Statement::BrownTable => "BROWN-TABLE",
            Statement::Lemma2 => "LEMMA2",
            Statement::Lemma3 => "LEMMA3",
            Statement::Thm3Scheme => "THM3-SCHEME",
            Statement::Eq2Q => "EQ2-Q",
            Statement::EIdempotents => "E-IDEMPOTENTS",
            Statement::Prop1 => "PROP1",
            Statement::Thm2Rank => "THM2-RANK",
            Statement::Thm2MStructure => "THM2-M-STRUCTURE",
            Statement::LineProjections => "LINE-PROJECTIONS",
            Statement::CorSinv0v1 => "COR-SINV0V1",
            Statement::Thm1a => "THM1A",
            Statement::Thm1b => "THM1B",
        }
    }

    pub fn parse(id: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.id().eq_ignore_ascii_case(id.trim()))
    }
}

impl Serialize for Statement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.id())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub record: &'static str,
    pub statement: Statement,
    pub q: u32,
    pub params: Value,
    pub pass: bool,
    pub findings: Vec<Finding>,
    pub facts: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

impl CheckRecord {
    pub fn new(statement: Statement, q: u32, params: Value, verdict: Verdict) -> Self {
        Self {
            record: "check",
            statement,
            q,
            params,
            pass: verdict.pass() && !verdict.findings.is_empty(),
            findings: verdict.findings,
            facts: verdict.facts,
            elapsed_ms: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchRecord {
    pub record: &'static str,
    pub q: u32,
    pub m: usize,
    pub mode: SearchMode,
    pub seed: u64,
    pub dedup_sigma: bool,
    pub nodes: u64,
    pub exhausted: bool,
    pub tree_closed: bool,
    pub all_verified: bool,
    pub raw_solutions: usize,
    pub solutions: Vec<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

impl SearchRecord {
    pub fn new(b: &GeometryBundle, cfg: &SearchConfig, out: &SearchOutcome, timings: bool) -> Self {
        Self {
            record: "search",
            q: out.q,
            m: out.m,
            mode: out.mode,
            seed: cfg.seed,
            dedup_sigma: cfg.dedup_sigma,
            nodes: out.nodes,
            exhausted: out.exhausted,
            tree_closed: out.tree_closed,
            all_verified: out.all_verified,
            raw_solutions: out.raw_solutions,
            solutions: out.solutions.iter().map(|s| s.to_json(b)).collect(),
            elapsed_ms: timings.then(|| out.elapsed.as_millis() as u64),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub record: &'static str,
    pub tool_version: &'static str,
    pub q: u32,
    pub checksum: String,
}

/// A full run: header, check records, search records.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub header: Header,
    pub checks: Vec<CheckRecord>,
    pub searches: Vec<SearchRecord>,
}

impl RunReport {
    pub fn new(b: &GeometryBundle) -> Self {
        Self {
            header: Header {
                record: "header",
                tool_version: crate::TOOL_VERSION,
                q: b.q(),
                checksum: b.checksum(),
            },
            checks: Vec::new(),
            searches: Vec::new(),
        }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass) && self.searches.iter().all(|s| s.all_verified)
    }

    pub fn header_line(&self) -> String {
        serde_json::to_string(&self.header).expect("serializable")
    }

    /// Every record in order, one JSON object per line.
    pub fn to_json_lines(&self) -> String {
        let mut out = self.header_line();
        out.push('\n');
        for c in &self.checks {
            out.push_str(&serde_json::to_string(c).expect("serializable"));
            out.push('\n');
        }
        for s in &self.searches {
            out.push_str(&serde_json::to_string(s).expect("serializable"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub sampling: Sampling,
    pub timings: bool,
    /// Node budget for the cover searches run by the THM1A/THM1B statements when q > 2.
    pub search_budget_nodes: u64,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            sampling: Sampling::default(),
            timings: false,
            search_budget_nodes: 200_000,
            seed: 0,
        }
    }
}

/// Runs catalogue statements against one geometry, sharing derived objects.
pub struct Verifier<'a> {
    b: &'a GeometryBundle,
    opts: VerifyOptions,
    scheme: OnceCell<Result<RelationScheme, String>>,
    searches: OnceCell<Vec<(SearchConfig, Result<SearchOutcome, String>)>>,
}

fn unwind_message(e: Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "internal error".into())
}

fn failed(name: &str, witness: Value) -> Verdict {
    let mut v = Verdict::new();
    v.check(name, false, || witness);
    v
}

impl<'a> Verifier<'a> {
    pub fn new(b: &'a GeometryBundle, opts: VerifyOptions) -> Self {
        Self {
            b,
            opts,
            scheme: OnceCell::new(),
            searches: OnceCell::new(),
        }
    }

    fn scheme(&self) -> Result<&RelationScheme, String> {
        self.scheme
            .get_or_init(|| {
                catch_unwind(AssertUnwindSafe(|| {
                    RelationScheme::build(self.b).map_err(|e| e.to_string())
                }))
                .unwrap_or_else(|e| Err(unwind_message(e)))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Cover searches for every 0 < m < q: exhaustive at q = 2, budgeted above.
    fn searches(&self) -> &[(SearchConfig, Result<SearchOutcome, String>)] {
        self.searches.get_or_init(|| {
            let q = self.b.q() as usize;
            (1..q)
                .map(|m| {
                    let mut cfg = if q == 2 {
                        SearchConfig::exhaustive()
                    } else {
                        SearchConfig::budgeted(self.opts.search_budget_nodes)
                    };
                    cfg.seed = self.opts.seed;
                    let out = catch_unwind(AssertUnwindSafe(|| {
                        covers::search_covers(self.b, m, &cfg).map_err(|e| e.to_string())
                    }))
                    .unwrap_or_else(|e| Err(unwind_message(e)));
                    (cfg, out)
                })
                .collect()
        })
    }

    /// Trivial covers plus every cover found by the searches, with their m.
    fn covers(&self) -> Vec<(String, CoverCandidate)> {
        let n = self.b.num_ext_lines();
        let mut out = vec![
            ("empty".to_string(), CoverCandidate::empty(n)),
            ("all".to_string(), CoverCandidate::full(n)),
        ];
        for (_, res) in self.searches() {
            if let Ok(o) = res {
                for (k, s) in o.solutions.iter().enumerate() {
                    out.push((format!("m{}#{k}", o.m), s.clone()));
                }
            }
        }
        out
    }

    fn search_facts(&self, v: &mut Verdict) {
        let summary: Vec<Value> = self
            .searches()
            .iter()
            .map(|(cfg, r)| match r {
                Ok(o) => json!({"m": o.m, "mode": cfg.mode, "exhausted": o.exhausted, "tree_closed": o.tree_closed, "solutions": o.solutions.len(), "nodes": o.nodes}),
                Err(e) => json!({"error": e}),
            })
            .collect();
        v.fact("searches", summary);
    }

    pub fn run(&self, st: Statement) -> CheckRecord {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(|| self.verdict(st)))
            .unwrap_or_else(|e| failed("statement ran to completion", json!(unwind_message(e))));
        let mut rec = CheckRecord::new(st, self.b.q(), self.params(st), verdict);
        if self.opts.timings {
            rec.elapsed_ms = Some(start.elapsed().as_millis() as u64);
        }
        rec
    }

    fn params(&self, st: Statement) -> Value {
        let q = self.b.q();
        let s = &self.opts.sampling;
        match st {
            Statement::BrownTable | Statement::Lemma2 | Statement::Lemma3 => {
                if q <= s.exhaustive_up_to_q {
                    json!({"sampling": "exhaustive"})
                } else {
                    json!({"sampling": "budget", "sample_budget": s.budget, "seed": s.seed})
                }
            }
            Statement::Thm1a | Statement::Thm1b if q > 2 => {
                json!({"search": "budgeted", "budget_nodes": self.opts.search_budget_nodes})
            }
            Statement::Thm1a | Statement::Thm1b => json!({"search": "exhaustive"}),
            _ => json!({}),
        }
    }

    fn with_scheme(&self, f: impl FnOnce(&RelationScheme) -> Verdict) -> Verdict {
        match self.scheme() {
            Ok(s) => f(s),
            Err(e) => failed("relation scheme builds", json!(e)),
        }
    }

    fn verdict(&self, st: Statement) -> Verdict {
        let b = self.b;
        let sampling = &self.opts.sampling;
        match st {
            Statement::GqAxioms => {
                let mut v = Verdict::new();
                v.absorb("H: ", incidence::verify_gq(&Quadrangle::hermitian(b)));
                v.absorb("W: ", incidence::verify_gq(&Quadrangle::symplectic(b)));
                v
            }
            Statement::Eq1Counts => verify_counts(b),
            Statement::Lemma1 => {
                let mut v = Verdict::new();
                for (name, c) in self.covers() {
                    v.absorb(&format!("{name}: "), covers::verify_cover_size(b, &c));
                    v.check(
                        format!("{name}: complement closure"),
                        covers::complement_closure(b, &c),
                        || Value::Null,
                    );
                }
                v
            }
            Statement::BrownTable => {
                let mut v = Verdict::new();
                v.absorb("spreads: ", incidence::check_spreads(b));
                v.absorb("antipodes: ", incidence::check_antipodes(b));
                v.absorb("", incidence::spread_intersection_profile(b, sampling));
                v
            }
            Statement::Lemma2 => incidence::check_antipode_concurrency(b, sampling),
            Statement::Lemma3 => incidence::check_common_neighbours(b, sampling),
            Statement::Thm3Scheme => self.with_scheme(|s| scheme::verify_scheme_axioms(b, s)),
            Statement::Eq2Q => self.with_scheme(scheme::verify_q_matrix),
            Statement::EIdempotents => self.with_scheme(scheme::verify_idempotents),
            Statement::Prop1 => self.with_scheme(|s| {
                let mut v = Verdict::new();
                v.absorb("", scheme::verify_point_relation_identities(b, s));
                v.absorb("", scheme::verify_point_projections(b, s));
                v
            }),
            Statement::Thm2Rank => self.with_scheme(|s| scheme::verify_point_line_rank(b, s)),
            Statement::Thm2MStructure => scheme::verify_line_gram(b),
            Statement::LineProjections => {
                self.with_scheme(|s| scheme::verify_line_projections(b, s))
            }
            Statement::CorSinv0v1 => self.with_scheme(|s| {
                let mut v = Verdict::new();
                for (name, c) in self.covers() {
                    match covers::cover_degree_profile(b, &c).m {
                        Some(m) => {
                            v.absorb(
                                &format!("{name}: "),
                                covers::spectral_certificate(b, s, &c, m),
                            );
                            v.absorb(
                                &format!("{name}: "),
                                covers::verify_chi_r_relation_identities(b, s, &c, m),
                            );
                        }
                        None => v.check(format!("{name}: is a relative m-cover"), false, || {
                            Value::Null
                        }),
                    }
                }
                v
            }),
            Statement::Thm1a | Statement::Thm1b => {
                let mut v = Verdict::new();
                let mut nontrivial = 0;
                for (cfg, res) in self.searches() {
                    let o = match res {
                        Ok(o) => o,
                        Err(e) => {
                            v.check("search ran", false, || json!(e));
                            continue;
                        }
                    };
                    v.check(
                        format!("m={}: solutions pass the degree recount", o.m),
                        o.all_verified,
                        || Value::Null,
                    );
                    if cfg.mode == SearchMode::Exhaustive {
                        v.check(
                            format!("m={}: exhaustive search closed", o.m),
                            o.exhausted,
                            || json!({"nodes": o.nodes}),
                        );
                    }
                    for (k, s) in o.solutions.iter().enumerate() {
                        nontrivial += 1;
                        match covers::cover_structure_check(b, s) {
                            Ok((a, bb)) => {
                                let part = if st == Statement::Thm1a { a } else { bb };
                                v.absorb(&format!("m{}#{k}: ", o.m), part);
                            }
                            Err(e) => v.check(
                                format!("m{}#{k}: certificate precondition", o.m),
                                false,
                                || json!(e.to_string()),
                            ),
                        }
                    }
                }
                v.fact("nontrivial_covers", nontrivial);
                self.search_facts(&mut v);
                v
            }
        }
    }

    /// Runs `statements` in catalogue order.
    pub fn run_all(&self, statements: &[Statement]) -> Vec<CheckRecord> {
        let mut sel: Vec<Statement> = statements.to_vec();
        sel.sort();
        sel.dedup();
        sel.into_iter().map(|s| self.run(s)).collect()
    }
}

/// Measured counts against the closed forms, recounted from incidence.
pub fn verify_counts(b: &GeometryBundle) -> Verdict {
    let mut v = Verdict::new();
    let q = b.q() as usize;
    let pairs = [
        ("points", b.num_points(), counts::hermitian_points(q)),
        ("lines", b.num_lines(), counts::hermitian_lines(q)),
        ("W points", b.w_points().len(), counts::w_points(q)),
        ("W lines", b.w_lines().len(), counts::w_lines(q)),
        (
            "external points",
            b.num_ext_points(),
            counts::external_points(q),
        ),
        (
            "external lines",
            b.num_ext_lines(),
            counts::external_lines(q),
        ),
    ];
    for (name, found, expected) in pairs {
        v.check(
            format!("{name} count"),
            found == expected,
            || json!({"found": found, "expected": expected}),
        );
    }
    let dirty = b
        .ext_lines()
        .iter()
        .find(|&&l| b.line_points(l).iter().any(|&p| b.is_w_point(p)));
    v.check_first(
        "external lines contain no W point",
        dirty.map(|l| json!({"line": l})),
    );
    let partial = b.w_lines().iter().find(|&&l| {
        b.line_points(l)
            .iter()
            .filter(|&&p| b.is_w_point(p))
            .count()
            != q + 1
    });
    v.check_first(
        "W lines carry q+1 W points",
        partial.map(|l| json!({"line": l})),
    );
    let bad_point = b
        .ext_points()
        .iter()
        .find(|&&p| b.point_lines(p).iter().filter(|&&l| b.meets_w(l)).count() != 1);
    v.check_first(
        "each external point is on exactly one line meeting W",
        bad_point.map(|p| json!({"point": p})),
    );
    v.fact("points", b.num_points());
    v.fact("lines", b.num_lines());
    v.fact("external_points", b.num_ext_points());
    v.fact("external_lines", b.num_ext_lines());
    v
}

/// Runs a search and its per-solution THM1A/THM1B records.
pub fn run_search(
    b: &GeometryBundle,
    m: usize,
    cfg: &SearchConfig,
    timings: bool,
) -> Result<(SearchRecord, Vec<CheckRecord>), covers::SearchError> {
    let out = covers::search_covers(b, m, cfg)?;
    let rec = SearchRecord::new(b, cfg, &out, timings);
    let mut checks = Vec::new();
    for (k, s) in out.solutions.iter().enumerate() {
        let params = json!({"m": m, "solution": k});
        let (a, bb) = match covers::cover_structure_check(b, s) {
            Ok(pair) => pair,
            Err(e) => {
                let f = failed("certificate precondition", json!(e.to_string()));
                (f.clone(), f)
            }
        };
        checks.push(CheckRecord::new(Statement::Thm1a, b.q(), params.clone(), a));
        checks.push(CheckRecord::new(Statement::Thm1b, b.q(), params, bb));
    }
    Ok((rec, checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue_roundtrip() {
        assert_eq!(Statement::ALL.len(), 16);
        for s in Statement::ALL {
            assert_eq!(Statement::parse(s.id()), Some(s));
        }
        assert_eq!(Statement::parse("NOPE"), None);
        let mut sorted = Statement::ALL;
        sorted.sort();
        assert_eq!(sorted, Statement::ALL);
    }

    #[test]
    fn counts_q2() {
        let b = GeometryBundle::build(2).unwrap();
        let v = verify_counts(&b);
        assert!(v.pass());
        assert_eq!(v.facts["external_lines"], json!(12));
    }

    #[test]
    fn full_pipeline_q2() {
        let b = GeometryBundle::build(2).unwrap();
        let ver = Verifier::new(&b, VerifyOptions::default());
        let recs = ver.run_all(&Statement::ALL);
        assert_eq!(recs.len(), 16);
        for r in &recs {
            assert!(
                r.pass,
                "{}: {:?}",
                r.statement.id(),
                r.findings.iter().find(|f| !f.pass)
            );
            assert!(r.elapsed_ms.is_none());
        }
    }
}
