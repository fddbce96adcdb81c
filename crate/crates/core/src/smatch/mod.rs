//! Smatch: F-score of matching triples under the best injective variable
//! mapping, found by restarted hill climbing.

mod align;
mod diff;
mod oracle;

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{map_indexed, Execution};
use crate::graph::{check_line, err_rate_counts, BuildOptions, IllFormedReport};
use crate::penman::{drg_triples, TripleSet};
use crate::seeds::rng_for_index;
use crate::sequence::SymbolInventory;

pub(crate) use align::Alignment;
pub use diff::{classify_diff, DiffCategory, DiffFinding, DiffReport};
pub use oracle::ORACLE_MAX_VARS;

pub const DEFAULT_RESTARTS: usize = 4;
pub const DEFAULT_SEED: u64 = 0;

/// Partial injective map from system variables to gold variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mapping(pub BTreeMap<String, String>);

impl Mapping {
    pub fn get(&self, system_var: &str) -> Option<&str> {
        self.0.get(system_var).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmatchScore {
    pub matched: usize,
    pub total_system: usize,
    pub total_gold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mapping: Mapping,
}

/// Precision, recall and F1 from counts; each is 0 when undefined.
pub fn prf(matched: usize, total_system: usize, total_gold: usize) -> (f64, f64, f64) {
    let p = if total_system == 0 { 0.0 } else { matched as f64 / total_system as f64 };
    let r = if total_gold == 0 { 0.0 } else { matched as f64 / total_gold as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

impl SmatchScore {
    fn from_alignment(al: &Alignment, map: &[Option<usize>], matched: u32, transposed: bool) -> SmatchScore {
        let mut pairs = BTreeMap::new();
        for (a, b) in map.iter().enumerate() {
            if let Some(b) = b {
                let (x, y) = (al.vars_a[a].clone(), al.vars_b[*b].clone());
                if transposed {
                    pairs.insert(y, x);
                } else {
                    pairs.insert(x, y);
                }
            }
        }
        let (ts, tg) = if transposed { (al.total_b, al.total_a) } else { (al.total_a, al.total_b) };
        let matched = matched as usize;
        let (precision, recall, f1) = prf(matched, ts, tg);
        SmatchScore { matched, total_system: ts, total_gold: tg, precision, recall, f1, mapping: Mapping(pairs) }
    }
}

#[derive(Debug, Error)]
pub enum SmatchError {
    #[error("exact scoring is bounded to {bound} variables on the smaller side, got {vars}")]
    TooLarge { vars: usize, bound: usize },
    #[error("system has {system} lines but gold has {gold}")]
    Misaligned { system: usize, gold: usize },
    #[error("gold line {line} is ill-formed: {report}")]
    GoldIllFormed { line: usize, report: IllFormedReport },
}

fn labels(t: &TripleSet, vars: &[String]) -> Vec<Option<String>> {
    vars.iter().map(|v| t.instance_of(v).map(str::to_string)).collect()
}

/// Hill-climbing Smatch. Restart 0 starts from the greedy label match, the
/// rest from random injective maps drawn from `rng`. `restarts` below 1 is
/// treated as 1.
pub fn smatch_with_rng<R: Rng>(system: &TripleSet, gold: &TripleSet, restarts: usize, rng: &mut R) -> SmatchScore {
    let al = Alignment::new(system, gold);
    let la = labels(system, &al.vars_a);
    let lb = labels(gold, &al.vars_b);
    let la: Vec<Option<&str>> = la.iter().map(|l| l.as_deref()).collect();
    let lb: Vec<Option<&str>> = lb.iter().map(|l| l.as_deref()).collect();

    let mut best = al.climb(al.greedy_start(&la, &lb));
    for _ in 1..restarts.max(1) {
        let cand = al.climb(al.random_start(rng));
        if cand.1 > best.1 {
            best = cand;
        }
    }
    SmatchScore::from_alignment(&al, &best.0, best.1, false)
}

/// Deterministic in `(system, gold, restarts, seed)`.
pub fn smatch_score(system: &TripleSet, gold: &TripleSet, restarts: usize, seed: u64) -> SmatchScore {
    smatch_with_rng(system, gold, restarts, &mut rng_for_index(seed, 0))
}

/// Exact Smatch by enumeration.
pub fn smatch_oracle(system: &TripleSet, gold: &TripleSet) -> Result<SmatchScore, SmatchError> {
    smatch_exact(system, gold, ORACLE_MAX_VARS)
}

/// [`smatch_oracle`] with a caller-chosen size bound. Branch and bound keeps
/// typical DRS graphs of a dozen variables fast, but the worst case is
/// factorial.
pub fn smatch_exact(system: &TripleSet, gold: &TripleSet, max_vars: usize) -> Result<SmatchScore, SmatchError> {
    let (ns, ng) = (system.variables().len(), gold.variables().len());
    if ns.min(ng) > max_vars {
        return Err(SmatchError::TooLarge { vars: ns.min(ng), bound: max_vars });
    }
    let transposed = ns > ng;
    let al = if transposed { Alignment::new(gold, system) } else { Alignment::new(system, gold) };
    let (map, matched) = oracle::exhaustive(&al);
    Ok(SmatchScore::from_alignment(&al, &map, matched, transposed))
}

/// Oracle when small enough, hill climbing otherwise.
pub fn best_score(system: &TripleSet, gold: &TripleSet, restarts: usize, seed: u64) -> SmatchScore {
    smatch_oracle(system, gold).unwrap_or_else(|_| smatch_score(system, gold, restarts, seed))
}

#[derive(Clone, Debug)]
pub struct CorpusOptions {
    pub restarts: usize,
    pub seed: u64,
    pub inventory: SymbolInventory,
    pub build: BuildOptions,
    pub execution: Execution,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            restarts: DEFAULT_RESTARTS,
            seed: DEFAULT_SEED,
            inventory: SymbolInventory::default(),
            build: BuildOptions::default(),
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocOutcome {
    pub matched: usize,
    pub total_system: usize,
    pub total_gold: usize,
    pub f1: f64,
    pub ill_formed: Option<IllFormedReport>,
}

/// Micro-averaged corpus result. Fractions are in [0, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusScore {
    pub matched: usize,
    pub total_system: usize,
    pub total_gold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Ill-formed rate as a percentage.
    pub err: f64,
    pub n_docs: usize,
    pub n_ill_formed: usize,
    pub docs: Vec<DocOutcome>,
}

/// The JSON report: `{precision, recall, f1, err, n_docs, n_ill_formed}`,
/// all rates as percentages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmatchReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub err: f64,
    pub n_docs: usize,
    pub n_ill_formed: usize,
}

impl CorpusScore {
    pub fn report(&self) -> SmatchReport {
        SmatchReport {
            precision: 100.0 * self.precision,
            recall: 100.0 * self.recall,
            f1: 100.0 * self.f1,
            err: self.err,
            n_docs: self.n_docs,
            n_ill_formed: self.n_ill_formed,
        }
    }
}

/// Scores aligned system/gold lines. An ill-formed system line contributes
/// no system triples and no matches, so its gold triples only lower recall.
pub fn corpus_f1<S: AsRef<str> + Sync>(system: &[S], gold: &[S], opts: &CorpusOptions) -> Result<CorpusScore, SmatchError> {
    if system.len() != gold.len() {
        return Err(SmatchError::Misaligned { system: system.len(), gold: gold.len() });
    }
    let pairs: Vec<(&str, &str)> = system.iter().zip(gold).map(|(s, g)| (s.as_ref(), g.as_ref())).collect();
    let outcomes = map_indexed(&pairs, opts.execution, |i, (s, g)| -> Result<DocOutcome, SmatchError> {
        let gold = check_line(g, &opts.inventory, opts.build)
            .map_err(|report| SmatchError::GoldIllFormed { line: i + 1, report })?;
        let gold_t = drg_triples(&gold);
        Ok(match check_line(s, &opts.inventory, opts.build) {
            Err(report) => DocOutcome {
                matched: 0,
                total_system: 0,
                total_gold: gold_t.len(),
                f1: 0.0,
                ill_formed: Some(report),
            },
            Ok(sys) => {
                let sys_t = drg_triples(&sys);
                let mut rng = rng_for_index(opts.seed, i as u64);
                let sc = smatch_with_rng(&sys_t, &gold_t, opts.restarts, &mut rng);
                DocOutcome {
                    matched: sc.matched,
                    total_system: sc.total_system,
                    total_gold: sc.total_gold,
                    f1: sc.f1,
                    ill_formed: None,
                }
            }
        })
    });
    let docs = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(docs))
}

fn aggregate(docs: Vec<DocOutcome>) -> CorpusScore {
    let matched = docs.iter().map(|d| d.matched).sum();
    let total_system = docs.iter().map(|d| d.total_system).sum();
    let total_gold = docs.iter().map(|d| d.total_gold).sum();
    let n_ill_formed = docs.iter().filter(|d| d.ill_formed.is_some()).count();
    let (precision, recall, f1) = prf(matched, total_system, total_gold);
    CorpusScore {
        matched,
        total_system,
        total_gold,
        precision,
        recall,
        f1,
        err: err_rate_counts(n_ill_formed, docs.len()).unwrap_or(0.0),
        n_docs: docs.len(),
        n_ill_formed,
        docs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penman::{extract_triples, PenmanGraph};

    fn t(s: &str) -> TripleSet {
        extract_triples(&s.parse::<PenmanGraph>().unwrap())
    }

    #[test]
    fn cat_dog() {
        let sys = t("(b0 / box :member (e0 / cat.n.01))");
        let gold = t("(b0 / box :member (e0 / dog.n.01))");
        for sc in [smatch_score(&sys, &gold, 4, 0), smatch_oracle(&sys, &gold).unwrap()] {
            assert_eq!((sc.matched, sc.total_system, sc.total_gold), (2, 3, 3));
            assert!((sc.f1 - 2.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn lone_nodes_with_different_labels() {
        let sc = smatch_score(&t("(a / x)"), &t("(b / y)"), 4, 0);
        assert_eq!(sc.matched, 0);
        assert_eq!(sc.f1, 0.0);
    }

    #[test]
    fn empty_system() {
        let sc = smatch_score(&TripleSet::default(), &t("(b / y)"), 1, 0);
        assert_eq!((sc.precision, sc.recall, sc.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn oracle_transposes_mapping() {
        let sys = t("(b0 / box :member (e0 / cat.n.01) :member (e1 / dog.n.01))");
        let gold = t("(x / box :member (y / dog.n.01))");
        let sc = smatch_oracle(&sys, &gold).unwrap();
        assert_eq!(sc.matched, 3);
        assert_eq!(sc.mapping.get("e1"), Some("y"));
        assert_eq!(sc.mapping.get("b0"), Some("x"));
        assert_eq!(sc.total_system, 5);
    }

    #[test]
    fn oracle_rejects_large() {
        let mut s = String::from("(b0 / box");
        for i in 0..9 {
            s.push_str(&format!(" :member (e{i} / x.n.01)"));
        }
        s.push(')');
        let big = t(&s);
        assert!(matches!(smatch_oracle(&big, &big), Err(SmatchError::TooLarge { vars: 10, bound: 8 })));
    }

    #[test]
    fn corpus_counts_ill_formed_lines() {
        let gold = vec!["person.n.01 Role +1 engineer.n.01"; 10];
        let mut sys = gold.clone();
        sys[3] = "person.n.01 Role +1technician.n.01";
        let sc = corpus_f1(&sys, &gold, &CorpusOptions::default()).unwrap();
        assert_eq!(sc.n_ill_formed, 1);
        assert_eq!(sc.err, 10.0);
        assert_eq!(sc.matched, 54);
        assert_eq!(sc.total_gold, 60);
        assert_eq!(sc.precision, 1.0);
        assert!(sc.f1 < 1.0);
        let identical = corpus_f1(&gold, &gold, &CorpusOptions::default()).unwrap();
        assert_eq!(identical.report().f1, 100.0);
        assert_eq!(identical.report().err, 0.0);
    }

    #[test]
    fn corpus_errors() {
        let r = corpus_f1(&["a.n.01"], &[], &CorpusOptions::default());
        assert!(matches!(r, Err(SmatchError::Misaligned { system: 1, gold: 0 })));
        let r = corpus_f1(&["a.n.01"], &["Role"], &CorpusOptions::default());
        assert!(matches!(r, Err(SmatchError::GoldIllFormed { line: 1, .. })));
    }
}
