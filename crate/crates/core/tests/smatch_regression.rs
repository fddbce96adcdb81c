//! Scores the bundled parser-output sample against its stored reference.
//!
//! The reference comes from the exact (oracle) path. Regenerate it with
//! `DRSKIT_BLESS=1 cargo test --test smatch_regression`.

use std::path::PathBuf;

use drskit::graph::{check_line, BuildOptions};
use drskit::penman::drg_triples;
use drskit::sequence::SymbolInventory;
use drskit::smatch::{corpus_f1, prf, smatch_exact, CorpusOptions};
use serde::{Deserialize, Serialize};

const EXACT_BOUND: usize = 16;

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct Reference {
    matched: usize,
    total_system: usize,
    total_gold: usize,
    n_docs: usize,
    n_ill_formed: usize,
    f1: f64,
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn lines(name: &str) -> Vec<String> {
    std::fs::read_to_string(data(name)).unwrap().lines().map(str::to_string).collect()
}

fn oracle_reference(sys: &[String], gold: &[String]) -> Reference {
    let inv = SymbolInventory::default();
    let opts = BuildOptions::default();
    let mut r = Reference { matched: 0, total_system: 0, total_gold: 0, n_docs: sys.len(), n_ill_formed: 0, f1: 0.0 };
    for (s, g) in sys.iter().zip(gold) {
        let gt = drg_triples(&check_line(g, &inv, opts).expect("gold is well-formed"));
        match check_line(s, &inv, opts) {
            Ok(sg) => {
                let score = smatch_exact(&drg_triples(&sg), &gt, EXACT_BOUND).expect("sample fits the bound");
                r.matched += score.matched;
                r.total_system += score.total_system;
                r.total_gold += score.total_gold;
            }
            Err(_) => {
                r.n_ill_formed += 1;
                r.total_gold += gt.len();
            }
        }
    }
    r.f1 = prf(r.matched, r.total_system, r.total_gold).2;
    r
}

#[test]
fn sample_matches_reference() {
    let sys = lines("parser_sample.sys");
    let gold = lines("parser_sample.gold");
    let exact = oracle_reference(&sys, &gold);

    let ref_path = data("parser_sample.ref.json");
    if std::env::var_os("DRSKIT_BLESS").is_some() {
        std::fs::write(&ref_path, serde_json::to_string_pretty(&exact).unwrap() + "\n").unwrap();
    }
    let stored: Reference = serde_json::from_str(&std::fs::read_to_string(&ref_path).unwrap()).unwrap();
    let counts = |r: &Reference| (r.matched, r.total_system, r.total_gold, r.n_docs, r.n_ill_formed);
    assert_eq!(counts(&exact), counts(&stored));
    // The counts are exact; f1 goes through a decimal round-trip in JSON.
    assert!((exact.f1 - stored.f1).abs() < 1e-12);

    // The default hill-climbing corpus scorer reproduces it.
    let score = corpus_f1(&sys, &gold, &CorpusOptions::default()).unwrap();
    assert_eq!(
        (score.matched, score.total_system, score.total_gold, score.n_ill_formed),
        (stored.matched, stored.total_system, stored.total_gold, stored.n_ill_formed)
    );
    assert_eq!(score.f1, exact.f1);
    assert!(score.err > 0.0 && score.report().f1 < 100.0);
}
