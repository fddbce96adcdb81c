use std::fs;
use std::path::Path;

use drskit::corpus::{ingest, stats, CorpusError, Lang, Split, Tier};

fn put(root: &Path, rel: &str, body: &str) {
    let p = root.join(rel);
    fs::create_dir_all(p.parent().unwrap()).unwrap();
    fs::write(p, body).unwrap();
}

#[test]
fn ingest_reads_layout_and_default_ids() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    put(root, "en/gold/train.txt", "Tom sleeps .\nA cat .\n");
    put(root, "en/gold/train.drs", "male.n.02 Name \"Tom\" sleep.v.01 Agent -1\ncat.n.01\n");
    put(root, "en/gold/dev.txt", "A dog .\n");
    put(root, "en/gold/dev.drs", "dog.n.01\n");
    put(root, "nl/bronze/train.txt", "Een kat .\n");
    put(root, "nl/bronze/train.drs", "cat.n.01\n");
    put(root, "nl/bronze/train.ids", "x17\n");
    put(
        root,
        "manifest.json",
        r#"{"release": "test", "languages": ["en", "nl"], "counts": {"en": {"gold": {"train": 2, "dev": 1}}}}"#,
    );

    let set = ingest(root).unwrap();
    assert_eq!(set.len(), 4);
    let train = set.group(Lang::En, Tier::Gold, Split::Train);
    assert_eq!(train[1].id, "gold-train-2");
    assert_eq!(set.group(Lang::Nl, Tier::Bronze, Split::Train)[0].id, "x17");
    assert_eq!(set.manifest.as_ref().unwrap().release, "test");
    let st = stats(&set);
    assert_eq!(st.get(Lang::En, Tier::Gold, Split::Dev), 1);
    assert!(st.render_table().contains("English"));

    // Writing and re-reading preserves everything.
    let copy = root.join("copy");
    set.write(&copy).unwrap();
    assert_eq!(ingest(&copy).unwrap(), set);
}

#[test]
fn ingest_errors_name_the_problem() {
    let case = |files: &[(&str, &str)]| {
        let dir = tempfile::tempdir().unwrap();
        for (p, b) in files {
            put(dir.path(), p, b);
        }
        ingest(dir.path()).unwrap_err()
    };
    assert!(matches!(
        case(&[("en/silver/dev.txt", "a\n"), ("en/silver/dev.drs", "cat.n.01\n")]),
        CorpusError::TierSplit { tier: Tier::Silver, split: Split::Dev, .. }
    ));
    assert!(matches!(
        case(&[("en/gold/train.txt", "a\nb\n"), ("en/gold/train.drs", "cat.n.01\n")]),
        CorpusError::MisalignedFiles { txt_lines: 2, drs_lines: 1, .. }
    ));
    assert!(matches!(case(&[("en/gold/train.txt", "a\n")]), CorpusError::MissingSplit(_)));
    assert!(matches!(case(&[("fr/gold/train.txt", "a\n")]), CorpusError::UnknownLanguage(_)));
    assert!(matches!(case(&[("en/platinum/train.txt", "a\n")]), CorpusError::UnknownTier(_)));
    assert!(matches!(
        case(&[("en/gold/train.txt", "a\n\n"), ("en/gold/train.drs", "cat.n.01\ndog.n.01\n")]),
        CorpusError::EmptyField { line: 2, what: "text", .. }
    ));
    assert!(matches!(
        case(&[
            ("en/gold/train.txt", "a\nb\n"),
            ("en/gold/train.drs", "cat.n.01\ndog.n.01\n"),
            ("en/gold/train.ids", "7\n7\n"),
        ]),
        CorpusError::DuplicateId { .. }
    ));
    assert!(matches!(
        case(&[
            ("en/gold/train.txt", "a\n"),
            ("en/gold/train.drs", "cat.n.01\n"),
            ("manifest.json", r#"{"counts": {"en": {"gold": {"train": 5}}}}"#),
        ]),
        CorpusError::ManifestMismatch { expected: 5, found: 1, .. }
    ));
}
