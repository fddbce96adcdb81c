//! Training-pair emission for denoising pre-training and fine-tuning.
//!
//! Sequences are whitespace tokens. Sources start with a language prefix
//! (`<en>`, `<de>`, `<it>`, `<nl>`) or `<drs>`; targets are the untouched
//! original with its prefix. Prefixes and the `<sep>` separator are never
//! masked.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusDocument, CorpusSet, Lang};
use crate::exec::{map_indexed, Execution};
use crate::seeds::rng_for_key;

pub const DRS_PREFIX: &str = "<drs>";
pub const SEP: &str = "<sep>";
pub const DEFAULT_MASK: &str = "<mask>";
pub const DEFAULT_MASK_RATE: f64 = 0.35;

pub fn is_protected(tok: &str) -> bool {
    tok == DRS_PREFIX || tok == SEP || Lang::ALL.iter().any(|l| l.prefix() == tok)
}

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("mask rate must lie strictly between 0 and 1, got {0}")]
    Rate(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mask_rate: f64,
    pub mask_token: String,
    pub seed: u64,
    /// Collapse each run of adjacent masked tokens into one mask token.
    #[serde(default)]
    pub span_masking: bool,
}

impl NoiseSpec {
    pub fn new(mask_rate: f64, seed: u64) -> Result<Self, NoiseError> {
        if !(mask_rate > 0.0 && mask_rate < 1.0) {
            return Err(NoiseError::Rate(mask_rate));
        }
        Ok(NoiseSpec { mask_rate, mask_token: DEFAULT_MASK.into(), seed, span_masking: false })
    }

    /// `ceil(rate * n)`; the small slack absorbs binary rounding of the rate.
    pub fn mask_count(&self, maskable: usize) -> usize {
        let exact = self.mask_rate * maskable as f64;
        ((exact - 1e-9).ceil().max(0.0) as usize).min(maskable)
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::new(DEFAULT_MASK_RATE, 0).unwrap()
    }
}

/// Masks `ceil(rate * n)` of the `n` maskable tokens, chosen uniformly
/// without replacement.
pub fn corrupt_with<R: Rng, S: AsRef<str>>(seq: &[S], spec: &NoiseSpec, rng: &mut R) -> Vec<String> {
    let maskable: Vec<usize> = (0..seq.len()).filter(|&i| !is_protected(seq[i].as_ref())).collect();
    let k = spec.mask_count(maskable.len());
    let mut masked = vec![false; seq.len()];
    for pick in sample(rng, maskable.len(), k) {
        masked[maskable[pick]] = true;
    }
    let mut out = Vec::with_capacity(seq.len());
    for (i, tok) in seq.iter().enumerate() {
        if !masked[i] {
            out.push(tok.as_ref().to_string());
        } else if !(spec.span_masking && i > 0 && masked[i - 1]) {
            out.push(spec.mask_token.clone());
        }
    }
    out
}

/// Deterministic in `(seq, spec)`.
pub fn corrupt<S: AsRef<str>>(seq: &[S], spec: &NoiseSpec) -> Vec<String> {
    corrupt_with(seq, spec, &mut rng_for_key(spec.seed, &[b"corrupt"]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    Bpt,
    SptMono,
    SptCross,
    FtParse,
    FtGenerate,
}

impl Stage {
    pub fn tag(self) -> &'static str {
        match self {
            Stage::Bpt => "bpt",
            Stage::SptMono => "spt-mono",
            Stage::SptCross => "spt-cross",
            Stage::FtParse => "ft-parse",
            Stage::FtGenerate => "ft-generate",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub stage: Stage,
    pub lang: Lang,
    pub source: Vec<String>,
    pub target: Vec<String>,
    /// e.g. `text`, `drs`, `text>drs`, `en+de>de:text`.
    pub direction: String,
}

fn prefixed(prefix: &str, line: &str) -> Vec<String> {
    std::iter::once(prefix).chain(line.split_whitespace()).map(str::to_string).collect()
}

fn concat(mut a: Vec<String>, b: Vec<String>) -> Vec<String> {
    a.push(SEP.to_string());
    a.extend(b);
    a
}

fn doc_rng(spec: &NoiseSpec, doc: &CorpusDocument, purpose: &str) -> rand_chacha::ChaCha8Rng {
    rng_for_key(
        spec.seed,
        &[doc.lang.code().as_bytes(), doc.tier.code().as_bytes(), doc.id.as_bytes(), purpose.as_bytes()],
    )
}

/// Basic denoising: a text pair and a DRS pair per training document.
pub fn emit_bpt(set: &CorpusSet, spec: &NoiseSpec) -> Vec<TrainingPair> {
    let docs = set.training_documents();
    map_indexed(&docs, Execution::Parallel, |_, doc| {
        let text = prefixed(doc.lang.prefix(), &doc.text);
        let drs = prefixed(DRS_PREFIX, &doc.drs);
        [
            TrainingPair {
                stage: Stage::Bpt,
                lang: doc.lang,
                source: corrupt_with(&text, spec, &mut doc_rng(spec, doc, "bpt-text")),
                target: text,
                direction: "text".into(),
            },
            TrainingPair {
                stage: Stage::Bpt,
                lang: doc.lang,
                source: corrupt_with(&drs, spec, &mut doc_rng(spec, doc, "bpt-drs")),
                target: drs,
                direction: "drs".into(),
            },
        ]
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Supervised monolingual denoising: clean text with corrupted DRS
/// reconstructs the DRS, and clean DRS with corrupted text reconstructs the
/// text.
pub fn emit_spt_mono(set: &CorpusSet, spec: &NoiseSpec) -> Vec<TrainingPair> {
    let docs = set.training_documents();
    map_indexed(&docs, Execution::Parallel, |_, doc| {
        let text = prefixed(doc.lang.prefix(), &doc.text);
        let drs = prefixed(DRS_PREFIX, &doc.drs);
        let noisy_drs = corrupt_with(&drs, spec, &mut doc_rng(spec, doc, "spt-drs"));
        let noisy_text = corrupt_with(&text, spec, &mut doc_rng(spec, doc, "spt-text"));
        [
            TrainingPair {
                stage: Stage::SptMono,
                lang: doc.lang,
                source: concat(text.clone(), noisy_drs),
                target: drs.clone(),
                direction: "text>drs".into(),
            },
            TrainingPair {
                stage: Stage::SptMono,
                lang: doc.lang,
                source: concat(drs, noisy_text),
                target: text,
                direction: "drs>text".into(),
            },
        ]
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Which cross-lingual pairs to emit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrossDirections {
    #[default]
    All,
    /// Only pairs reconstructing the non-English side.
    CorruptNonEnglish,
    /// Only pairs reconstructing the English side.
    CorruptEnglish,
}

impl CrossDirections {
    fn allows(self, corrupt_english: bool) -> bool {
        match self {
            CrossDirections::All => true,
            CrossDirections::CorruptNonEnglish => !corrupt_english,
            CrossDirections::CorruptEnglish => corrupt_english,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CrossOutput {
    pub pairs: Vec<TrainingPair>,
    /// `lang:id` of non-English documents without an English counterpart.
    pub skipped: Vec<String>,
}

/// English-centric cross-lingual denoising. For every non-English training
/// document whose id also exists in English, and for both the text and the
/// DRS side, emits each concatenation order (English first or last) with
/// each side corrupted in turn; the target is the corrupted side's original.
pub fn emit_spt_cross(set: &CorpusSet, spec: &NoiseSpec, directions: CrossDirections) -> CrossOutput {
    let docs = set.training_documents();
    let english: BTreeMap<&str, &CorpusDocument> =
        docs.iter().filter(|d| d.lang == Lang::En).map(|d| (d.id.as_str(), *d)).collect();
    let others: Vec<&CorpusDocument> = docs.iter().filter(|d| d.lang != Lang::En).copied().collect();

    let per_doc = map_indexed(&others, Execution::Parallel, |_, doc| {
        let Some(en) = english.get(doc.id.as_str()) else {
            return Err(format!("{}:{}", doc.lang, doc.id));
        };
        let mut pairs = Vec::new();
        for side in ["text", "drs"] {
            let (en_seq, l_seq) = if side == "text" {
                (prefixed(Lang::En.prefix(), &en.text), prefixed(doc.lang.prefix(), &doc.text))
            } else {
                (prefixed(DRS_PREFIX, &en.drs), prefixed(DRS_PREFIX, &doc.drs))
            };
            for english_first in [true, false] {
                for corrupt_english in [false, true] {
                    if !directions.allows(corrupt_english) {
                        continue;
                    }
                    let purpose = format!("cross-{side}-{english_first}-{corrupt_english}");
                    let mut rng = doc_rng(spec, doc, &purpose);
                    let (clean_en, clean_l) = (en_seq.clone(), l_seq.clone());
                    let (en_part, l_part, target) = if corrupt_english {
                        (corrupt_with(&en_seq, spec, &mut rng), clean_l, en_seq.clone())
                    } else {
                        (clean_en, corrupt_with(&l_seq, spec, &mut rng), l_seq.clone())
                    };
                    let (source, order) = if english_first {
                        (concat(en_part, l_part), format!("en+{}", doc.lang))
                    } else {
                        (concat(l_part, en_part), format!("{}+en", doc.lang))
                    };
                    let restored = if corrupt_english { "en" } else { doc.lang.code() };
                    pairs.push(TrainingPair {
                        stage: Stage::SptCross,
                        lang: doc.lang,
                        source,
                        target,
                        direction: format!("{order}>{restored}:{side}"),
                    });
                }
            }
        }
        Ok(pairs)
    });

    let mut out = CrossOutput::default();
    for r in per_doc {
        match r {
            Ok(pairs) => out.pairs.extend(pairs),
            Err(skipped) => out.skipped.push(skipped),
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    /// Text to DRS.
    Parse,
    /// DRS to text.
    Generate,
}

pub fn emit_ft(docs: &[CorpusDocument], task: Task) -> Vec<TrainingPair> {
    docs.iter()
        .map(|d| {
            let text = prefixed(d.lang.prefix(), &d.text);
            let drs = prefixed(DRS_PREFIX, &d.drs);
            match task {
                Task::Parse => TrainingPair { stage: Stage::FtParse, lang: d.lang, source: text, target: drs, direction: "text>drs".into() },
                Task::Generate => {
                    TrainingPair { stage: Stage::FtGenerate, lang: d.lang, source: drs, target: text, direction: "drs>text".into() }
                }
            }
        })
        .collect()
}

/// Removes prefix and separator tokens.
pub fn strip_markers(seq: &[String]) -> Vec<&str> {
    seq.iter().map(String::as_str).filter(|t| !is_protected(t)).collect()
}

/// One `stage\tlang\tsource\ttarget` line per pair.
pub fn write_tsv<W: Write>(pairs: &[TrainingPair], mut out: W) -> io::Result<()> {
    for p in pairs {
        writeln!(out, "{}\t{}\t{}\t{}", p.stage, p.lang, p.source.join(" "), p.target.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Split, Tier};

    fn doc(id: &str, lang: Lang, text: &str, drs: &str) -> CorpusDocument {
        CorpusDocument { id: id.into(), lang, tier: Tier::Gold, split: Split::Train, text: text.into(), drs: drs.into() }
    }

    #[test]
    fn mask_count_is_ceiling() {
        let spec = NoiseSpec::default();
        assert_eq!(spec.mask_count(20), 7);
        assert_eq!(spec.mask_count(21), 8);
        assert_eq!(spec.mask_count(1), 1);
        assert_eq!(spec.mask_count(0), 0);
    }

    #[test]
    fn corrupt_masks_exactly_and_deterministically() {
        let seq: Vec<String> = (0..20).map(|i| format!("t{i}")).collect();
        let spec = NoiseSpec::default();
        let a = corrupt(&seq, &spec);
        assert_eq!(a.iter().filter(|t| *t == DEFAULT_MASK).count(), 7);
        assert_eq!(a, corrupt(&seq, &spec));
        for (x, y) in a.iter().zip(&seq) {
            assert!(x == y || x == DEFAULT_MASK);
        }
    }

    #[test]
    fn prefixes_are_never_masked() {
        let seq = ["<en>", "a", "b", "<sep>", "<drs>", "c"];
        let spec = NoiseSpec::new(0.99, 3).unwrap();
        let out = corrupt(&seq, &spec);
        assert_eq!(out, ["<en>", "<mask>", "<mask>", "<sep>", "<drs>", "<mask>"]);
    }

    #[test]
    fn span_masking_collapses_runs() {
        let seq = ["<en>", "a", "b", "c", "d"];
        let mut spec = NoiseSpec::new(0.99, 1).unwrap();
        spec.span_masking = true;
        assert_eq!(corrupt(&seq, &spec), ["<en>", "<mask>"]);
    }

    #[test]
    fn invalid_rates() {
        assert!(NoiseSpec::new(0.0, 0).is_err());
        assert!(NoiseSpec::new(1.0, 0).is_err());
        assert!(NoiseSpec::new(f64::NAN, 0).is_err());
    }

    #[test]
    fn bpt_pairs() {
        let set = CorpusSet::from_documents([doc("1", Lang::En, "I sell nothing .", "speaker.n.01 NEGATION sell.v.01")]);
        let pairs = emit_bpt(&set, &NoiseSpec::default());
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].source[0], "<en>");
        assert_eq!(pairs[1].source[0], "<drs>");
        assert!(pairs.iter().all(|p| !p.target.contains(&DEFAULT_MASK.to_string())));
        assert_eq!(strip_markers(&pairs[1].target).join(" "), "speaker.n.01 NEGATION sell.v.01");
    }

    #[test]
    fn spt_mono_pairs() {
        let set = CorpusSet::from_documents([doc("1", Lang::En, "a b c", "x.n.01 Role +1 y.n.01")]);
        let pairs = emit_spt_mono(&set, &NoiseSpec::default());
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].target.join(" "), "<drs> x.n.01 Role +1 y.n.01");
        assert_eq!(&pairs[0].source[..5], ["<en>", "a", "b", "c", "<sep>"]);
        assert_eq!(pairs[1].target.join(" "), "<en> a b c");
    }

    #[test]
    fn spt_cross_pairs() {
        let set = CorpusSet::from_documents([
            doc("p1", Lang::En, "the cat", "cat.n.01"),
            doc("p1", Lang::De, "die Katze", "cat.n.01"),
            doc("p2", Lang::De, "der Hund", "dog.n.01"),
        ]);
        let out = emit_spt_cross(&set, &NoiseSpec::default(), CrossDirections::All);
        assert_eq!(out.skipped, ["de:p2"]);
        let text: Vec<_> = out.pairs.iter().filter(|p| p.direction.ends_with(":text")).collect();
        assert_eq!(text.len(), 4);
        assert_eq!(out.pairs.len(), 8);
        let only = emit_spt_cross(&set, &NoiseSpec::default(), CrossDirections::CorruptNonEnglish);
        assert_eq!(only.pairs.len(), 4);
        assert!(only.pairs.iter().all(|p| p.direction.contains(">de:")));
        for p in &out.pairs {
            assert!(is_protected(&p.source[0]));
        }
    }

    #[test]
    fn ft_pairs_are_swaps() {
        let docs = [doc("1", Lang::En, "I ordered two hamburgers .", "person.n.01 EQU speaker order.v.01 Agent -1")];
        let parse = emit_ft(&docs, Task::Parse);
        let gen = emit_ft(&docs, Task::Generate);
        assert_eq!(parse[0].target.join(" "), "<drs> person.n.01 EQU speaker order.v.01 Agent -1");
        assert_eq!(parse[0].source, gen[0].target);
        assert_eq!(parse[0].target, gen[0].source);
    }

    #[test]
    fn tsv_layout() {
        let docs = [doc("1", Lang::Nl, "hallo", "x.n.01")];
        let mut buf = Vec::new();
        write_tsv(&emit_ft(&docs, Task::Parse), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "ft-parse\tnl\t<nl> hallo\t<drs> x.n.01\n");
    }
}
