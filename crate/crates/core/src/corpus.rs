//! Tiered multilingual text/DRS corpora.
//!
//! On disk a corpus is a tree of line-aligned files:
//!
//! ```text
//! root/
//!   manifest.json            (optional)
//!   en/gold/train.txt        one sentence per line
//!   en/gold/train.drs        the aligned DRS line
//!   en/gold/train.ids        (optional) aligned document ids
//!   en/silver/train.{txt,drs}
//!   ...
//! ```
//!
//! Without an `.ids` file a document's id is `<tier>-<split>-<line>`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{map_indexed, Execution};
use crate::graph::{check_line, BuildOptions, IllFormedReport};
use crate::seeds::rng_for_key;
use crate::sequence::SymbolInventory;

macro_rules! code_enum {
    ($name:ident, $err:ident, { $($variant:ident => $code:literal),+ $(,)? }) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "lowercase")]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn code(self) -> &'static str {
                match self { $($name::$variant => $code),+ }
            }
        }

        impl FromStr for $name {
            type Err = CorpusError;
            fn from_str(s: &str) -> Result<Self, CorpusError> {
                match s { $($code => Ok($name::$variant),)+ _ => Err(CorpusError::$err(s.to_string())) }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result { f.write_str(self.code()) }
        }
    };
}

code_enum!(Lang, UnknownLanguage, { En => "en", De => "de", It => "it", Nl => "nl" });
code_enum!(Tier, UnknownTier, { Gold => "gold", Silver => "silver", Bronze => "bronze" });
code_enum!(Split, UnknownSplit, { Train => "train", Dev => "dev", Test => "test" });

impl Lang {
    /// Prefix token of this language's text sequences.
    pub fn prefix(self) -> &'static str {
        match self {
            Lang::En => "<en>",
            Lang::De => "<de>",
            Lang::It => "<it>",
            Lang::Nl => "<nl>",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Lang::En => "English",
            Lang::De => "German",
            Lang::It => "Italian",
            Lang::Nl => "Dutch",
        }
    }
}

impl Tier {
    pub fn has_split(self, split: Split) -> bool {
        self == Tier::Gold || split == Split::Train
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{txt} has {txt_lines} lines but {drs} has {drs_lines}")]
    MisalignedFiles { txt: PathBuf, txt_lines: usize, drs: PathBuf, drs_lines: usize },
    #[error("unknown language `{0}`")]
    UnknownLanguage(String),
    #[error("unknown tier `{0}`")]
    UnknownTier(String),
    #[error("unknown split `{0}`")]
    UnknownSplit(String),
    #[error("missing counterpart of {0}")]
    MissingSplit(PathBuf),
    #[error("{tier} data has no {split} split ({path})")]
    TierSplit { tier: Tier, split: Split, path: PathBuf },
    #[error("{path} line {line}: empty {what}")]
    EmptyField { path: PathBuf, line: usize, what: &'static str },
    #[error("duplicate id `{id}` in {lang}/{tier}/{split}")]
    DuplicateId { id: String, lang: Lang, tier: Tier, split: Split },
    #[error("manifest says {expected} documents for {key}, found {found}")]
    ManifestMismatch { key: String, expected: usize, found: usize },
    #[error("cannot upsample an empty list")]
    EmptyInput,
    #[error("target {target} is smaller than the input ({len})")]
    TargetTooSmall { target: usize, len: usize },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.to_path_buf(), source }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusDocument {
    pub id: String,
    pub lang: Lang,
    pub tier: Tier,
    pub split: Split,
    pub text: String,
    pub drs: String,
}

pub type GroupKey = (Lang, Tier, Split);

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub release: String,
    #[serde(default)]
    pub languages: Vec<Lang>,
    /// `lang -> tier -> split -> documents`.
    #[serde(default)]
    pub counts: BTreeMap<Lang, BTreeMap<Tier, BTreeMap<Split, usize>>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorpusSet {
    groups: BTreeMap<GroupKey, Vec<CorpusDocument>>,
    pub manifest: Option<Manifest>,
}

impl CorpusSet {
    pub fn from_documents(docs: impl IntoIterator<Item = CorpusDocument>) -> CorpusSet {
        let mut set = CorpusSet::default();
        for d in docs {
            set.groups.entry((d.lang, d.tier, d.split)).or_default().push(d);
        }
        set
    }

    pub fn group(&self, lang: Lang, tier: Tier, split: Split) -> &[CorpusDocument] {
        self.groups.get(&(lang, tier, split)).map_or(&[], Vec::as_slice)
    }

    pub fn groups(&self) -> impl Iterator<Item = (&GroupKey, &Vec<CorpusDocument>)> {
        self.groups.iter()
    }

    pub fn documents(&self) -> impl Iterator<Item = &CorpusDocument> {
        self.groups.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn languages(&self) -> BTreeSet<Lang> {
        self.groups.keys().map(|k| k.0).collect()
    }

    /// Train-split documents of the given tiers and languages, grouped by
    /// language then tier order.
    pub fn select(&self, langs: &[Lang], tiers: &[Tier]) -> Vec<CorpusDocument> {
        let mut out = Vec::new();
        for &lang in langs {
            for &tier in tiers {
                out.extend_from_slice(self.group(lang, tier, Split::Train));
            }
        }
        out
    }

    /// All train-split documents.
    pub fn training_documents(&self) -> Vec<&CorpusDocument> {
        self.documents().filter(|d| d.split == Split::Train).collect()
    }

    /// Writes the set in the on-disk layout (always with `.ids` files).
    pub fn write(&self, root: &Path) -> Result<(), CorpusError> {
        for ((lang, tier, split), docs) in &self.groups {
            let dir = root.join(lang.code()).join(tier.code());
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            let join = |f: fn(&CorpusDocument) -> &str| {
                let mut s = String::new();
                for d in docs {
                    s.push_str(f(d));
                    s.push('\n');
                }
                s
            };
            for (ext, body) in [("txt", join(|d| &d.text)), ("drs", join(|d| &d.drs)), ("ids", join(|d| &d.id))] {
                let path = dir.join(format!("{split}.{ext}"));
                fs::write(&path, body).map_err(io_err(&path))?;
            }
        }
        if let Some(m) = &self.manifest {
            let path = root.join("manifest.json");
            let body = serde_json::to_string_pretty(m).map_err(|source| CorpusError::Json { path: path.clone(), source })?;
            fs::write(&path, body).map_err(io_err(&path))?;
        }
        Ok(())
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>, CorpusError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text.lines().map(str::to_string).collect())
}

fn subdirs(dir: &Path) -> Result<Vec<(String, PathBuf)>, CorpusError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        if entry.file_type().map_err(io_err(dir))?.is_dir() {
            out.push((entry.file_name().to_string_lossy().into_owned(), entry.path()));
        }
    }
    out.sort();
    Ok(out)
}

fn ingest_tier(lang: Lang, tier: Tier, dir: &Path) -> Result<Vec<CorpusDocument>, CorpusError> {
    let mut docs = Vec::new();
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    let stems: BTreeSet<String> = files
        .iter()
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("txt" | "drs")))
        .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    for stem in stems {
        let split: Split = stem.parse()?;
        let txt = dir.join(format!("{stem}.txt"));
        let drs = dir.join(format!("{stem}.drs"));
        if !tier.has_split(split) {
            return Err(CorpusError::TierSplit { tier, split, path: txt });
        }
        for (have, other) in [(&txt, &drs), (&drs, &txt)] {
            if have.exists() && !other.exists() {
                return Err(CorpusError::MissingSplit(have.clone()));
            }
        }
        let texts = read_lines(&txt)?;
        let drss = read_lines(&drs)?;
        if texts.len() != drss.len() {
            return Err(CorpusError::MisalignedFiles {
                txt,
                txt_lines: texts.len(),
                drs,
                drs_lines: drss.len(),
            });
        }
        let ids_path = dir.join(format!("{stem}.ids"));
        let ids = if ids_path.exists() {
            let ids = read_lines(&ids_path)?;
            if ids.len() != texts.len() {
                return Err(CorpusError::MisalignedFiles {
                    txt: ids_path,
                    txt_lines: ids.len(),
                    drs,
                    drs_lines: drss.len(),
                });
            }
            ids
        } else {
            (1..=texts.len()).map(|i| format!("{tier}-{split}-{i}")).collect()
        };
        let mut seen = HashSet::new();
        for (i, ((text, drs_line), id)) in texts.into_iter().zip(drss).zip(ids).enumerate() {
            if text.trim().is_empty() {
                return Err(CorpusError::EmptyField { path: txt.clone(), line: i + 1, what: "text" });
            }
            if drs_line.trim().is_empty() {
                return Err(CorpusError::EmptyField { path: drs.clone(), line: i + 1, what: "DRS" });
            }
            if !seen.insert(id.clone()) {
                return Err(CorpusError::DuplicateId { id, lang, tier, split });
            }
            docs.push(CorpusDocument { id, lang, tier, split, text, drs: drs_line });
        }
    }
    Ok(docs)
}

/// Reads a corpus tree. Language directories are read concurrently.
pub fn ingest(root: &Path) -> Result<CorpusSet, CorpusError> {
    let mut langs = Vec::new();
    for (name, path) in subdirs(root)? {
        langs.push((name.parse::<Lang>()?, path));
    }
    let per_lang = map_indexed(&langs, Execution::Parallel, |_, (lang, path)| -> Result<Vec<CorpusDocument>, CorpusError> {
        let mut docs = Vec::new();
        for (name, tdir) in subdirs(path)? {
            docs.extend(ingest_tier(*lang, name.parse()?, &tdir)?);
        }
        Ok(docs)
    });
    let mut set = CorpusSet::default();
    for docs in per_lang {
        for d in docs? {
            set.groups.entry((d.lang, d.tier, d.split)).or_default().push(d);
        }
    }

    let manifest_path = root.join("manifest.json");
    if manifest_path.exists() {
        let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|source| CorpusError::Json { path: manifest_path.clone(), source })?;
        for (lang, tiers) in &manifest.counts {
            for (tier, splits) in tiers {
                for (split, &expected) in splits {
                    let found = set.group(*lang, *tier, *split).len();
                    if found != expected {
                        return Err(CorpusError::ManifestMismatch { key: format!("{lang}/{tier}/{split}"), expected, found });
                    }
                }
            }
        }
        set.manifest = Some(manifest);
    }
    Ok(set)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removed {
    pub document: CorpusDocument,
    pub report: IllFormedReport,
}

/// Drops documents whose DRS does not convert to a graph.
pub fn filter_convertible(set: &CorpusSet, inventory: &SymbolInventory, opts: BuildOptions) -> (CorpusSet, Vec<Removed>) {
    let mut kept = CorpusSet { groups: BTreeMap::new(), manifest: None };
    let mut removed = Vec::new();
    for (key, docs) in &set.groups {
        let outcomes = map_indexed(docs, Execution::Parallel, |_, d| check_line(&d.drs, inventory, opts).err());
        let group = kept.groups.entry(*key).or_default();
        for (doc, outcome) in docs.iter().zip(outcomes) {
            match outcome {
                None => group.push(doc.clone()),
                Some(report) => removed.push(Removed { document: doc.clone(), report }),
            }
        }
    }
    (kept, removed)
}

/// Document counts by language, tier and split.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub counts: BTreeMap<GroupKey, usize>,
}

pub fn stats(set: &CorpusSet) -> Stats {
    Stats { counts: set.groups.iter().map(|(k, v)| (*k, v.len())).collect() }
}

const STATS_COLUMNS: [(Tier, Split); 5] = [
    (Tier::Gold, Split::Train),
    (Tier::Gold, Split::Dev),
    (Tier::Gold, Split::Test),
    (Tier::Silver, Split::Train),
    (Tier::Bronze, Split::Train),
];

fn thousands(n: usize) -> String {
    let s = n.to_string();
    let mut out = String::new();
    for (i, c) in s.chars().enumerate() {
        if i > 0 && (s.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

impl Stats {
    pub fn get(&self, lang: Lang, tier: Tier, split: Split) -> usize {
        self.counts.get(&(lang, tier, split)).copied().unwrap_or(0)
    }

    /// Gold train/dev/test, silver train and bronze train per language.
    pub fn render_table(&self) -> String {
        let mut rows = vec![
            vec!["Data type".to_string(), "Gold".into(), String::new(), String::new(), "Silver".into(), "Bronze".into()],
            vec!["Lang".to_string(), "Train".into(), "Dev".into(), "Test".into(), "Train".into(), "Train".into()],
        ];
        for &lang in Lang::ALL {
            let mut row = vec![lang.name().to_string()];
            row.extend(STATS_COLUMNS.iter().map(|&(t, s)| thousands(self.get(lang, t, s))));
            rows.push(row);
        }
        let widths: Vec<usize> = (0..6).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for row in &rows {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, cell)| if c == 0 { format!("{cell:<w$}", w = widths[c]) } else { format!("{cell:>w$}", w = widths[c]) })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    /// `{lang: {tier: {split: n}}}` with every column present.
    pub fn to_json(&self) -> serde_json::Value {
        let mut m: BTreeMap<Lang, BTreeMap<Tier, BTreeMap<Split, usize>>> = BTreeMap::new();
        for &lang in Lang::ALL {
            for &(tier, split) in &STATS_COLUMNS {
                m.entry(lang).or_default().entry(tier).or_default().insert(split, self.get(lang, tier, split));
            }
        }
        serde_json::to_value(m).expect("stats serialize")
    }
}

/// Replicates the whole list `target / len` times, then appends a seeded
/// sample without replacement for the remainder.
pub fn upsample<T: Clone>(docs: &[T], target: usize, seed: u64) -> Result<Vec<T>, CorpusError> {
    if docs.is_empty() {
        return Err(CorpusError::EmptyInput);
    }
    if target < docs.len() {
        return Err(CorpusError::TargetTooSmall { target, len: docs.len() });
    }
    let copies = target / docs.len();
    let remainder = target % docs.len();
    let mut out = Vec::with_capacity(target);
    for _ in 0..copies {
        out.extend_from_slice(docs);
    }
    let mut rng = rng_for_key(seed, &[b"upsample"]);
    for i in sample(&mut rng, docs.len(), remainder) {
        out.push(docs[i].clone());
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FineTuneStage {
    /// Gold, silver and bronze training data.
    First,
    /// Gold and silver training data.
    Second,
}

impl FineTuneStage {
    pub fn tiers(self) -> &'static [Tier] {
        match self {
            FineTuneStage::First => &[Tier::Gold, Tier::Silver, Tier::Bronze],
            FineTuneStage::Second => &[Tier::Gold, Tier::Silver],
        }
    }
}

/// Training documents of a fine-tuning stage. An empty `langs` means every
/// language. Languages with a target are upsampled to it.
pub fn assemble_stage(
    set: &CorpusSet,
    stage: FineTuneStage,
    langs: &[Lang],
    targets: &BTreeMap<Lang, usize>,
    seed: u64,
) -> Result<Vec<CorpusDocument>, CorpusError> {
    let langs: Vec<Lang> = if langs.is_empty() { Lang::ALL.to_vec() } else { langs.to_vec() };
    let mut out = Vec::new();
    for lang in langs {
        let docs = set.select(&[lang], stage.tiers());
        match targets.get(&lang) {
            Some(&target) if !docs.is_empty() => {
                out.extend(upsample(&docs, target, seed ^ crate::seeds::fnv1a(&[lang.code().as_bytes()]))?)
            }
            _ => out.extend(docs),
        }
    }
    Ok(out)
}

/// Keeps `specials` plus the base-vocabulary tokens that occur in `corpora`,
/// in base order.
pub fn filter_vocab<'a, I>(base_vocab: &[String], corpora: I, specials: &[String]) -> Vec<String>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut used: HashSet<&str> = HashSet::new();
    for line in corpora {
        used.extend(line.split_whitespace());
    }
    let mut out: Vec<String> = Vec::new();
    let mut seen: HashSet<&str> = HashSet::new();
    for s in specials {
        if seen.insert(s) {
            out.push(s.clone());
        }
    }
    for v in base_vocab {
        if used.contains(v.as_str()) && seen.insert(v) {
            out.push(v.clone());
        }
    }
    out
}
