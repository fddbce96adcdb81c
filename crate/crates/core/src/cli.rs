//! The `drskit` command line. Subcommands only parse arguments, read and
//! write files, and call into the library.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::corpus::{self, CorpusError, FineTuneStage, Lang};
use crate::exec::{map_indexed, with_jobs, Execution};
use crate::graph::{check_line, err_rate_counts, BuildOptions};
use crate::penman::to_penman;
use crate::pretrain::{self, CrossDirections, NoiseSpec, Task};
use crate::sequence::{lex, SymbolInventory};
use crate::smatch::{self, classify_diff, CorpusOptions};
use crate::textmetrics;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "drskit", version, about = "Validate, convert, score and emit DRS sequence data")]
pub struct Cli {
    /// Symbol inventory file (operators and discourse relations).
    #[arg(long, global = true, env = "DRSKIT_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Parallelism {
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0, env = "DRSKIT_JOBS")]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report ill-formed lines of a DRS file.
    Check {
        file: PathBuf,
        #[command(flatten)]
        par: Parallelism,
        /// Reject discourse relations that introduce no entity.
        #[arg(long)]
        require_scope: bool,
        #[arg(long)]
        json: bool,
    },
    /// Convert a DRS file to Penman.
    Penman {
        file: PathBuf,
        /// One graph per line instead of indented blocks.
        #[arg(long)]
        one_line: bool,
        /// Warn about ill-formed lines instead of failing.
        #[arg(long)]
        skip_invalid: bool,
    },
    /// Corpus Smatch of system lines against gold lines.
    Smatch {
        system: PathBuf,
        gold: PathBuf,
        #[arg(long, default_value_t = smatch::DEFAULT_RESTARTS, env = "DRSKIT_RESTARTS")]
        restarts: usize,
        #[arg(long, default_value_t = smatch::DEFAULT_SEED, env = "DRSKIT_SEED")]
        seed: u64,
        #[command(flatten)]
        par: Parallelism,
        #[arg(long)]
        json: bool,
        /// Also print one score per line.
        #[arg(long)]
        per_doc: bool,
    },
    /// Percentage of ill-formed lines.
    Err {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// BLEU-4 of hypothesis lines against reference lines.
    Bleu {
        hypotheses: PathBuf,
        references: PathBuf,
        /// Smoothed per-sentence scores instead of one corpus score.
        #[arg(long)]
        sentence: bool,
        #[arg(long)]
        json: bool,
    },
    /// Point-biserial correlation of a `value<TAB>label` file (labels 0/1).
    Correlate {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Document counts per language, tier and split.
    Stats {
        corpus: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Drop documents whose DRS cannot be converted to a graph.
    Filter {
        corpus: PathBuf,
        output: PathBuf,
        #[arg(long)]
        require_scope: bool,
    },
    /// Replicate one language's training documents up to a target size.
    Upsample {
        corpus: PathBuf,
        output: PathBuf,
        #[arg(long)]
        lang: Lang,
        #[arg(long)]
        target: usize,
        #[arg(long, default_value_t = 0, env = "DRSKIT_SEED")]
        seed: u64,
    },
    /// Emit training pairs as `stage<TAB>lang<TAB>source<TAB>target`.
    Emit(EmitArgs),
    /// Classify differences between aligned system and gold lines.
    Diff {
        system: PathBuf,
        gold: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EmitStage {
    /// Basic denoising pre-training.
    Bpt,
    /// Supervised denoising, monolingual and cross-lingual.
    Spt,
    /// First fine-tuning stage (gold, silver, bronze).
    Fft,
    /// Second fine-tuning stage (gold, silver).
    Sft,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Parse,
    Generate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CrossArg {
    All,
    NonEnglish,
    English,
    /// No cross-lingual pairs.
    None,
}

#[derive(Debug, Args)]
pub struct EmitArgs {
    pub corpus: PathBuf,
    pub output: PathBuf,
    #[arg(long)]
    pub stage: EmitStage,
    #[arg(long, default_value_t = pretrain::DEFAULT_MASK_RATE, value_parser = parse_rate, env = "DRSKIT_MASK_RATE")]
    pub mask_rate: f64,
    #[arg(long, default_value_t = 0, env = "DRSKIT_SEED")]
    pub seed: u64,
    /// Comma-separated language codes; default all.
    #[arg(long, value_delimiter = ',')]
    pub langs: Vec<Lang>,
    /// Fine-tuning direction.
    #[arg(long, value_enum, default_value_t = TaskArg::Parse)]
    pub task: TaskArg,
    /// Which cross-lingual pairs the spt stage adds.
    #[arg(long, value_enum, default_value_t = CrossArg::All)]
    pub cross: CrossArg,
    /// Per-language upsampling targets for fine-tuning, e.g. `nl=100000`.
    #[arg(long, value_delimiter = ',', value_parser = parse_target)]
    pub upsample: Vec<(Lang, usize)>,
    /// Collapse adjacent masks into one.
    #[arg(long)]
    pub span_masking: bool,
}

fn parse_rate(s: &str) -> Result<f64, String> {
    let r: f64 = s.parse().map_err(|e| format!("{e}"))?;
    NoiseSpec::new(r, 0).map(|_| r).map_err(|e| e.to_string())
}

fn parse_target(s: &str) -> Result<(Lang, usize), String> {
    let (lang, n) = s.split_once('=').ok_or_else(|| format!("expected LANG=N, got `{s}`"))?;
    let lang: Lang = lang.parse().map_err(|e: CorpusError| e.to_string())?;
    Ok((lang, n.parse().map_err(|e| format!("{e}"))?))
}

/// Failures after argument parsing; all map to exit code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Corpus(#[from] CorpusError),
    #[error("{0}")]
    Smatch(#[from] smatch::SmatchError),
    #[error("{0}")]
    Inventory(#[from] crate::sequence::InventoryError),
    #[error("{0}")]
    Data(String),
    #[error("writing output: {0}")]
    Output(#[from] io::Error),
}

fn read_lines(path: &Path) -> Result<Vec<String>, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    Ok(text.lines().map(str::to_string).collect())
}

fn create(path: &Path) -> Result<io::BufWriter<fs::File>, CliError> {
    fs::File::create(path).map(io::BufWriter::new).map_err(|source| CliError::Io { path: path.into(), source })
}

fn print_json(out: &mut dyn Write, value: &impl serde::Serialize) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::Data(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn execution(jobs: usize) -> Execution {
    if jobs == 1 {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DATA
        }
    }
}

pub fn main_entry() -> i32 {
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let code = run(std::env::args_os(), &mut out, &mut io::stderr());
    let _ = out.flush();
    code
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let inventory = match &cli.config {
        Some(path) => SymbolInventory::load(path)?,
        None => SymbolInventory::default(),
    };
    match cli.command {
        Command::Check { file, par, require_scope, json } => {
            let lines = read_lines(&file)?;
            let opts = BuildOptions { require_scope };
            let results = with_jobs(par.jobs, || {
                map_indexed(&lines, execution(par.jobs), |_, l| check_line(l, &inventory, opts).map(|_| ()))
            });
            let failures: Vec<_> =
                results.iter().enumerate().filter_map(|(i, r)| r.as_ref().err().map(|rep| (i + 1, rep))).collect();
            let rate = err_rate_counts(failures.len(), lines.len()).map_err(|e| CliError::Data(e.to_string()))?;
            if json {
                let items: Vec<_> = failures
                    .iter()
                    .map(|(line, r)| json!({"line": line, "category": r.category, "position": r.position, "detail": r.detail}))
                    .collect();
                print_json(out, &json!({"lines": lines.len(), "ill_formed": items, "err": rate}))?;
            } else {
                for (line, r) in &failures {
                    writeln!(out, "{}:{line}: {r}", file.display())?;
                }
                writeln!(out, "{} lines, {} ill-formed, ERR {rate:.1}", lines.len(), failures.len())?;
            }
        }
        Command::Penman { file, one_line, skip_invalid } => {
            for (i, line) in read_lines(&file)?.iter().enumerate() {
                match check_line(line, &inventory, BuildOptions::default()) {
                    Ok(g) => {
                        let p = to_penman(&g);
                        if one_line {
                            writeln!(out, "{}", p.to_line())?;
                        } else {
                            writeln!(out, "{}\n", p.to_pretty())?;
                        }
                    }
                    Err(r) if skip_invalid => writeln!(err, "warning: {}:{}: {r}", file.display(), i + 1)?,
                    Err(r) => return Err(CliError::Data(format!("{}:{}: {r}", file.display(), i + 1))),
                }
            }
        }
        Command::Smatch { system, gold, restarts, seed, par, json, per_doc } => {
            let (sys, gold) = (read_lines(&system)?, read_lines(&gold)?);
            let opts = CorpusOptions { restarts, seed, inventory, execution: execution(par.jobs), ..Default::default() };
            let score = with_jobs(par.jobs, || smatch::corpus_f1(&sys, &gold, &opts))?;
            let report = score.report();
            if json {
                if per_doc {
                    print_json(out, &json!({"report": report, "docs": score.docs}))?;
                } else {
                    print_json(out, &report)?;
                }
            } else {
                if per_doc {
                    for (i, d) in score.docs.iter().enumerate() {
                        let note = d.ill_formed.as_ref().map(|r| format!(" ({})", r.category)).unwrap_or_default();
                        writeln!(out, "{}\t{:.1}{note}", i + 1, 100.0 * d.f1)?;
                    }
                }
                writeln!(out, "precision {:.1}", report.precision)?;
                writeln!(out, "recall    {:.1}", report.recall)?;
                writeln!(out, "f1        {:.1}", report.f1)?;
                writeln!(out, "err       {:.1}", report.err)?;
                writeln!(out, "documents {} ({} ill-formed)", report.n_docs, report.n_ill_formed)?;
            }
        }
        Command::Err { file, json } => {
            let lines = read_lines(&file)?;
            let bad = lines.iter().filter(|l| check_line(l, &inventory, BuildOptions::default()).is_err()).count();
            let rate = err_rate_counts(bad, lines.len()).map_err(|e| CliError::Data(e.to_string()))?;
            if json {
                print_json(out, &json!({"err": rate, "ill_formed": bad, "lines": lines.len()}))?;
            } else {
                writeln!(out, "{rate:.1}")?;
            }
        }
        Command::Bleu { hypotheses, references, sentence, json } => {
            let hyp = read_lines(&hypotheses)?;
            let refs = read_lines(&references)?;
            let h: Vec<Vec<&str>> = hyp.iter().map(|l| textmetrics::tokenize(l)).collect();
            let r: Vec<Vec<&str>> = refs.iter().map(|l| textmetrics::tokenize(l)).collect();
            let bleu_err = |e: textmetrics::BleuError| CliError::Data(format!("{}: {e}", references.display()));
            if sentence {
                if h.len() != r.len() {
                    return Err(bleu_err(textmetrics::BleuError::LengthMismatch { hypotheses: h.len(), references: r.len() }));
                }
                let scores = h
                    .iter()
                    .zip(&r)
                    .enumerate()
                    .map(|(i, (h, r))| {
                        textmetrics::sentence_bleu(h, r)
                            .map_err(|_| bleu_err(textmetrics::BleuError::EmptyReference(i + 1)))
                            .map(|s| s.score)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if json {
                    print_json(out, &scores)?;
                } else {
                    for s in scores {
                        writeln!(out, "{s:.2}")?;
                    }
                }
            } else {
                let s = textmetrics::bleu(&h, &r).map_err(bleu_err)?;
                if json {
                    print_json(out, &s)?;
                } else {
                    writeln!(out, "BLEU {:.2} (BP {:.3}, hyp {}, ref {})", s.score, s.brevity_penalty, s.hyp_len, s.ref_len)?;
                }
            }
        }
        Command::Correlate { file, json } => {
            let mut values = Vec::new();
            let mut labels = Vec::new();
            for (i, line) in read_lines(&file)?.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let bad = || CliError::Data(format!("{}:{}: expected `value<TAB>label`", file.display(), i + 1));
                let (v, l) = line.split_once('\t').ok_or_else(bad)?;
                values.push(v.trim().parse::<f64>().map_err(|_| bad())?);
                labels.push(match l.trim() {
                    "1" | "true" => true,
                    "0" | "false" => false,
                    _ => return Err(bad()),
                });
            }
            let r = textmetrics::point_biserial(&values, &labels)
                .map_err(|e| CliError::Data(format!("{}: {e}", file.display())))?;
            if json {
                print_json(out, &r)?;
            } else {
                writeln!(out, "r {:.4} (n1 {}, n0 {})", r.r, r.n1, r.n0)?;
            }
        }
        Command::Stats { corpus: root, json } => {
            let st = corpus::stats(&corpus::ingest(&root)?);
            if json {
                print_json(out, &st.to_json())?;
            } else {
                write!(out, "{}", st.render_table())?;
            }
        }
        Command::Filter { corpus: root, output, require_scope } => {
            let set = corpus::ingest(&root)?;
            let (kept, removed) = corpus::filter_convertible(&set, &inventory, BuildOptions { require_scope });
            kept.write(&output)?;
            for r in &removed {
                let d = &r.document;
                writeln!(err, "removed {}/{}/{}/{}: {}", d.lang, d.tier, d.split, d.id, r.report)?;
            }
            writeln!(out, "kept {}, removed {}", kept.len(), removed.len())?;
        }
        Command::Upsample { corpus: root, output, lang, target, seed } => {
            let set = corpus::ingest(&root)?;
            let docs = set.select(&[lang], &[corpus::Tier::Gold, corpus::Tier::Silver, corpus::Tier::Bronze]);
            let up = corpus::upsample(&docs, target, seed)?;
            let mut w = create(&output)?;
            for d in &up {
                writeln!(w, "{}\t{}\t{}", d.id, d.text, d.drs)?;
            }
            w.flush()?;
            writeln!(out, "{} documents -> {}", docs.len(), up.len())?;
        }
        Command::Emit(args) => emit(args, out, err)?,
        Command::Diff { system, gold, json } => {
            let (sys, gold) = (read_lines(&system)?, read_lines(&gold)?);
            if sys.len() != gold.len() {
                return Err(smatch::SmatchError::Misaligned { system: sys.len(), gold: gold.len() }.into());
            }
            let mut all = Vec::new();
            for (i, (s, g)) in sys.iter().zip(&gold).enumerate() {
                let opts = BuildOptions::default();
                let outcome = check_line(s, &inventory, opts).and(check_line(g, &inventory, opts)).and_then(|_| {
                    let lexed = |l: &str| lex(l, &inventory).expect("line already checked");
                    classify_diff(&lexed(s), &lexed(g))
                });
                match outcome {
                    Ok(report) => {
                        if !json {
                            for f in &report.findings {
                                writeln!(out, "{}\t{f}", i + 1)?;
                            }
                        }
                        all.push(json!({"line": i + 1, "findings": report.findings}));
                    }
                    Err(r) => {
                        if !json {
                            writeln!(out, "{}\tIllFormed: {r}", i + 1)?;
                        }
                        all.push(json!({"line": i + 1, "ill_formed": r}));
                    }
                }
            }
            if json {
                print_json(out, &all)?;
            }
        }
    }
    Ok(())
}

fn emit(args: EmitArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let set = corpus::ingest(&args.corpus)?;
    let set = if args.langs.is_empty() {
        set
    } else {
        corpus::CorpusSet::from_documents(set.documents().filter(|d| args.langs.contains(&d.lang)).cloned())
    };
    let mut spec = NoiseSpec::new(args.mask_rate, args.seed).map_err(|e| CliError::Data(e.to_string()))?;
    spec.span_masking = args.span_masking;

    let pairs = match args.stage {
        EmitStage::Bpt => pretrain::emit_bpt(&set, &spec),
        EmitStage::Spt => {
            let mut pairs = pretrain::emit_spt_mono(&set, &spec);
            let directions = match args.cross {
                CrossArg::All => Some(CrossDirections::All),
                CrossArg::NonEnglish => Some(CrossDirections::CorruptNonEnglish),
                CrossArg::English => Some(CrossDirections::CorruptEnglish),
                CrossArg::None => None,
            };
            if let Some(d) = directions {
                let cross = pretrain::emit_spt_cross(&set, &spec, d);
                for id in &cross.skipped {
                    writeln!(err, "warning: no English counterpart for {id}")?;
                }
                pairs.extend(cross.pairs);
            }
            pairs
        }
        EmitStage::Fft | EmitStage::Sft => {
            let stage = if args.stage == EmitStage::Fft { FineTuneStage::First } else { FineTuneStage::Second };
            let targets: BTreeMap<Lang, usize> = args.upsample.iter().copied().collect();
            let docs = corpus::assemble_stage(&set, stage, &args.langs, &targets, args.seed)?;
            let task = match args.task {
                TaskArg::Parse => Task::Parse,
                TaskArg::Generate => Task::Generate,
            };
            pretrain::emit_ft(&docs, task)
        }
    };
    let mut w = create(&args.output)?;
    pretrain::write_tsv(&pairs, &mut w)?;
    w.flush()?;
    writeln!(out, "{} pairs -> {}", pairs.len(), args.output.display())?;
    Ok(())
}
