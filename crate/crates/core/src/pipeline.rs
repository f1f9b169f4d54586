//! File-based stages with manifests, and the chained pipeline.
//!
//! Every stage reads its inputs from the configured paths or from earlier
//! artifacts in the output directory, writes its artifacts there, and records
//! `<stage>.manifest.json` with input and output digests, the configuration
//! and the seed.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{
    Cleaner, CleanupOrder, EnglishLexicon, GazetteerTagger, LabeledCorpus, NgramTable,
};
use crate::distance::{distance_matrix, DistanceMatrix, DistanceOptions, FrequencyTable, Mode};
use crate::divergence::{rank_focus_set, DEFAULT_MIN_SUPPORT};
use crate::embed::{train_situated, EmbedConfig, SituatedEmbeddings};
use crate::error::{Error, Result};
use crate::lexicon::{
    build_focus_set, random_focus_words, EtymologyGraph, FocusSet, FocusSetParams, PosCounts,
    SenseInventory,
};
use crate::phylo::{
    flat_clusters, normalized_tree_distance, parse_newick, to_newick, ward_cluster,
    write_clusters_tsv, Evaluation, Linkage, DEFAULT_FLAT_DEPTH, DEFAULT_FLAT_THRESHOLD,
};
use crate::synthgen::{PlantedSpec, SynthWorld};

pub const CLEAN_CORPUS: &str = "clean.jsonl";
pub const INGEST_REPORT: &str = "ingest.json";
pub const FOCUS_SET: &str = "focus_set.json";
pub const FOCUS_REPORT: &str = "focus_report.json";
pub const FOCUS_WORDS: &str = "focus_words.txt";
pub const EMBEDDINGS: &str = "embeddings.txt";
pub const EMBED_REPORT: &str = "embed_report.json";
pub const FREQUENCIES: &str = "frequencies.tsv";
pub const DISTANCES: &str = "distance.csv";
pub const TREE: &str = "tree.nwk";
pub const CLUSTERS: &str = "clusters.tsv";
pub const EVAL: &str = "eval.json";
pub const DIVERGENCE: &str = "divergence.tsv";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// JSON-lines labeled corpus.
    pub corpus: Option<PathBuf>,
    pub etymology: Option<PathBuf>,
    pub senses: Option<PathBuf>,
    pub pos_counts: Option<PathBuf>,
    /// Truecasing tables; both or neither.
    pub trigrams: Option<PathBuf>,
    pub unigrams: Option<PathBuf>,
    /// English word list for UNK abstraction.
    pub lexicon: Option<PathBuf>,
    /// `phrase<TAB>type` entity list.
    pub gazetteer: Option<PathBuf>,
    pub gold: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub dominance_threshold: f64,
    pub logodds_threshold: f64,
    pub alpha0: f64,
    pub min_support: u64,
    pub flat_threshold: f64,
    pub flat_depth: usize,
    pub max_unk_fraction: f64,
    pub cleanup_order: CleanupOrder,
    pub mode: Mode,
    pub linkage: Linkage,
    pub constant_weight: Option<f64>,
    /// Drives embedding training, the random focus set and the random baseline.
    pub seed: u64,
    /// Forces single-threaded embedding training.
    pub deterministic: bool,
    pub n_random: usize,
    /// Replace the focus words with this many random corpus words.
    pub random_focus: Option<usize>,
    pub random_min_count: u64,
    /// Label pair for the divergence report; defaults to the first two labels.
    pub divergence_labels: Option<[String; 2]>,
    pub embed: EmbedConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            paths: Paths::default(),
            dominance_threshold: 0.9,
            logodds_threshold: 5.0,
            alpha0: 1000.0,
            min_support: DEFAULT_MIN_SUPPORT,
            flat_threshold: DEFAULT_FLAT_THRESHOLD,
            flat_depth: DEFAULT_FLAT_DEPTH,
            max_unk_fraction: 0.5,
            cleanup_order: CleanupOrder::default(),
            mode: Mode::default(),
            linkage: Linkage::default(),
            constant_weight: None,
            seed: 0,
            deterministic: false,
            n_random: 100,
            random_focus: None,
            random_min_count: 20,
            divergence_labels: None,
            embed: EmbedConfig::default(),
        }
    }
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(x) = p {
        if x.is_relative() {
            *x = base.join(&*x);
        }
    }
}

impl RunConfig {
    /// Parses TOML; relative paths are taken from `base`.
    pub fn from_toml(s: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig =
            toml::from_str(s).map_err(|e| Error::Validation(format!("run config: {e}")))?;
        cfg.paths.resolve_against(base);
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::from_toml(&text, base)
            .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
    }

    /// Paths of a dataset written by [`SynthWorld::write_dataset`].
    pub fn for_dataset(dir: &Path) -> Self {
        RunConfig {
            paths: Paths {
                corpus: Some(dir.join("corpus.jsonl")),
                etymology: Some(dir.join("etymology.tsv")),
                senses: Some(dir.join("senses.jsonl")),
                pos_counts: Some(dir.join("pos_counts.tsv")),
                lexicon: Some(dir.join("lexicon.txt")),
                gold: Some(dir.join("gold.nwk")),
                ..Paths::default()
            },
            ..RunConfig::default()
        }
    }

    pub fn focus_params(&self) -> FocusSetParams {
        FocusSetParams {
            dominance_threshold: self.dominance_threshold,
            logodds_threshold: self.logodds_threshold,
            alpha0: self.alpha0,
        }
    }

    /// Embedding settings with the run seed and worker policy applied.
    pub fn effective_embed(&self) -> EmbedConfig {
        let mut e = self.embed.clone();
        e.seed = self.seed;
        if self.deterministic {
            e.workers = 1;
        }
        e
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: &str| Err(Error::Validation(format!("{name}: {msg}")));
        if !(self.dominance_threshold > 0.0 && self.dominance_threshold <= 1.0) {
            return field("dominance_threshold", "must lie in (0, 1]");
        }
        if !(self.logodds_threshold > 0.0) {
            return field("logodds_threshold", "must be positive");
        }
        if !(self.alpha0 > 0.0) {
            return field("alpha0", "must be positive");
        }
        if !self.flat_threshold.is_finite() {
            return field("flat_threshold", "must be finite");
        }
        if self.flat_depth == 0 {
            return field("flat_depth", "must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.max_unk_fraction) {
            return field("max_unk_fraction", "must lie in [0, 1]");
        }
        if self.n_random == 0 {
            return field("n_random", "must be at least 1");
        }
        if self.random_focus == Some(0) {
            return field("random_focus", "must be at least 1");
        }
        if let Some(w) = self.constant_weight {
            if !(w > 0.0 && w < 1.0) {
                return field("constant_weight", "must lie in (0, 1)");
            }
        }
        if self.paths.trigrams.is_some() != self.paths.unigrams.is_some() {
            return field(
                "paths.trigrams",
                "trigrams and unigrams must be given together",
            );
        }
        self.embed
            .validate()
            .map_err(|e| Error::Validation(format!("embed: {e}")))?;
        for (name, p) in self.paths.entries() {
            if let Some(p) = p {
                if !p.is_file() {
                    return Err(Error::Validation(format!(
                        "paths.{name}: no such file {}",
                        p.display()
                    )));
                }
            }
        }
        Ok(())
    }
}

impl Paths {
    fn entries(&self) -> [(&'static str, &Option<PathBuf>); 9] {
        [
            ("corpus", &self.corpus),
            ("etymology", &self.etymology),
            ("senses", &self.senses),
            ("pos_counts", &self.pos_counts),
            ("trigrams", &self.trigrams),
            ("unigrams", &self.unigrams),
            ("lexicon", &self.lexicon),
            ("gazetteer", &self.gazetteer),
            ("gold", &self.gold),
        ]
    }

    fn resolve_against(&mut self, base: &Path) {
        for p in [
            &mut self.corpus,
            &mut self.etymology,
            &mut self.senses,
            &mut self.pos_counts,
            &mut self.trigrams,
            &mut self.unigrams,
            &mut self.lexicon,
            &mut self.gazetteer,
            &mut self.gold,
        ] {
            resolve(base, p);
        }
    }
}

fn require<'a>(p: &'a Option<PathBuf>, name: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::Validation(format!("paths.{name}: required by this stage")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub file: String,
    pub sha256: String,
}

fn digest(path: &Path) -> Result<FileDigest> {
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    std::io::copy(&mut f, &mut h).map_err(|e| Error::io(path, e))?;
    Ok(FileDigest {
        file: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        sha256: hex::encode(h.finalize()),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub stage: &'a str,
    pub seed: u64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub config: RunConfig,
}

impl Paths {
    /// File names only, so manifests do not depend on where a run lives.
    fn basenames(&self) -> Paths {
        let b = |p: &Option<PathBuf>| p.as_ref().and_then(|p| p.file_name()).map(PathBuf::from);
        Paths {
            corpus: b(&self.corpus),
            etymology: b(&self.etymology),
            senses: b(&self.senses),
            pos_counts: b(&self.pos_counts),
            trigrams: b(&self.trigrams),
            unigrams: b(&self.unigrams),
            lexicon: b(&self.lexicon),
            gazetteer: b(&self.gazetteer),
            gold: b(&self.gold),
        }
    }
}

fn write_manifest(
    cfg: &RunConfig,
    out: &Path,
    stage: &str,
    inputs: &[&Path],
    outputs: &[&Path],
) -> Result<()> {
    let m = Manifest {
        stage,
        seed: cfg.seed,
        inputs: inputs.iter().map(|p| digest(p)).collect::<Result<_>>()?,
        outputs: outputs.iter().map(|p| digest(p)).collect::<Result<_>>()?,
        config: RunConfig {
            paths: cfg.paths.basenames(),
            ..cfg.clone()
        },
    };
    let path = out.join(format!("{stage}.manifest.json"));
    let text = serde_json::to_string_pretty(&m)? + "\n";
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn name(path: &Path) -> String {
    path.display().to_string()
}

fn write_with(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn prepare(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

/// Reads the cleaned corpus written by [`ingest`].
pub fn load_clean(out: &Path) -> Result<LabeledCorpus> {
    let path = out.join(CLEAN_CORPUS);
    Ok(LabeledCorpus::read_jsonl(open(&path)?, &name(&path), None)?.0)
}

/// Reads the corpus, truecases and abstracts it, drops unusable sentences.
pub fn ingest(cfg: &RunConfig, out: &Path) -> Result<serde_json::Value> {
    prepare(cfg, out)?;
    let corpus_path = require(&cfg.paths.corpus, "corpus")?;
    let (corpus, read) = LabeledCorpus::read_jsonl(open(corpus_path)?, &name(corpus_path), None)?;
    let mut inputs = vec![corpus_path];
    let ngrams = match (&cfg.paths.trigrams, &cfg.paths.unigrams) {
        (Some(t), Some(u)) => {
            inputs.extend([t.as_path(), u.as_path()]);
            Some(NgramTable::from_tsv(
                open(t)?,
                &name(t),
                open(u)?,
                &name(u),
            )?)
        }
        _ => None,
    };
    let lexicon = match &cfg.paths.lexicon {
        Some(p) => {
            inputs.push(p);
            Some(EnglishLexicon::from_reader(open(p)?, &name(p))?)
        }
        None => None,
    };
    let gazetteer = match &cfg.paths.gazetteer {
        Some(p) => {
            inputs.push(p);
            Some(GazetteerTagger::from_tsv(open(p)?, &name(p))?)
        }
        None => None,
    };
    let cleaner = Cleaner {
        ngrams: ngrams.as_ref(),
        annotator: gazetteer.as_ref().map(|g| g as _),
        lexicon: lexicon.as_ref(),
        order: cfg.cleanup_order,
        max_unk_fraction: cfg.max_unk_fraction,
    };
    let (clean, cleanup) = cleaner.clean(&corpus)?;
    log::info!(
        "ingest: kept {} of {} sentences",
        cleanup.kept,
        cleanup.input
    );
    if clean.is_empty() {
        return Err(Error::Empty(format!(
            "{}: no sentences survive cleanup",
            name(corpus_path)
        )));
    }
    let clean_path = out.join(CLEAN_CORPUS);
    write_with(&clean_path, |w| clean.write_jsonl(w))?;
    let report = serde_json::json!({"read": read, "cleanup": cleanup});
    let report_path = out.join(INGEST_REPORT);
    write_json(&report_path, &report)?;
    write_manifest(cfg, out, "ingest", &inputs, &[&clean_path, &report_path])?;
    Ok(report)
}

fn read_words(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let words: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    if words.is_empty() {
        return Err(Error::Empty(format!("{}: no focus words", name(path))));
    }
    Ok(words)
}

/// Builds the focus set and the word list used for distances (the focus set's
/// words, or random corpus words when `random_focus` is set).
pub fn focus_set(cfg: &RunConfig, out: &Path) -> Result<FocusSet> {
    prepare(cfg, out)?;
    let clean_path = out.join(CLEAN_CORPUS);
    let idx = load_clean(out)?.index();
    let senses = require(&cfg.paths.senses, "senses")?;
    let ety = require(&cfg.paths.etymology, "etymology")?;
    let inventory = SenseInventory::from_jsonl(open(senses)?, &name(senses))?;
    let (graph, warnings) = EtymologyGraph::from_tsv(open(ety)?, &name(ety))?;
    let mut inputs = vec![clean_path.as_path(), senses, ety];
    let pos_counts = match &cfg.paths.pos_counts {
        Some(p) => {
            inputs.push(p);
            PosCounts::from_tsv(open(p)?, &name(p))?
        }
        None => PosCounts::new(),
    };
    let params = cfg.focus_params();
    let (fs, report) = build_focus_set(&inventory, &pos_counts, &graph, &idx, &params)?;
    log::info!(
        "focus-set: {} candidates, {} after dominance, {} synsets, {} words eliminated",
        report.candidates,
        report.after_dominance,
        report.synsets,
        report.eliminated.len()
    );
    let words: Vec<String> = match cfg.random_focus {
        Some(n) => {
            let exclude: HashSet<&str> = inventory.all_members();
            random_focus_words(&idx, &exclude, n, cfg.random_min_count, &params, cfg.seed)?
        }
        None => fs.words.iter().cloned().collect(),
    };
    if words.is_empty() {
        return Err(Error::Empty("focus set is empty after filtering".into()));
    }
    let fs_path = out.join(FOCUS_SET);
    write_with(&fs_path, |w| fs.write_json(w))?;
    let report_path = out.join(FOCUS_REPORT);
    write_json(
        &report_path,
        &serde_json::json!({"report": report, "etymology_warnings": warnings.len(), "random_focus": cfg.random_focus}),
    )?;
    let words_path = out.join(FOCUS_WORDS);
    fs::write(
        &words_path,
        words.iter().map(|w| format!("{w}\n")).collect::<String>(),
    )
    .map_err(|e| Error::io(&words_path, e))?;
    write_manifest(
        cfg,
        out,
        "focus-set",
        &inputs,
        &[&fs_path, &report_path, &words_path],
    )?;
    Ok(fs)
}

pub fn embed(cfg: &RunConfig, out: &Path) -> Result<SituatedEmbeddings> {
    prepare(cfg, out)?;
    let clean_path = out.join(CLEAN_CORPUS);
    let corpus = load_clean(out)?;
    let (model, report) = train_situated(&corpus, &cfg.effective_embed())?;
    log::info!(
        "embed: {} words, epoch losses {:?}",
        report.vocab_size,
        report.epoch_losses
    );
    let model_path = out.join(EMBEDDINGS);
    write_with(&model_path, |w| model.write_text(w))?;
    let report_path = out.join(EMBED_REPORT);
    write_json(&report_path, &report)?;
    write_manifest(
        cfg,
        out,
        "embed",
        &[&clean_path],
        &[&model_path, &report_path],
    )?;
    Ok(model)
}

/// Label-by-label distances over the focus words.
pub fn distance(cfg: &RunConfig, out: &Path) -> Result<DistanceMatrix> {
    prepare(cfg, out)?;
    let clean_path = out.join(CLEAN_CORPUS);
    let words_path = out.join(FOCUS_WORDS);
    let ft = FrequencyTable::new(load_clean(out)?.index());
    let words = read_words(&words_path)?;
    let mut inputs = vec![clean_path.as_path(), words_path.as_path()];
    let model_path = out.join(EMBEDDINGS);
    let model = match cfg.mode {
        Mode::Combined => {
            if !model_path.is_file() {
                return Err(Error::NotFound(format!(
                    "{}: combined mode needs the embed stage output",
                    name(&model_path)
                )));
            }
            inputs.push(&model_path);
            Some(SituatedEmbeddings::read_text(
                open(&model_path)?,
                &name(&model_path),
            )?)
        }
        Mode::FrequencyOnly => None,
    };
    let labels: Vec<String> = ft.labels().map(String::from).collect();
    let opts = DistanceOptions {
        mode: cfg.mode,
        constant_weight: cfg.constant_weight,
    };
    let m = distance_matrix(&labels, &words, &ft, model.as_ref(), &opts)?;
    let freq_path = out.join(FREQUENCIES);
    write_with(&freq_path, |w| ft.write_tsv(w, &words))?;
    let dist_path = out.join(DISTANCES);
    write_with(&dist_path, |w| m.write_csv(w))?;
    write_manifest(cfg, out, "distance", &inputs, &[&freq_path, &dist_path])?;
    Ok(m)
}

/// Ward tree and flat clusters from the distance matrix.
pub fn cluster(cfg: &RunConfig, out: &Path) -> Result<crate::phylo::PhyloTree> {
    prepare(cfg, out)?;
    let dist_path = out.join(DISTANCES);
    let m = DistanceMatrix::read_csv(open(&dist_path)?, &name(&dist_path))?;
    let tree = ward_cluster(&m, cfg.linkage)?;
    let tree_path = out.join(TREE);
    fs::write(&tree_path, to_newick(&tree) + "\n").map_err(|e| Error::io(&tree_path, e))?;
    let clusters = flat_clusters(&tree, cfg.flat_depth, cfg.flat_threshold);
    let clusters_path = out.join(CLUSTERS);
    write_with(&clusters_path, |w| write_clusters_tsv(&clusters, w))?;
    write_manifest(
        cfg,
        out,
        "cluster",
        &[&dist_path],
        &[&tree_path, &clusters_path],
    )?;
    Ok(tree)
}

pub fn read_tree(path: &Path) -> Result<crate::phylo::PhyloTree> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_newick(text.trim()).map_err(|e| Error::Validation(format!("{}: {e}", name(path))))
}

/// Normalized distance of `tree` (default: the cluster stage output) from
/// `gold` (default: `paths.gold`).
pub fn evaluate(
    cfg: &RunConfig,
    out: &Path,
    tree: Option<&Path>,
    gold: Option<&Path>,
) -> Result<Evaluation> {
    prepare(cfg, out)?;
    let default_tree = out.join(TREE);
    let tree_path = tree.unwrap_or(&default_tree);
    let gold_path = match gold {
        Some(g) => g,
        None => require(&cfg.paths.gold, "gold")?,
    };
    let ev = normalized_tree_distance(
        &read_tree(tree_path)?,
        &read_tree(gold_path)?,
        cfg.n_random,
        cfg.seed,
        cfg.linkage,
    )?;
    log::info!("evaluate: raw {} normalized {:.4}", ev.raw, ev.normalized);
    let eval_path = out.join(EVAL);
    write_json(&eval_path, &ev)?;
    write_manifest(cfg, out, "evaluate", &[tree_path, gold_path], &[&eval_path])?;
    Ok(ev)
}

/// Focus synsets ranked by divergence between two labels.
pub fn diverge(cfg: &RunConfig, out: &Path) -> Result<crate::divergence::DivergenceReport> {
    prepare(cfg, out)?;
    let clean_path = out.join(CLEAN_CORPUS);
    let fs_path = out.join(FOCUS_SET);
    let ft = FrequencyTable::new(load_clean(out)?.index());
    let text = fs::read_to_string(&fs_path).map_err(|e| Error::io(&fs_path, e))?;
    let fs = FocusSet::from_json(&text)?;
    let [li, lj] = match &cfg.divergence_labels {
        Some(pair) => pair.clone(),
        None => {
            let labels: Vec<&str> = ft.labels().collect();
            if labels.len() < 2 {
                return Err(Error::Validation(
                    "divergence needs at least two labels".into(),
                ));
            }
            [labels[0].to_string(), labels[1].to_string()]
        }
    };
    let report = rank_focus_set(&li, &lj, &fs, &ft, cfg.min_support)?;
    let path = out.join(DIVERGENCE);
    write_with(&path, |w| report.write_tsv(w))?;
    write_manifest(cfg, out, "diverge", &[&clean_path, &fs_path], &[&path])?;
    Ok(report)
}

/// Writes a synthetic dataset and returns a run configuration pointing at it.
pub fn synth(spec: &PlantedSpec, dir: &Path) -> Result<RunConfig> {
    let world = SynthWorld::new(spec)?;
    let corpus = world.generate_corpus()?;
    world.write_dataset(&corpus, dir)?;
    Ok(RunConfig::for_dataset(dir))
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineSummary {
    pub focus_synsets: usize,
    pub focus_words: usize,
    pub evaluation: Option<Evaluation>,
    pub divergence_rows: usize,
}

/// All stages in order. Embeddings are trained only in combined mode, the
/// evaluation only runs with a gold tree.
pub fn run_pipeline(cfg: &RunConfig, out: &Path) -> Result<PipelineSummary> {
    ingest(cfg, out)?;
    let fs = focus_set(cfg, out)?;
    if cfg.mode == Mode::Combined {
        embed(cfg, out)?;
    }
    distance(cfg, out)?;
    cluster(cfg, out)?;
    let evaluation = match cfg.paths.gold {
        Some(_) => Some(evaluate(cfg, out, None, None)?),
        None => None,
    };
    let report = diverge(cfg, out)?;
    Ok(PipelineSummary {
        focus_synsets: fs.len(),
        focus_words: read_words(&out.join(FOCUS_WORDS))?.len(),
        evaluation,
        divergence_rows: report.rows.len(),
    })
}
