//! Synthetic labeled corpora with a planted phylogeny and planted synonym
//! preferences.

mod words;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, Zipf};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use words::pseudo_word;

use crate::corpus::{LabeledCorpus, LabeledSentence};
use crate::error::{Error, Result};
use crate::phylo::{
    flat_clusters, parse_newick, partition, to_newick, PhyloTree, DEFAULT_FLAT_DEPTH,
    DEFAULT_FLAT_THRESHOLD,
};

/// The planted-phylogeny configuration shipped with the crate.
pub const BUNDLED_SPEC: &str = include_str!("../../data/planted12.toml");

/// A word over-represented in one label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasWord {
    /// Generated when absent.
    #[serde(default)]
    pub word: Option<String>,
    pub label: String,
    pub boost: f64,
    /// Synset the word is listed under in the sense inventory.
    #[serde(default)]
    pub synset: usize,
}

/// Fixed member preferences for one synset under one label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceOverride {
    pub synset: usize,
    pub label: String,
    pub probs: Vec<f64>,
}

fn default_zipf() -> f64 {
    1.1
}

fn default_base_rate() -> f64 {
    5e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedSpec {
    pub seed: u64,
    /// Newick; branch lengths scale the drift (missing lengths count as 1).
    pub gold_tree: String,
    pub n_synsets: usize,
    pub min_members: usize,
    pub max_members: usize,
    pub drift_sigma: f64,
    pub sentences_per_label: usize,
    /// Tokens per sentence before signature tokens and the final period.
    pub sentence_length: usize,
    pub slots_per_sentence: usize,
    pub filler_vocab_size: usize,
    #[serde(default = "default_zipf")]
    pub zipf_exponent: f64,
    #[serde(default = "default_base_rate")]
    pub bias_base_rate: f64,
    #[serde(default)]
    pub bias_words: Vec<BiasWord>,
    #[serde(default)]
    pub overrides: Vec<PreferenceOverride>,
    /// Follow every synset word with a signature context token.
    #[serde(default)]
    pub context_signature: bool,
    /// In signature mode, members of the first this-many synsets get a
    /// signature that depends on the label's family.
    #[serde(default)]
    pub divergent_synsets: usize,
}

impl PlantedSpec {
    pub fn from_toml(s: &str) -> Result<Self> {
        let spec: PlantedSpec =
            toml::from_str(s).map_err(|e| Error::Validation(format!("planted spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn bundled() -> Self {
        PlantedSpec::from_toml(BUNDLED_SPEC).expect("bundled spec is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(format!("planted spec: {m}")));
        if !(self.drift_sigma >= 0.0) {
            return bad("drift_sigma must be non-negative".into());
        }
        if self.min_members < 2 || self.max_members < self.min_members {
            return bad("need 2 <= min_members <= max_members".into());
        }
        if self.filler_vocab_size == 0 || self.sentence_length == 0 {
            return bad("filler_vocab_size and sentence_length must be positive".into());
        }
        if self.slots_per_sentence > self.sentence_length {
            return bad("slots_per_sentence exceeds sentence_length".into());
        }
        if self.slots_per_sentence > 0 && self.n_synsets == 0 {
            return bad("synset slots without synsets".into());
        }
        if !(self.zipf_exponent > 0.0) || !(0.0..1.0).contains(&self.bias_base_rate) {
            return bad("zipf_exponent must be positive and bias_base_rate in [0, 1)".into());
        }
        let tree = parse_newick(&self.gold_tree)?;
        let labels: BTreeSet<&str> = tree.leaf_labels().into_iter().collect();
        for b in &self.bias_words {
            if !(b.boost > 1.0) {
                return bad(format!("bias boost for {:?} must exceed 1", b.label));
            }
            if !labels.contains(b.label.as_str()) {
                return bad(format!(
                    "bias label {:?} is not a leaf of the gold tree",
                    b.label
                ));
            }
            if b.synset >= self.n_synsets {
                return bad(format!("bias word attached to missing synset {}", b.synset));
            }
        }
        for o in &self.overrides {
            if !labels.contains(o.label.as_str()) || o.synset >= self.n_synsets {
                return bad(format!(
                    "override for unknown label {:?} or synset {}",
                    o.label, o.synset
                ));
            }
            let sum: f64 = o.probs.iter().sum();
            if o.probs.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return bad(format!(
                    "override probabilities for synset {} must sum to 1",
                    o.synset
                ));
            }
        }
        Ok(())
    }
}

/// Word inventory of a synthetic world.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthLexicon {
    pub fillers: Vec<String>,
    pub synsets: Vec<Vec<String>>,
    /// `(word, label, boost, synset)`.
    pub bias: Vec<(String, String, f64, usize)>,
    /// Signature token per synset member and family.
    pub signatures: BTreeMap<String, BTreeMap<String, String>>,
}

/// Per label, per synset, member probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preferences {
    pub labels: Vec<String>,
    pub probs: Vec<Vec<Vec<f64>>>,
}

impl Preferences {
    pub fn get(&self, label: &str, synset: usize) -> Option<&[f64]> {
        let l = self.labels.iter().position(|x| x == label)?;
        self.probs[l].get(synset).map(Vec::as_slice)
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const STREAM_LEXICON: u64 = 1;
const STREAM_DRIFT: u64 = 2;
const STREAM_LABELS: u64 = 1000;

/// Member counts per synset, drawn uniformly from `min..=max`.
pub fn synset_sizes(spec: &PlantedSpec) -> Vec<usize> {
    let mut rng = stream_rng(spec.seed, STREAM_LEXICON);
    (0..spec.n_synsets)
        .map(|_| rng.random_range(spec.min_members..=spec.max_members))
        .collect()
}

pub fn build_lexicon(spec: &PlantedSpec, tree: &PhyloTree) -> SynthLexicon {
    let mut next = 0usize;
    let mut fresh = || {
        next += 1;
        pseudo_word(next - 1)
    };
    let fillers: Vec<String> = (0..spec.filler_vocab_size).map(|_| fresh()).collect();
    let synsets: Vec<Vec<String>> = synset_sizes(spec)
        .into_iter()
        .map(|k| (0..k).map(|_| fresh()).collect())
        .collect();
    let bias = spec
        .bias_words
        .iter()
        .map(|b| {
            (
                b.word.clone().unwrap_or_else(&mut fresh),
                b.label.clone(),
                b.boost,
                b.synset,
            )
        })
        .collect();
    let mut signatures = BTreeMap::new();
    if spec.context_signature {
        let fams: BTreeSet<String> = families(tree).into_values().collect();
        for (i, members) in synsets.iter().enumerate() {
            for w in members {
                let per: BTreeMap<String, String> = if i < spec.divergent_synsets {
                    fams.iter().map(|c| (c.clone(), fresh())).collect()
                } else {
                    let s = fresh();
                    fams.iter().map(|c| (c.clone(), s.clone())).collect()
                };
                signatures.insert(w.clone(), per);
            }
        }
    }
    SynthLexicon {
        fillers,
        synsets,
        bias,
        signatures,
    }
}

/// Family of every leaf: the gold tree's own flat clusters under the
/// default inconsistency cut, named by the family's first leaf label.
pub fn families(tree: &PhyloTree) -> BTreeMap<String, String> {
    let clusters = flat_clusters(tree, DEFAULT_FLAT_DEPTH, DEFAULT_FLAT_THRESHOLD);
    let mut name: BTreeMap<usize, &str> = BTreeMap::new();
    for c in &clusters {
        name.entry(c.cluster).or_insert(&c.label);
    }
    clusters
        .iter()
        .map(|c| (c.label.clone(), name[&c.cluster].to_string()))
        .collect()
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|x| (x - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Gaussian drift of member logits down the gold tree, one independent walk
/// per synset, starting from uniform at the root. Edge noise has standard
/// deviation `drift_sigma * branch_length`. Overrides replace the result.
pub fn drift_preferences(
    spec: &PlantedSpec,
    tree: &PhyloTree,
    sizes: &[usize],
) -> Result<Preferences> {
    let mut rng = stream_rng(spec.seed, STREAM_DRIFT);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let order = tree.preorder();
    let leaves: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| tree.node(i).is_leaf())
        .collect();
    let labels: Vec<String> = leaves
        .iter()
        .map(|&i| tree.node(i).label.clone().unwrap_or_default())
        .collect();
    let mut probs = vec![Vec::with_capacity(sizes.len()); labels.len()];
    let mut logits = vec![Vec::new(); tree.len()];
    for &k in sizes {
        logits[tree.root()] = vec![0.0; k];
        for &id in &order {
            for &c in &tree.node(id).children {
                let sd = spec.drift_sigma * tree.node(c).length.unwrap_or(1.0);
                let child: Vec<f64> = logits[id]
                    .iter()
                    .map(|x| x + sd * std_normal.sample(&mut rng))
                    .collect();
                logits[c] = child;
            }
        }
        for (li, &leaf) in leaves.iter().enumerate() {
            probs[li].push(softmax(&logits[leaf]));
        }
    }
    for o in &spec.overrides {
        let l = labels
            .iter()
            .position(|x| *x == o.label)
            .expect("validated label");
        if o.probs.len() != sizes[o.synset] {
            return Err(Error::Validation(format!(
                "override for synset {} has {} probabilities, synset has {} members",
                o.synset,
                o.probs.len(),
                sizes[o.synset]
            )));
        }
        probs[l][o.synset] = o.probs.clone();
    }
    Ok(Preferences { labels, probs })
}

struct LabelGen<'a> {
    spec: &'a PlantedSpec,
    lex: &'a SynthLexicon,
    family: String,
    member_dists: Vec<WeightedIndex<f64>>,
    bias: Vec<(&'a str, f64)>,
}

impl LabelGen<'_> {
    fn sentence(&self, rng: &mut ChaCha8Rng, zipf: &Zipf<f64>) -> Vec<String> {
        let n = self.spec.sentence_length;
        let slots: BTreeSet<usize> = rand::seq::index::sample(rng, n, self.spec.slots_per_sentence)
            .into_iter()
            .collect();
        let mut out = Vec::with_capacity(n + self.spec.slots_per_sentence + 1);
        for pos in 0..n {
            if slots.contains(&pos) {
                let s = rng.random_range(0..self.lex.synsets.len());
                let m = self.member_dists[s].sample(rng);
                let w = &self.lex.synsets[s][m];
                out.push(w.clone());
                if let Some(sig) = self.lex.signatures.get(w) {
                    out.push(sig[&self.family].clone());
                }
                continue;
            }
            let mut token = None;
            for &(b, rate) in &self.bias {
                if rng.random::<f64>() < rate {
                    token = Some(b.to_string());
                    break;
                }
            }
            let word = token.unwrap_or_else(|| {
                let r = zipf.sample(rng) as usize;
                self.lex.fillers[r.clamp(1, self.lex.fillers.len()) - 1].clone()
            });
            out.push(word);
        }
        out.push(".".to_string());
        out
    }
}

/// Everything needed to write a synthetic dataset.
#[derive(Debug, Clone)]
pub struct SynthWorld {
    pub spec: PlantedSpec,
    pub tree: PhyloTree,
    pub lexicon: SynthLexicon,
    pub preferences: Preferences,
}

impl SynthWorld {
    pub fn new(spec: &PlantedSpec) -> Result<Self> {
        spec.validate()?;
        let tree = parse_newick(&spec.gold_tree)?;
        let lexicon = build_lexicon(spec, &tree);
        let sizes: Vec<usize> = lexicon.synsets.iter().map(Vec::len).collect();
        let preferences = drift_preferences(spec, &tree, &sizes)?;
        Ok(SynthWorld {
            spec: spec.clone(),
            tree,
            lexicon,
            preferences,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.preferences.labels
    }

    /// Samples the corpus; each label uses its own random stream.
    pub fn generate_corpus(&self) -> Result<LabeledCorpus> {
        let zipf = Zipf::new(self.spec.filler_vocab_size as f64, self.spec.zipf_exponent)
            .map_err(|e| Error::Validation(format!("zipf: {e}")))?;
        let fams = families(&self.tree);
        let per_label: Vec<Vec<LabeledSentence>> = self
            .labels()
            .par_iter()
            .enumerate()
            .map(|(li, label)| {
                let member_dists = self.preferences.probs[li]
                    .iter()
                    .map(|p| {
                        WeightedIndex::new(p)
                            .map_err(|e| Error::Validation(format!("preferences: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let bias = self
                    .lexicon
                    .bias
                    .iter()
                    .map(|(w, l, boost, _)| {
                        let rate = self.spec.bias_base_rate * if l == label { *boost } else { 1.0 };
                        (w.as_str(), rate)
                    })
                    .collect();
                let gen = LabelGen {
                    spec: &self.spec,
                    lex: &self.lexicon,
                    family: fams[label].clone(),
                    member_dists,
                    bias,
                };
                let mut rng = stream_rng(self.spec.seed, STREAM_LABELS + li as u64);
                Ok((0..self.spec.sentences_per_label)
                    .map(|i| {
                        LabeledSentence::new(
                            label.clone(),
                            gen.sentence(&mut rng, &zipf),
                            format!("{label}-{i}"),
                        )
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        let mut corpus = LabeledCorpus::with_labels(self.labels().iter().cloned());
        for s in per_label.into_iter().flatten() {
            corpus.push(s)?;
        }
        Ok(corpus)
    }

    /// Synset members with any attached bias words.
    fn inventory_members(&self) -> Vec<Vec<String>> {
        let mut sets = self.lexicon.synsets.clone();
        for (w, _, _, s) in &self.lexicon.bias {
            sets[*s].push(w.clone());
        }
        sets
    }

    /// Etymology records: every synset member and bias word descends from a
    /// root of its own.
    pub fn etymology_tsv(&self) -> String {
        const LANGS: [&str; 5] = ["lat", "ang", "fro", "non", "grc"];
        let mut out = String::new();
        for members in self.inventory_members() {
            for (k, w) in members.iter().enumerate() {
                let lang = LANGS[k % LANGS.len()];
                out.push_str(&format!("eng:{w}\trel:etymology\tenm:{w}\n"));
                out.push_str(&format!("enm:{w}\trel:etymology\t{lang}:{w}\n"));
            }
        }
        out
    }

    pub fn senses_jsonl(&self) -> String {
        let mut out = String::new();
        for members in self.inventory_members() {
            let rec = serde_json::json!({
                "word": members[0],
                "senses": [{"pos": "N", "synonyms": &members[1..]}],
            });
            out.push_str(&rec.to_string());
            out.push('\n');
        }
        out
    }

    pub fn pos_counts_tsv(&self) -> String {
        self.inventory_members()
            .iter()
            .flatten()
            .map(|w| format!("{w}\tN\t100\n"))
            .collect()
    }

    /// Every generated word form, one per line, sorted.
    pub fn lexicon_txt(&self) -> String {
        let mut all: BTreeSet<&str> = self.lexicon.fillers.iter().map(String::as_str).collect();
        all.extend(self.lexicon.synsets.iter().flatten().map(String::as_str));
        all.extend(self.lexicon.bias.iter().map(|b| b.0.as_str()));
        for per in self.lexicon.signatures.values() {
            all.extend(per.values().map(String::as_str));
        }
        all.into_iter().map(|w| format!("{w}\n")).collect()
    }

    /// Words of the synsets whose signature depends on the family.
    pub fn divergent_words(&self) -> Vec<String> {
        self.lexicon
            .synsets
            .iter()
            .take(if self.spec.context_signature {
                self.spec.divergent_synsets
            } else {
                0
            })
            .flatten()
            .cloned()
            .collect()
    }

    pub fn planted_json(&self) -> String {
        let groups: Vec<BTreeSet<String>> = partition(&flat_clusters(
            &self.tree,
            DEFAULT_FLAT_DEPTH,
            DEFAULT_FLAT_THRESHOLD,
        ))
        .into_iter()
        .collect();
        let bias: Vec<_> = self
            .lexicon
            .bias
            .iter()
            .map(|(w, l, b, s)| serde_json::json!({"word": w, "label": l, "boost": b, "synset": s}))
            .collect();
        let v = serde_json::json!({
            "labels": self.labels(),
            "families": families(&self.tree),
            "groups": groups,
            "synsets": self.lexicon.synsets,
            "bias_words": bias,
            "divergent_words": self.divergent_words(),
            "preferences": self.preferences.probs,
        });
        serde_json::to_string_pretty(&v).expect("planted summary serializes")
    }

    /// Writes corpus.jsonl, gold.nwk, etymology.tsv, senses.jsonl,
    /// pos_counts.tsv, lexicon.txt, planted.json and spec.toml into `dir`.
    pub fn write_dataset(
        &self,
        corpus: &LabeledCorpus,
        dir: &Path,
    ) -> Result<Vec<std::path::PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        let mut put = |name: &str, body: &[u8]| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            written.push(path);
            Ok(())
        };
        let mut buf = Vec::new();
        corpus
            .write_jsonl(&mut buf)
            .map_err(|e| Error::io(dir.join("corpus.jsonl"), e))?;
        put("corpus.jsonl", &buf)?;
        put(
            "gold.nwk",
            format!("{}\n", to_newick(&self.tree)).as_bytes(),
        )?;
        put("etymology.tsv", self.etymology_tsv().as_bytes())?;
        put("senses.jsonl", self.senses_jsonl().as_bytes())?;
        put("pos_counts.tsv", self.pos_counts_tsv().as_bytes())?;
        put("lexicon.txt", self.lexicon_txt().as_bytes())?;
        let mut planted = self.planted_json().into_bytes();
        planted.write_all(b"\n").expect("vec write");
        put("planted.json", &planted)?;
        put("spec.toml", self.spec.to_toml().as_bytes())?;
        Ok(written)
    }
}

/// Total variation distance between two distributions of equal arity.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Empirical member distributions of every synset under every label.
pub fn empirical_preferences(
    corpus: &LabeledCorpus,
    synsets: &[Vec<String>],
) -> HashMap<String, Vec<Vec<f64>>> {
    let idx = corpus.index();
    idx.labels()
        .map(|l| {
            let dists = synsets
                .iter()
                .map(|members| {
                    let counts: Vec<f64> = members.iter().map(|w| idx.count(l, w) as f64).collect();
                    let total: f64 = counts.iter().sum();
                    counts
                        .iter()
                        .map(|c| if total > 0.0 { c / total } else { 0.0 })
                        .collect()
                })
                .collect();
            (l.to_string(), dists)
        })
        .collect()
}
