use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::sgns::{pair_loss_grad, SgnsParams};
use super::{EmbedConfig, SituatedEmbeddings};
use crate::corpus::LabeledCorpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub sentences_per_label: usize,
    pub vocab_size: usize,
    pub tokens: usize,
    /// Mean pair loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Parameters shared between workers as raw f64 bits. Updates are racy by
/// design when more than one worker runs.
struct SharedParams {
    dim: usize,
    vocab: usize,
    base: Vec<AtomicU64>,
    offsets: Vec<AtomicU64>,
    context: Vec<AtomicU64>,
}

fn atomics(v: Vec<f64>) -> Vec<AtomicU64> {
    v.into_iter().map(|x| AtomicU64::new(x.to_bits())).collect()
}

fn plain(v: Vec<AtomicU64>) -> Vec<f64> {
    v.into_iter()
        .map(|x| f64::from_bits(x.into_inner()))
        .collect()
}

fn read(src: &[AtomicU64], out: &mut [f64]) {
    for (o, s) in out.iter_mut().zip(src) {
        *o = f64::from_bits(s.load(Ordering::Relaxed));
    }
}

fn sub_scaled(dst: &[AtomicU64], scale: f64, g: &[f64]) {
    for (d, g) in dst.iter().zip(g) {
        let x = f64::from_bits(d.load(Ordering::Relaxed)) - scale * g;
        d.store(x.to_bits(), Ordering::Relaxed);
    }
}

impl SharedParams {
    fn base(&self, w: usize) -> &[AtomicU64] {
        &self.base[w * self.dim..(w + 1) * self.dim]
    }

    fn offset(&self, l: usize, w: usize) -> &[AtomicU64] {
        let at = (l * self.vocab + w) * self.dim;
        &self.offsets[at..at + self.dim]
    }

    fn context(&self, w: usize) -> &[AtomicU64] {
        &self.context[w * self.dim..(w + 1) * self.dim]
    }
}

/// Draws from the unigram distribution raised to 3/4.
struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        NegativeSampler { cumulative }
    }

    fn sample(&self, rng: &mut impl Rng) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let r = rng.random::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= r)
            .min(self.cumulative.len() - 1)
    }
}

struct Encoded {
    vocab: Vec<String>,
    counts: Vec<u64>,
    sentences: Vec<(usize, Vec<u32>)>,
    per_label: usize,
}

/// Balanced per-label sample, vocabulary by descending count then word, and
/// sentences re-encoded as vocabulary indices.
fn encode(
    corpus: &LabeledCorpus,
    labels: &[String],
    cfg: &EmbedConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Encoded> {
    let mut by_label: Vec<Vec<usize>> = vec![Vec::new(); labels.len()];
    let pos: HashMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    for (i, s) in corpus.sentences.iter().enumerate() {
        by_label[pos[s.l1_label.as_str()]].push(i);
    }
    if let Some((l, _)) = by_label.iter().enumerate().find(|(_, v)| v.is_empty()) {
        return Err(Error::Empty(format!(
            "label {:?} has no sentences",
            labels[l]
        )));
    }
    let smallest = by_label.iter().map(Vec::len).min().unwrap_or(0);
    let per_label = cfg
        .sentences_per_label
        .map_or(smallest, |n| n.min(smallest));
    let mut chosen: Vec<(usize, usize)> = Vec::with_capacity(per_label * labels.len());
    for (l, idx) in by_label.iter().enumerate() {
        let mut pick = rand::seq::index::sample(rng, idx.len(), per_label).into_vec();
        pick.sort_unstable();
        chosen.extend(pick.into_iter().map(|i| (l, idx[i])));
    }

    let mut freq: HashMap<&str, u64> = HashMap::new();
    for &(_, i) in &chosen {
        for t in &corpus.sentences[i].tokens {
            *freq.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(&str, u64)> = freq
        .into_iter()
        .filter(|&(_, c)| c >= cfg.min_count)
        .collect();
    kept.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    if kept.is_empty() {
        return Err(Error::Empty(format!(
            "no word occurs at least {} times",
            cfg.min_count
        )));
    }
    let index: HashMap<&str, u32> = kept
        .iter()
        .enumerate()
        .map(|(i, (w, _))| (*w, i as u32))
        .collect();
    let sentences = chosen
        .iter()
        .map(|&(l, i)| {
            let ids = corpus.sentences[i]
                .tokens
                .iter()
                .filter_map(|t| index.get(t.as_str()).copied())
                .collect();
            (l, ids)
        })
        .filter(|(_, ids): &(usize, Vec<u32>)| ids.len() > 1)
        .collect();
    Ok(Encoded {
        vocab: kept.iter().map(|(w, _)| w.to_string()).collect(),
        counts: kept.iter().map(|&(_, c)| c).collect(),
        sentences,
        per_label,
    })
}

struct Worker<'a> {
    cfg: &'a EmbedConfig,
    params: &'a SharedParams,
    sampler: &'a NegativeSampler,
    keep_prob: &'a [f64],
    progress: &'a AtomicUsize,
    total_work: f64,
}

impl Worker<'_> {
    /// Returns summed loss and pair count.
    fn run(&self, sentences: &[&(usize, Vec<u32>)], rng: &mut ChaCha8Rng) -> (f64, u64) {
        let dim = self.cfg.dim;
        let k = self.cfg.negatives;
        let mut u = vec![0.0; dim];
        let mut off = vec![0.0; dim];
        let mut targets = vec![0.0; (k + 1) * dim];
        let mut grad_u = vec![0.0; dim];
        let mut grad_t = vec![0.0; (k + 1) * dim];
        let mut ids = Vec::with_capacity(k + 1);
        let mut kept: Vec<usize> = Vec::new();
        let (mut loss, mut pairs) = (0.0, 0u64);
        for (label, sentence) in sentences.iter().map(|s| (s.0, &s.1)) {
            let done = self.progress.fetch_add(sentence.len(), Ordering::Relaxed) as f64;
            let lr = self.cfg.initial_lr * (1.0 - done / self.total_work).max(1e-4);
            kept.clear();
            kept.extend(
                sentence.iter().map(|&w| w as usize).filter(|&w| {
                    self.keep_prob[w] >= 1.0 || rng.random::<f64>() < self.keep_prob[w]
                }),
            );
            for i in 0..kept.len() {
                let w = kept[i];
                let b = rng.random_range(1..=self.cfg.window);
                let lo = i.saturating_sub(b);
                let hi = (i + b).min(kept.len() - 1);
                for (j, &c) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    ids.clear();
                    ids.push(c);
                    for _ in 0..k {
                        let n = self.sampler.sample(rng);
                        if n != c {
                            ids.push(n);
                        }
                    }
                    read(self.params.base(w), &mut u);
                    read(self.params.offset(label, w), &mut off);
                    for (a, o) in u.iter_mut().zip(&off) {
                        *a += o;
                    }
                    for (row, &t) in targets.chunks_exact_mut(dim).zip(&ids) {
                        read(self.params.context(t), row);
                    }
                    let n = ids.len() * dim;
                    grad_u.fill(0.0);
                    loss += pair_loss_grad(&u, &targets[..n], &mut grad_u, &mut grad_t[..n]);
                    pairs += 1;
                    for (g, &t) in grad_t.chunks_exact(dim).zip(&ids) {
                        sub_scaled(self.params.context(t), lr, g);
                    }
                    sub_scaled(self.params.base(w), lr, &grad_u);
                    sub_scaled(self.params.offset(label, w), lr, &grad_u);
                }
            }
        }
        (loss, pairs)
    }
}

/// Trains situated skip-gram embeddings with negative sampling. Each label
/// is subsampled to the same number of sentences. With one worker the result
/// is a deterministic function of the corpus and configuration.
pub fn train_situated(
    corpus: &LabeledCorpus,
    cfg: &EmbedConfig,
) -> Result<(SituatedEmbeddings, TrainReport)> {
    cfg.validate()?;
    let labels: Vec<String> = corpus.labels().map(String::from).collect();
    if labels.is_empty() {
        return Err(Error::Empty("corpus has no labels".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let enc = encode(corpus, &labels, cfg, &mut rng)?;
    let (dim, v) = (cfg.dim, enc.vocab.len());

    let total: u64 = enc.counts.iter().sum();
    let keep_prob: Vec<f64> = enc
        .counts
        .iter()
        .map(|&c| {
            if cfg.subsample_threshold == 0.0 {
                1.0
            } else {
                (cfg.subsample_threshold / (c as f64 / total as f64)).sqrt()
            }
        })
        .collect();
    let sampler = NegativeSampler::new(&enc.counts);

    let half = 0.5 / dim as f64;
    let base: Vec<f64> = (0..v * dim)
        .map(|_| rng.random_range(-half..half))
        .collect();
    let params = SharedParams {
        dim,
        vocab: v,
        base: atomics(base),
        offsets: atomics(vec![0.0; labels.len() * v * dim]),
        context: atomics(vec![0.0; v * dim]),
    };

    let tokens: usize = enc.sentences.iter().map(|s| s.1.len()).sum();
    let progress = AtomicUsize::new(0);
    let worker = Worker {
        cfg,
        params: &params,
        sampler: &sampler,
        keep_prob: &keep_prob,
        progress: &progress,
        total_work: (tokens * cfg.epochs).max(1) as f64,
    };
    let mut order: Vec<&(usize, Vec<u32>)> = enc.sentences.iter().collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let chunk = order.len().div_ceil(cfg.workers).max(1);
        let seeds: Vec<u64> = (0..cfg.workers).map(|_| rng.random()).collect();
        let results: Vec<(f64, u64)> = std::thread::scope(|scope| {
            let handles: Vec<_> = order
                .chunks(chunk)
                .zip(&seeds)
                .map(|(part, &s)| {
                    let worker = &worker;
                    scope.spawn(move || worker.run(part, &mut ChaCha8Rng::seed_from_u64(s)))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        });
        let (loss, pairs) = results
            .iter()
            .fold((0.0, 0), |(l, p), r| (l + r.0, p + r.1));
        let mean = if pairs > 0 { loss / pairs as f64 } else { 0.0 };
        log::info!("epoch {epoch}: mean pair loss {mean:.5} over {pairs} pairs");
        epoch_losses.push(mean);
    }

    let SharedParams {
        base,
        offsets,
        context,
        ..
    } = params;
    let p = SgnsParams::from_parts(
        dim,
        v,
        labels.len(),
        plain(base),
        plain(offsets),
        plain(context),
    )?;
    let report = TrainReport {
        sentences_per_label: enc.per_label,
        vocab_size: v,
        tokens,
        epoch_losses,
    };
    Ok((SituatedEmbeddings::new(enc.vocab, labels, p)?, report))
}
