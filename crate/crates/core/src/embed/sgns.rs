use crate::error::{Error, Result};

/// Dense parameters of the situated skip-gram model, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsParams {
    dim: usize,
    vocab: usize,
    labels: usize,
    base: Vec<f64>,
    offsets: Vec<f64>,
    context: Vec<f64>,
}

/// One (center word, label, context word) observation with its negative
/// samples, indexed into the vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    pub word: usize,
    pub label: usize,
    pub context: usize,
    pub negatives: Vec<usize>,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln sigmoid(x)` without overflow.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Loss and gradients of one pair: `-ln s(u.c+) - sum ln s(-u.c-)`.
/// `targets` holds the positive context row followed by the negative rows.
/// The input gradient is accumulated into `grad_u`; target gradients
/// overwrite `grad_targets`, which has the layout of `targets`.
pub(crate) fn pair_loss_grad(
    u: &[f64],
    targets: &[f64],
    grad_u: &mut [f64],
    grad_targets: &mut [f64],
) -> f64 {
    let dim = u.len();
    let mut loss = 0.0;
    for (k, (t, gt)) in targets
        .chunks_exact(dim)
        .zip(grad_targets.chunks_exact_mut(dim))
        .enumerate()
    {
        let x: f64 = u.iter().zip(t).map(|(a, b)| a * b).sum();
        let (label, l) = if k == 0 {
            (1.0, neg_log_sigmoid(x))
        } else {
            (0.0, neg_log_sigmoid(-x))
        };
        loss += l;
        let g = sigmoid(x) - label;
        for (gu, c) in grad_u.iter_mut().zip(t) {
            *gu += g * c;
        }
        for (d, a) in gt.iter_mut().zip(u) {
            *d = g * a;
        }
    }
    loss
}

impl SgnsParams {
    /// Zero offsets and context vectors with the given base rows.
    pub fn zeros(dim: usize, vocab: usize, labels: usize) -> Self {
        SgnsParams {
            dim,
            vocab,
            labels,
            base: vec![0.0; vocab * dim],
            offsets: vec![0.0; labels * vocab * dim],
            context: vec![0.0; vocab * dim],
        }
    }

    /// `context` may be empty for models loaded without context vectors.
    pub fn from_parts(
        dim: usize,
        vocab: usize,
        labels: usize,
        base: Vec<f64>,
        offsets: Vec<f64>,
        context: Vec<f64>,
    ) -> Result<Self> {
        if base.len() != vocab * dim
            || offsets.len() != labels * vocab * dim
            || !(context.is_empty() || context.len() == vocab * dim)
        {
            return Err(Error::Validation(
                "parameter block sizes do not match V, dim, L".into(),
            ));
        }
        Ok(SgnsParams {
            dim,
            vocab,
            labels,
            base,
            offsets,
            context,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab
    }

    pub fn label_count(&self) -> usize {
        self.labels
    }

    pub fn has_context(&self) -> bool {
        !self.context.is_empty()
    }

    pub fn base_row(&self, w: usize) -> &[f64] {
        &self.base[w * self.dim..(w + 1) * self.dim]
    }

    pub fn base_row_mut(&mut self, w: usize) -> &mut [f64] {
        &mut self.base[w * self.dim..(w + 1) * self.dim]
    }

    pub fn offset_row(&self, l: usize, w: usize) -> &[f64] {
        let at = (l * self.vocab + w) * self.dim;
        &self.offsets[at..at + self.dim]
    }

    pub fn offset_row_mut(&mut self, l: usize, w: usize) -> &mut [f64] {
        let at = (l * self.vocab + w) * self.dim;
        &mut self.offsets[at..at + self.dim]
    }

    pub fn context_row(&self, w: usize) -> &[f64] {
        &self.context[w * self.dim..(w + 1) * self.dim]
    }

    pub fn context_row_mut(&mut self, w: usize) -> &mut [f64] {
        &mut self.context[w * self.dim..(w + 1) * self.dim]
    }

    pub fn input_vector(&self, w: usize, l: usize) -> Vec<f64> {
        self.base_row(w)
            .iter()
            .zip(self.offset_row(l, w))
            .map(|(b, o)| b + o)
            .collect()
    }

    /// All parameters as one flat slice: base, offsets, context.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.base.clone();
        v.extend(&self.offsets);
        v.extend(&self.context);
        v
    }

    fn check_pair(&self, p: &TrainingPair) -> Result<()> {
        let words_ok = p.word < self.vocab
            && p.context < self.vocab
            && p.negatives.iter().all(|&n| n < self.vocab);
        if !words_ok || p.label >= self.labels {
            return Err(Error::Parameter("training pair index out of range".into()));
        }
        if !self.has_context() {
            return Err(Error::Parameter("model has no context vectors".into()));
        }
        Ok(())
    }

    /// Summed negative-sampling loss over `pairs`.
    pub fn batch_loss(&self, pairs: &[TrainingPair]) -> Result<f64> {
        Ok(self.batch_gradient(pairs)?.0)
    }

    /// Loss and its gradient with respect to every parameter, laid out like
    /// `self`.
    pub fn batch_gradient(&self, pairs: &[TrainingPair]) -> Result<(f64, SgnsParams)> {
        let mut grad = SgnsParams::zeros(self.dim, self.vocab, self.labels);
        let mut loss = 0.0;
        let mut grad_u = vec![0.0; self.dim];
        for p in pairs {
            self.check_pair(p)?;
            let u = self.input_vector(p.word, p.label);
            let ids: Vec<usize> = std::iter::once(p.context)
                .chain(p.negatives.iter().copied())
                .collect();
            let targets: Vec<f64> = ids
                .iter()
                .flat_map(|&t| self.context_row(t).iter().copied())
                .collect();
            let mut grad_t = vec![0.0; targets.len()];
            grad_u.fill(0.0);
            loss += pair_loss_grad(&u, &targets, &mut grad_u, &mut grad_t);
            for (d, g) in grad.base_row_mut(p.word).iter_mut().zip(&grad_u) {
                *d += g;
            }
            for (d, g) in grad.offset_row_mut(p.label, p.word).iter_mut().zip(&grad_u) {
                *d += g;
            }
            for (k, &t) in ids.iter().enumerate() {
                let gk = &grad_t[k * self.dim..(k + 1) * self.dim];
                for (d, g) in grad.context_row_mut(t).iter_mut().zip(gk) {
                    *d += g;
                }
            }
        }
        Ok((loss, grad))
    }

    /// Mutable view of every parameter in the order of [`Self::flat`].
    pub fn flat_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.base
            .iter_mut()
            .chain(self.offsets.iter_mut())
            .chain(self.context.iter_mut())
    }
}
