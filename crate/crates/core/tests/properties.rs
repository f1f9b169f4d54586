//! Property tests for the invariants of every module.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use lexphylo::corpus::{
    abstract_tokens, filter_sentence, is_url_like, token_stats, truecase_sentence, Cleaner,
    CorpusIndex, EnglishLexicon, EntitySpan, LabeledCorpus, LabeledSentence, NgramTable, UNK_TOKEN,
    URL_TOKEN,
};
use lexphylo::distance::DistanceMatrix;
use lexphylo::distance::{distance_matrix, word_distance, DistanceOptions, FrequencyTable, Mode};
use lexphylo::divergence::{jsd, rank_synsets, synset_distribution};
use lexphylo::embed::{SgnsParams, SituatedEmbeddings};
use lexphylo::lexicon::{cultural_filter, log_odds_z, EtymologyGraph, Pos, SynonymSet};
use lexphylo::phylo::{
    flat_clusters, leaf_paths, parse_newick, tree_distance, ward_linkage, Linkage,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(64)
}

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => "[a-z]{1,6}",
        1 => "[A-Z][a-z]{0,4}",
        1 => "[.,!?0-9]{1,2}",
        1 => Just("http://x.org".to_string()),
        1 => Just("r/rust".to_string()),
    ]
}

fn sentence() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(word(), 0..8)
}

fn distribution(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0f64..1.0], k).prop_map(|v| {
        let s: f64 = v.iter().sum();
        if s == 0.0 {
            let mut u = vec![0.0; v.len()];
            u[0] = 1.0;
            u
        } else {
            v.into_iter().map(|x| x / s).collect()
        }
    })
}

fn counts_table(labels: usize, words: usize) -> impl Strategy<Value = Vec<Vec<u64>>> {
    prop::collection::vec(prop::collection::vec(0u64..400, words), labels)
}

fn index(labels: &[String], words: &[String], counts: &[Vec<u64>]) -> CorpusIndex {
    CorpusIndex::from_counts(
        labels
            .iter()
            .zip(counts)
            .map(|(l, row)| {
                (
                    l.clone(),
                    words
                        .iter()
                        .cloned()
                        .zip(row.iter().copied())
                        .collect::<HashMap<_, _>>(),
                )
            })
            .collect(),
    )
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

proptest! {
    #![proptest_config(config())]

    // corpus

    #[test]
    fn filtering_is_per_sentence_and_order_free(sents in prop::collection::vec(sentence(), 0..20)) {
        let build = |order: &[Vec<String>]| {
            let mut c = LabeledCorpus::default();
            for (i, t) in order.iter().enumerate() {
                c.push(LabeledSentence::new("x", t.clone(), i.to_string())).unwrap();
            }
            c
        };
        let mut reversed = sents.clone();
        reversed.reverse();
        let kept = |c: &LabeledCorpus| {
            let (out, _) = Cleaner::default().clean(c).unwrap();
            let mut v: Vec<Vec<String>> = out.sentences.into_iter().map(|s| s.tokens).collect();
            v.sort();
            v
        };
        // each decision depends on the sentence alone
        let mut expected: Vec<Vec<String>> = sents
            .iter()
            .filter_map(|t| Cleaner::default().clean_sentence(&LabeledSentence::new("x", t.clone(), "0")).unwrap())
            .map(|s| s.tokens)
            .collect();
        expected.sort();
        prop_assert!(expected.iter().all(|t| filter_sentence(t)));
        prop_assert_eq!(kept(&build(&sents)), expected.clone());
        prop_assert_eq!(kept(&build(&reversed)), expected);
    }

    #[test]
    fn truecasing_is_idempotent(
        toks in prop::collection::vec("[a-c]{1,2}", 1..8),
        grams in prop::collection::vec(("[a-cA-C]{1,2}", "[a-cA-C]{1,2}", "[a-cA-C]{1,2}", 1u64..50), 0..30),
        unis in prop::collection::vec(("[a-cA-C]{1,2}", 1u64..50), 0..10),
    ) {
        let mut table = NgramTable::new();
        for (a, b, c, n) in &grams {
            table.add_trigram(a, b, c, *n);
        }
        for (w, n) in &unis {
            table.add_unigram(w, *n);
        }
        let once = truecase_sentence(&toks, &table);
        prop_assert_eq!(truecase_sentence(&once, &table), once);
    }

    #[test]
    fn abstraction_keeps_length_up_to_spans(
        toks in prop::collection::vec(word(), 1..12),
        cuts in prop::collection::vec(any::<prop::sample::Index>(), 0..6),
        lex in prop::collection::vec("[a-z]{1,3}", 0..30),
    ) {
        // non-overlapping spans from sorted distinct cut points, every other gap
        let n = toks.len();
        let mut points: Vec<usize> = cuts.iter().map(|i| i.index(n + 1)).collect();
        points.sort_unstable();
        points.dedup();
        let spans: Vec<EntitySpan> = points
            .chunks(2)
            .filter(|c| c.len() == 2)
            .map(|c| EntitySpan::new(c[0], c[1], "GPE"))
            .collect();
        let lexicon = EnglishLexicon::new(&lex);
        let out = abstract_tokens(&toks, &spans, &lexicon).unwrap();
        let shrink: usize = spans.iter().map(|s| s.end - s.start - 1).sum();
        prop_assert_eq!(out.len(), n - shrink);
        for t in &out {
            prop_assert!(!is_url_like(t));
            prop_assert!(t == "GPE" || t == URL_TOKEN || t == UNK_TOKEN || lexicon.accepts(t));
        }
    }

    #[test]
    fn duplicate_sentence_lowers_ttr(sents in prop::collection::vec(prop::collection::vec("[a-e]{1,2}", 1..6), 1..6), pick in any::<prop::sample::Index>()) {
        let empty = HashMap::new();
        let flat = |ss: &[Vec<String>]| token_stats(ss.iter().flatten().map(String::as_str), &empty, &empty).unwrap();
        let before = flat(&sents);
        let mut more = sents.clone();
        more.push(sents[pick.index(sents.len())].clone());
        let after = flat(&more);
        prop_assert_eq!(after.type_count, before.type_count);
        prop_assert!(after.ttr < before.ttr);
        prop_assert!((after.ttr - after.type_count as f64 / after.token_count as f64).abs() < 1e-15);
    }

    // lexicon

    #[test]
    fn log_odds_is_antisymmetric(y_i in 0u64..1000, extra_i in 1u64..10_000, y_bg in 0u64..1000, extra_bg in 1u64..10_000, alpha in 0.1f64..50.0) {
        let (n_i, n_bg) = (y_i + extra_i, y_bg + extra_bg);
        let total = alpha * 40.0;
        let a = log_odds_z(y_i, n_i, y_bg, n_bg, alpha, total).unwrap();
        let b = log_odds_z(y_bg, n_bg, y_i, n_i, alpha, total).unwrap();
        prop_assert!((a.z + b.z).abs() <= 1e-9 * (1.0 + a.z.abs()));
        prop_assert!((a.z - a.delta / a.variance.sqrt()).abs() <= 1e-12 * (1.0 + a.z.abs()));
    }

    #[test]
    fn root_paths_match_dfs_sinks(edges in prop::collection::vec((1usize..12, any::<prop::sample::Index>()), 0..30)) {
        // parents always have smaller indices, so the graph is acyclic
        let node = |i: usize| format!("lat:n{i}");
        let pairs: Vec<(String, String)> = edges.iter().map(|&(c, p)| (node(c), node(p.index(c)))).collect();
        let (g, warnings) = EtymologyGraph::load(pairs.iter().map(|(c, p)| (c.as_str(), "etymology", p.as_str())));
        prop_assert!(warnings.is_empty());
        let mut parents: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (c, p) in &pairs {
            parents.entry(c.clone()).or_default().insert(p.clone());
        }
        fn sinks(n: &str, parents: &BTreeMap<String, BTreeSet<String>>, out: &mut BTreeSet<String>) {
            match parents.get(n) {
                Some(ps) if !ps.is_empty() => ps.iter().for_each(|p| sinks(p, parents, out)),
                _ => {
                    out.insert(n.to_string());
                }
            }
        }
        for i in 0..12 {
            let mut expected = BTreeSet::new();
            sinks(&node(i), &parents, &mut expected);
            let got = g.root_paths(&node(i));
            prop_assert!(!got.is_empty());
            prop_assert_eq!(got, expected);
        }
    }

    #[test]
    fn cultural_filter_ignores_label_order(counts in counts_table(4, 9), perm in Just((0..4).collect::<Vec<usize>>()).prop_shuffle()) {
        let words = names("w", 9);
        let synsets: Vec<SynonymSet> = words
            .chunks(3)
            .map(|ws| SynonymSet {
                words: ws.to_vec(),
                pos: Pos::N,
                roots: ws.iter().enumerate().map(|(k, w)| (w.clone(), BTreeSet::from([format!("r{k}")]))).collect(),
                sense_rank: 0,
            })
            .collect();
        let labels = names("L", 4);
        // the same counts under a permuted assignment of label names
        let renamed: Vec<String> = perm.iter().map(|&k| labels[k].clone()).collect();
        let (a, ea) = cultural_filter(&synsets, &index(&labels, &words, &counts), 5.0, 2.0).unwrap();
        let (b, eb) = cultural_filter(&synsets, &index(&renamed, &words, &counts), 5.0, 2.0).unwrap();
        prop_assert_eq!(a.words, b.words);
        let names_of = |e: &[lexphylo::lexicon::LogOddsResult]| e.iter().map(|r| (r.word.clone(), r.z.to_bits())).collect::<Vec<_>>();
        prop_assert_eq!(names_of(&ea), names_of(&eb));
    }

    // distance

    #[test]
    fn word_distance_symmetric_and_monotone(
        fi in 0.0f64..0.05, fj in 0.0f64..0.05, grow in 0.0f64..0.05,
        p in 1e-6f64..0.999, theta in 0.0f64..std::f64::consts::PI, shrink in 0.0f64..1.0,
    ) {
        let (vi, vj) = ([1.0, 0.0], [theta.cos(), theta.sin()]);
        let d = word_distance(fi, fj, Some(&vi), Some(&vj), p).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert_eq!(d, word_distance(fj, fi, Some(&vj), Some(&vi), p).unwrap());
        let (lo, hi) = if fi <= fj { (fi, fj) } else { (fj, fi) };
        let wider = word_distance(lo, (hi + grow).min(1.0), Some(&vi), Some(&vj), p).unwrap();
        prop_assert!(wider >= d);
        let t2 = theta * shrink;
        let closer = word_distance(fi, fj, Some(&vi), Some(&[t2.cos(), t2.sin()]), p).unwrap();
        prop_assert!(closer <= d);
    }

    #[test]
    fn distance_matrix_symmetric_and_equivariant(counts in counts_table(5, 12), perm in Just((0..5).collect::<Vec<usize>>()).prop_shuffle(), seed in any::<u64>()) {
        let labels = names("L", 5);
        let words = names("w", 12);
        let ft = FrequencyTable::new(index(&labels, &words, &counts));
        prop_assume!(labels.iter().all(|l| ft.total(l) > 0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_embeddings(&words, &labels, 3, &mut rng);
        for mode in [Mode::Combined, Mode::FrequencyOnly] {
            let opts = DistanceOptions { mode, constant_weight: None };
            let m = distance_matrix(&labels, &words, &ft, Some(&e), &opts).unwrap();
            for i in 0..5 {
                prop_assert_eq!(m.get(i, i), 0.0);
                for j in 0..5 {
                    prop_assert_eq!(m.get(i, j), m.get(j, i));
                }
            }
            let shuffled: Vec<String> = perm.iter().map(|&k| labels[k].clone()).collect();
            let mp = distance_matrix(&shuffled, &words, &ft, Some(&e), &opts).unwrap();
            for i in 0..5 {
                for j in 0..5 {
                    prop_assert!((mp.get(i, j) - m.get(perm[i], perm[j])).abs() <= 1e-15);
                }
            }
        }
    }

    #[test]
    fn frequency_only_equals_combined_without_vectors(counts in counts_table(3, 6)) {
        let labels = names("L", 3);
        let words = names("w", 6);
        let ft = FrequencyTable::new(index(&labels, &words, &counts));
        prop_assume!(labels.iter().all(|l| ft.total(l) > 0));
        // a model that lacks every focus word
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = random_embeddings(&names("other", 4), &labels, 3, &mut rng);
        let c = distance_matrix(&labels, &words, &ft, Some(&e), &DistanceOptions { mode: Mode::Combined, constant_weight: None }).unwrap();
        let f = distance_matrix(&labels, &words, &ft, None, &DistanceOptions { mode: Mode::FrequencyOnly, constant_weight: None }).unwrap();
        prop_assert_eq!(c, f);
    }

    // phylo

    #[test]
    fn ward_heights_non_decreasing(n in 2usize..12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DistanceMatrix::new(names("L", n), common::random_symmetric(n, &mut rng)).unwrap();
        for linkage in [Linkage::Rows, Linkage::Precomputed] {
            let merges = ward_linkage(&m, linkage).unwrap();
            prop_assert_eq!(merges.len(), n - 1);
            prop_assert!(merges.windows(2).all(|w| w[0].height <= w[1].height));
        }
    }

    #[test]
    fn tree_metric_properties(n in 3usize..14, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels = names("T", n);
        let a = parse_newick(&common::random_newick(&labels, &mut rng)).unwrap();
        let b = parse_newick(&common::random_newick(&labels, &mut rng)).unwrap();
        prop_assert_eq!(tree_distance(&a, &b).unwrap(), tree_distance(&b, &a).unwrap());
        prop_assert_eq!(tree_distance(&a, &a).unwrap(), 0.0);
        let reordered = parse_newick(&common::shuffled_newick(&a, &mut rng)).unwrap();
        prop_assert_eq!(tree_distance(&reordered, &b).unwrap(), tree_distance(&a, &b).unwrap());
        let p = leaf_paths(&a);
        for x in 0..n {
            prop_assert_eq!(p.d[x][x], 0);
            for y in 0..n {
                if x != y {
                    prop_assert!(p.d[x][y] >= 2);
                }
                for z in 0..n {
                    prop_assert!(p.d[x][y] + p.d[y][z] >= p.d[x][z]);
                }
            }
        }
    }

    #[test]
    fn flat_cut_coarsens_as_threshold_rises(n in 2usize..14, seed in any::<u64>(), t1 in 0.0f64..2.0, dt in 0.0f64..1.0, depth in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DistanceMatrix::new(names("L", n), common::random_symmetric(n, &mut rng)).unwrap();
        let t = lexphylo::phylo::ward_cluster(&m, Linkage::Rows).unwrap();
        let count = |th: f64| flat_clusters(&t, depth, th).iter().map(|c| c.cluster).collect::<BTreeSet<_>>().len();
        prop_assert!(count(t1 + dt) <= count(t1));
    }

    // divergence

    #[test]
    fn jsd_symmetric_and_bounded((p, q) in (2usize..7).prop_flat_map(|k| (distribution(k), distribution(k)))) {
        let d = jsd(&p, &q).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, jsd(&q, &p).unwrap());
        prop_assert_eq!(jsd(&p, &p).unwrap(), 0.0);
        if p != q {
            prop_assert!(d > 0.0);
        }
    }

    #[test]
    fn synset_distribution_scale_invariant(counts in prop::collection::vec(0u64..1000, 2..5), scale in 1u64..50) {
        let words = names("w", counts.len());
        let set = SynonymSet { words: words.clone(), pos: Pos::V, roots: BTreeMap::new(), sense_rank: 0 };
        let table = |k: u64| FrequencyTable::new(index(&["x".to_string()], &words, &[counts.iter().map(|c| c * k).collect()]));
        let a = synset_distribution(&set, "x", &table(1));
        let b = synset_distribution(&set, "x", &table(scale));
        for (x, y) in a.probs.iter().zip(&b.probs) {
            prop_assert!((x - y).abs() <= 1e-15);
        }
        if a.support_count > 0 {
            prop_assert!((a.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn ranking_ignores_synset_order(counts in counts_table(2, 12), order in Just((0..4).collect::<Vec<usize>>()).prop_shuffle()) {
        let labels = names("L", 2);
        let words = names("w", 12);
        let ft = FrequencyTable::new(index(&labels, &words, &counts));
        let sets: Vec<SynonymSet> = words
            .chunks(3)
            .map(|ws| SynonymSet { words: ws.to_vec(), pos: Pos::N, roots: BTreeMap::new(), sense_rank: 0 })
            .collect();
        let shuffled: Vec<SynonymSet> = order.iter().map(|&k| sets[k].clone()).collect();
        let a = rank_synsets("L0", "L1", &sets, &ft, 1).unwrap();
        let b = rank_synsets("L0", "L1", &shuffled, &ft, 1).unwrap();
        prop_assert!(a.rows.windows(2).all(|w| w[0].jsd >= w[1].jsd));
        prop_assert_eq!(a, b);
    }

    // embed

    #[test]
    fn situated_vector_is_base_plus_offset(seed in any::<u64>(), dim in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let words = names("w", 5);
        let labels = names("L", 3);
        let e = random_embeddings(&words, &labels, dim, &mut rng);
        for w in &words {
            for l in &labels {
                let v = e.vector(w, l).unwrap();
                let base = e.base(w).unwrap();
                let diff: Vec<f64> = v.iter().zip(base).map(|(a, b)| a - b).collect();
                let off = e.offset(w, l).unwrap();
                for (d, o) in diff.iter().zip(off) {
                    prop_assert!((d - o).abs() <= f64::EPSILON * (1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs()))));
                }
            }
        }
    }
}

fn random_embeddings(
    words: &[String],
    labels: &[String],
    dim: usize,
    rng: &mut ChaCha8Rng,
) -> SituatedEmbeddings {
    use rand::Rng;
    let mut gen = |k: usize| {
        (0..k)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect::<Vec<f64>>()
    };
    let params = SgnsParams::from_parts(
        dim,
        words.len(),
        labels.len(),
        gen(words.len() * dim),
        gen(labels.len() * words.len() * dim),
        Vec::new(),
    )
    .unwrap();
    SituatedEmbeddings::new(words.to_vec(), labels.to_vec(), params).unwrap()
}
