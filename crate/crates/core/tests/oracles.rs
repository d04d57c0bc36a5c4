mod common;

use common::*;
use dmeter::density::{data_density, knn_density, Similarity, VolumeMode};
use dmeter::distance::{emd_1d, emd_discrete, Distribution};
use dmeter::diversity::ngram_diversity;
use dmeter::quality::{find_duplicates, Normalization};
use dmeter::tendency::summarize;
use dmeter::{Corpus, EmbeddingMatrix, TokenizerConfig};
use rand::Rng;

const VOCAB: &[&str] = &["the", "cat", "sat", "on", "a", "mat", "dog", "ran", "far", "away", "Blue", "RED", "x1", "42"];

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

#[test]
fn transport_matches_vertex_enumeration() {
    let mut r = rng(11);
    for _ in 0..60 {
        let (m, n) = (r.random_range(1..=4), r.random_range(1..=4));
        let p = random_probs(&mut r, m, true);
        let q = random_probs(&mut r, n, true);
        let cost: Vec<f64> = (0..m * n).map(|_| r.random_range(0.0..10.0)).collect();
        let pd = Distribution::new(labels(m), p.clone()).unwrap();
        let qd = Distribution::new(labels(n), q.clone()).unwrap();
        let got = emd_discrete(&pd, &qd, |a, b| cost[a.parse::<usize>().unwrap() * n + b.parse::<usize>().unwrap()]).unwrap();
        let want = brute_force_transport(&p, &q, &cost);
        assert_close(got, want, 1e-9, "emd vs enumeration");
    }
}

#[test]
fn vertex_enumeration_oracle_on_textbook_instance() {
    // optimum verified with an LP solver
    let supply = [20.0, 30.0, 25.0];
    let demand = [10.0, 35.0, 30.0];
    let cost = [8.0, 6.0, 10.0, 9.0, 12.0, 13.0, 14.0, 9.0, 16.0];
    assert_close(brute_force_transport(&supply, &demand, &cost), 735.0, 1e-9, "3x3");
    let demand = [10.0, 25.0, 20.0, 20.0];
    let cost = [8.0, 6.0, 10.0, 9.0, 9.0, 12.0, 13.0, 7.0, 14.0, 9.0, 16.0, 5.0];
    assert_close(brute_force_transport(&supply, &demand, &cost), 615.0, 1e-9, "3x4");
}

#[test]
fn emd_1d_equals_discrete_on_histograms() {
    let mut r = rng(12);
    for _ in 0..40 {
        let len = r.random_range(1..30);
        let xs: Vec<f64> = (0..len).map(|_| r.random_range(0..8) as f64).collect();
        let ys: Vec<f64> = (0..len).map(|_| r.random_range(0..8) as f64).collect();
        let hist = |v: &[f64]| {
            let mut c = [0u64; 8];
            v.iter().for_each(|&x| c[x as usize] += 1);
            let support: Vec<String> = (0..8).filter(|&i| c[i] > 0).map(|i| i.to_string()).collect();
            let probs = (0..8).filter(|&i| c[i] > 0).map(|i| c[i] as f64 / v.len() as f64).collect();
            Distribution::new(support, probs).unwrap()
        };
        let d = emd_discrete(&hist(&xs), &hist(&ys), |a, b| (a.parse::<f64>().unwrap() - b.parse::<f64>().unwrap()).abs()).unwrap();
        assert_close(emd_1d(&xs, &ys).unwrap(), d, 1e-9, "1-d vs discrete");
    }
}

#[test]
fn ngram_counts_match_sliding_window() {
    let mut r = rng(13);
    for _ in 0..30 {
        let texts: Vec<String> = (0..r.random_range(1..20)).map(|_| { let l = r.random_range(0..12); random_text(&mut r, VOCAB, l) }).collect();
        let c = Corpus::from_texts(&texts, TokenizerConfig::default());
        for n in 1..=4 {
            let got = c.ngrams(n).unwrap();
            let want = sliding_ngrams(c.tokens(), n);
            assert_eq!(got.len(), want.len());
            assert_eq!(got.total(), want.values().sum::<u64>());
            for (g, count) in got.iter() {
                assert_eq!(want[g], count);
            }
            if got.total() > 0 {
                let d = ngram_diversity(&c, n, Default::default()).unwrap();
                assert_eq!(d, want.len() as f64 / want.values().sum::<u64>() as f64);
            }
        }
    }
}

#[test]
fn tokenizer_and_token_totals_match_char_class_oracle() {
    let pieces = ["word", "Word2", "x", "99", " ", "  ", "\t", "!", "?", "(", ")", " - ", "\n", "ABC"];
    let mut r = rng(14);
    let texts: Vec<String> = (0..300)
        .map(|_| (0..r.random_range(0..15)).map(|_| pieces[r.random_range(0..pieces.len())]).collect())
        .collect();
    let c = Corpus::from_texts(&texts, TokenizerConfig::default());
    let mut total = 0;
    for (text, toks) in texts.iter().zip(c.tokens()) {
        let want = char_class_tokens(text);
        assert_eq!(toks, &want, "{text:?}");
        total += want.len() as u64;
    }
    assert_eq!(c.total_tokens(), total);
    assert_eq!(c.token_counts().total(), total);
}

#[test]
fn knn_matches_brute_force() {
    let mut r = rng(15);
    for trial in 0..20 {
        let n = r.random_range(2..60);
        let dim = r.random_range(1..6);
        // a coarse grid makes exact similarity ties common
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| r.random_range(1..4) as f64).collect()).collect();
        let k = r.random_range(1..n);
        let e = EmbeddingMatrix::new(labels(n), rows.clone()).unwrap();
        for (sim, cosine) in [(Similarity::Cosine, true), (Similarity::InverseEuclidean, false)] {
            let got = knn_density(&e, k, sim).unwrap();
            let want = brute_knn(&rows, k, cosine);
            for (g, w) in got.per_point_density.iter().zip(&want) {
                assert_close(*g, *w, 1e-12, &format!("trial {trial} {sim:?}"));
            }
            let mean = want.iter().sum::<f64>() / n as f64;
            assert_close(got.global_density, mean, 1e-12, "global");
        }
    }
}

#[test]
fn data_density_matches_extent_product() {
    let mut r = rng(16);
    for _ in 0..30 {
        let n = r.random_range(2..40);
        let dim = r.random_range(1..8);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| r.random_range(-5.0..5.0)).collect()).collect();
        let mut vol = 1.0;
        for j in 0..dim {
            let lo = rows.iter().map(|x| x[j]).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|x| x[j]).fold(f64::NEG_INFINITY, f64::max);
            vol *= hi - lo;
        }
        let d = data_density(&EmbeddingMatrix::new(labels(n), rows).unwrap(), VolumeMode::BoundingBox).unwrap();
        let want = n as f64 / vol;
        assert_close(d.density.unwrap(), want, 1e-9 * want, "density");
        assert_close(d.log_density, want.ln(), 1e-9, "log density");
    }
}

#[test]
fn summarize_matches_naive_formulas() {
    let mut r = rng(17);
    for _ in 0..30 {
        let n = r.random_range(4..200);
        let x: Vec<f64> = (0..n).map(|_| r.random_range(-100.0..100.0)).collect();
        let s = summarize(&x).unwrap();
        let (mean, var, g1, g2) = naive_moments(&x);
        assert_close(s.mean, mean, 1e-9, "mean");
        assert_close(s.variance.unwrap(), var, 1e-9 * var, "variance");
        assert_close(s.skewness.unwrap(), g1, 1e-9, "skewness");
        assert_close(s.excess_kurtosis.unwrap(), g2, 1e-9, "kurtosis");
        let mut sorted = x.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(s.min, sorted[0]);
        assert_eq!(s.max, sorted[n - 1]);
    }
}

#[test]
fn duplicates_match_pairwise_oracle() {
    let mut r = rng(18);
    let bases = ["Alpha beta", "alpha  BETA ", "gamma", "Gamma", "delta epsilon", "delta epsilon  ", "zeta"];
    for _ in 0..20 {
        let texts: Vec<String> = (0..r.random_range(1..80)).map(|_| bases[r.random_range(0..bases.len())].to_string()).collect();
        let c = Corpus::from_texts(&texts, TokenizerConfig::default());
        for (norm, fold) in [(Normalization::Exact, false), (Normalization::FoldAndCollapse, true)] {
            let rep = find_duplicates(&c, norm, 100);
            let (distinct, clusters, excess, sizes) = pairwise_duplicates(&texts, fold);
            assert_eq!((rep.n_distinct, rep.duplicate_clusters, rep.excess_duplicates), (distinct, clusters, excess));
            let mut got = rep.cluster_sizes().to_vec();
            got.sort_unstable_by(|a, b| b.cmp(a));
            assert_eq!(got, sizes);
        }
    }
}
