//! Straight-line f64 reference for refinement, expansion and score fusion.

use grab_core::eval::{planted_cluster, trial_rng, RerankScenario};
use grab_core::index::{build_index, search_top_m, IndexMode, SearchHit};
use grab_core::rerank::{fused_scores, gem_pool, refine_descriptors, rerank, GemPower, RerankParams};
use grab_core::store::{KeyframeEntry, MemoryVideo, Store};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit64(v: &[f32]) -> Vec<f64> {
    let n = v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    v.iter().map(|x| *x as f64 / n).collect()
}

fn dot64(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize64(v: Vec<f64>) -> Vec<f64> {
    let n = dot64(&v, &v).sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Returns (row, s1, s2, s_final) sorted by s_final desc, row asc.
fn oracle(q: &[f32], cands: &[(usize, f32, Vec<f32>)], k: usize, m: usize) -> Vec<(usize, f64, f64, f64)> {
    let q = unit64(q);
    let mut c: Vec<(usize, f32, Vec<f64>)> = cands.iter().map(|(r, s, v)| (*r, *s, unit64(v))).collect();
    c.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let k = k.min(c.len() - 1);
    let dim = q.len();

    let mut qe = q.clone();
    for (_, _, v) in c.iter().take(m) {
        for d in 0..dim {
            qe[d] = qe[d].max(v[d]);
        }
    }
    let qe = normalize64(qe);

    let mut out: Vec<(usize, f64, f64, f64)> = c
        .iter()
        .enumerate()
        .map(|(i, (row, _, v))| {
            let mut others: Vec<(f64, usize, usize)> =
                c.iter().enumerate().filter(|(j, _)| *j != i).map(|(j, o)| (dot64(v, &o.2), o.0, j)).collect();
            others.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut sum = v.clone();
            for (_, _, j) in others.iter().take(k) {
                for (s, x) in sum.iter_mut().zip(&c[*j].2) {
                    *s += x;
                }
            }
            let g_dr = normalize64(sum);
            let s1 = dot64(&q, &g_dr);
            let s2 = dot64(&qe, v);
            (*row, s1, s2, (s1 + s2) / 2.0)
        })
        .collect();
    out.sort_by(|a, b| b.3.total_cmp(&a.3).then(a.0.cmp(&b.0)));
    out
}

fn candidates_of(store: &Store, hits: &[SearchHit]) -> Vec<(usize, f32, Vec<f32>)> {
    hits.iter().map(|h| (h.row, h.score, store.row(h.row).to_vec())).collect()
}

fn random_store(seed: u64, n: usize, d: usize) -> Store {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f32> = (0..n * d).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    Store::from_videos(vec![MemoryVideo {
        video_id: "r".into(),
        fps: 1.0,
        frame_count: n as u64,
        dim: d,
        keyframes: (0..n).map(|i| KeyframeEntry { frame_index: i as u64, shot_id: 0, phash: None }).collect(),
        keyframe_values: values,
        sequence: None,
        thumbnail_template: None,
    }])
    .unwrap()
}

#[test]
fn planted_cluster_agrees_with_oracle_and_promotes_target() {
    let sc = RerankScenario::default();
    let params = RerankParams::default();
    let mut promoted = 0;
    for t in 0..20 {
        let fx = planted_cluster(&mut trial_rng(2024, t), &sc).unwrap();
        let index = build_index(&fx.store, IndexMode::Exact).unwrap();
        let hits = search_top_m(&index, &fx.store, &fx.query, 100).unwrap();
        assert_eq!(hits.iter().position(|h| h.row == fx.target_row), Some(5));

        let lib = rerank(&fx.query, &hits, &fx.store, &params).unwrap();
        let want = oracle(&fx.query, &candidates_of(&fx.store, &hits), params.refine_k, params.expand_m);
        for (got, exp) in lib.iter().zip(&want) {
            let h = lib.iter().find(|h| h.row == exp.0).unwrap();
            assert!((h.s1 as f64 - exp.1).abs() < 1e-5, "s1 {} vs {}", h.s1, exp.1);
            assert!((h.s2 as f64 - exp.2).abs() < 1e-5, "s2 {} vs {}", h.s2, exp.2);
            assert_eq!(h.s_final, (h.s1 + h.s2) / 2.0);
            if got.row != exp.0 {
                assert!((got.s_final as f64 - exp.3).abs() < 1e-5, "order differs beyond a near-tie");
            }
        }
        let lib_rank = lib.iter().find(|h| h.row == fx.target_row).unwrap().rank;
        let oracle_rank = want.iter().position(|w| w.0 == fx.target_row).unwrap() + 1;
        assert_eq!(lib_rank, oracle_rank);
        if oracle_rank <= 3 {
            promoted += 1;
        }
    }
    assert!(promoted >= 16, "{promoted}/20 promoted to the top 3");
}

#[test]
fn random_candidates_match_oracle() {
    for seed in 0..10 {
        let store = random_store(seed, 60, 12);
        let index = build_index(&store, IndexMode::Exact).unwrap();
        let q: Vec<f32> = (0..12).map(|i| ((seed as usize + i) % 5) as f32 - 2.0).collect();
        let hits = search_top_m(&index, &store, &q, 40).unwrap();
        for (k, m) in [(1, 1), (3, 2), (10, 5), (100, 100)] {
            let params = RerankParams { refine_k: k, expand_m: m, ..Default::default() };
            let lib = rerank(&q, &hits, &store, &params).unwrap();
            let want = oracle(&q, &candidates_of(&store, &hits), k, m);
            for exp in &want {
                let h = lib.iter().find(|h| h.row == exp.0).unwrap();
                assert!((h.s_final as f64 - exp.3).abs() < 1e-5);
            }
        }
    }
}

#[test]
fn reduction_to_identity() {
    let store = random_store(77, 30, 8);
    let index = build_index(&store, IndexMode::Exact).unwrap();
    let q = vec![0.5f32, -0.2, 0.1, 0.9, 0.0, 0.3, -0.4, 0.2];
    let hits = search_top_m(&index, &store, &q, 30).unwrap();
    let qn = grab_core::vector::normalized(&q).unwrap();
    let vectors: Vec<&[f32]> = hits.iter().map(|h| store.row(h.row)).collect();
    let keys: Vec<usize> = hits.iter().map(|h| h.row).collect();
    // self-only refinement and a query-only expansion
    let scores = fused_scores(&qn, &vectors, &keys, 0, 0).unwrap();
    let mut order: Vec<usize> = (0..hits.len()).collect();
    order.sort_by(|&a, &b| scores[b].2.total_cmp(&scores[a].2).then(keys[a].cmp(&keys[b])));
    assert_eq!(order, (0..hits.len()).collect::<Vec<_>>());
    for (s, h) in scores.iter().zip(&hits) {
        assert!((s.2 - h.score).abs() < 1e-6);
    }
}

#[test]
fn all_candidates_equal_query() {
    let v = vec![0.6f32, 0.8];
    let store = Store::from_videos(vec![MemoryVideo {
        video_id: "same".into(),
        fps: 1.0,
        frame_count: 5,
        dim: 2,
        keyframes: (0..5).map(|i| KeyframeEntry { frame_index: i, shot_id: 0, phash: None }).collect(),
        keyframe_values: v.iter().copied().cycle().take(10).collect(),
        sequence: None,
        thumbnail_template: None,
    }])
    .unwrap();
    let index = build_index(&store, IndexMode::Exact).unwrap();
    let hits = search_top_m(&index, &store, &v, 5).unwrap();
    let out = rerank(&v, &hits, &store, &RerankParams::default()).unwrap();
    assert!(out.iter().all(|h| (h.s_final - 1.0).abs() < 1e-6));
    assert_eq!(out.iter().map(|h| h.frame_index).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
}

#[test]
fn three_vector_refinement_by_hand() {
    let a = [1.0f32, 0.0, 0.0];
    let b = grab_core::vector::normalized(&[0.98, 0.2, 0.0]).unwrap();
    let c = [0.0f32, 0.0, 1.0];
    let out = refine_descriptors(&[&a, &b, &c], &[0, 1, 2], 1).unwrap();
    let ab = grab_core::vector::normalized(&[a[0] + b[0], a[1] + b[1], 0.0]).unwrap();
    for i in 0..3 {
        assert!((out[0][i] - ab[i]).abs() < 1e-6);
        assert!((out[1][i] - ab[i]).abs() < 1e-6);
    }
    // c is orthogonal to both; tie goes to the lower key (a)
    let ca = grab_core::vector::normalized(&[1.0, 0.0, 1.0]).unwrap();
    for i in 0..3 {
        assert!((out[2][i] - ca[i]).abs() < 1e-6);
    }
}

#[test]
fn gem_limits() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let n = rng.random_range(1..8);
        let vs: Vec<Vec<f32>> = (0..n)
            .map(|_| grab_core::vector::normalized(&(0..64).map(|_| rng.random_range(0.0f32..1.0)).collect::<Vec<_>>()).unwrap())
            .collect();
        let refs: Vec<&[f32]> = vs.iter().map(Vec::as_slice).collect();
        let mean = gem_pool(&refs, GemPower::Finite(1.0)).unwrap();
        let p1000 = gem_pool(&refs, GemPower::Finite(1000.0)).unwrap();
        let by_threshold = gem_pool(&refs, GemPower::from_p(1000.0, 1000.0).unwrap()).unwrap();
        for d in 0..64 {
            let m = refs.iter().map(|v| v[d] as f64).sum::<f64>() / n as f64;
            let mx = refs.iter().map(|v| v[d]).fold(f32::MIN, f32::max);
            assert!((mean[d] as f64 - m).abs() <= 1e-6);
            assert!((p1000[d] - mx).abs() <= 1e-3);
            assert_eq!(by_threshold[d], mx);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rerank_is_a_permutation_and_order_independent(seed in any::<u64>(), n in 1usize..50, k in 1usize..15, m in 1usize..10) {
        let store = random_store(seed, n, 6);
        let index = build_index(&store, IndexMode::Exact).unwrap();
        let q = vec![1.0f32, 0.5, -0.5, 0.25, 0.0, -1.0];
        let hits = search_top_m(&index, &store, &q, n).unwrap();
        let params = RerankParams { refine_k: k, expand_m: m, ..Default::default() };
        let out = rerank(&q, &hits, &store, &params).unwrap();

        let mut before: Vec<(String, u64)> = hits.iter().map(|h| (h.video_id.clone(), h.frame_index)).collect();
        let mut after: Vec<(String, u64)> = out.iter().map(|h| (h.video_id.clone(), h.frame_index)).collect();
        before.sort();
        after.sort();
        prop_assert_eq!(before, after);
        prop_assert_eq!(out.iter().map(|h| h.rank).collect::<Vec<_>>(), (1..=n).collect::<Vec<_>>());

        let mut shuffled = hits.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0xabc));
        let again = rerank(&q, &shuffled, &store, &params).unwrap();
        prop_assert_eq!(out, again);
    }
}
