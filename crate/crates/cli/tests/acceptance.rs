//! Acceptance suite. Runs each criterion in order, prints one PASS/FAIL line
//! per criterion and exits nonzero if any failed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use grab_core::index::{build_index, search_top_m, Index, IndexMode};
use grab_core::ingest::{is_near_duplicate, DedupConfig, PerceptualHash, HASH_BITS};
use grab_core::rerank::{gem_pool, rerank, GemPower, RerankParams};
use grab_core::store::{
    read_blob_exact, read_f32le_file, sequence_rows, write_f32le_file, CorpusManifest, KeyframeEntry, MemoryVideo,
    SequenceBlob, SequenceManifest, Store, VideoManifest, DTYPE_F32LE,
};
use grab_core::temporal::{score_frames, temporal_search, AbtsParams, PivotRef};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::Value;

struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Check { pass, detail: detail.into() }
    }
}

type Criterion = (u8, &'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (1, "exact search equals brute force", exact_oracle),
        (2, "approximate index recall", approximate_recall),
        (3, "dedup keeps one keyframe per cluster", dedup_clusters),
        (4, "hamming threshold edge", threshold_edge),
        (5, "GeM limits", gem_limits),
        (6, "rerank permutation and promotion", rerank_permutation_and_promotion),
        (7, "ABTS planted moment recovery", abts_recovery),
        (8, "ABTS invariants", abts_invariants),
        (9, "format round-trips", format_round_trips),
    ];
    println!("acceptance: {} criteria", criteria.len());
    let mut passed = 0;
    for (id, name, run) in criteria {
        let started = Instant::now();
        let check = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| Check::new(false, format!("panicked: {}", panic_message(&e))));
        let secs = started.elapsed().as_secs_f64();
        let tag = if check.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {id} {name}: {} ({secs:.2} s)", check.detail);
        passed += usize::from(check.pass);
    }
    println!("{passed}/{} criteria passed", criteria.len());
    if passed == criteria.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn panic_message(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_default()
}

// ---------------------------------------------------------------- search

/// `n` corpus vectors then `queries` query vectors, all unit length, from one seeded stream.
fn unit_vectors(seed: u64, n: usize, queries: usize, d: usize) -> (Vec<Vec<f32>>, Vec<Vec<f32>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |count: usize| -> Vec<Vec<f32>> {
        (0..count)
            .map(|_| {
                let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter().map(|x| (x / norm) as f32).collect()
            })
            .collect()
    };
    let corpus = draw(n);
    let qs = draw(queries);
    (corpus, qs)
}

/// Spreads rows over seven videos, one keyframe every 10 frames.
fn store_of(rows: &[Vec<f32>]) -> Store {
    let d = rows[0].len();
    let per = rows.len().div_ceil(7);
    let videos = rows
        .chunks(per)
        .enumerate()
        .map(|(v, chunk)| MemoryVideo {
            video_id: format!("v{v:02}"),
            fps: 10.0,
            frame_count: chunk.len() as u64 * 10,
            dim: d,
            keyframes: (0..chunk.len())
                .map(|i| KeyframeEntry { frame_index: i as u64 * 10, shot_id: i, phash: None })
                .collect(),
            keyframe_values: chunk.concat(),
            sequence: None,
            thumbnail_template: None,
        })
        .collect();
    Store::from_videos(videos).expect("valid store")
}

/// Key of corpus row `i` under [`store_of`].
fn key_of(i: usize, n: usize) -> (String, u64) {
    let per = n.div_ceil(7);
    (format!("v{:02}", i / per), (i % per) as u64 * 10)
}

/// f64 scores over the original vectors, sorted by score then (video_id, frame_index).
fn brute_force_top(corpus: &[Vec<f32>], q: &[f32], m: usize) -> Vec<(String, u64)> {
    let mut scored: Vec<(f64, (String, u64))> = corpus
        .iter()
        .enumerate()
        .map(|(i, v)| (v.iter().zip(q).map(|(a, b)| *a as f64 * *b as f64).sum(), key_of(i, corpus.len())))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    scored.into_iter().take(m).map(|(_, k)| k).collect()
}

fn top_keys(index: &Index, store: &Store, q: &[f32], m: usize) -> Vec<(String, u64)> {
    search_top_m(index, store, q, m)
        .expect("search")
        .into_iter()
        .map(|h| (h.video_id, h.frame_index))
        .collect()
}

fn exact_oracle() -> Check {
    let started = Instant::now();
    let (corpus, queries) = unit_vectors(42, 1000, 50, 64);
    let store = store_of(&corpus);
    let index = build_index(&store, IndexMode::Exact).expect("exact index");
    let identical = queries
        .iter()
        .filter(|q| top_keys(&index, &store, q, 10) == brute_force_top(&corpus, q, 10))
        .count();
    let elapsed = started.elapsed();
    Check::new(
        identical == 50 && elapsed < Duration::from_secs(5),
        format!("{identical}/50 queries identical, {:.2} s (limit 5 s)", elapsed.as_secs_f64()),
    )
}

fn approximate_recall() -> Check {
    let started = Instant::now();
    let (corpus, queries) = unit_vectors(42, 50_000, 100, 64);
    let store = store_of(&corpus);
    let build_started = Instant::now();
    let approx = build_index(&store, IndexMode::Approximate).expect("approximate index");
    let build_s = build_started.elapsed().as_secs_f64();
    let exact = build_index(&store, IndexMode::Exact).expect("exact index");
    let mut found = 0;
    for q in &queries {
        let truth = top_keys(&exact, &store, q, 10);
        found += top_keys(&approx, &store, q, 10).iter().filter(|k| truth.contains(k)).count();
    }
    let recall = found as f64 / (10 * queries.len()) as f64;
    let elapsed = started.elapsed();
    Check::new(
        recall >= 0.95 && elapsed < Duration::from_secs(60),
        format!(
            "recall@10 {recall:.4} (bar 0.95) over 100 queries, build {build_s:.1} s, total {:.1} s (limit 60 s)",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- eval binary

fn grab_eval(args: &[&str]) -> (Option<i32>, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_grab"))
        .arg("eval")
        .args(args)
        .arg("--json")
        .output()
        .expect("grab runs");
    let report = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("grab eval {args:?}: {e}; stderr: {}", String::from_utf8_lossy(&out.stderr))
    });
    (out.status.code(), report)
}

fn dedup_clusters() -> Check {
    let mut good_seeds = 0;
    let mut false_merges = 0;
    let mut trials = 0;
    for seed in 0..20u64 {
        let seed = seed.to_string();
        let (code, r) = grab_eval(&["dedup", "--seed", &seed, "--clusters", "10"]);
        let diags = r["diagnostics"].as_array().cloned().unwrap_or_default();
        trials += diags.len();
        false_merges += r["summary"]["total_false_merges"].as_u64().unwrap_or(u64::MAX);
        let all_ten = !diags.is_empty() && diags.iter().all(|d| d["representatives"] == 10 && d["false_merges"] == 0);
        if code == Some(0) && r["passed"] == true && all_ten {
            good_seeds += 1;
        }
    }
    Check::new(
        good_seeds == 20 && false_merges == 0,
        format!("{good_seeds}/20 seeds with exactly 10 representatives in every trial ({trials} trials), {false_merges} false merges"),
    )
}

fn threshold_edge() -> Check {
    let cfg = DedupConfig::new(0.8).expect("tau 0.8");
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut wrong = 0;
    let pairs = 1000;
    for _ in 0..pairs {
        let base: u64 = rng.random();
        for (bits, want) in [(12, true), (13, false)] {
            let mask = sample(&mut rng, HASH_BITS as usize, bits).iter().fold(0u64, |m, b| m | 1 << b);
            if is_near_duplicate(PerceptualHash(base), PerceptualHash(base ^ mask), &cfg) != want {
                wrong += 1;
            }
        }
    }
    Check::new(
        wrong == 0 && cfg.max_distance() == 12,
        format!(
            "max distance {} at N={HASH_BITS}; {wrong} misclassified of {} pairs at distances 12/13",
            cfg.max_distance(),
            2 * pairs
        ),
    )
}

/// `p=1000` resolves through the default `p_limit_threshold`, so it pools as the
/// elementwise max. The literal finite exponent is checked against its closed-form
/// gap to the max, `max·(1 − (c/n)^(1/p))` for `c` of `n` values at the max.
fn gem_limits() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let limit = RerankParams::default().p_limit_threshold;
    let (mut mean_err, mut max_err, mut finite_gap, mut finite_excess) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.random_range(1..=12);
        let d = rng.random_range(1..=64);
        let vs: Vec<Vec<f32>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(0.0f32..1.0)).collect()).collect();
        let refs: Vec<&[f32]> = vs.iter().map(|v| v.as_slice()).collect();
        let p1 = gem_pool(&refs, GemPower::from_p(1.0, limit).expect("p=1")).expect("p=1");
        let p1000 = gem_pool(&refs, GemPower::from_p(1000.0, limit).expect("p=1000")).expect("p=1000");
        let finite = gem_pool(&refs, GemPower::Finite(1000.0)).expect("finite p=1000");
        for j in 0..d {
            let mean = vs.iter().map(|v| v[j] as f64).sum::<f64>() / n as f64;
            let max = vs.iter().map(|v| v[j] as f64).fold(0.0, f64::max);
            let at_max = vs.iter().filter(|v| v[j] as f64 == max).count();
            mean_err = mean_err.max((p1[j] as f64 - mean).abs());
            max_err = max_err.max((p1000[j] as f64 - max).abs());
            let gap = max - finite[j] as f64;
            let bound = max * (1.0 - (at_max as f64 / n as f64).powf(1e-3));
            finite_gap = finite_gap.max(gap.abs());
            finite_excess = finite_excess.max(gap - bound).max(-gap);
        }
    }
    Check::new(
        mean_err <= 1e-6 && max_err <= 1e-3 && finite_excess <= 1e-5,
        format!(
            "100 trials: p=1 vs mean max error {mean_err:.2e} (tol 1e-6), p=1000 vs max max error {max_err:.2e} (tol 1e-3); \
             literal finite p=1000 gap {finite_gap:.2e}, {finite_excess:.1e} beyond its closed form"
        ),
    )
}

fn rerank_permutation_and_promotion() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut permutations = 0;
    for _ in 0..500 {
        let n = rng.random_range(1..=200);
        let d = rng.random_range(2..=32);
        let mut rows: Vec<Vec<f32>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0f32..1.0)).collect()).collect();
        // duplicated rows force score ties
        for _ in 0..n / 10 {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            rows[b] = rows[a].clone();
        }
        let store = store_of(&rows);
        let index = build_index(&store, IndexMode::Exact).expect("index");
        let q: Vec<f32> = (0..d).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        let hits = search_top_m(&index, &store, &q, rng.random_range(1..=n)).expect("search");
        let params = RerankParams {
            refine_k: rng.random_range(1..=12),
            expand_m: rng.random_range(1..=8),
            ..RerankParams::default()
        };
        let out = rerank(&q, &hits, &store, &params).expect("rerank");
        let mut before: Vec<(String, u64, usize)> = hits.iter().map(|h| (h.video_id.clone(), h.frame_index, h.row)).collect();
        let mut after: Vec<(String, u64, usize)> = out.iter().map(|h| (h.video_id.clone(), h.frame_index, h.row)).collect();
        let ranks: Vec<usize> = out.iter().map(|h| h.rank).collect();
        before.sort();
        after.sort();
        if before == after && ranks == (1..=hits.len()).collect::<Vec<_>>() {
            permutations += 1;
        }
    }

    let (code, r) = grab_eval(&["rerank", "--trials", "100"]);
    let rate = r["success_rate"].as_f64().unwrap_or(0.0);
    let raw = r["summary"]["mean_raw_rank"].as_f64().unwrap_or(f64::NAN);
    let reranked = r["summary"]["mean_reranked_rank"].as_f64().unwrap_or(f64::NAN);
    Check::new(
        permutations == 500 && r["trials"] == 100 && rate >= 0.8 && reranked < raw && code == Some(0),
        format!(
            "{permutations}/500 permutations; planted target rank <= 3 in {:.0}% of 100 trials (bar 80%), mean rank {raw:.2} -> {reranked:.2}",
            rate * 100.0
        ),
    )
}

fn abts_recovery() -> Check {
    let started = Instant::now();
    let (code, r) = grab_eval(&["abts", "--trials", "100"]);
    let elapsed = started.elapsed();
    let rate = r["success_rate"].as_f64().unwrap_or(0.0);
    let ablation = r["summary"]["ablation"]["success_rate"].as_f64().unwrap_or(f64::NAN);
    Check::new(
        r["trials"] == 100 && rate >= 0.9 && ablation <= rate && code == Some(0) && elapsed < Duration::from_secs(30),
        format!(
            "both boundaries within 3 strided frames in {:.0}% of 100 trials (bar 90%), lambda_t=0 ablation {:.0}%, {:.2} s (limit 30 s)",
            rate * 100.0,
            ablation * 100.0,
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- temporal

struct RandomVideo {
    store: Store,
    fps: f64,
    frame_count: u64,
    stride: u64,
    /// Sequence rows as written, before the store normalizes them.
    rows: Vec<Vec<f32>>,
}

fn random_video(rng: &mut ChaCha8Rng) -> RandomVideo {
    let fps = [5.0, 10.0, 24.0, 25.0, 30.0][rng.random_range(0..5)];
    let frame_count = rng.random_range(1..=3000u64);
    let stride = rng.random_range(1..=8u64);
    let d = rng.random_range(2..=16);
    let n = sequence_rows(frame_count, stride);
    let rows: Vec<Vec<f32>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0f32..1.0)).collect()).collect();
    let store = Store::from_videos(vec![MemoryVideo {
        video_id: "v".into(),
        fps,
        frame_count,
        dim: d,
        keyframes: vec![KeyframeEntry { frame_index: 0, shot_id: 0, phash: None }],
        keyframe_values: rows[0].clone(),
        sequence: Some(SequenceBlob { stride, values: rows.concat() }),
        thumbnail_template: None,
    }])
    .expect("valid video");
    RandomVideo { store, fps, frame_count, stride, rows }
}

/// Strided frames with frame index in `[lo, hi]`, clamped to the video.
fn grid_frames(v: &RandomVideo, lo: f64, hi: f64) -> Vec<u64> {
    let last = v.frame_count - 1;
    (0..=last)
        .step_by(v.stride as usize)
        .filter(|&f| f as f64 >= lo - 1e-6 && f as f64 <= hi + 1e-6)
        .collect()
}

fn unit64(v: &[f32]) -> Vec<f64> {
    let n = v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    v.iter().map(|x| *x as f64 / n).collect()
}

/// Earliest frame of maximal cosine similarity to `q`, and that similarity.
fn similarity_argmax(v: &RandomVideo, q: &[f32], frames: &[u64]) -> (u64, f64) {
    let q = unit64(q);
    let mut best = (frames[0], f64::NEG_INFINITY);
    for &f in frames {
        let e = unit64(&v.rows[(f / v.stride) as usize]);
        let s: f64 = q.iter().zip(&e).map(|(a, b)| a * b).sum();
        if s > best.1 {
            best = (f, s);
        }
    }
    best
}

fn similarity_of(v: &RandomVideo, q: &[f32], frame: u64) -> f64 {
    let (q, e) = (unit64(q), unit64(&v.rows[(frame / v.stride) as usize]));
    q.iter().zip(&e).map(|(a, b)| a * b).sum()
}

fn abts_invariants() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut ordered, mut stable, mut exact_argmax, mut float_ties, mut windows_checked) = (0, 0, 0, 0, 0);
    let mut failures: Vec<String> = Vec::new();
    let searches = 1000;
    for search in 0..searches {
        let v = random_video(&mut rng);
        let d = v.store.dim();
        let p = rng.random_range(0..v.frame_count);
        let windows: Vec<f64> = (0..rng.random_range(1..=3)).map(|_| rng.random_range(1..=60) as f64 * 0.5).collect();
        let lambda_s = rng.random_range(0.05..1.0);
        let radius = rng.random_range(1..=4);
        let qs: Vec<f32> = (0..d).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        let qe: Vec<f32> = (0..d).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        let pivot = PivotRef { video_id: "v".into(), frame_index: p };

        let params = AbtsParams::new(windows.clone(), lambda_s, 1.0 - lambda_s, radius).expect("params");
        let out = temporal_search(&qs, &qe, &pivot, &v.store, &params).expect("temporal search");
        if out.moment.f_s <= p && p <= out.moment.f_e {
            ordered += 1;
        } else {
            failures.push(format!("search {search}: {} <= {p} <= {} violated", out.moment.f_s, out.moment.f_e));
        }

        let all = v.store.frames_in_time_range("v", 0.0, f64::INFINITY).expect("sequence");
        let in_range = |c: &grab_core::temporal::BoundaryCandidate| (0.0..=1.0).contains(&c.stability);
        let scored_ok = score_frames(&qs, &all, &params).iter().chain(score_frames(&qe, &all, &params).iter()).all(in_range);
        let windows_ok = out.windows.iter().all(|w| in_range(&w.start) && in_range(&w.end));
        if scored_ok && windows_ok {
            stable += 1;
        } else {
            failures.push(format!("search {search}: stability outside [0, 1]"));
        }

        let ablation = AbtsParams::new(windows.clone(), 1.0, 0.0, radius).expect("ablation params");
        let out = temporal_search(&qs, &qe, &pivot, &v.store, &ablation).expect("ablation search");
        for w in &out.windows {
            let span = w.window_s * v.fps;
            let sides = [
                (&qs, grid_frames(&v, p as f64 - span, p as f64), w.start.frame_index),
                (&qe, grid_frames(&v, p as f64, p as f64 + span), w.end.frame_index),
            ];
            for (q, frames, picked) in sides {
                windows_checked += 1;
                if frames.is_empty() {
                    // no strided frame in range: the pivot stands in
                    if picked == p {
                        exact_argmax += 1;
                    } else {
                        failures.push(format!("search {search}: empty range picked {picked}, pivot {p}"));
                    }
                    continue;
                }
                let (want, best) = similarity_argmax(&v, q, &frames);
                if picked == want {
                    exact_argmax += 1;
                } else if frames.contains(&picked) && best - similarity_of(&v, q, picked) <= 1e-6 {
                    float_ties += 1;
                } else {
                    failures.push(format!("search {search}: window {} picked {picked}, argmax {want}", w.window_s));
                }
            }
        }
    }
    let pass = ordered == searches && stable == searches && exact_argmax + float_ties == windows_checked;
    let mut detail = format!(
        "f_s <= p <= f_e in {ordered}/{searches}; stability in [0, 1] in {stable}/{searches}; \
         lambda_t=0 argmax identity {exact_argmax}/{windows_checked} exact, {float_ties} within 1e-6 of the max"
    );
    if let Some(first) = failures.first() {
        detail.push_str(&format!("; first failure: {first}"));
    }
    Check::new(pass, detail)
}

// ---------------------------------------------------------------- formats

fn format_round_trips() -> Check {
    let dir = tempfile::tempdir().expect("tempdir");
    let base = dir.path();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let special = [
        -0.0f32,
        f32::MIN_POSITIVE,
        f32::MIN_POSITIVE / 8.0,
        -f32::MIN_POSITIVE / 3.0,
        1.0e30,
        -1.0e-30,
        f32::EPSILON,
        1.0 / 3.0,
    ];
    let d = 16;
    let mut videos = Vec::new();
    let mut raw: Vec<(Vec<f32>, Vec<f32>)> = Vec::new();
    for v in 0..3u64 {
        let keyframes: Vec<u64> = (0..40).map(|i| i * 7 + v).collect();
        let frame_count = 300 + v * 11;
        let stride = 3 + v;
        let mut kf: Vec<f32> = (0..keyframes.len() * d).map(|_| StandardNormal.sample(&mut rng)).collect();
        kf[..special.len()].copy_from_slice(&special);
        let seq: Vec<f32> = (0..sequence_rows(frame_count, stride) * d).map(|_| rng.random_range(-2.0f32..2.0)).collect();
        let id = format!("vid-{v}");
        write_f32le_file(&base.join(format!("{id}.kf.f32")), &kf).expect("write keyframes");
        write_f32le_file(&base.join(format!("{id}.seq.f32")), &seq).expect("write sequence");
        videos.push(VideoManifest {
            video_id: id.clone(),
            fps: 12.5,
            frame_count,
            duration_s: frame_count as f64 / 12.5,
            embedding_file: PathBuf::from(format!("{id}.kf.f32")),
            dim: d,
            dtype: DTYPE_F32LE.into(),
            keyframes: keyframes
                .iter()
                .enumerate()
                .map(|(i, &f)| KeyframeEntry { frame_index: f, shot_id: i / 10, phash: Some(PerceptualHash(rng.random())) })
                .collect(),
            sequence: Some(SequenceManifest { file: PathBuf::from(format!("{id}.seq.f32")), stride }),
            shots: vec![[0, frame_count - 1]],
            thumbnail_template: Some("thumbs/{video_id}/{frame_index}.jpg".into()),
        });
        raw.push((kf, seq));
    }
    let manifest = CorpusManifest { videos };
    let path = base.join("corpus.json");
    manifest.write(&path).expect("write manifest");

    let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<u32>>();
    let read_back = CorpusManifest::read(&path).expect("read manifest");
    let manifest_ok = read_back == manifest;
    let mut blobs_ok = true;
    for (vm, (kf, seq)) in read_back.videos.iter().zip(&raw) {
        let got_kf = read_blob_exact(&base.join(&vm.embedding_file), vm.keyframes.len(), d).expect("keyframe blob");
        let sm = vm.sequence.as_ref().expect("sequence");
        let rows = sequence_rows(vm.frame_count, sm.stride);
        let got_seq = read_blob_exact(&base.join(&sm.file), rows, d).expect("sequence blob");
        blobs_ok &= bits(&got_kf) == bits(kf) && bits(&got_seq) == bits(seq);
    }
    // NaN payloads and infinities survive the raw codec too
    let odd = [f32::from_bits(0x7fc0_1234), f32::from_bits(0xffa0_0001), f32::INFINITY, f32::NEG_INFINITY, -0.0];
    write_f32le_file(&base.join("odd.f32"), &odd).expect("write odd");
    let raw_ok = bits(&read_f32le_file(&base.join("odd.f32")).expect("read odd")) == bits(&odd);

    let store = Store::open(&path).expect("open store");
    let mut rows_ok = store.len() == 120;
    for (r, meta) in store.rows().iter().enumerate() {
        let v = store.video(meta.video);
        let vi = read_back.videos.iter().position(|m| m.video_id == v.video_id).expect("video");
        let k = read_back.videos[vi].keyframes.iter().position(|e| e.frame_index == meta.frame_index).expect("keyframe");
        let original = &raw[vi].0[k * d..(k + 1) * d];
        let want = grab_core::vector::normalized(original).expect("normalizable");
        rows_ok &= bits(store.row(r)) == bits(&want);
    }

    let mut index_ok = true;
    let queries: Vec<Vec<f32>> = (0..20).map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
    for mode in [IndexMode::Exact, IndexMode::Approximate] {
        let index = build_index(&store, mode).expect("index");
        let file = base.join(format!("{mode:?}.grabidx"));
        index.save(&file).expect("save index");
        let loaded = Index::load(&file).expect("load index");
        index_ok &= loaded == index && loaded.check_matches(&store).is_ok();
        for q in &queries {
            let a = search_top_m(&index, &store, q, 25).expect("search");
            let b = search_top_m(&loaded, &store, q, 25).expect("search");
            index_ok &= a == b;
        }
    }
    Check::new(
        manifest_ok && blobs_ok && raw_ok && rows_ok && index_ok,
        format!(
            "manifest {}, blobs bit-exact {}, raw codec {}, loaded rows equal normalized originals {}, index save/load (exact, approximate) identical {}",
            ok(manifest_ok),
            ok(blobs_ok),
            ok(raw_ok),
            ok(rows_ok),
            ok(index_ok)
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "MISMATCH"
    }
}
