use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{at_cosine, gaussian_vec, orthogonal_unit, report_json, run_trials, unit_vec, EvalReport};
use crate::error::{Error, Result};
use crate::store::{sequence_rows, KeyframeEntry, MemoryVideo, SequenceBlob, Store};
use crate::temporal::{temporal_search, AbtsParams, PivotRef};
use crate::vector::normalized;

/// Planted-moment video. Inside `[moment_s.0, moment_s.1]` the opening
/// `ramp_s` seconds turn from `peak_sim` toward the start query down to
/// `ramp_floor`, the closing `ramp_s` seconds mirror that for the end query,
/// and the middle is a stable scene. Outside, each frame is an independent
/// draw `β·q + r` with `β ~ N(0, noise_sigma)`, so isolated frames can match
/// the query well while their neighbors do not. `noise_sigma = 0` replaces
/// the outside with one constant unrelated vector and drops the jitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbtsScenario {
    pub dim: usize,
    pub fps: f64,
    pub stride: u64,
    pub duration_s: f64,
    pub moment_s: (f64, f64),
    pub pivot_s: f64,
    pub ramp_s: f64,
    pub peak_sim: f32,
    pub ramp_floor: f32,
    pub noise_sigma: f64,
    /// Gaussian perturbation scale applied inside the moment.
    pub jitter: f32,
    /// Allowed boundary error in strided frames.
    pub tolerance_strided: u64,
}

impl Default for AbtsScenario {
    fn default() -> Self {
        Self {
            dim: 64,
            fps: 30.0,
            stride: 6,
            duration_s: 60.0,
            moment_s: (18.0, 31.0),
            pivot_s: 24.0,
            ramp_s: 2.0,
            peak_sim: 0.92,
            ramp_floor: 0.70,
            noise_sigma: 1.0,
            jitter: 0.01,
            tolerance_strided: 3,
        }
    }
}

impl AbtsScenario {
    pub fn noiseless() -> Self {
        Self { noise_sigma: 0.0, jitter: 0.0, ..Self::default() }
    }

    pub fn frame_count(&self) -> u64 {
        (self.duration_s * self.fps).round() as u64
    }

    pub fn frame_at(&self, t: f64) -> u64 {
        (t * self.fps).round() as u64
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.moment_s;
        let ok = self.dim >= 8
            && self.fps > 0.0
            && self.stride > 0
            && self.duration_s > 0.0
            && 0.0 <= a
            && a + 2.0 * self.ramp_s <= b
            && b <= self.duration_s
            && a <= self.pivot_s
            && self.pivot_s <= b
            && self.ramp_floor <= self.peak_sim
            && self.peak_sim <= 1.0
            && self.noise_sigma >= 0.0
            && self.jitter >= 0.0;
        if !ok {
            return Err(Error::Input(format!("inconsistent planted-moment layout: {self:?}")));
        }
        if !self.frame_at(a).is_multiple_of(self.stride) || !self.frame_at(b).is_multiple_of(self.stride) {
            return Err(Error::Input("moment boundaries must fall on strided frames".into()));
        }
        Ok(())
    }
}

pub struct MomentFixture {
    pub store: Store,
    pub q_start: Vec<f32>,
    pub q_end: Vec<f32>,
    pub pivot: PivotRef,
    /// Ground-truth boundary frames.
    pub truth: (u64, u64),
}

fn jittered(rng: &mut ChaCha8Rng, v: Vec<f32>, scale: f32) -> Vec<f32> {
    if scale == 0.0 {
        return v;
    }
    let n = gaussian_vec(rng, v.len());
    let w: Vec<f32> = v.iter().zip(&n).map(|(x, e)| x + scale * e).collect();
    normalized(&w).unwrap_or(v)
}

pub fn planted_moment(rng: &mut ChaCha8Rng, sc: &AbtsScenario) -> Result<MomentFixture> {
    sc.validate()?;
    let q_s = unit_vec(rng, sc.dim);
    let q_e = orthogonal_unit(rng, &[&q_s]);
    let scene = orthogonal_unit(rng, &[&q_s, &q_e]);
    let background = orthogonal_unit(rng, &[&q_s, &q_e, &scene]);
    let beta = Normal::new(0.0, sc.noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");

    let frame_count = sc.frame_count();
    let rows = sequence_rows(frame_count, sc.stride);
    let (a, b) = sc.moment_s;
    let mut values = Vec::with_capacity(rows * sc.dim);
    for r in 0..rows {
        let t = (r as u64 * sc.stride) as f64 / sc.fps;
        let v = if t < a || t > b {
            let q = if t < a { &q_s } else { &q_e };
            if sc.noise_sigma == 0.0 {
                background.clone()
            } else {
                let r_dir = orthogonal_unit(rng, &[q]);
                let bt = beta.sample(rng) as f32;
                let w: Vec<f32> = q.iter().zip(&r_dir).map(|(x, y)| bt * x + y).collect();
                normalized(&w)?
            }
        } else {
            let v = if t <= a + sc.ramp_s {
                let frac = ((t - a) / sc.ramp_s) as f32;
                at_cosine(&q_s, &scene, sc.peak_sim - frac * (sc.peak_sim - sc.ramp_floor))
            } else if t >= b - sc.ramp_s {
                let frac = ((b - t) / sc.ramp_s) as f32;
                at_cosine(&q_e, &scene, sc.peak_sim - frac * (sc.peak_sim - sc.ramp_floor))
            } else {
                scene.clone()
            };
            jittered(rng, v, sc.jitter)
        };
        values.extend_from_slice(&v);
    }

    let pivot_frame = sc.frame_at(sc.pivot_s);
    let store = Store::from_videos(vec![MemoryVideo {
        video_id: "moment".into(),
        fps: sc.fps,
        frame_count,
        dim: sc.dim,
        keyframes: vec![KeyframeEntry { frame_index: pivot_frame, shot_id: 0, phash: None }],
        keyframe_values: scene.clone(),
        sequence: Some(SequenceBlob { stride: sc.stride, values }),
        thumbnail_template: None,
    }])?;
    Ok(MomentFixture {
        store,
        q_start: q_s,
        q_end: q_e,
        pivot: PivotRef { video_id: "moment".into(), frame_index: pivot_frame },
        truth: (sc.frame_at(a), sc.frame_at(b)),
    })
}

/// Boundary errors in strided frames for one fixture.
fn boundary_errors(fx: &MomentFixture, params: &AbtsParams, stride: u64) -> Result<(u64, u64)> {
    let out = temporal_search(&fx.q_start, &fx.q_end, &fx.pivot, &fx.store, params)?;
    let err = |got: u64, want: u64| got.abs_diff(want).div_ceil(stride);
    Ok((err(out.moment.f_s, fx.truth.0), err(out.moment.f_e, fx.truth.1)))
}

fn histogram(errors: impl Iterator<Item = u64>) -> BTreeMap<String, usize> {
    let mut h = BTreeMap::new();
    for e in errors {
        *h.entry(format!("{e:03}")).or_insert(0) += 1;
    }
    h
}

/// Planted-moment recovery. Runs `params` and the same settings with λ_t = 0
/// on every trial; a trial succeeds when both boundaries land within
/// `tolerance_strided` strided frames of the truth.
pub fn eval_abts(seed: u64, trials: usize, sc: &AbtsScenario, params: &AbtsParams) -> Result<EvalReport> {
    sc.validate()?;
    let params = params.clone().normalized()?;
    let ablation = AbtsParams { lambda_s: 1.0, lambda_t: 0.0, ..params.clone() };
    let tol = sc.tolerance_strided;
    let (results, ms) = run_trials(seed, trials, |trial, rng| -> Result<serde_json::Value> {
        let fx = planted_moment(rng, sc)?;
        let (es, ee) = boundary_errors(&fx, &params, sc.stride)?;
        let (as_, ae) = boundary_errors(&fx, &ablation, sc.stride)?;
        Ok(json!({
            "trial": trial,
            "start_error": es,
            "end_error": ee,
            "success": es <= tol && ee <= tol,
            "ablation_start_error": as_,
            "ablation_end_error": ae,
            "ablation_success": as_ <= tol && ae <= tol,
        }))
    });
    let diagnostics = results.into_iter().collect::<Result<Vec<_>>>()?;
    let count = |key: &str| diagnostics.iter().filter(|d| d[key] == true).count();
    let (successes, ablation_successes) = (count("success"), count("ablation_success"));
    let errors = |key: &str| histogram(diagnostics.iter().map(|d| d[key].as_u64().unwrap_or(u64::MAX)));
    let rate = |n: usize| if trials == 0 { 0.0 } else { n as f64 / trials as f64 };
    let bar = 0.9;
    let passed = trials > 0 && rate(successes) >= bar && ablation_successes <= successes;
    Ok(EvalReport {
        scenario: "abts".into(),
        seed,
        params: json!({ "scenario": report_json(sc), "abts": params }),
        trials,
        successes,
        success_rate: rate(successes),
        tolerance: tol as f64,
        tolerance_unit: "strided frames".into(),
        bar,
        passed,
        summary: json!({
            "start_error_histogram": errors("start_error"),
            "end_error_histogram": errors("end_error"),
            "ablation": {
                "lambda_t": 0.0,
                "successes": ablation_successes,
                "success_rate": rate(ablation_successes),
                "start_error_histogram": errors("ablation_start_error"),
                "end_error_histogram": errors("ablation_end_error"),
            },
            "ablation_no_better": ablation_successes <= successes,
        }),
        diagnostics,
        wall_clock_ms: ms,
    })
}
