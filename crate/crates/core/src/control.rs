//! Closed-loop stick-ratio stabilization.
//!
//! Proportional action on the estimated stick ratio: `a = k * (s - s_d)`,
//! applied as `f_n <- clamp(f_n - a, 0, f_n_safety)` so that excess slip
//! (s below target) raises the grip. A trial fails when the object travels
//! past `y_fail` or the controller requests grip beyond the safety limit.

use serde::{Deserialize, Serialize};

use crate::config::Method;
use crate::contact::{step_rig, ContactState, MaterialSpec, RigConfig};
use crate::error::{Error, Result};
use crate::features::{extract_feature, WindowSpec};
use crate::seeds;
use crate::svr::SvrModel;
use crate::vibro::{synthesize_step, SensorSample, SensorSuite};

/// Guard floor for score denominators.
pub const SCORE_DENOM_FLOOR: f64 = 1e-3;

/// Stabilization controller parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    /// Gripping-force gain (kPa per unit stick-ratio error).
    pub k: f64,
    /// Target stick ratio in (0, 1).
    pub s_d: f64,
    /// Initial grip pressure (kPa).
    pub f_n_init: f64,
    /// Grip safety limit (kPa).
    pub f_n_safety: f64,
    /// Object-travel failure threshold (mm).
    pub y_fail: f64,
    pub max_steps: usize,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            k: 0.3,
            s_d: 0.3,
            f_n_init: 2.9,
            f_n_safety: 6.0,
            y_fail: 1.5,
            max_steps: 450,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.s_d && self.s_d < 1.0) {
            return Err(Error::Config(format!("controller: s_d {} not in (0,1)", self.s_d)));
        }
        if !(self.f_n_safety > self.f_n_init && self.f_n_init > 0.0) {
            return Err(Error::Config(
                "controller: need f_n_safety > f_n_init > 0".into(),
            ));
        }
        if self.k < 0.0 {
            return Err(Error::Config("controller: gain must be >= 0".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("controller: max_steps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Achievement-score weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        ScoreWeights {
            w1: 0.1,
            w2: 10.0,
            w3: 1.0,
        }
    }
}

impl ScoreWeights {
    pub fn validate(&self) -> Result<()> {
        if self.w1 <= 0.0 || self.w2 <= 0.0 || self.w3 <= 0.0 {
            return Err(Error::Config("score weights must be positive".into()));
        }
        Ok(())
    }

    /// Uniformly rescaled weights.
    pub fn scaled(&self, factor: f64) -> ScoreWeights {
        ScoreWeights {
            w1: self.w1 * factor,
            w2: self.w2 * factor,
            w3: self.w3 * factor,
        }
    }
}

/// Result of one stabilization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub success: bool,
    /// Object travel at termination (mm).
    pub final_y: f64,
    /// Grip pressure at termination (kPa).
    pub final_f_n: f64,
    /// Executed steps.
    pub steps: usize,
    /// Estimated stick ratio per step.
    pub s_trace: Vec<f64>,
    /// True stick ratio per step.
    pub s_true_trace: Vec<f64>,
    pub f_n_trace: Vec<f64>,
    pub y_trace: Vec<f64>,
    /// Per-trial achievement score; filled in by [`score`].
    pub score: f64,
}

/// Proportional control action `a = k * (s_est - s_d)` (kPa).
///
/// The caller applies it as `f_n <- clamp(f_n - a, 0, f_n_safety)`: a
/// stick ratio below target (too much slip) yields a negative action and
/// therefore a grip increase.
pub fn control_action(s_est: f64, cfg: &ControllerConfig) -> f64 {
    cfg.k * (s_est - cfg.s_d)
}

/// Apply an action to the grip pressure. Returns the clamped new pressure
/// and whether the request crossed the safety limit.
pub fn apply_action(f_n: f64, action: f64, cfg: &ControllerConfig) -> (f64, bool) {
    let requested = f_n - action;
    let clamped = requested.clamp(0.0, cfg.f_n_safety);
    (clamped, requested > cfg.f_n_safety)
}

/// Stick-ratio estimator driving the loop.
pub enum Estimator<'a> {
    /// Trained slip model over one sensor modality.
    Model { model: &'a SvrModel, method: Method },
    /// Oracle: feed the simulator's true stick ratio.
    Perfect,
}

/// Everything a stabilization run needs besides the estimator and seed.
#[derive(Clone, Copy)]
pub struct StabilizationSetup<'a> {
    pub rig: &'a RigConfig,
    pub material: &'a MaterialSpec,
    pub suite: &'a SensorSuite,
    pub window: &'a WindowSpec,
    pub controller: &'a ControllerConfig,
}

/// Run one closed-loop trial: per step, advance the rig, synthesize the
/// sensor window, estimate the stick ratio, and regulate the grip.
/// Terminates early on failure (object travel or safety limit).
pub fn run_stabilization(
    setup: &StabilizationSetup,
    estimator: &Estimator,
    seed: u64,
) -> Result<TrialOutcome> {
    setup.controller.validate()?;
    if let Estimator::Model { model, method } = estimator {
        let expected = method.feature_dim();
        if model.feature_scaling.dim() != expected {
            return Err(Error::Shape {
                expected,
                got: model.feature_scaling.dim(),
            });
        }
    }

    let cfg = setup.controller;
    let frame_t = setup.rig.sample_window_t;
    let sample_rate = setup.suite.injection.sample_rate;
    let frames_needed = setup.window.frames_per_window(frame_t);
    let profile = setup.suite.transfer.for_material(setup.material);
    let mut rig_rng = seeds::rng(seed, &[0x51]);
    let sensor_seed = seeds::derive(seed, &[0x5E]);

    let mut state = ContactState::initial(cfg.f_n_init);
    let mut window: Vec<SensorSample> = vec![synthesize_step(
        &state,
        None,
        0,
        frame_t,
        setup.suite,
        &profile,
        sensor_seed,
    )?];

    let mut outcome = TrialOutcome {
        success: true,
        final_y: 0.0,
        final_f_n: cfg.f_n_init,
        steps: 0,
        s_trace: Vec::with_capacity(cfg.max_steps),
        s_true_trace: Vec::with_capacity(cfg.max_steps),
        f_n_trace: Vec::with_capacity(cfg.max_steps),
        y_trace: Vec::with_capacity(cfg.max_steps),
        score: 0.0,
    };

    for step in 0..cfg.max_steps {
        let out = step_rig(&state, setup.rig, setup.material, &mut rig_rng);
        state = out.state;
        let frame = synthesize_step(
            &state,
            out.slip.as_ref(),
            step + 1,
            frame_t,
            setup.suite,
            &profile,
            sensor_seed,
        )?;
        window.push(frame);
        if window.len() > frames_needed {
            window.remove(0);
        }

        let s_est = match estimator {
            Estimator::Perfect => state.stick_ratio_true,
            Estimator::Model { model, method } => {
                let refs: Vec<&SensorSample> = window.iter().collect();
                let feature = extract_feature(&refs, *method, setup.window, sample_rate)?;
                model.predict(&feature)?
            }
        };

        outcome.steps = step + 1;
        outcome.s_trace.push(s_est);
        outcome.s_true_trace.push(state.stick_ratio_true);
        outcome.y_trace.push(state.y);
        outcome.f_n_trace.push(state.f_n);

        if state.y > cfg.y_fail {
            outcome.success = false;
            break;
        }

        let action = control_action(s_est, cfg);
        let (f_n_new, hit_safety) = apply_action(state.f_n, action, cfg);
        state.f_n = f_n_new;
        if hit_safety {
            outcome.success = false;
            *outcome.f_n_trace.last_mut().unwrap() = f_n_new;
            break;
        }
    }

    outcome.final_y = state.y;
    outcome.final_f_n = state.f_n;
    Ok(outcome)
}

/// Batch achievement score plus per-trial scores for significance testing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub batch_score: f64,
    pub per_trial: Vec<f64>,
    pub success_rate: f64,
    pub mean_final_y: f64,
    pub mean_final_f_n: f64,
    pub mean_steps: f64,
}

/// Score from batch statistics:
/// `(w1 + success_rate) * (w2 / mean_y + w3 / mean_f_n)`.
pub fn batch_score_from_means(
    success_rate: f64,
    mean_y: f64,
    mean_f_n: f64,
    w: &ScoreWeights,
) -> f64 {
    (w.w1 + success_rate)
        * (w.w2 / mean_y.max(SCORE_DENOM_FLOOR) + w.w3 / mean_f_n.max(SCORE_DENOM_FLOOR))
}

/// Score a batch of trial outcomes and fill in their per-trial scores.
pub fn score(outcomes: &mut [TrialOutcome], w: &ScoreWeights) -> Result<ScoreReport> {
    if outcomes.is_empty() {
        return Err(Error::Config("score: no outcomes".into()));
    }
    w.validate()?;
    let n = outcomes.len() as f64;
    let success_rate = outcomes.iter().filter(|o| o.success).count() as f64 / n;
    let mean_y = outcomes.iter().map(|o| o.final_y).sum::<f64>() / n;
    let mean_f_n = outcomes.iter().map(|o| o.final_f_n).sum::<f64>() / n;
    let mean_steps = outcomes.iter().map(|o| o.steps as f64).sum::<f64>() / n;
    let batch_score = batch_score_from_means(success_rate, mean_y, mean_f_n, w);
    let per_trial: Vec<f64> = outcomes
        .iter_mut()
        .map(|o| {
            let s = (w.w1 + if o.success { 1.0 } else { 0.0 })
                * (w.w2 / o.final_y.max(SCORE_DENOM_FLOOR)
                    + w.w3 / o.final_f_n.max(SCORE_DENOM_FLOOR));
            o.score = s;
            s
        })
        .collect();
    Ok(ScoreReport {
        batch_score,
        per_trial,
        success_rate,
        mean_final_y: mean_y,
        mean_final_f_n: mean_f_n,
        mean_steps,
    })
}
