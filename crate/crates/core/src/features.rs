//! Feature extraction and pseudo-stick-ratio labeling.
//!
//! Raw sensor frames become either a banded magnitude spectrum of the
//! AC-pressure window or time-averaged electrode vectors; loading
//! trajectories become labels by linear interpolation between complete
//! stick (`F_T = 0`, `s = 1`) and the first gross slip (`s = 0`).

use serde::{Deserialize, Serialize};

use crate::contact::{RigConfig, TrialTrace};
use crate::error::{Error, Result};
use crate::vibro::{bin_freq, dft, SensorFrame, SensorSample};

/// Spectrum band edges (Hz): bands are centered at 10 Hz multiples.
pub const BAND_LO_HZ: f64 = 10.0;
pub const BAND_HI_HZ: f64 = 1100.0;
/// Width of one aggregated spectrum band (Hz).
pub const BAND_WIDTH_HZ: f64 = 10.0;

/// Sampling-window geometry for features and labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    /// Feature-window length T (s).
    pub window_t: f64,
    /// Labeling / control interval (s).
    pub label_interval: f64,
    /// Hop between consecutive feature windows (s).
    pub hop: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            window_t: 1.0,
            label_interval: 0.5,
            hop: 0.5,
        }
    }
}

impl WindowSpec {
    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        if self.window_t <= 0.0 || self.label_interval <= 0.0 || self.hop <= 0.0 {
            return Err(Error::Config("window: durations must be > 0".into()));
        }
        let n = self.window_t * sample_rate;
        if (n - n.round()).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "window: window_t x sample_rate = {n} is not an integer sample count"
            )));
        }
        Ok(())
    }

    /// Feature-window length in samples.
    pub fn window_samples(&self, sample_rate: f64) -> usize {
        (self.window_t * sample_rate).round() as usize
    }

    /// Number of trailing sensor frames of length `frame_t` covering one
    /// feature window.
    pub fn frames_per_window(&self, frame_t: f64) -> usize {
        (self.window_t / frame_t).ceil() as usize
    }
}

/// Banded magnitude spectrum over [10, 1100] Hz.
///
/// Band `j` is centered at `10 * (j + 1)` Hz and holds the square root of
/// the one-sided energy of its raw bins, so band energies sum to the
/// windowed-signal energy for band-limited inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFeature {
    pub bins: Vec<f64>,
    /// Band width (Hz).
    pub bin_width: f64,
    pub frame_index: usize,
}

impl SpectrumFeature {
    /// Center frequency of band `j` (Hz).
    pub fn center_freq(&self, j: usize) -> f64 {
        BAND_LO_HZ + j as f64 * self.bin_width
    }

    /// Index of the band centered at `f` Hz.
    pub fn band_at(f: f64) -> usize {
        ((f - BAND_LO_HZ) / BAND_WIDTH_HZ).round() as usize
    }

    /// Number of bands.
    pub fn band_count() -> usize {
        ((BAND_HI_HZ - BAND_LO_HZ) / BAND_WIDTH_HZ).round() as usize + 1
    }
}

/// Magnitude spectrum of the trailing feature window: mean-removed,
/// Hann-tapered, restricted to the [10, 1100] Hz bands.
pub fn spectrum(p_ac: &[f64], sample_rate: f64, spec: &WindowSpec) -> Result<SpectrumFeature> {
    let n = spec.window_samples(sample_rate);
    if p_ac.len() < n {
        return Err(Error::Shape {
            expected: n,
            got: p_ac.len(),
        });
    }
    let w = &p_ac[p_ac.len() - n..];
    let mean = w.iter().sum::<f64>() / n as f64;
    let tapered: Vec<f64> = w
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let hann = 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / n as f64).cos());
            (v - mean) * hann
        })
        .collect();
    let spec_c = dft(&tapered);

    let n_bands = SpectrumFeature::band_count();
    let mut energy = vec![0.0f64; n_bands];
    let half = n / 2;
    for (k, bin) in spec_c.iter().enumerate().take(half + 1) {
        let f = bin_freq(k, n, sample_rate);
        if f < BAND_LO_HZ - BAND_WIDTH_HZ / 2.0 || f >= BAND_HI_HZ + BAND_WIDTH_HZ / 2.0 {
            continue;
        }
        let j = ((f - (BAND_LO_HZ - BAND_WIDTH_HZ / 2.0)) / BAND_WIDTH_HZ).floor() as usize;
        if j >= n_bands {
            continue;
        }
        // One-sided energy: interior bins count twice.
        let c = if k == 0 || (n % 2 == 0 && k == half) {
            1.0
        } else {
            2.0
        };
        energy[j] += c * bin.norm_sqr() / n as f64;
    }
    Ok(SpectrumFeature {
        bins: energy.into_iter().map(f64::sqrt).collect(),
        bin_width: BAND_WIDTH_HZ,
        frame_index: 0,
    })
}

/// Energy of the mean-removed, Hann-tapered window that [`spectrum`]
/// transforms; the band energies of the result sum to this for inputs that
/// are band-limited to [10, 1100] Hz.
pub fn windowed_energy(p_ac: &[f64], sample_rate: f64, spec: &WindowSpec) -> Result<f64> {
    let n = spec.window_samples(sample_rate);
    if p_ac.len() < n {
        return Err(Error::Shape {
            expected: n,
            got: p_ac.len(),
        });
    }
    let w = &p_ac[p_ac.len() - n..];
    let mean = w.iter().sum::<f64>() / n as f64;
    Ok(w.iter()
        .enumerate()
        .map(|(i, &v)| {
            let hann = 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / n as f64).cos());
            ((v - mean) * hann).powi(2)
        })
        .sum())
}

/// Fixed electrode index subsets mirroring the reduced-resolution arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElectrodeSubset {
    /// All 19 electrodes.
    E19,
    /// Every other electrode (10 indices).
    E10,
    /// Four equally spaced electrodes.
    E4,
    /// Center electrode only.
    E1,
}

impl ElectrodeSubset {
    pub fn indices(self) -> Vec<usize> {
        match self {
            ElectrodeSubset::E19 => (0..19).collect(),
            ElectrodeSubset::E10 => (0..19).step_by(2).collect(),
            ElectrodeSubset::E4 => vec![2, 7, 12, 17],
            ElectrodeSubset::E1 => vec![0],
        }
    }

    pub fn len(self) -> usize {
        self.indices().len()
    }
}

/// Per-electrode mean over a window of frames, restricted to a subset.
pub fn time_average_electrodes(
    frames: &[&SensorFrame],
    subset: ElectrodeSubset,
) -> Result<Vec<f64>> {
    if frames.is_empty() {
        return Err(Error::Shape {
            expected: 1,
            got: 0,
        });
    }
    let indices = subset.indices();
    let mut out = vec![0.0f64; indices.len()];
    for frame in frames {
        for (o, &i) in out.iter_mut().zip(&indices) {
            *o += frame.electrodes[i];
        }
    }
    let n = frames.len() as f64;
    for o in &mut out {
        *o /= n;
    }
    Ok(out)
}

/// First label interval whose displacement exceeds the gross-slip rate
/// (0.02 mm per 500 ms by default), scaled to the interval length.
///
/// `y_trace[0]` is the pre-trial position; index `i >= 1` is the position
/// after step `i - 1`. The returned index is the step index.
pub fn detect_gross_slip(y_trace: &[f64], rig: &RigConfig) -> Option<usize> {
    let threshold = rig.gross_slip_disp * (rig.sample_window_t / rig.gross_slip_window);
    y_trace.windows(2).position(|w| w[1] - w[0] > threshold)
}

/// Pseudo-stick-ratio label: `1 - f_t / f_t_slip`, clamped to [0, 1].
pub fn label_pseudo_stick_ratio(f_t: f64, f_t_slip: f64) -> Result<f64> {
    if f_t_slip <= 0.0 {
        return Err(Error::Labeling(format!(
            "no gross slip observed (f_t_slip = {f_t_slip}); trial cannot be labeled"
        )));
    }
    Ok((1.0 - f_t / f_t_slip).clamp(0.0, 1.0))
}

/// One feature/label pair for slip-model training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub feature: Vec<f64>,
    /// Pseudo-stick-ratio label in [0, 1].
    pub label_s: f64,
    pub material: String,
    /// Grip pressure of the trial (kPa).
    pub f_n: f64,
    pub trial_id: u32,
    /// Step (label interval) index within the trial.
    pub step: u32,
}

/// A fully simulated loading trial: physics trace plus sensor frames.
/// `frames[0]` is the pre-trial window; `frames[i + 1]` belongs to step `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_id: u32,
    pub trace: TrialTrace,
    pub frames: Vec<SensorSample>,
}

pub use crate::config::Method;

/// Extract the feature vector for `method` from the trailing window of
/// frames ending at `frames.last()`.
pub fn extract_feature(
    frames: &[&SensorSample],
    method: Method,
    wspec: &WindowSpec,
    sample_rate: f64,
) -> Result<Vec<f64>> {
    match method {
        Method::Injection | Method::Vibrotactile => {
            let mut wave = Vec::new();
            for f in frames {
                let ch = if method == Method::Injection {
                    &f.injected
                } else {
                    &f.passive
                };
                wave.extend_from_slice(&ch.p_ac);
            }
            Ok(spectrum(&wave, sample_rate, wspec)?.bins)
        }
        _ => {
            let subset = method
                .electrode_subset()
                .expect("electrode methods carry a subset");
            let injected: Vec<&SensorFrame> = frames.iter().map(|f| &f.injected).collect();
            time_average_electrodes(&injected, subset)
        }
    }
}

/// Build labeled samples for one trial, or `None` (with a warning) when the
/// trial never reached gross slip.
pub fn build_trial_samples(
    record: &TrialRecord,
    rig: &RigConfig,
    method: Method,
    wspec: &WindowSpec,
    sample_rate: f64,
) -> Result<Option<Vec<LabeledSample>>> {
    let slip_step = match detect_gross_slip(&record.trace.y_trace(), rig) {
        Some(k) => k,
        None => {
            log::warn!(
                "trial {} ({}, f_n {}): no gross slip; skipped",
                record.trial_id,
                record.trace.material,
                record.trace.f_n
            );
            return Ok(None);
        }
    };
    let f_t_slip = record.trace.steps[slip_step].f_t_peak;
    let frames_per_window = wspec.frames_per_window(rig.sample_window_t);

    let mut samples = Vec::with_capacity(record.trace.steps.len());
    for (i, step) in record.trace.steps.iter().enumerate() {
        let end = i + 2; // frames[0] is pre-trial, frame i+1 closes step i
        let start = end.saturating_sub(frames_per_window);
        let window: Vec<&SensorSample> = record.frames[start..end].iter().collect();
        let feature = extract_feature(&window, method, wspec, sample_rate)?;
        let label_s = label_pseudo_stick_ratio(step.f_t_peak.min(f_t_slip), f_t_slip)?;
        samples.push(LabeledSample {
            feature,
            label_s,
            material: record.trace.material.clone(),
            f_n: record.trace.f_n,
            trial_id: record.trial_id,
            step: i as u32,
        });
    }
    Ok(Some(samples))
}

/// Build the dataset for `method` over a batch of trials; trials that never
/// slipped are skipped with a warning.
pub fn build_dataset(
    trials: &[TrialRecord],
    rig: &RigConfig,
    method: Method,
    wspec: &WindowSpec,
    sample_rate: f64,
) -> Result<Vec<LabeledSample>> {
    let mut out = Vec::new();
    for record in trials {
        if let Some(samples) = build_trial_samples(record, rig, method, wspec, sample_rate)? {
            out.extend(samples);
        }
    }
    Ok(out)
}
