//! Injected excitation and sensor synthesis.
//!
//! The fingertip is treated as a vibration medium whose frequency response
//! depends on the deformation state: per-band gain drops linearly as the
//! stick ratio falls, with a sensitivity bump around 200 Hz. The module
//! also synthesizes the no-injection vibrotactile channel (slip-event
//! bursts over the noise floor) and the 19-electrode pressure array over a
//! Hertzian patch with a slip-annulus shear skew.

use std::cell::RefCell;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::contact::{ContactState, MaterialSpec, SlipEvent};
use crate::error::{Error, Result};
use crate::seeds;

/// Grip-pressure scale used to normalize the propagation damping term (the
/// top of the data-collection grid, kPa).
pub const FN_NORM_KPA: f64 = 5.9;

/// Vibrotactile burst amplitude per (mm of slip x kPa of grip).
const BURST_GAIN: f64 = 0.05;
/// Vibrotactile burst decay constant (s).
const BURST_TAU_S: f64 = 0.02;
/// Vibrotactile burst carrier band (Hz).
const BURST_BAND: (f64, f64) = (100.0, 900.0);

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn dft(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    PLANNER.with(|p| {
        p.borrow_mut()
            .plan_fft_forward(buf.len())
            .process(&mut buf)
    });
    buf
}

pub(crate) fn idft(mut spec: Vec<Complex64>) -> Vec<f64> {
    let n = spec.len();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut spec));
    spec.into_iter().map(|c| c.re / n as f64).collect()
}

/// Folded (one-sided) frequency of DFT bin `k` for an `n`-point transform.
pub(crate) fn bin_freq(k: usize, n: usize, sample_rate: f64) -> f64 {
    let kk = if k <= n / 2 { k } else { n - k };
    kk as f64 * sample_rate / n as f64
}

/// Zero every DFT bin outside `[lo, hi]` Hz (brick-wall band limit).
pub(crate) fn bandpass(x: &[f64], sample_rate: f64, lo: f64, hi: f64) -> Vec<f64> {
    let n = x.len();
    let mut spec = dft(x);
    for (k, bin) in spec.iter_mut().enumerate() {
        let f = bin_freq(k, n, sample_rate);
        if f < lo - 1e-9 || f > hi + 1e-9 {
            *bin = Complex64::new(0.0, 0.0);
        }
    }
    idft(spec)
}

pub(crate) fn db_to_amp(db: f64) -> f64 {
    if db == f64::NEG_INFINITY {
        0.0
    } else {
        10f64.powf(db / 20.0)
    }
}

/// Configuration of the injected excitation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionConfig {
    /// Intensity I in dB; the sample amplitude scale is `10^(I/20)`.
    pub intensity_db: f64,
    /// Band lower edge (Hz).
    pub band_lo: f64,
    /// Band upper edge (Hz).
    pub band_hi: f64,
    /// Waveform sampling rate (Hz).
    pub sample_rate: f64,
    /// When false the injected channel is silent (no-injection runs).
    pub enabled: bool,
}

impl Default for InjectionConfig {
    fn default() -> Self {
        InjectionConfig {
            intensity_db: 0.0,
            band_lo: 10.0,
            band_hi: 1100.0,
            sample_rate: 2200.0,
            enabled: true,
        }
    }
}

impl InjectionConfig {
    /// `10^(I/20)`, exactly.
    pub fn amplitude_scale(&self) -> f64 {
        10f64.powf(self.intensity_db / 20.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate <= 0.0 {
            return Err(Error::Config("injection: sample_rate must be > 0".into()));
        }
        if self.band_hi > self.sample_rate / 2.0 + 1e-9 {
            return Err(Error::Config(format!(
                "injection: band_hi {} exceeds Nyquist {}",
                self.band_hi,
                self.sample_rate / 2.0
            )));
        }
        if self.band_lo < 0.0 || self.band_lo >= self.band_hi {
            return Err(Error::Config("injection: bad band edges".into()));
        }
        Ok(())
    }
}

/// Band-limited Gaussian excitation: i.i.d. `10^(I/20) * N(0,1)` samples,
/// brick-wall limited to the configured band. Deterministic under `seed`.
pub fn gen_injection(cfg: &InjectionConfig, n: usize, seed: u64) -> Result<Vec<f64>> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::Config("injection: sample count must be > 0".into()));
    }
    if !cfg.enabled {
        return Ok(vec![0.0; n]);
    }
    let mut rng = seeds::rng(seed, &[0xE1]);
    let scale = cfg.amplitude_scale();
    let raw: Vec<f64> = (0..n)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(bandpass(&raw, cfg.sample_rate, cfg.band_lo, cfg.band_hi))
}

/// Deformation-dependent propagation medium.
///
/// Effective per-frequency gain:
/// `g(f) = g0(f) * (1 - alpha(f) * (1 - s)) * exp(-beta * f_n / FN_NORM)`
/// where `g0` is a damped base curve and `alpha` a smooth sensitivity bump
/// peaking near 200 Hz. `alpha <= 1` keeps the gain non-negative for all
/// stick ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferProfile {
    /// Base-gain rolloff scale (Hz): `g0(f) = exp(-damping_scale * f / rolloff)`.
    pub base_rolloff_hz: f64,
    /// Medium damping multiplier (material-dependent).
    pub damping_scale: f64,
    /// Peak of the slip-sensitivity bump (must be <= 1).
    pub slip_peak: f64,
    /// Center of the sensitivity bump (Hz).
    pub slip_center_hz: f64,
    /// Log-frequency width of the bump.
    pub slip_log_width: f64,
    /// Grip-pressure damping coefficient beta (>= 0).
    pub fn_damping: f64,
    /// Additive measurement-noise level (dB re unit excitation); use
    /// `f64::NEG_INFINITY` for noiseless runs.
    pub noise_floor_db: f64,
}

impl Default for TransferProfile {
    fn default() -> Self {
        TransferProfile {
            base_rolloff_hz: 3000.0,
            damping_scale: 1.0,
            slip_peak: 0.65,
            slip_center_hz: 200.0,
            slip_log_width: 1.1,
            fn_damping: 0.05,
            noise_floor_db: -40.0,
        }
    }
}

impl TransferProfile {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.slip_peak) {
            return Err(Error::Config("transfer: slip_peak must be in [0, 1]".into()));
        }
        if self.fn_damping < 0.0 || self.base_rolloff_hz <= 0.0 || self.slip_log_width <= 0.0 {
            return Err(Error::Config("transfer: bad profile parameters".into()));
        }
        Ok(())
    }

    /// Base gain curve g0(f).
    pub fn base_gain(&self, f: f64) -> f64 {
        (-self.damping_scale * f / self.base_rolloff_hz).exp()
    }

    /// Slip-sensitivity coefficient alpha(f).
    pub fn slip_sensitivity(&self, f: f64) -> f64 {
        if f <= 0.0 {
            return 0.0;
        }
        let z = (f / self.slip_center_hz).ln() / self.slip_log_width;
        self.slip_peak * (-0.5 * z * z).exp()
    }

    /// Effective gain at frequency `f` for stick ratio `s` and grip `f_n`.
    pub fn gain(&self, f: f64, s: f64, f_n: f64) -> f64 {
        let alpha = self.slip_sensitivity(f);
        self.base_gain(f)
            * (1.0 - alpha * (1.0 - s.clamp(0.0, 1.0)))
            * (-self.fn_damping * f_n.max(0.0) / FN_NORM_KPA).exp()
    }

    /// Profile with the medium damping scaled for a specimen material.
    pub fn for_material(&self, material: &MaterialSpec) -> TransferProfile {
        TransferProfile {
            damping_scale: self.damping_scale * material.damping_scale,
            ..self.clone()
        }
    }
}

/// Shape one excitation window through the medium and add measurement
/// noise. Windows are independent; no state is carried across calls.
pub fn propagate(
    excitation: &[f64],
    sample_rate: f64,
    s: f64,
    f_n: f64,
    profile: &TransferProfile,
    seed: u64,
) -> Vec<f64> {
    let n = excitation.len();
    if n == 0 {
        return Vec::new();
    }
    let mut spec = dft(excitation);
    for (k, bin) in spec.iter_mut().enumerate() {
        let f = bin_freq(k, n, sample_rate);
        *bin *= profile.gain(f, s, f_n);
    }
    let mut out = idft(spec);
    let sigma = db_to_amp(profile.noise_floor_db);
    if sigma > 0.0 {
        let mut rng = seeds::rng(seed, &[0xA0]);
        for v in &mut out {
            *v += sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    out
}

/// A slip event as seen by the passive vibrotactile channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VibroEvent {
    /// Event time from window start (s).
    pub time_s: f64,
    /// Slip displacement (mm).
    pub magnitude_mm: f64,
    /// Grip pressure at the event (kPa).
    pub f_n_kpa: f64,
}

/// No-injection AC-pressure channel: measurement noise plus exponentially
/// decaying band-limited bursts at slip events, each scaled by
/// `magnitude * f_n`. Bursts superpose linearly.
pub fn vibrotactile_baseline(
    events: &[VibroEvent],
    n: usize,
    cfg: &InjectionConfig,
    noise_floor_db: f64,
    seed: u64,
) -> Vec<f64> {
    let fs = cfg.sample_rate;
    let sigma = db_to_amp(noise_floor_db);
    let mut rng = seeds::rng(seed, &[0xB0]);
    let mut out: Vec<f64> = (0..n)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    for ev in events {
        let amp = BURST_GAIN * ev.magnitude_mm * ev.f_n_kpa;
        let start = (ev.time_s * fs).round() as i64;
        let len = ((5.0 * BURST_TAU_S * fs).ceil() as usize).max(4);
        // Carrier keyed on the event time so identical events superpose
        // exactly.
        let mut erng = seeds::rng(seed, &[0xB1, ev.time_s.to_bits()]);
        let raw: Vec<f64> = (0..len).map(|_| erng.sample(StandardNormal)).collect();
        let carrier = bandpass(&raw, fs, BURST_BAND.0, BURST_BAND.1);
        for (i, c) in carrier.iter().enumerate() {
            let idx = start + i as i64;
            if idx >= 0 && (idx as usize) < n {
                let t_rel = i as f64 / fs;
                out[idx as usize] += amp * c * (-t_rel / BURST_TAU_S).exp();
            }
        }
    }
    out
}

/// Fixed electrode layout over the contact patch plus the surrogate
/// pressure-field parameters sampled by [`electrode_array`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectrodeLayout {
    /// Electrode centers (x, y) in mm; +x is the trailing direction.
    pub points: Vec<(f64, f64)>,
    /// Hertzian patch radius (mm).
    pub patch_radius_mm: f64,
    /// Peak Hertz pressure per kPa of grip.
    pub peak_pressure_per_kpa: f64,
    /// Trailing-edge shear-skew gain.
    pub skew_gain: f64,
    /// Receptive width of the slip-annulus gate (normalized radius).
    pub gate_width: f64,
    /// Per-electrode noise, relative to grip pressure.
    pub noise_rel: f64,
    /// Per-electrode absolute noise floor (kPa).
    pub noise_floor_kpa: f64,
}

impl ElectrodeLayout {
    /// Center electrode, 6-electrode inner ring, 12-electrode outer ring.
    pub fn biotac() -> ElectrodeLayout {
        let mut points = vec![(0.0, 0.0)];
        for i in 0..6 {
            let a = std::f64::consts::TAU * i as f64 / 6.0;
            points.push((2.0 * a.cos(), 2.0 * a.sin()));
        }
        for i in 0..12 {
            let a = std::f64::consts::TAU * i as f64 / 12.0;
            points.push((4.0 * a.cos(), 4.0 * a.sin()));
        }
        ElectrodeLayout {
            points,
            patch_radius_mm: 4.5,
            peak_pressure_per_kpa: 1.5,
            skew_gain: 0.8,
            gate_width: 0.04,
            noise_rel: 0.02,
            noise_floor_kpa: 0.003,
        }
    }

    /// Weights turning electrode readings into a DC-pressure estimate.
    pub fn dc_weights(&self) -> Vec<f64> {
        let sum: f64 = self
            .points
            .iter()
            .map(|&(x, y)| {
                let r = (x * x + y * y).sqrt() / self.patch_radius_mm;
                (1.0 - r * r).max(0.0).sqrt()
            })
            .sum();
        let w = 1.0 / (self.peak_pressure_per_kpa * sum);
        vec![w; self.points.len()]
    }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Noiseless surrogate pressure at one layout point (kPa).
///
/// Hertzian dome scaled by grip, tilted toward the trailing edge by the
/// shear skew; the skew is visible to an electrode only once the slip
/// annulus (inner radius `sqrt(s)` in patch units) has reached it.
pub fn electrode_pressure(state: &ContactState, layout: &ElectrodeLayout, x: f64, y: f64) -> f64 {
    if state.f_n <= 0.0 {
        return 0.0;
    }
    let p0 = layout.peak_pressure_per_kpa * state.f_n;
    let s = state.stick_ratio_true.clamp(0.0, 1.0);
    let c_hat = s.sqrt();
    let r_hat = (x * x + y * y).sqrt() / layout.patch_radius_mm;
    let hertz = (1.0 - r_hat * r_hat).max(0.0).sqrt();
    let gate = smoothstep((r_hat - c_hat) / layout.gate_width);
    let skew = layout.skew_gain * (1.0 - s) * (x / layout.patch_radius_mm) * gate;
    p0 * hertz * (1.0 + skew)
}

/// Sample the surrogate pressure field at the 19 layout points, with
/// per-electrode noise. Readings are clamped non-negative.
pub fn electrode_array(
    state: &ContactState,
    layout: &ElectrodeLayout,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let sigma = layout.noise_rel * state.f_n.max(0.0) + layout.noise_floor_kpa;
    layout
        .points
        .iter()
        .map(|&(x, y)| {
            let noise: f64 = rng.sample(StandardNormal);
            (electrode_pressure(state, layout, x, y) + sigma * noise).max(0.0)
        })
        .collect()
}

/// One sampling window of synthetic sensor modalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    /// AC-pressure waveform over the window.
    pub p_ac: Vec<f64>,
    /// DC pressure (kPa).
    pub p_dc: f64,
    /// 19-electrode pressure readings (kPa).
    pub electrodes: Vec<f64>,
    pub frame_index: usize,
}

/// Injected and passive variants of the same sampling window; the slow
/// modalities (DC pressure, electrodes) are shared.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSample {
    pub injected: SensorFrame,
    pub passive: SensorFrame,
}

/// Sensor stack configuration shared across trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSuite {
    pub injection: InjectionConfig,
    pub transfer: TransferProfile,
    pub layout: ElectrodeLayout,
}

impl Default for SensorSuite {
    fn default() -> Self {
        SensorSuite {
            injection: InjectionConfig::default(),
            transfer: TransferProfile::default(),
            layout: ElectrodeLayout::biotac(),
        }
    }
}

impl SensorSuite {
    pub fn validate(&self) -> Result<()> {
        self.injection.validate()?;
        self.transfer.validate()
    }

    /// Samples per sensor frame of duration `frame_t` seconds.
    pub fn frame_samples(&self, frame_t: f64) -> usize {
        (frame_t * self.injection.sample_rate).round() as usize
    }
}

/// Synthesize both channel variants for one sampling window.
///
/// RNG consumption is fixed regardless of which channels a caller reads, so
/// trajectories stay bit-identical across estimator choices.
pub fn synthesize_step(
    state: &ContactState,
    slip: Option<&SlipEvent>,
    frame_index: usize,
    frame_t: f64,
    suite: &SensorSuite,
    profile: &TransferProfile,
    trial_seed: u64,
) -> Result<SensorSample> {
    let n = suite.frame_samples(frame_t);
    let fs = suite.injection.sample_rate;
    let fi = frame_index as u64;

    let excitation = gen_injection(&suite.injection, n, seeds::derive(trial_seed, &[fi, 1]))?;
    let injected_ac = propagate(
        &excitation,
        fs,
        state.stick_ratio_true,
        state.f_n,
        profile,
        seeds::derive(trial_seed, &[fi, 2]),
    );

    let events: Vec<VibroEvent> = match slip {
        Some(ev) => {
            let mut rng = seeds::rng(trial_seed, &[fi, 3]);
            let offset: f64 = 0.1 + 0.3 * rng.gen::<f64>();
            vec![VibroEvent {
                time_s: offset * frame_t,
                magnitude_mm: ev.jump_mm,
                f_n_kpa: state.f_n,
            }]
        }
        None => Vec::new(),
    };
    let passive_ac = vibrotactile_baseline(
        &events,
        n,
        &suite.injection,
        profile.noise_floor_db,
        seeds::derive(trial_seed, &[fi, 4]),
    );

    let mut erng = seeds::rng(trial_seed, &[fi, 5]);
    let electrodes = electrode_array(state, &suite.layout, &mut erng);
    let mut drng = seeds::rng(trial_seed, &[fi, 6]);
    let p_dc = state.f_n.max(0.0) * (1.0 + 0.005 * drng.sample::<f64, _>(StandardNormal));

    Ok(SensorSample {
        injected: SensorFrame {
            p_ac: injected_ac,
            p_dc,
            electrodes: electrodes.clone(),
            frame_index,
        },
        passive: SensorFrame {
            p_ac: passive_ac,
            p_dc,
            electrodes,
            frame_index,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn std_dev(x: &[f64]) -> f64 {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn injection_std_tracks_intensity() {
        let n = 100_000;
        for (db, expect) in [(0.0, 1.0), (-20.0, 0.1)] {
            let cfg = InjectionConfig {
                intensity_db: db,
                ..InjectionConfig::default()
            };
            let w = gen_injection(&cfg, n, 7).unwrap();
            let sd = std_dev(&w);
            assert!(
                (sd - expect).abs() <= 0.02 * expect.max(1.0),
                "I={db}: std {sd} vs {expect}"
            );
        }
    }

    #[test]
    fn injection_disabled_is_silent() {
        let cfg = InjectionConfig {
            enabled: false,
            ..InjectionConfig::default()
        };
        let w = gen_injection(&cfg, 1000, 1).unwrap();
        assert!(w.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn injection_band_respects_nyquist() {
        let cfg = InjectionConfig {
            band_hi: 1200.0,
            ..InjectionConfig::default()
        };
        assert!(matches!(gen_injection(&cfg, 16, 0), Err(Error::Config(_))));
    }

    #[test]
    fn injection_is_band_limited_and_seeded() {
        let cfg = InjectionConfig::default();
        let a = gen_injection(&cfg, 2200, 5).unwrap();
        let b = gen_injection(&cfg, 2200, 5).unwrap();
        assert_eq!(a, b);
        let spec = dft(&a);
        for (k, bin) in spec.iter().enumerate().take(2200 / 2 + 1) {
            let f = bin_freq(k, 2200, cfg.sample_rate);
            if f < cfg.band_lo - 0.5 {
                assert!(bin.norm() < 1e-9, "energy below band at {f} Hz");
            }
        }
    }

    fn noiseless_profile() -> TransferProfile {
        TransferProfile {
            noise_floor_db: f64::NEG_INFINITY,
            ..TransferProfile::default()
        }
    }

    #[test]
    fn propagate_insensitive_medium_applies_base_gain_only() {
        let mut profile = noiseless_profile();
        profile.slip_peak = 0.0;
        let cfg = InjectionConfig::default();
        let x = gen_injection(&cfg, 1100, 3).unwrap();
        let y = propagate(&x, cfg.sample_rate, 0.2, 0.0, &profile, 0);
        let (sx, sy) = (dft(&x), dft(&y));
        for k in 0..=550 {
            let f = bin_freq(k, 1100, cfg.sample_rate);
            let g = profile.base_gain(f);
            assert_relative_eq!(sy[k].norm(), g * sx[k].norm(), max_relative = 1e-8, epsilon = 1e-9);
        }
    }

    #[test]
    fn propagate_endpoint_gain_ratio_is_one_minus_alpha() {
        let mut profile = noiseless_profile();
        profile.fn_damping = 0.0;
        let cfg = InjectionConfig::default();
        let x = gen_injection(&cfg, 1100, 9).unwrap();
        let y1 = propagate(&x, cfg.sample_rate, 1.0, 2.0, &profile, 0);
        let y0 = propagate(&x, cfg.sample_rate, 0.0, 2.0, &profile, 0);
        let (s1, s0) = (dft(&y1), dft(&y0));
        for k in [100usize, 200, 400] {
            let f = bin_freq(k, 1100, cfg.sample_rate);
            let expect = 1.0 - profile.slip_sensitivity(f);
            assert_relative_eq!(s0[k].norm() / s1[k].norm(), expect, max_relative = 1e-8);
        }
    }

    #[test]
    fn propagate_satisfies_parseval() {
        let profile = noiseless_profile();
        let cfg = InjectionConfig::default();
        let x = gen_injection(&cfg, 2200, 13).unwrap();
        let y = propagate(&x, cfg.sample_rate, 0.6, 3.0, &profile, 0);
        let out_energy: f64 = y.iter().map(|v| v * v).sum();
        let sx = dft(&x);
        let n = x.len() as f64;
        let expected: f64 = sx
            .iter()
            .enumerate()
            .map(|(k, bin)| {
                let f = bin_freq(k, x.len(), cfg.sample_rate);
                let g = profile.gain(f, 0.6, 3.0);
                g * g * bin.norm_sqr()
            })
            .sum::<f64>()
            / n;
        assert_relative_eq!(out_energy, expected, max_relative = 1e-9);
    }

    #[test]
    fn propagate_is_linear_without_noise() {
        let profile = noiseless_profile();
        let cfg = InjectionConfig::default();
        let a = gen_injection(&cfg, 550, 1).unwrap();
        let b = gen_injection(&cfg, 550, 2).unwrap();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let pa = propagate(&a, cfg.sample_rate, 0.4, 2.0, &profile, 0);
        let pb = propagate(&b, cfg.sample_rate, 0.4, 2.0, &profile, 0);
        let ps = propagate(&sum, cfg.sample_rate, 0.4, 2.0, &profile, 0);
        for i in 0..550 {
            assert_relative_eq!(ps[i], pa[i] + pb[i], epsilon = 1e-10, max_relative = 1e-8);
        }
    }

    #[test]
    fn vibrotactile_no_events_is_noise_floor() {
        let cfg = InjectionConfig::default();
        let w = vibrotactile_baseline(&[], 20_000, &cfg, -40.0, 17);
        let sd = std_dev(&w);
        assert_relative_eq!(sd, 0.01, max_relative = 0.05);
    }

    #[test]
    fn vibrotactile_large_event_towers_over_noise() {
        let cfg = InjectionConfig::default();
        let ev = VibroEvent {
            time_s: 0.1,
            magnitude_mm: 1.0,
            f_n_kpa: 5.9,
        };
        let w = vibrotactile_baseline(&[ev], 1100, &cfg, -40.0, 17);
        let peak = w.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(peak >= 10.0 * 0.01, "burst peak {peak} not >= 10x floor");
    }

    #[test]
    fn vibrotactile_identical_events_superpose() {
        let cfg = InjectionConfig::default();
        let ev = VibroEvent {
            time_s: 0.2,
            magnitude_mm: 0.5,
            f_n_kpa: 3.0,
        };
        let none = vibrotactile_baseline(&[], 1100, &cfg, -40.0, 23);
        let one = vibrotactile_baseline(&[ev], 1100, &cfg, -40.0, 23);
        let two = vibrotactile_baseline(&[ev, ev], 1100, &cfg, -40.0, 23);
        for i in 0..1100 {
            let burst = one[i] - none[i];
            assert_relative_eq!(two[i] - none[i], 2.0 * burst, epsilon = 1e-12);
        }
    }

    fn state_with(f_n: f64, f_t: f64, mu: f64) -> ContactState {
        let s = if f_n > 0.0 {
            crate::contact::stick_ratio_partial_slip(
                f_t,
                crate::contact::pressure_to_force(f_n),
                mu,
            )
            .unwrap()
        } else {
            1.0
        };
        ContactState {
            f_n,
            f_t,
            stick_ratio_true: s,
            y: 0.0,
            t: 0.0,
        }
    }

    #[test]
    fn electrodes_symmetric_without_tangential_load() {
        let layout = ElectrodeLayout::biotac();
        let state = state_with(3.0, 0.0, 0.65);
        let mut rng = seeds::rng(5, &[]);
        let e = electrode_array(&state, &layout, &mut rng);
        assert_eq!(e.len(), 19);
        // Mirror pairs along x agree within a few noise sigmas.
        let sigma = layout.noise_rel * 3.0 + layout.noise_floor_kpa;
        for (i, j) in [(7, 13), (8, 12), (9, 11)] {
            assert!(
                (e[i] - e[j]).abs() < 6.0 * sigma,
                "asymmetry {} vs {}",
                e[i],
                e[j]
            );
        }
    }

    #[test]
    fn electrode_centroid_shifts_toward_trailing_edge() {
        // Oracle: recompute the centroid from the noiseless analytic field.
        let layout = ElectrodeLayout::biotac();
        let mu = 0.65;
        let f_n = 3.0;
        let bound = mu * crate::contact::pressure_to_force(f_n);
        let mut prev = f64::NEG_INFINITY;
        for frac in [0.0, 0.3, 0.6, 0.9, 0.99] {
            let state = state_with(f_n, frac * bound, mu);
            let (mut num, mut den) = (0.0, 0.0);
            for &(x, y) in &layout.points {
                let p = electrode_pressure(&state, &layout, x, y);
                num += p * x;
                den += p;
            }
            let centroid = num / den;
            assert!(
                centroid >= prev - 1e-12,
                "centroid not monotone at load fraction {frac}"
            );
            prev = centroid;
        }
        assert!(prev > 0.01, "final centroid {prev} not trailing-positive");
    }

    #[test]
    fn electrodes_read_noise_floor_without_contact() {
        let layout = ElectrodeLayout::biotac();
        let state = ContactState {
            f_n: 0.0,
            f_t: 0.0,
            stick_ratio_true: 1.0,
            y: 0.0,
            t: 0.0,
        };
        let mut rng = seeds::rng(6, &[]);
        let e = electrode_array(&state, &layout, &mut rng);
        for v in e {
            assert!(v.abs() < 6.0 * layout.noise_floor_kpa);
        }
    }

    #[test]
    fn sensor_frame_length_and_dc_consistency() {
        let suite = SensorSuite::default();
        let state = state_with(3.0, 0.1, 0.65);
        let sample = synthesize_step(&state, None, 0, 0.5, &suite, &suite.transfer, 42).unwrap();
        assert_eq!(sample.injected.p_ac.len(), 1100);
        assert_eq!(sample.passive.p_ac.len(), 1100);
        let w = suite.layout.dc_weights();
        let weighted: f64 = sample
            .injected
            .electrodes
            .iter()
            .zip(&w)
            .map(|(e, wi)| e * wi)
            .sum();
        let rel = (weighted - sample.injected.p_dc).abs() / sample.injected.p_dc;
        assert!(rel < 0.02, "weighted electrode sum off by {rel}");
    }

    #[test]
    fn synthesize_step_is_deterministic() {
        let suite = SensorSuite::default();
        let state = state_with(2.0, 0.05, 0.45);
        let a = synthesize_step(&state, None, 3, 0.5, &suite, &suite.transfer, 9).unwrap();
        let b = synthesize_step(&state, None, 3, 0.5, &suite, &suite.transfer, 9).unwrap();
        assert_eq!(a, b);
    }
}
