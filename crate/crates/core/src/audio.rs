//! Audio frontend: 16 kHz PCM utterance to a normalized 80x100 log-MEL grid.

use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

pub const SAMPLE_RATE: u32 = 16_000;
/// One second of audio.
pub const UTTERANCE_SAMPLES: usize = 16_000;
pub const N_MELS: usize = 80;
pub const N_FRAMES: usize = 100;
pub const FEATURE_LEN: usize = N_MELS * N_FRAMES;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("not a RIFF/WAVE file: {0}")]
    NotWav(String),
    #[error("unsupported WAV format: {0}")]
    UnsupportedFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PcmBuffer {
    pub samples: Vec<i16>,
    pub sample_rate: u32,
}

impl PcmBuffer {
    pub fn new(samples: Vec<i16>) -> Self {
        Self {
            samples,
            sample_rate: SAMPLE_RATE,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Log-MEL energies, bin-major: `index = bin * n_frames + frame`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    n_mels: usize,
    n_frames: usize,
    energies: Vec<f64>,
}

impl FeatureGrid {
    pub fn from_energies(
        n_mels: usize,
        n_frames: usize,
        energies: Vec<f64>,
    ) -> Option<Self> {
        (energies.len() == n_mels * n_frames).then_some(Self {
            n_mels,
            n_frames,
            energies,
        })
    }

    pub fn n_mels(&self) -> usize {
        self.n_mels
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn get(&self, bin: usize, frame: usize) -> f64 {
        self.energies[bin * self.n_frames + frame]
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }
}

/// Flattened grid scaled into `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    /// Wraps raw values. Returns `None` if any value is outside `[0,1]`.
    pub fn new(values: Vec<f64>) -> Option<Self> {
        values
            .iter()
            .all(|v| (0.0..=1.0).contains(v))
            .then_some(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontendConfig {
    pub window_ms: f64,
    pub hop_ms: f64,
    pub n_mels: usize,
    pub f_max: f64,
    pub floor: f64,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            window_ms: 25.0,
            hop_ms: 10.0,
            n_mels: N_MELS,
            f_max: 8000.0,
            floor: 1e-10,
        }
    }
}

impl FrontendConfig {
    pub fn window_len(&self) -> usize {
        (self.window_ms * SAMPLE_RATE as f64 / 1000.0).round() as usize
    }

    pub fn hop_len(&self) -> usize {
        (self.hop_ms * SAMPLE_RATE as f64 / 1000.0).round() as usize
    }
}

/// Reads a PCM16 mono 16 kHz WAV file without resampling.
pub fn load_wav(path: impl AsRef<Path>) -> Result<PcmBuffer, AudioError> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(e, path))?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(AudioError::UnsupportedFormat(format!(
            "{}: {}-bit {:?}, expected 16-bit PCM",
            path.display(),
            spec.bits_per_sample,
            spec.sample_format
        )));
    }
    if spec.channels != 1 {
        return Err(AudioError::UnsupportedFormat(format!(
            "{}: {} channels, expected mono",
            path.display(),
            spec.channels
        )));
    }
    if spec.sample_rate != SAMPLE_RATE {
        return Err(AudioError::UnsupportedFormat(format!(
            "{}: {} Hz, expected {SAMPLE_RATE} Hz",
            path.display(),
            spec.sample_rate
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| map_hound(e, path))?;
    Ok(PcmBuffer::new(samples))
}

fn map_hound(err: hound::Error, path: &Path) -> AudioError {
    match err {
        hound::Error::IoError(e) => AudioError::Io(e),
        hound::Error::FormatError(msg) => AudioError::NotWav(format!("{}: {msg}", path.display())),
        other => AudioError::UnsupportedFormat(format!("{}: {other}", path.display())),
    }
}

/// Writes a PCM16 mono 16 kHz WAV file.
pub fn write_wav(path: impl AsRef<Path>, pcm: &PcmBuffer) -> Result<(), AudioError> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: pcm.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound(e, path))?;
    for &s in &pcm.samples {
        writer.write_sample(s).map_err(|e| map_hound(e, path))?;
    }
    writer.finalize().map_err(|e| map_hound(e, path))
}

/// Zero-pads at the end or truncates to exactly `target` samples.
pub fn pad_or_truncate(mut pcm: PcmBuffer, target: usize) -> PcmBuffer {
    pcm.samples.resize(target, 0);
    pcm
}

fn hz_to_mel(hz: f64) -> f64 {
    // Slaney scale: linear below 1 kHz, logarithmic above.
    const F_SP: f64 = 200.0 / 3.0;
    const MIN_LOG_HZ: f64 = 1000.0;
    const MIN_LOG_MEL: f64 = MIN_LOG_HZ / F_SP;
    let logstep = 6.4f64.ln() / 27.0;
    if hz >= MIN_LOG_HZ {
        MIN_LOG_MEL + (hz / MIN_LOG_HZ).ln() / logstep
    } else {
        hz / F_SP
    }
}

fn mel_to_hz(mel: f64) -> f64 {
    const F_SP: f64 = 200.0 / 3.0;
    const MIN_LOG_HZ: f64 = 1000.0;
    const MIN_LOG_MEL: f64 = MIN_LOG_HZ / F_SP;
    let logstep = 6.4f64.ln() / 27.0;
    if mel >= MIN_LOG_MEL {
        MIN_LOG_HZ * ((mel - MIN_LOG_MEL) * logstep).exp()
    } else {
        mel * F_SP
    }
}

/// Triangular, Slaney-normalized MEL filterbank over `n_fft / 2 + 1` bins.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    n_bins: usize,
    /// Edge frequencies in Hz; filter `m` peaks at `edges[m + 1]`.
    edges: Vec<f64>,
    weights: Vec<f64>,
}

impl MelFilterbank {
    pub fn new(n_mels: usize, n_fft: usize, sample_rate: f64, f_max: f64) -> Self {
        let n_bins = n_fft / 2 + 1;
        let mel_max = hz_to_mel(f_max);
        let edges: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(mel_max * i as f64 / (n_mels + 1) as f64))
            .collect();
        let bin_hz = sample_rate / n_fft as f64;
        let mut weights = vec![0.0; n_mels * n_bins];
        for m in 0..n_mels {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            let norm = 2.0 / (hi - lo);
            for k in 0..n_bins {
                let f = k as f64 * bin_hz;
                let rise = (f - lo) / (mid - lo);
                let fall = (hi - f) / (hi - mid);
                weights[m * n_bins + k] = rise.min(fall).max(0.0) * norm;
            }
        }
        Self {
            n_bins,
            edges,
            weights,
        }
    }

    pub fn n_mels(&self) -> usize {
        self.edges.len() - 2
    }

    pub fn center_hz(&self, mel: usize) -> f64 {
        self.edges[mel + 1]
    }

    fn apply(&self, power: &[f64], out: &mut [f64]) {
        for (m, o) in out.iter_mut().enumerate() {
            let row = &self.weights[m * self.n_bins..(m + 1) * self.n_bins];
            *o = row.iter().zip(power).map(|(w, p)| w * p).sum();
        }
    }
}

/// Reusable STFT + filterbank state for one [`FrontendConfig`].
#[derive(Clone)]
pub struct Frontend {
    cfg: FrontendConfig,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    filterbank: MelFilterbank,
}

impl Frontend {
    pub fn new(cfg: FrontendConfig) -> Self {
        let n_fft = cfg.window_len();
        // periodic Hann
        let window = (0..n_fft)
            .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n_fft as f64).cos())
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(n_fft);
        let filterbank = MelFilterbank::new(cfg.n_mels, n_fft, SAMPLE_RATE as f64, cfg.f_max);
        Self {
            cfg,
            window,
            fft,
            filterbank,
        }
    }

    pub fn config(&self) -> &FrontendConfig {
        &self.cfg
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    /// Centered STFT with reflection padding, power spectrum, MEL bank,
    /// floor, natural log. Produces `len / hop` frames.
    pub fn mel_spectrogram(&self, pcm: &PcmBuffer) -> FeatureGrid {
        let n_fft = self.window.len();
        let hop = self.cfg.hop_len();
        let n_mels = self.cfg.n_mels;
        let n_frames = pcm.len() / hop;
        let half = n_fft / 2;

        let signal: Vec<f64> = pcm.samples.iter().map(|&s| s as f64 / 32768.0).collect();
        let padded = reflect_pad(&signal, half);

        let n_bins = n_fft / 2 + 1;
        let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let mut power = vec![0.0; n_bins];
        let mut mel = vec![0.0; n_mels];
        let mut energies = vec![0.0; n_mels * n_frames];

        for frame in 0..n_frames {
            let start = frame * hop;
            for (i, c) in buf.iter_mut().enumerate() {
                *c = Complex::new(padded[start + i] * self.window[i], 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (p, c) in power.iter_mut().zip(&buf) {
                *p = c.norm_sqr();
            }
            self.filterbank.apply(&power, &mut mel);
            for (m, &e) in mel.iter().enumerate() {
                energies[m * n_frames + frame] = e.max(self.cfg.floor).ln();
            }
        }
        FeatureGrid {
            n_mels,
            n_frames,
            energies,
        }
    }

    /// Pads/truncates to one second, then computes and normalizes the grid.
    pub fn features(&self, pcm: PcmBuffer) -> FeatureVector {
        let pcm = pad_or_truncate(pcm, UTTERANCE_SAMPLES);
        normalize(&self.mel_spectrogram(&pcm))
    }
}

impl Default for Frontend {
    fn default() -> Self {
        Self::new(FrontendConfig::default())
    }
}

fn reflect_pad(signal: &[f64], pad: usize) -> Vec<f64> {
    let n = signal.len();
    let mut out = Vec::with_capacity(n + 2 * pad);
    // numpy "reflect": mirror about the edge sample, edge not repeated
    let at = |i: isize| -> f64 {
        if n == 0 {
            return 0.0;
        }
        if n == 1 {
            return signal[0];
        }
        let period = 2 * (n as isize - 1);
        let mut j = i.rem_euclid(period);
        if j >= n as isize {
            j = period - j;
        }
        signal[j as usize]
    };
    for i in -(pad as isize)..(n + pad) as isize {
        out.push(at(i));
    }
    out
}

/// Log-MEL grid of an utterance with the default configuration.
pub fn mel_spectrogram(pcm: &PcmBuffer, cfg: FrontendConfig) -> FeatureGrid {
    Frontend::new(cfg).mel_spectrogram(pcm)
}

/// Per-utterance min-max scaling to `[0,1]`; a constant grid maps to zeros.
pub fn normalize(grid: &FeatureGrid) -> FeatureVector {
    let (lo, hi) = grid
        .energies
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    let values = if range > 0.0 {
        grid.energies
            .iter()
            .map(|&v| ((v - lo) / range).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![0.0; grid.energies.len()]
    };
    FeatureVector(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, amp: f64) -> PcmBuffer {
        PcmBuffer::new(
            (0..UTTERANCE_SAMPLES)
                .map(|i| {
                    let t = i as f64 / SAMPLE_RATE as f64;
                    (amp * 32767.0 * (2.0 * std::f64::consts::PI * freq * t).sin()) as i16
                })
                .collect(),
        )
    }

    #[test]
    fn pad_and_truncate() {
        let p = pad_or_truncate(PcmBuffer::new(vec![3; 12_000]), UTTERANCE_SAMPLES);
        assert_eq!(p.len(), 16_000);
        assert!(p.samples[..12_000].iter().all(|&s| s == 3));
        assert!(p.samples[12_000..].iter().all(|&s| s == 0));

        let long: Vec<i16> = (0..17_000).map(|i| (i % 1000) as i16).collect();
        let p = pad_or_truncate(PcmBuffer::new(long.clone()), UTTERANCE_SAMPLES);
        assert_eq!(p.samples, long[..16_000]);

        let same = PcmBuffer::new(vec![1; 16_000]);
        assert_eq!(pad_or_truncate(same.clone(), UTTERANCE_SAMPLES), same);
    }

    #[test]
    fn silence_hits_floor_everywhere() {
        let grid = mel_spectrogram(&PcmBuffer::new(vec![0; 16_000]), FrontendConfig::default());
        assert_eq!((grid.n_mels(), grid.n_frames()), (80, 100));
        let floor = 1e-10f64.ln();
        assert!(grid.energies().iter().all(|&e| e == floor));
    }

    #[test]
    fn normalize_endpoints_and_degenerate() {
        let mut e = vec![0.0; 8000];
        e[0] = -5.0;
        e[1] = 3.0;
        let v = normalize(&FeatureGrid::from_energies(80, 100, e).unwrap());
        assert_eq!(v.values()[0], 0.0);
        assert_eq!(v.values()[1], 1.0);
        assert_eq!(v.values()[2], 5.0 / 8.0);

        let c = normalize(&FeatureGrid::from_energies(80, 100, vec![-2.5; 8000]).unwrap());
        assert!(c.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn tone_lands_in_nearest_filter() {
        let fe = Frontend::default();
        let grid = fe.mel_spectrogram(&sine(440.0, 0.5));
        // independent center frequencies: Slaney mel, 82 edges over 0..8000 Hz
        let to_mel = |hz: f64| {
            if hz < 1000.0 {
                3.0 * hz / 200.0
            } else {
                15.0 + 27.0 * (hz / 1000.0).ln() / 6.4f64.ln()
            }
        };
        let to_hz = |m: f64| {
            if m < 15.0 {
                200.0 * m / 3.0
            } else {
                1000.0 * (6.4f64.ln() * (m - 15.0) / 27.0).exp()
            }
        };
        let top = to_mel(8000.0);
        let nearest = (0..80)
            .min_by(|&a, &b| {
                let ca = (to_hz(top * (a + 1) as f64 / 81.0) - 440.0).abs();
                let cb = (to_hz(top * (b + 1) as f64 / 81.0) - 440.0).abs();
                ca.partial_cmp(&cb).unwrap()
            })
            .unwrap();
        for frame in 2..98 {
            let argmax = (0..80)
                .max_by(|&a, &b| grid.get(a, frame).partial_cmp(&grid.get(b, frame)).unwrap())
                .unwrap();
            assert_eq!(argmax, nearest, "frame {frame}");
        }
    }

    #[test]
    fn features_are_unit_range_and_deterministic() {
        let fe = Frontend::default();
        let mut pcm = sine(1000.0, 0.3);
        for (i, s) in pcm.samples.iter_mut().enumerate().skip(8000) {
            *s = ((i * 7919) % 2000) as i16 - 1000;
        }
        let a = fe.features(pcm.clone());
        let b = fe.features(pcm);
        assert_eq!(a, b);
        assert_eq!(a.len(), FEATURE_LEN);
        let lo = a.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = a.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!((lo, hi), (0.0, 1.0));
    }

    #[test]
    fn reflect_padding_matches_numpy() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(reflect_pad(&s, 2), vec![3.0, 2.0, 1.0, 2.0, 3.0, 4.0, 3.0, 2.0]);
    }
}
