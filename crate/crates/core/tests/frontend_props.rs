use std::f64::consts::PI;

use nuts::audio::{load_wav, normalize, pad_or_truncate, write_wav, Frontend, PcmBuffer, FEATURE_LEN, N_FRAMES, N_MELS};
use proptest::prelude::*;

/// Slaney mel scale, written out independently of the library.
fn hz_to_mel(f: f64) -> f64 {
    if f < 1000.0 {
        3.0 * f / 200.0
    } else {
        15.0 + 27.0 * (f / 1000.0).ln() / 6.4f64.ln()
    }
}

fn mel_to_hz(m: f64) -> f64 {
    if m < 15.0 {
        200.0 * m / 3.0
    } else {
        1000.0 * (6.4f64.ln() * (m - 15.0) / 27.0).exp()
    }
}

fn oracle_centers() -> Vec<f64> {
    let top = hz_to_mel(8000.0);
    (1..=N_MELS).map(|i| mel_to_hz(top * i as f64 / (N_MELS + 1) as f64)).collect()
}

fn tone(hz: f64, amp: f64) -> PcmBuffer {
    PcmBuffer::new(
        (0..16_000)
            .map(|n| (amp * 32767.0 * (2.0 * PI * hz * n as f64 / 16_000.0).sin()).round() as i16)
            .collect(),
    )
}

fn argmax_bin(fe: &Frontend, pcm: &PcmBuffer) -> usize {
    let grid = fe.mel_spectrogram(pcm);
    (0..N_MELS)
        .map(|b| (b, (0..N_FRAMES).map(|t| grid.get(b, t)).sum::<f64>()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
        .0
}

#[test]
fn filterbank_centers_match_oracle() {
    let fe = Frontend::default();
    for (m, want) in oracle_centers().iter().enumerate() {
        let got = fe.filterbank().center_hz(m);
        assert!((got - want).abs() < 1e-6 * want.max(1.0), "filter {m}: {got} vs {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tone_energy_is_local(hz in 100.0f64..=7000.0, amp in 0.05f64..0.9) {
        let fe = Frontend::default();
        let centers = oracle_centers();
        let nearest = (0..N_MELS)
            .min_by(|&a, &b| (centers[a] - hz).abs().total_cmp(&(centers[b] - hz).abs()))
            .unwrap();
        let got = argmax_bin(&fe, &tone(hz, amp));
        prop_assert!(got.abs_diff(nearest) <= 1, "{hz} Hz: bin {got}, nearest {nearest}");
    }

    #[test]
    fn features_are_bounded_and_deterministic(samples in proptest::collection::vec(any::<i16>(), 0..20_000)) {
        let fe = Frontend::default();
        let pcm = PcmBuffer::new(samples);
        let grid = fe.mel_spectrogram(&pad_or_truncate(pcm.clone(), 16_000));
        prop_assert_eq!(grid.energies().len(), FEATURE_LEN);
        let a = fe.features(pcm.clone());
        let b = fe.features(pcm);
        prop_assert_eq!(a.values(), b.values());
        prop_assert!(a.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn pad_or_truncate_keeps_prefix(len in 0usize..20_000) {
        let pcm = PcmBuffer::new((0..len).map(|i| (i % 3000) as i16 - 1500).collect());
        let out = pad_or_truncate(pcm.clone(), 16_000);
        prop_assert_eq!(out.len(), 16_000);
        let keep = len.min(16_000);
        prop_assert_eq!(&out.samples[..keep], &pcm.samples[..keep]);
        prop_assert!(out.samples[keep..].iter().all(|&s| s == 0));
    }
}

#[test]
fn noisy_utterance_spans_unit_interval() {
    let fe = Frontend::default();
    let pcm = PcmBuffer::new((0..16_000).map(|i| (((i * 7919) % 2001) as i16 - 1000) * (i as i16 % 7)).collect());
    let f = fe.features(pcm);
    let (lo, hi) = f
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    assert_eq!((lo, hi), (0.0, 1.0));
    let flat = normalize(&fe.mel_spectrogram(&PcmBuffer::new(vec![0; 16_000])));
    assert!(flat.values().iter().all(|&v| v == 0.0));
}

#[test]
fn wav_round_trip_and_rejections() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.wav");
    let pcm = tone(440.0, 0.5);
    write_wav(&p, &pcm).unwrap();
    assert_eq!(load_wav(&p).unwrap(), pcm);

    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: 8000,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let q = dir.path().join("8k.wav");
    let mut w = hound::WavWriter::create(&q, spec).unwrap();
    w.write_sample(0i16).unwrap();
    w.finalize().unwrap();
    assert!(matches!(load_wav(&q), Err(nuts::audio::AudioError::UnsupportedFormat(_))));

    let r = dir.path().join("junk.wav");
    std::fs::write(&r, b"not a wav file at all").unwrap();
    assert!(matches!(load_wav(&r), Err(nuts::audio::AudioError::NotWav(_))));
    assert!(matches!(load_wav(dir.path().join("missing.wav")), Err(nuts::audio::AudioError::Io(_))));
}
