//! Formant-synthesized spoken-word corpus.
//!
//! Stands in for a recorded keyword dataset when none is available. A word's
//! spelling is mapped to a crude phone sequence (vowels, nasals, liquids,
//! fricatives, plosives); each utterance renders that sequence with its own
//! speaker (pitch, vocal-tract scale, tempo, level, onset, background noise)
//! so that utterances of one word vary the way recordings of different
//! people do, and words sharing phones are confusable.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::audio::{write_wav, AudioError, PcmBuffer, SAMPLE_RATE, UTTERANCE_SAMPLES};
use crate::classifier::mix_seed;
use crate::dimreduce::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phone {
    Vowel { f: [f64; 3], ms: f64 },
    /// Nasals, liquids and glides: voiced, weaker, short.
    Sonorant { f: [f64; 3], ms: f64, gain: f64 },
    Fricative { lo: f64, hi: f64, gain: f64, voiced: bool },
    Plosive { lo: f64, hi: f64, voiced: bool },
}

const A: [f64; 3] = [750.0, 1300.0, 2500.0];
const E: [f64; 3] = [550.0, 1800.0, 2500.0];
const I: [f64; 3] = [300.0, 2300.0, 3000.0];
const O: [f64; 3] = [500.0, 900.0, 2400.0];
const U: [f64; 3] = [350.0, 800.0, 2300.0];

fn vowel(f: [f64; 3]) -> Phone {
    Phone::Vowel { f, ms: 130.0 }
}

fn long_vowel(f: [f64; 3]) -> Phone {
    Phone::Vowel { f, ms: 190.0 }
}

fn consonant(c: u8) -> Option<Phone> {
    let p = match c {
        b'b' => Phone::Plosive { lo: 400.0, hi: 1500.0, voiced: true },
        b'p' => Phone::Plosive { lo: 400.0, hi: 1500.0, voiced: false },
        b'd' => Phone::Plosive { lo: 3000.0, hi: 6000.0, voiced: true },
        b't' => Phone::Plosive { lo: 3000.0, hi: 6000.0, voiced: false },
        b'g' => Phone::Plosive { lo: 1500.0, hi: 3000.0, voiced: true },
        b'k' | b'c' | b'q' => Phone::Plosive { lo: 1500.0, hi: 3000.0, voiced: false },
        b'f' => Phone::Fricative { lo: 1200.0, hi: 7000.0, gain: 0.2, voiced: false },
        b'v' => Phone::Fricative { lo: 1200.0, hi: 7000.0, gain: 0.2, voiced: true },
        b's' => Phone::Fricative { lo: 4000.0, hi: 7500.0, gain: 0.6, voiced: false },
        b'z' => Phone::Fricative { lo: 4000.0, hi: 7500.0, gain: 0.5, voiced: true },
        b'h' => Phone::Fricative { lo: 400.0, hi: 3000.0, gain: 0.15, voiced: false },
        b'm' => Phone::Sonorant { f: [250.0, 1000.0, 2200.0], ms: 70.0, gain: 0.35 },
        b'n' => Phone::Sonorant { f: [250.0, 1500.0, 2500.0], ms: 70.0, gain: 0.35 },
        b'l' => Phone::Sonorant { f: [380.0, 1100.0, 2600.0], ms: 70.0, gain: 0.5 },
        b'r' => Phone::Sonorant { f: [420.0, 1250.0, 1600.0], ms: 70.0, gain: 0.5 },
        b'w' => Phone::Sonorant { f: [300.0, 650.0, 2200.0], ms: 60.0, gain: 0.5 },
        _ => return None,
    };
    Some(p)
}

/// Spelling to phones. Handles a few digraphs and a silent final `e`.
fn phones(word: &str) -> Vec<Phone> {
    let w = word.to_ascii_lowercase().into_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < w.len() {
        let c = w[i];
        let next = w.get(i + 1).copied();
        let pair = next.map(|n| [c, n]);
        match pair.as_ref().map(|p| &p[..]) {
            Some(b"sh") => {
                out.push(Phone::Fricative { lo: 2000.0, hi: 5000.0, gain: 0.5, voiced: false });
                i += 2;
                continue;
            }
            Some(b"th") => {
                out.push(Phone::Fricative { lo: 1500.0, hi: 7000.0, gain: 0.12, voiced: false });
                i += 2;
                continue;
            }
            Some(b"ee") | Some(b"ea") => {
                out.push(long_vowel(I));
                i += 2;
                continue;
            }
            Some(b"oo") => {
                out.push(long_vowel(U));
                i += 2;
                continue;
            }
            Some(b"ou") | Some(b"ow") => {
                out.push(vowel(A));
                out.push(Phone::Vowel { f: U, ms: 90.0 });
                i += 2;
                continue;
            }
            Some(b"ai") | Some(b"ay") | Some(b"ei") | Some(b"ey") => {
                out.push(vowel(E));
                out.push(Phone::Vowel { f: I, ms: 90.0 });
                i += 2;
                continue;
            }
            Some(b"ck") => {
                i += 1;
                continue;
            }
            _ => {}
        }
        if next == Some(c) && !b"aeiou".contains(&c) {
            // doubled consonant
            i += 1;
            continue;
        }
        let is_last = i + 1 == w.len();
        let phone = match c {
            b'a' => Some(vowel(A)),
            b'e' if is_last && i > 0 => None,
            b'e' => Some(vowel(E)),
            b'i' => Some(vowel(I)),
            b'o' => Some(vowel(O)),
            b'u' => Some(vowel(U)),
            b'y' if i == 0 => Some(Phone::Sonorant { f: I, ms: 60.0, gain: 0.5 }),
            b'y' => Some(vowel(I)),
            b'x' => {
                out.push(Phone::Plosive { lo: 1500.0, hi: 3000.0, voiced: false });
                consonant(b's')
            }
            b'j' => {
                out.push(Phone::Plosive { lo: 3000.0, hi: 6000.0, voiced: true });
                Some(Phone::Fricative { lo: 2000.0, hi: 5000.0, gain: 0.4, voiced: true })
            }
            other => consonant(other),
        };
        out.extend(phone);
        i += 1;
    }
    out
}

/// Per-utterance voice and recording conditions.
#[derive(Debug, Clone, Copy)]
struct Speaker {
    f0: f64,
    tract: f64,
    tempo: f64,
    level: f64,
    noise: f64,
}

impl Speaker {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        Self {
            f0: rng.random_range(95.0..230.0),
            tract: rng.random_range(0.88..1.15),
            tempo: rng.random_range(0.8..1.25),
            level: rng.random_range(0.25..0.9),
            noise: rng.random_range(0.002..0.02),
        }
    }
}

/// Second-order band-pass (constant 0 dB peak gain).
struct Biquad {
    b0: f64,
    b2: f64,
    a1: f64,
    a2: f64,
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
}

impl Biquad {
    fn band(lo: f64, hi: f64) -> Self {
        let fs = SAMPLE_RATE as f64;
        let hi = hi.min(fs / 2.0 - 100.0);
        let center = (lo * hi).sqrt();
        let q = center / (hi - lo).max(1.0);
        let w0 = 2.0 * PI * center / fs;
        let alpha = w0.sin() / (2.0 * q);
        let a0 = 1.0 + alpha;
        Self {
            b0: alpha / a0,
            b2: -alpha / a0,
            a1: -2.0 * w0.cos() / a0,
            a2: (1.0 - alpha) / a0,
            x1: 0.0,
            x2: 0.0,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.b2 * self.x2 - self.a1 * self.y1 - self.a2 * self.y2;
        self.x2 = self.x1;
        self.x1 = x;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample::<f64, _>(rand_distr::StandardNormal)
}

/// Harmonic source shaped by three formant resonances.
fn voiced(out: &mut [f64], formants: [f64; 3], f0: f64, gain: f64, rng: &mut ChaCha8Rng) {
    let fs = SAMPLE_RATE as f64;
    let bandwidths = [90.0, 110.0, 170.0];
    let weights = [1.0, 0.6, 0.3];
    let vibrato = rng.random_range(0.0..0.03);
    let mut h = 1.0;
    while h * f0 < 5000.0 {
        let freq = h * f0;
        let env: f64 = (0..3)
            .map(|k| weights[k] / (1.0 + ((freq - formants[k]) / (bandwidths[k] / 2.0)).powi(2)))
            .sum();
        let amp = gain * env / (1.0 + freq / 1000.0);
        if amp > 1e-4 {
            let phase0 = rng.random_range(0.0..2.0 * PI);
            for (n, o) in out.iter_mut().enumerate() {
                let t = n as f64 / fs;
                let drift = 1.0 + vibrato * (2.0 * PI * 5.0 * t).sin();
                *o += amp * (2.0 * PI * freq * drift * t + phase0).sin();
            }
        }
        h += 1.0;
    }
}

fn noise_band(out: &mut [f64], lo: f64, hi: f64, gain: f64, rng: &mut ChaCha8Rng) {
    let mut f1 = Biquad::band(lo, hi);
    let mut f2 = Biquad::band(lo, hi);
    for o in out.iter_mut() {
        *o += gain * f2.step(f1.step(gaussian(rng)));
    }
}

/// Raised-cosine fade in/out over `ramp` samples.
fn envelope(seg: &mut [f64], ramp: usize) {
    let n = seg.len();
    let ramp = ramp.min(n / 2).max(1);
    for i in 0..ramp {
        let g = 0.5 - 0.5 * (PI * i as f64 / ramp as f64).cos();
        seg[i] *= g;
        seg[n - 1 - i] *= g;
    }
}

fn render_phone(phone: Phone, sp: &Speaker, rng: &mut ChaCha8Rng) -> Vec<f64> {
    fn ms_to_samples(ms: f64, sp: &Speaker, rng: &mut ChaCha8Rng) -> usize {
        ((ms * sp.tempo * rng.random_range(0.85..1.15)) * 16.0) as usize
    }
    fn jitter(f: [f64; 3], sp: &Speaker, rng: &mut ChaCha8Rng) -> [f64; 3] {
        f.map(|x| x * sp.tract * rng.random_range(0.95..1.05))
    }
    match phone {
        Phone::Vowel { f, ms } => {
            let f = jitter(f, sp, rng);
            let mut seg = vec![0.0; ms_to_samples(ms, sp, rng)];
            voiced(&mut seg, f, sp.f0, 1.0, rng);
            envelope(&mut seg, 240);
            seg
        }
        Phone::Sonorant { f, ms, gain } => {
            let f = jitter(f, sp, rng);
            let mut seg = vec![0.0; ms_to_samples(ms, sp, rng)];
            voiced(&mut seg, f, sp.f0, gain, rng);
            envelope(&mut seg, 160);
            seg
        }
        Phone::Fricative { lo, hi, gain, voiced: v } => {
            let mut seg = vec![0.0; ms_to_samples(100.0, sp, rng)];
            let s = sp.tract;
            noise_band(&mut seg, lo * s, hi * s, gain * 3.0, rng);
            if v {
                voiced(&mut seg, [250.0, 1400.0, 2500.0], sp.f0, 0.25, rng);
            }
            envelope(&mut seg, 200);
            seg
        }
        Phone::Plosive { lo, hi, voiced: v } => {
            let closure = ms_to_samples(40.0, sp, rng);
            let burst = ms_to_samples(if v { 15.0 } else { 25.0 }, sp, rng);
            let mut seg = vec![0.0; closure + burst];
            let s = sp.tract;
            noise_band(&mut seg[closure..], lo * s, hi * s, if v { 1.5 } else { 2.5 }, rng);
            if v {
                voiced(&mut seg[..closure], [250.0, 800.0, 2200.0], sp.f0, 0.08, rng);
            }
            envelope(&mut seg[closure..], 40);
            seg
        }
    }
}

/// Renders utterance `index` of `word`; deterministic in `(word, index, seed)`.
pub fn synthesize(word: &str, index: usize, seed: u64) -> PcmBuffer {
    let word_hash = word
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    let mut rng = rng(mix_seed(seed ^ word_hash, index as u64));
    let speaker = Speaker::draw(&mut rng);

    let overlap = 80;
    let mut word_signal: Vec<f64> = Vec::new();
    for phone in phones(word) {
        let seg = render_phone(phone, &speaker, &mut rng);
        let start = word_signal.len().saturating_sub(overlap.min(seg.len() / 4));
        word_signal.resize((start + seg.len()).max(word_signal.len()), 0.0);
        for (i, s) in seg.iter().enumerate() {
            word_signal[start + i] += s;
        }
    }
    let max_len = UTTERANCE_SAMPLES * 9 / 10;
    if word_signal.len() > max_len {
        word_signal.truncate(max_len);
        envelope(&mut word_signal, 400);
    }
    let peak = word_signal.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-9);

    let slack = UTTERANCE_SAMPLES - word_signal.len();
    let onset = rng.random_range(480..slack.max(481));
    let mut out = vec![0.0; UTTERANCE_SAMPLES];
    for (i, s) in word_signal.iter().enumerate() {
        if let Some(o) = out.get_mut(onset + i) {
            *o = s / peak * speaker.level;
        }
    }
    for o in &mut out {
        *o += speaker.noise * gaussian(&mut rng);
    }
    PcmBuffer::new(
        out.iter()
            .map(|x| (x * 32767.0).round().clamp(-32768.0, 32767.0) as i16)
            .collect(),
    )
}

/// Writes `per_word` utterances for each word as `root/<word>/<word>_<i>.wav`.
pub fn write_corpus(
    root: &Path,
    words: &[&str],
    per_word: usize,
    seed: u64,
) -> Result<(), AudioError> {
    for word in words {
        let dir = root.join(word);
        fs::create_dir_all(&dir)?;
        for i in 0..per_word {
            write_wav(dir.join(format!("{word}_{i:04}.wav")), &synthesize(word, i, seed))?;
        }
    }
    Ok(())
}
