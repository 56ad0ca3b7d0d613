//! One PASS/FAIL line per acceptance criterion.
//!
//! Criteria 2 to 7 need the Speech Commands directory in `NUTS_DATA`.
//! Without it they run on a generated formant corpus and are reported with
//! a `[proxy]` tag; those lines do not fail the run unless `NUTS_STRICT=1`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use nuts::audio::PcmBuffer;
use nuts::classifier::{evaluate, EvalConfig, EvalReport, FeatureSource, FewShotModel, ModelConfig, Reduction};
use nuts::encoder::PropertyJudgment;
use nuts::harness::corpus::write_corpus;
use nuts::harness::experiments::run_synthetic_experiment;
use nuts::harness::{ingest_dataset, DatasetIndex, FileDataset, DESK_WORDS, WORDS};
use nuts::nal::{analogy, revise};
use nuts::nalifier::Nalifier;
use nuts::narsese::{parse, render, Sentence, Statement, Term, TruthValue};
use nuts::synthetic::SyntheticSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 7;
const PROXY_PER_WORD: usize = 40;
const PROXY_SEED: u64 = 1;

struct Report {
    proxy: bool,
    strict: bool,
    failed: Vec<u32>,
}

impl Report {
    fn line(&mut self, id: u32, data_dependent: bool, pass: bool, text: String) {
        let tag = if data_dependent && self.proxy { " [proxy]" } else { "" };
        println!("{} [{id}]{tag} {text}", if pass { "PASS" } else { "FAIL" });
        if !pass && (!data_dependent || !self.proxy || self.strict) {
            self.failed.push(id);
        }
    }
}

fn eval(src: &dyn FeatureSource, cfg: EvalConfig) -> EvalReport {
    evaluate(src, &cfg).expect("evaluate")
}

fn base() -> EvalConfig {
    EvalConfig {
        seed: SEED,
        repeats: 100,
        ..EvalConfig::default()
    }
}

/// Wilson score interval at 95%.
fn wilson(k: usize, n: usize) -> (f64, f64) {
    let z = 1.959_963_984_540_054f64;
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    (centre - half, centre + half)
}

fn load_data() -> (Option<tempfile::TempDir>, DatasetIndex, bool) {
    if let Some(root) = std::env::var_os("NUTS_DATA").map(PathBuf::from) {
        if let Ok(idx) = ingest_dataset(&root, None) {
            return (None, idx, false);
        }
        let desk: Vec<String> = DESK_WORDS.iter().map(|w| w.to_string()).collect();
        let idx = ingest_dataset(&root, Some(&desk)).expect("NUTS_DATA holds neither 35 nor the desk words");
        return (None, idx, false);
    }
    let dir = tempfile::tempdir().expect("tempdir");
    write_corpus(dir.path(), &WORDS, PROXY_PER_WORD, PROXY_SEED).expect("proxy corpus");
    let idx = ingest_dataset(dir.path(), None).expect("proxy index");
    (Some(dir), idx, true)
}

fn criterion_1(r: &mut Report) {
    let rep = run_synthetic_experiment(&SyntheticSpec::new(2000, 0.05, 0), 50).expect("synthetic");
    let secs = rep.elapsed.as_secs_f64();
    let ok = rep.success_rate() == 1.0 && secs < 60.0;
    r.line(
        1,
        false,
        ok,
        format!("synthetic n=2000, 50 seeds: success {:.2} (need 1.00), {secs:.2}s (need <60s)", rep.success_rate()),
    );
}

fn criterion_2(r: &mut Report, src: &FileDataset, desk: &FileDataset) {
    let n = src.classes().len();
    let rep = eval(src, base());
    if n == WORDS.len() {
        let acc = rep.accuracy();
        r.line(
            2,
            true,
            acc >= 0.40 && rep.total_trials() >= 500,
            format!("35 classes D=4 K=2: accuracy {acc:.4} over {} trials (need >=0.40; chance 0.029)", rep.total_trials()),
        );
    }
    let d = eval(desk, EvalConfig { repeats: 60, ..base() });
    let line = format!(
        "desk 10 classes D=4 K=2: accuracy {:.4} over {} trials (need >=0.30 when the full set is unavailable)",
        d.accuracy(),
        d.total_trials()
    );
    if n == WORDS.len() {
        println!("INFO [2] {line}");
    } else {
        r.line(2, true, d.accuracy() >= 0.30 && d.total_trials() >= 500, line);
    }
}

fn criterion_3(r: &mut Report, src: &FileDataset) {
    let accs: Vec<(usize, f64)> = (2..=10).map(|d| (d, eval(src, EvalConfig { dims: d, ..base() }).accuracy())).collect();
    let mut ranked = accs.clone();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let rank = ranked.iter().position(|(d, _)| *d == 4).unwrap() + 1;
    let shown: Vec<String> = accs.iter().map(|(d, a)| format!("D{d}={a:.3}")).collect();
    r.line(3, true, rank <= 2, format!("dimension sweep K=2+1: D=4 ranks {rank} (need top 2): {}", shown.join(" ")));
}

fn criterion_4(r: &mut Report, src: &FileDataset) {
    let ks = [2usize, 5, 10, 20];
    let max_k = ks.iter().copied().filter(|&k| (0..src.classes().len()).all(|c| src.len(c) > k)).max();
    let accs: Vec<(usize, f64)> = ks
        .iter()
        .filter(|&&k| Some(k) <= max_k)
        .map(|&k| (k, eval(src, EvalConfig { examples: k, ..base() }).accuracy()))
        .collect();
    let ok = accs.len() == ks.len() && accs.windows(2).all(|w| w[1].1 >= w[0].1 - 0.03);
    let shown: Vec<String> = accs.iter().map(|(k, a)| format!("K{k}={a:.3}")).collect();
    r.line(4, true, ok, format!("examples sweep D=4: {} (each step >= previous - 0.03)", shown.join(" ")));
}

fn criterion_5(r: &mut Report, src: &FileDataset) {
    let chance = 1.0 / src.classes().len() as f64;
    let acc = eval(src, EvalConfig { reduction: Reduction::Subsample, ..base() }).accuracy();
    r.line(
        5,
        true,
        (acc - chance).abs() <= 0.03,
        format!("subsample D=4: accuracy {acc:.4}, chance {chance:.4} (need within 0.03)"),
    );
}

fn criterion_6(r: &mut Report, src: &FileDataset) {
    let accs: Vec<(usize, f64)> = [1usize << 8, 1 << 12, 1 << 16]
        .iter()
        .map(|&a| (a, eval(src, EvalConfig { aikr: a, ..base() }).accuracy()))
        .collect();
    let hi = accs.iter().map(|a| a.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = accs.iter().map(|a| a.1).fold(f64::INFINITY, f64::min);
    let shown: Vec<String> = accs.iter().map(|(a, x)| format!("aikr{a}={x:.3}")).collect();
    r.line(6, true, hi - lo < 0.10, format!("AIKR sweep D=4 K=2+1: spread {:.4} (need <0.10): {}", hi - lo, shown.join(" ")));
}

fn criterion_7(r: &mut Report, src: &FileDataset) {
    let rep = eval(src, EvalConfig { shuffle_labels: true, ..base() });
    let chance = 1.0 / src.classes().len() as f64;
    let (lo, hi) = wilson(rep.total_correct(), rep.total_trials());
    r.line(
        7,
        true,
        lo <= chance && chance <= hi,
        format!(
            "shuffled labels: accuracy {:.4}, 95% CI [{lo:.4}, {hi:.4}] (must contain {chance:.4})",
            rep.accuracy()
        ),
    );
}

fn random_truth(rng: &mut ChaCha8Rng) -> TruthValue {
    TruthValue::new(rng.random::<f64>(), rng.random_range(0.001..0.999)).unwrap()
}

fn criterion_8(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bad = 0;
    for _ in 0..10_000 {
        let (a, b) = (random_truth(&mut rng), random_truth(&mut rng));
        let ab = revise(a, b);
        bad += usize::from(ab != revise(b, a));
        bad += usize::from(ab.confidence() <= a.confidence().max(b.confidence()) || ab.confidence() >= 1.0);
        let t = analogy(a, b);
        bad += usize::from(!(0.0..=1.0).contains(&t.frequency()) || !(0.0..1.0).contains(&t.confidence()));
        let stronger = TruthValue::new((b.frequency() + rng.random::<f64>()).min(1.0), b.confidence()).unwrap();
        bad += usize::from(analogy(a, stronger).confidence() < t.confidence());
    }
    let half = TruthValue::new(1.0, 0.5).unwrap();
    let r1 = revise(half, half);
    let exact = r1.frequency() == 1.0 && r1.confidence() == 2.0 / 3.0;
    let nine = TruthValue::new(1.0, 0.9).unwrap();
    let a1 = analogy(nine, nine);
    let exact = exact && a1.frequency() == 1.0 && (a1.confidence() - 0.81).abs() < 1e-15;
    r.line(
        8,
        false,
        bad == 0 && exact,
        format!("truth algebra: {bad} violations in 10000 random inputs; (1,0.5)+(1,0.5)=({},{:.6})", r1.frequency(), r1.confidence()),
    );
}

fn random_name(rng: &mut ChaCha8Rng) -> String {
    const CH: &[u8] = b"ABCXYZabcxyz0123456789_";
    (0..rng.random_range(1..9)).map(|_| CH[rng.random_range(0..CH.len())] as char).collect()
}

fn random_term(rng: &mut ChaCha8Rng) -> Term {
    let n = random_name(rng);
    match rng.random_range(0..3) {
        0 => Term::Atom(n),
        1 => Term::Instance(n),
        _ => Term::Property(n),
    }
}

fn criterion_9(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut mismatches = 0;
    let mut generated = 0;
    while generated < 10_000 {
        let (s, p) = (random_term(&mut rng), random_term(&mut rng));
        let st = if rng.random_bool(0.5) {
            Statement::inheritance(s, p)
        } else {
            match Statement::similarity(s, p) {
                Ok(st) => st,
                Err(_) => continue,
            }
        };
        let sentence = if rng.random_bool(0.3) {
            Sentence::question(st)
        } else {
            let c = if rng.random_bool(0.5) { 0.9 } else { rng.random_range(0.01..0.99) };
            Sentence::judgment(st, TruthValue::new(rng.random::<f64>(), c).unwrap())
        };
        mismatches += usize::from(parse(&render(&sentence)).ok() != Some(sentence));
        generated += 1;
    }
    let start = Instant::now();
    let mut buf = Vec::new();
    for _ in 0..1_000_000 {
        buf.clear();
        for _ in 0..rng.random_range(0..40) {
            buf.push(rng.random::<u8>());
        }
        let _ = parse(&String::from_utf8_lossy(&buf));
    }
    let fuzz_secs = start.elapsed().as_secs_f64();
    let literals = [
        "<{A} --> [p1]>. %0.9%",
        "<{A} --> LABEL>.",
        "< {C} --> LABEL>?",
        "<{U_1} --> [mel16x9]>. %0.1%",
        "<{U_1} --> [NOTmel16x9]>. %0.9%",
    ];
    let lit_ok = literals.iter().all(|l| parse(l).is_ok())
        && parse(literals[0]).unwrap().statement
            == Statement::inheritance(Term::Instance("A".into()), Term::Property("p1".into()))
        && parse(literals[2]).unwrap().is_question();
    r.line(
        9,
        false,
        mismatches == 0 && lit_ok,
        format!("parser: {mismatches}/10000 round-trip mismatches, 1M fuzz inputs without panic ({fuzz_secs:.1}s), reference literals ok={lit_ok}"),
    );
}

fn criterion_10(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut disagreements = 0;
    for case in 0..1_000 {
        let n_props = rng.random_range(1..=32);
        let n_inst = rng.random_range(2..=8);
        let dyadic = case % 2 == 0;
        let mut nal = Nalifier::new(0.0, 0.9);
        let mut maps: Vec<BTreeMap<usize, f64>> = Vec::new();
        for i in 0..n_inst {
            let id = format!("I{i}");
            let mut js = Vec::new();
            let mut m = BTreeMap::new();
            for _ in 0..rng.random_range(1..=n_props) {
                let k = rng.random_range(0..n_props);
                let neg = rng.random_bool(0.5);
                let f = if dyadic {
                    rng.random_range(4..=8) as f64 / 8.0
                } else {
                    rng.random_range(0.5..=1.0)
                };
                m.insert(k, if neg { 1.0 - f } else { f });
                js.push(PropertyJudgment {
                    instance: id.clone(),
                    property: format!("{}p{k}", if neg { "NOT" } else { "" }),
                    truth: TruthValue::new(f, 0.9).unwrap(),
                });
            }
            let mut best: Option<(usize, f64)> = None;
            for (j, other) in maps.iter().enumerate() {
                let keys: BTreeSet<usize> = m.keys().chain(other.keys()).copied().collect();
                let total: f64 = keys
                    .iter()
                    .map(|k| (m.get(k).unwrap_or(&0.5) - other.get(k).unwrap_or(&0.5)).abs())
                    .sum();
                let s = 1.0 - total / keys.len() as f64;
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((j, s));
                }
            }
            let got = nal.ingest_instance(&id, &js).unwrap().best.map(|b| b.other);
            disagreements += usize::from(got != best.map(|(j, _)| format!("I{j}")));
            maps.push(m);
        }
    }
    r.line(10, false, disagreements == 0, format!("nalifier vs brute force: {disagreements} disagreements over 1000 cases"));
}

fn criterion_11(r: &mut Report, idx: &DatasetIndex, src: &FileDataset) {
    if idx.classes().len() != WORDS.len() {
        r.line(11, false, false, "latency: needs 35 classes".into());
        return;
    }
    let mut train: Vec<(PcmBuffer, String)> = Vec::new();
    let mut queries = Vec::new();
    for (c, w) in idx.classes().iter().enumerate() {
        train.push((src.load(c, 0).unwrap(), w.clone()));
        train.push((src.load(c, 1).unwrap(), w.clone()));
        queries.push(src.load(c, 2).unwrap());
    }
    let model = FewShotModel::fit(&train, ModelConfig::default()).unwrap();
    let mut worst: f64 = 0.0;
    let mut total = 0.0;
    for q in &queries {
        let t = Instant::now();
        model.predict(q).unwrap();
        let s = t.elapsed().as_secs_f64();
        worst = worst.max(s);
        total += s;
    }
    r.line(
        11,
        false,
        worst <= 0.1,
        format!(
            "predict() from PCM, 35 classes K=2 D=4: mean {:.5}s, worst {worst:.5}s (need <=0.1s)",
            total / queries.len() as f64
        ),
    );
}

fn main() -> ExitCode {
    let (_dir, idx, proxy) = load_data();
    let mut r = Report {
        proxy,
        strict: std::env::var("NUTS_STRICT").is_ok_and(|v| v == "1"),
        failed: Vec::new(),
    };
    println!(
        "data: {} ({} classes, {} files)",
        if proxy { "generated formant proxy corpus" } else { "NUTS_DATA" },
        idx.classes().len(),
        idx.total_files()
    );
    let desk_words: Vec<String> = DESK_WORDS.iter().map(|w| w.to_string()).collect();
    let desk = FileDataset::new(ingest_dataset(idx.root(), Some(&desk_words)).expect("desk subset"));
    let src = FileDataset::new(idx.clone());

    criterion_1(&mut r);
    criterion_2(&mut r, &src, &desk);
    criterion_3(&mut r, &src);
    criterion_4(&mut r, &src);
    criterion_5(&mut r, &src);
    criterion_6(&mut r, &src);
    criterion_7(&mut r, &src);
    criterion_8(&mut r);
    criterion_9(&mut r);
    criterion_10(&mut r);
    criterion_11(&mut r, &idx, &src);

    if r.failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failing criteria: {:?}", r.failed);
        ExitCode::FAILURE
    }
}
