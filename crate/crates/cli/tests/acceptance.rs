//! Acceptance suite. Prints one PASS/FAIL/SKIP line per check and exits
//! non-zero when any check fails.
//!
//! Run with `cargo test -p pgtask --test acceptance`.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use pgtask_core::alignment::{align_corpus, filter_by_confidence, AlignedPair};
use pgtask_core::annotation::{self, AnnotationBatch, BatchItem, IntervalSpec, Judgment, JudgmentStore};
use pgtask_core::corpus::{DialogueCorpus, DialogueRecord, Split, TurnRecord};
use pgtask_core::generator::{clm_loss, pg_loss, pg_loss_grad, PredictionRecord, Reduction};
use pgtask_core::metrics::{bleu, evaluate_predictions, lcs_len, rouge, rouge_pair, CharNgramEmbedder, RougeVariant};
use pgtask_core::nli::{ClassifierHandle, NliLabel};
use pgtask_core::pgd::{compute_statistics, read_pgd, write_pgd, PgdDataset, PgdRecord, ProfileEntry, Provenance};

use common::{pgtask_env, s, stderr, write_corpora};

/// Env var naming a JSON file with full-scale results; see the README.
const FULL_SCALE_ENV: &str = "PGTASK_FULL_SCALE_REPORT";

enum Outcome {
    Pass(String),
    Skip(String),
}

type Check = Result<Outcome, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(elapsed: Duration, limit_secs: f64) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_secs {
        Ok(())
    } else {
        Err(format!("took {:.2}s, limit {limit_secs}s", elapsed.as_secs_f64()))
    }
}

// masked loss

const LOGITS: [[f64; 3]; 4] = [[2.0, 1.0, 0.0], [0.0, 0.0, 0.0], [1.0, 3.0, -1.0], [0.5, -0.5, 2.0]];
const TARGETS: [u32; 4] = [0, 2, 1, 2];
const MASK: [bool; 4] = [false, false, true, true];
/// -log softmax(row)[target], worked by hand.
const HAND_NLL: [f64; 4] = [0.407605964, 1.098612289, 0.142931628, 0.266367900];

fn masked_loss() -> Check {
    let start = Instant::now();
    let logits: Vec<Vec<f64>> = LOGITS.iter().map(|r| r.to_vec()).collect();
    let pg = pg_loss(&logits, &TARGETS, &MASK).map_err(|e| e.to_string())?;
    let hand = (HAND_NLL[2] + HAND_NLL[3]) / 2.0;
    ensure!((pg - hand).abs() <= 1e-6, "pg_loss {pg} vs hand {hand}");

    let clm = clm_loss(&logits, &TARGETS).map_err(|e| e.to_string())?;
    let all = pg_loss(&logits, &TARGETS, &[true; 4]).map_err(|e| e.to_string())?;
    ensure!(clm == all, "clm_loss {clm} != pg_loss under all-true mask {all}");
    let hand_clm = HAND_NLL.iter().sum::<f64>() / 4.0;
    ensure!((clm - hand_clm).abs() <= 1e-6, "clm_loss {clm} vs hand {hand_clm}");

    let (_, grads) = pg_loss_grad(&logits, &TARGETS, &MASK, Reduction::Mean).map_err(|e| e.to_string())?;
    let eps = 1e-6;
    let mut worst_masked: f64 = 0.0;
    for (i, row) in logits.iter().enumerate() {
        for k in 0..row.len() {
            let mut up = logits.clone();
            let mut down = logits.clone();
            up[i][k] += eps;
            down[i][k] -= eps;
            let fd = (pg_loss(&up, &TARGETS, &MASK).unwrap() - pg_loss(&down, &TARGETS, &MASK).unwrap()) / (2.0 * eps);
            if MASK[i] {
                ensure!((fd - grads[i][k]).abs() <= 1e-5, "gradient at ({i},{k}): fd {fd}, analytic {}", grads[i][k]);
            } else {
                ensure!(grads[i][k] == 0.0, "analytic gradient at masked-out ({i},{k}) is {}", grads[i][k]);
                worst_masked = worst_masked.max(fd.abs());
            }
        }
    }
    ensure!(worst_masked <= 1e-5, "masked-out finite difference {worst_masked:e}");
    within(start.elapsed(), 1.0)?;
    Ok(Outcome::Pass(format!(
        "pg_loss {pg:.9} (hand {hand:.9}), max |fd| at masked-out positions {worst_masked:.1e}"
    )))
}

// alignment oracle

const VOCAB: &[&str] = &["i", "like", "dogs", "my", "job", "is", "fun", "have", "a", "cat", "tea", "music", "love", "we"];

fn random_sentence(rng: &mut ChaCha8Rng, max: usize) -> String {
    let n = rng.random_range(1..=max);
    (0..n).map(|_| VOCAB[rng.random_range(0..VOCAB.len())]).collect::<Vec<_>>().join(" ")
}

fn random_corpus(seed: u64) -> DialogueCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=10);
    let records = (0..n).map(|d| {
        let mut personas = IndexMap::new();
        for speaker in ["self", "partner"] {
            let k = rng.random_range(3..=5);
            personas.insert(speaker.to_string(), (0..k).map(|_| random_sentence(&mut rng, 5)).collect::<Vec<_>>());
        }
        let turns = (0..rng.random_range(1..=8))
            .map(|t| {
                let speaker = if t % 2 == 0 { "self" } else { "partner" };
                // half the turns restate a persona sentence with extra words
                let text = if rng.random_bool(0.5) {
                    let persona = &personas[speaker];
                    let p = &persona[rng.random_range(0..persona.len())];
                    format!("{p} {}", random_sentence(&mut rng, 3))
                } else {
                    random_sentence(&mut rng, 8)
                };
                TurnRecord {
                    speaker: speaker.to_string(),
                    text,
                }
            })
            .collect();
        DialogueRecord {
            id: format!("c{seed}-d{d}"),
            turns,
            personas,
        }
    });
    DialogueCorpus::from_records(Split::Train, records.collect::<Vec<_>>())
}

fn double_loop(corpus: &DialogueCorpus, classifier: &ClassifierHandle) -> Vec<AlignedPair> {
    let mut out = Vec::new();
    for d in &corpus.dialogues {
        for u in &d.turns {
            for p in &d.personas[&u.speaker] {
                let dist = classifier.classify(&u.text, &p.text).unwrap();
                if dist.argmax() == NliLabel::Entailment {
                    out.push(AlignedPair {
                        dialogue_id: d.id.clone(),
                        turn_index: u.turn_index,
                        speaker: u.speaker.clone(),
                        utterance: u.text.clone(),
                        profile: p.text.clone(),
                        p_entail: dist.entailment(),
                    });
                }
            }
        }
    }
    out
}

fn alignment_oracle() -> Check {
    let start = Instant::now();
    let classifier = ClassifierHandle::overlap_stub();
    let (mut mismatches, mut pairs, mut candidates) = (0, 0, 0);
    for seed in 0..100 {
        let corpus = random_corpus(seed);
        ensure!(corpus.rejected.is_empty(), "corpus {seed} rejected dialogues");
        let got = align_corpus(&corpus, &classifier).map_err(|e| e.to_string())?;
        let want = double_loop(&corpus, &classifier);
        candidates += corpus
            .dialogues
            .iter()
            .flat_map(|d| d.turns.iter().map(move |u| d.personas[&u.speaker].len()))
            .sum::<usize>();
        pairs += want.len();
        if got != want {
            mismatches += 1;
        }
    }
    ensure!(mismatches == 0, "{mismatches} of 100 corpora differ from the double loop");
    ensure!(pairs > 0 && pairs < candidates, "degenerate fixture: {pairs} of {candidates} pairs entailed");
    within(start.elapsed(), 10.0)?;
    Ok(Outcome::Pass(format!("100 corpora, {pairs} entailed of {candidates} candidates, 0 mismatches")))
}

// threshold semantics

fn pair_with(i: usize, c: f64) -> AlignedPair {
    AlignedPair {
        dialogue_id: format!("d{}", i / 10),
        turn_index: i % 10,
        speaker: "self".into(),
        utterance: format!("utterance {i}"),
        profile: format!("profile {}", i % 5),
        p_entail: c,
    }
}

fn threshold_semantics() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let above = f64::from_bits(0.99f64.to_bits() + 1);
    let below = f64::from_bits(0.99f64.to_bits() - 1);
    let mut conf: Vec<f64> = vec![0.99, 0.99, above, below, 1.0, 0.5];
    while conf.len() < 1000 {
        conf.push(rng.random_range(0.5..=1.0));
    }
    let pairs: Vec<AlignedPair> = conf.iter().enumerate().map(|(i, c)| pair_with(i, *c)).collect();

    let kept = filter_by_confidence(&pairs, 0.99);
    let expected: Vec<AlignedPair> = pairs.iter().filter(|p| p.p_entail > 0.99).cloned().collect();
    ensure!(kept == expected, "threshold 0.99 keeps {} pairs, expected {}", kept.len(), expected.len());
    ensure!(!kept.iter().any(|p| p.p_entail == 0.99), "a pair at exactly 0.99 was kept");
    ensure!(kept.iter().any(|p| p.p_entail == above), "the pair just above 0.99 was dropped");

    let grid: Vec<f64> = (50..=100).map(|k| k as f64 / 100.0).collect();
    let mut prev: Option<Vec<AlignedPair>> = None;
    for t in &grid {
        let f = filter_by_confidence(&pairs, *t);
        ensure!(filter_by_confidence(&f, *t) == f, "filter not idempotent at {t}");
        if let Some(p) = &prev {
            ensure!(f.iter().all(|x| p.contains(x)), "filter at {t} keeps a pair dropped at a lower threshold");
        }
        prev = Some(f);
    }
    Ok(Outcome::Pass(format!(
        "{} of 1000 kept at 0.99 (exact 0.99 dropped), monotone and idempotent over {} thresholds",
        kept.len(),
        grid.len()
    )))
}

// statistics oracle

fn record(utterance: &str, profiles: &[&str], turn: usize) -> PgdRecord {
    PgdRecord {
        utterance: utterance.into(),
        profiles: profiles
            .iter()
            .map(|p| ProfileEntry {
                text: p.to_string(),
                confidence: 0.995,
            })
            .collect(),
        split: Split::Train,
        provenance: Provenance {
            dialogue: "d0".into(),
            turn,
            speaker: "self".into(),
        },
    }
}

fn statistics_oracle() -> Check {
    let records = vec![
        record("i love my dog", &["i have a dog"], 0),
        record("we went hiking yesterday it was great", &["i like hiking", "i enjoy the outdoors"], 2),
        record("tea", &["i drink tea every morning"], 4),
    ];
    // utterance words 4 + 7 + 1, profile words 4 + 3 + 4 + 5 over 4 sentences
    let stats = compute_statistics(&records);
    let train = stats.get(Split::Train);
    ensure!(train.samples == 3, "count {}", train.samples);
    ensure!(train.avg_profiles == Some(4.0 / 3.0), "avg profiles {:?}", train.avg_profiles);
    ensure!(train.avg_utterance_words == Some(4.0), "avg utterance words {:?}", train.avg_utterance_words);
    ensure!(train.avg_profile_words == Some(4.0), "avg profile words {:?}", train.avg_profile_words);
    ensure!(stats.get(Split::Valid).samples == 0 && stats.get(Split::Test).samples == 0, "empty splits not empty");

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ds = PgdDataset {
        records,
        threshold: 0.99,
        classifier_id: "stub:overlap".into(),
    };
    let first = dir.path().join("a.jsonl");
    let second = dir.path().join("b.jsonl");
    let meta = write_pgd(&ds, &first, None).map_err(|e| e.to_string())?;
    let back = read_pgd(&first).map_err(|e| e.to_string())?;
    ensure!(back == ds, "dataset changed across a write/read round trip");
    ensure!(meta.statistics == stats, "metadata statistics differ from compute_statistics");
    write_pgd(&back, &second, None).map_err(|e| e.to_string())?;
    ensure!(
        std::fs::read(&first).unwrap() == std::fs::read(&second).unwrap(),
        "rewriting the read dataset changed its bytes"
    );
    ensure!(compute_statistics(&back.records) == stats, "statistics changed across the round trip");
    Ok(Outcome::Pass("count 3, averages 1.33/4.00/4.00 exact, round trip byte-stable".into()))
}

// metric suite

fn prediction(golden: &[&str], generated: &str) -> PredictionRecord {
    PredictionRecord {
        utterance: "u".into(),
        golden: golden.iter().map(|g| g.to_string()).collect(),
        generated: generated.into(),
        seed: 0,
    }
}

/// Full-table LCS, independent of the library's two-row version.
fn lcs_table(a: &[u8], b: &[u8]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] { t[i - 1][j - 1] + 1 } else { t[i - 1][j].max(t[i][j - 1]) };
        }
    }
    t[a.len()][b.len()]
}

fn rouge_l_oracle(c: &[u8], r: &[u8]) -> f64 {
    if c.is_empty() && r.is_empty() {
        return 1.0;
    }
    let l = lcs_table(c, r);
    if l == 0 {
        return 0.0;
    }
    let p = l as f64 / c.len() as f64;
    let rc = l as f64 / r.len() as f64;
    2.0 * p * rc / (p + rc)
}

fn strings_up_to(len: usize) -> Vec<Vec<u8>> {
    let mut all = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..len {
        frontier = frontier
            .iter()
            .flat_map(|s: &Vec<u8>| {
                (0..3u8).map(move |c| {
                    let mut t = s.clone();
                    t.push(c);
                    t
                })
            })
            .collect();
        all.extend(frontier.iter().cloned());
    }
    all
}

fn metric_suite() -> Check {
    let start = Instant::now();
    let embedder = CharNgramEmbedder::default();
    let golden = [
        (vec!["i like dogs a lot", "my job is fun"], "i like dogs a lot <sep> my job is fun"),
        (vec!["i have a cat named tom"], "i have a cat named tom"),
        (vec!["we love music and tea every day"], "we love music and tea every day"),
    ];
    let identity: Vec<PredictionRecord> = golden.iter().map(|(g, gen)| prediction(g, gen)).collect();
    let report = evaluate_predictions("identity", &identity, &embedder).map_err(|e| e.to_string())?;
    for (name, v) in &report.scores {
        ensure!((v - 100.0).abs() <= 1e-9, "identity {name} = {v}");
    }

    let disjoint: Vec<PredictionRecord> = golden
        .iter()
        .map(|(g, _)| prediction(g, "zebra quantum violet oxygen <sep> harbor lantern"))
        .collect();
    let report = evaluate_predictions("disjoint", &disjoint, &embedder).map_err(|e| e.to_string())?;
    for (name, v) in &report.scores {
        if name.starts_with("BLEU") || name.starts_with("ROUGE") {
            ensure!(*v == 0.0, "disjoint {name} = {v}");
        }
    }

    let cand = ["a b c d e", "the cat sat on a mat"];
    let refs = ["a b c x d e", "the cat is on the mat"];
    let b4 = bleu(&cand, &refs, 4).map_err(|e| e.to_string())?;
    let b1 = bleu(&cand, &refs, 1).map_err(|e| e.to_string())?;
    ensure!(b4 == 0.0, "BLEU-4 without 4-gram overlap = {b4}");
    ensure!(b1 > 0.0, "BLEU-1 fixture degenerate");

    // every pair with combined length at most 12
    const LETTERS: [&str; 3] = ["a", "b", "c"];
    let strings = strings_up_to(12);
    let tokens: Vec<Vec<&str>> = strings.iter().map(|t| t.iter().map(|x| LETTERS[*x as usize]).collect()).collect();
    let (checked, bad) = (0..strings.len())
        .into_par_iter()
        .map(|i| {
            let c = &strings[i];
            let mut n = 0u64;
            let mut bad = 0u64;
            for (r, rt) in strings.iter().zip(&tokens).take_while(|(r, _)| r.len() + c.len() <= 12) {
                let want = rouge_l_oracle(c, r);
                let got = rouge_pair(&tokens[i], rt, RougeVariant::L);
                if got != want || lcs_len(c, r) != lcs_table(c, r) {
                    bad += 1;
                }
                n += 1;
            }
            (n, bad)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    ensure!(bad == 0, "{bad} of {checked} ROUGE-L pairs disagree with the oracle");
    let corpus_l = rouge(&["a b c"], &["a c"], RougeVariant::L).map_err(|e| e.to_string())?;
    ensure!((corpus_l - 80.0).abs() < 1e-9, "ROUGE-L(\"a b c\", \"a c\") = {corpus_l}");
    within(start.elapsed(), 30.0)?;
    Ok(Outcome::Pass(format!(
        "identity 100, disjoint 0, BLEU-4 0.00, ROUGE-L exact on {checked} pairs"
    )))
}

// annotation math

fn batch(id: &str, intervals: Vec<IntervalSpec>, per_interval: usize) -> AnnotationBatch {
    let mut items = Vec::new();
    for (k, iv) in intervals.iter().enumerate() {
        let confidence = if iv.upper_inclusive { iv.upper } else { (iv.lower + iv.upper) / 2.0 } / 100.0;
        for i in 0..per_interval {
            items.push(BatchItem {
                pair_id: format!("{id}-{k}-{i}"),
                utterance: format!("utterance {k} {i}"),
                profile: format!("profile {k} {i}"),
                interval: k,
                confidence,
            });
        }
    }
    AnnotationBatch {
        id: id.into(),
        seed: 0,
        intervals,
        items,
    }
}

fn judge(store: &mut JudgmentStore, annotator: &str, pair_id: &str, marked: bool, timestamp: u64) {
    store
        .record_judgment(Judgment {
            annotator: annotator.into(),
            pair_id: pair_id.into(),
            marked,
            timestamp,
        })
        .unwrap();
}

/// Marks per item for three annotators: `(all three, two, one)` item counts
/// per interval; the remaining items are unmarked by everyone.
fn scripted(store: &mut JudgmentStore, b: &AnnotationBatch, plan: &[(usize, usize, usize)]) {
    let mut ts = 0;
    for item in &b.items {
        let (all, two, one) = plan[item.interval];
        let idx: usize = item.pair_id.rsplit('-').next().unwrap().parse().unwrap();
        let marks = if idx < all {
            3
        } else if idx < all + two {
            2
        } else if idx < all + two + one {
            1
        } else {
            0
        };
        for (a, name) in ["x", "y", "z"].iter().enumerate() {
            ts += 1;
            judge(store, name, &item.pair_id, a < marks, ts);
        }
    }
}

fn annotation_math() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let log = dir.path().join("judgments.jsonl");
    let fixture = batch("fixture", IntervalSpec::second_round(), 4);
    let marks = [("x", [true, false, false, false]), ("y", [true, true, false, false]), ("z", [false; 4])];
    let report_json = {
        let mut store = JudgmentStore::open(vec![fixture.clone()], &log).map_err(|e| e.to_string())?;
        for (t, (a, m)) in marks.iter().enumerate() {
            for (i, v) in m.iter().enumerate() {
                judge(&mut store, a, &format!("fixture-0-{i}"), *v, (t * 4 + i) as u64);
            }
        }
        let r = annotation::report(&store, "fixture").map_err(|e| e.to_string())?;
        let acc = r.intervals[0].accuracy.unwrap_or(f64::NAN);
        ensure!((acc - 25.0).abs() < 1e-12, "interval accuracy {acc}");
        let xy = annotation::pairwise_agreement(&store, "fixture", "x", "y").map_err(|e| e.to_string())?;
        ensure!(xy == Some(75.0), "pairwise agreement x/y {xy:?}");
        let mean = r.agreement_rate.unwrap_or(f64::NAN);
        ensure!((mean - 200.0 / 3.0).abs() < 1e-9, "mean pairwise agreement {mean}");
        serde_json::to_vec_pretty(&r).unwrap()
    };
    let replayed = JudgmentStore::open(vec![fixture], &log).map_err(|e| e.to_string())?;
    let again = serde_json::to_vec_pretty(&annotation::report(&replayed, "fixture").unwrap()).unwrap();
    ensure!(again == report_json, "replayed report differs from the live report");

    // human-data-shaped replays: 100 items per interval, 3 annotators
    let round_one = batch("one", IntervalSpec::first_round(), 100);
    let round_two = batch("two", IntervalSpec::second_round(), 100);
    let mut store = JudgmentStore::new(vec![round_one.clone(), round_two.clone()]).map_err(|e| e.to_string())?;
    scripted(&mut store, &round_one, &[(5, 0, 10), (9, 0, 10), (25, 40, 0)]);
    scripted(&mut store, &round_two, &[(82, 7, 2)]);
    let one = annotation::report(&store, "one").map_err(|e| e.to_string())?;
    let two = annotation::report(&store, "two").map_err(|e| e.to_string())?;
    let close = |v: Option<f64>, want: f64| v.is_some_and(|x| (x - want).abs() < 0.01);
    for (iv, want) in one.intervals.iter().zip([8.33, 12.33, 51.67]) {
        ensure!(close(iv.accuracy, want), "round one {} accuracy {:?}, want {want}", iv.interval, iv.accuracy);
    }
    ensure!(close(one.agreement_rate, 86.66), "round one agreement {:?}", one.agreement_rate);
    ensure!(close(two.intervals[0].accuracy, 87.33), "round two accuracy {:?}", two.intervals[0].accuracy);
    ensure!(close(two.unanimous_rate, 91.0), "round two unanimous rate {:?}", two.unanimous_rate);
    let text = one.to_text() + &two.to_text();
    for shown in ["8.33%", "12.33%", "51.67%", "86.67%", "87.33%", "91.00%"] {
        ensure!(text.contains(shown), "report text lacks {shown}");
    }
    Ok(Outcome::Pass(format!(
        "accuracy 25.00%, x/y agreement 75.00% (3-way mean {:.2}%), replay byte-identical, human-shaped replays render",
        200.0 / 3.0
    )))
}

// determinism

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpora = write_corpora(dir.path());
    let run = |out: &Path| {
        let args: Vec<String> = vec![
            "benchmark".into(),
            "--corpus".into(),
            format!("train={}", s(&corpora[0])),
            "--corpus".into(),
            format!("valid={}", s(&corpora[1])),
            "--corpus".into(),
            format!("test={}", s(&corpora[2])),
            "--nli-checkpoint".into(),
            "stub:overlap".into(),
            "--seeds".into(),
            "0,1,2".into(),
            "--max-epochs".into(),
            "4".into(),
            "--out".into(),
            s(out).into(),
        ];
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        pgtask_env(&args, &[("SOURCE_DATE_EPOCH", "1700000000")])
    };
    let (a, b) = (dir.path().join("run-a"), dir.path().join("run-b"));
    for out in [&a, &b] {
        let o = run(out);
        ensure!(o.status.success(), "benchmark failed: {}", stderr(&o));
    }
    let (fa, fb) = (files_under(&a), files_under(&b));
    for required in ["pgd.jsonl", "pgd.jsonl.meta.json", "report.json", "predictions/seed-0.jsonl", "predictions/seed-2.jsonl"] {
        ensure!(fa.contains_key(Path::new(required)), "{required} missing");
    }
    ensure!(fa.keys().eq(fb.keys()), "runs wrote different file sets");
    let differing: Vec<String> = fa
        .iter()
        .filter(|(k, v)| fb.get(*k) != Some(*v))
        .map(|(k, _)| k.display().to_string())
        .collect();
    ensure!(differing.is_empty(), "files differ: {}", differing.join(", "));
    Ok(Outcome::Pass(format!("{} files byte-identical across two runs", fa.len())))
}

// full scale

fn full_scale() -> Check {
    let Ok(path) = std::env::var(FULL_SCALE_ENV) else {
        return Ok(Outcome::Skip(format!("needs GPUs and source corpora; set {FULL_SCALE_ENV} to a results file")));
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"))?;
    let targets = [
        ("nli_test_accuracy", 91.75, 0.5),
        ("bleu_1", 61.30, 2.0),
        ("embedding", 94.39, 2.0),
        ("confidence_mean", 93.4, 1.0),
    ];
    let mut shown = Vec::new();
    for (key, want, tol) in targets {
        let got = v[key].as_f64().ok_or_else(|| format!("{path}: missing number {key:?}"))?;
        ensure!((got - want).abs() <= tol, "{key} {got:.2}, target {want} ± {tol}");
        shown.push(format!("{key} {got:.2}"));
    }
    Ok(Outcome::Pass(shown.join(", ")))
}

fn main() {
    let checks: [(&str, fn() -> Check); 8] = [
        ("masked-loss", masked_loss),
        ("alignment-oracle", alignment_oracle),
        ("threshold-semantics", threshold_semantics),
        ("statistics-oracle", statistics_oracle),
        ("metric-suite", metric_suite),
        ("annotation-math", annotation_math),
        ("benchmark-determinism", determinism),
        ("full-scale-targets", full_scale),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(Outcome::Pass(detail)) => println!("PASS {name:<22} {secs:>7.2}s  {detail}"),
            Ok(Outcome::Skip(detail)) => println!("SKIP {name:<22} {secs:>7.2}s  {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name:<22} {secs:>7.2}s  {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
