//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use codemix::corpus::{parse_tagged_line, Label, LabeledCorpus, LabeledUtterance, LangTag, Token};
use codemix::model::{macro_f1, subsample_negatives, Objective, DEFAULT_TAU};
use codemix::pipeline::{ablate_switching, PipelineConfig};
use codemix::preprocess::{normalize, segment_camel_case, PreprocessConfig};
use codemix::sparse::SparseVector;
use codemix::stats::{contingency, phi_correlation};
use codemix::switching::{has_embedding_property, lang_run_vectors, switch_counts, switching_features, EmbeddingRule};
use codemix::synth::{switching_corpus, SyntheticConfig};
use codemix::textfeat::{build_vocabulary, chi2_score, chi2_scores, chi2_select, FeatureKey, FeatureKind, FeatureSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn random_tokens(rng: &mut ChaCha8Rng, len: usize) -> Vec<Token> {
    (0..len)
        .map(|_| {
            let tag = match rng.gen_range(0..3) {
                0 => LangTag::Hi,
                1 => LangTag::En,
                _ => LangTag::Rest,
            };
            Token::new(format!("w{}", rng.gen_range(0..50)), tag).unwrap()
        })
        .collect()
}

fn random_corpus(rng: &mut ChaCha8Rng, n: usize, max_len: usize) -> LabeledCorpus {
    let utts = (0..n)
        .map(|i| {
            let len = rng.gen_range(1..=max_len);
            LabeledUtterance::new(i, random_tokens(rng, len), Label::from_bool(rng.gen_bool(0.5))).unwrap()
        })
        .collect();
    LabeledCorpus::new("random", utts).unwrap()
}

fn corpus_from_lines(lines: &[&str]) -> LabeledCorpus {
    let utts = lines
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let mut u = parse_tagged_line(l, i + 1).unwrap();
            u.id = i;
            u
        })
        .collect();
    LabeledCorpus::new("hand", utts).unwrap()
}

fn golden_example() -> Outcome {
    let start = Instant::now();
    let u = parse_tagged_line("1\tkoi_hi to_hi pray_en karo_hi mere_hi liye_hi bhi_hi", 1).unwrap();
    let got = switching_features(u.tokens()).to_array();
    let want = [
        1.0, 1.0, 2.0, 0.142857, 0.857143, 0.285714, 0.699854, 0.571429, 0.494872,
    ];
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        check((g - w).abs() < 1e-6, format!("feature {i}: got {g}, want {w}"))?;
    }
    let trunc = |x: f64| (x * 100.0).trunc() / 100.0;
    check(
        trunc(got[6]) == 0.69 && trunc(got[8]) == 0.49,
        "truncated stddevs are not 0.69 / 0.49",
    )?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("{got:?}"))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    // Swapping hi and en exchanges these feature positions.
    let swap = [1, 0, 2, 4, 3, 7, 8, 5, 6];
    for case in 0..10_000 {
        let len = rng.gen_range(1..=50);
        let tokens = random_tokens(&mut rng, len);
        let v = lang_run_vectors(&tokens);
        for i in 0..tokens.len() {
            let before = &tokens[..i];
            let count = |tag| before.iter().filter(|t| t.tag() == tag).count() as u32;
            let (hi_en, en_hi) = match tokens[i].tag() {
                LangTag::En => (count(LangTag::Hi), 0),
                LangTag::Hi => (0, count(LangTag::En)),
                LangTag::Rest => (0, 0),
            };
            check(
                v.hi_en[i] == hi_en && v.en_hi[i] == en_hi,
                format!("case {case}: vectors differ at {i}"),
            )?;
        }
        // A switch is a token whose nearest earlier non-rest token has the other tag.
        let (mut hi_en, mut en_hi) = (0, 0);
        for i in 0..tokens.len() {
            let prev = tokens[..i].iter().rev().map(Token::tag).find(|t| *t != LangTag::Rest);
            match (prev, tokens[i].tag()) {
                (Some(LangTag::Hi), LangTag::En) => hi_en += 1,
                (Some(LangTag::En), LangTag::Hi) => en_hi += 1,
                _ => {}
            }
        }
        let c = switch_counts(&tokens);
        check(
            c.hi_en == hi_en && c.en_hi == en_hi,
            format!("case {case}: switch counts differ"),
        )?;
        let a = switching_features(&tokens).to_array();
        let swapped: Vec<Token> = tokens.iter().map(|t| t.with_tag(t.tag().swapped())).collect();
        let b = switching_features(&swapped).to_array();
        for (i, &j) in swap.iter().enumerate() {
            check(
                a[i] == b[j],
                format!("case {case}: swap symmetry fails for feature {i}"),
            )?;
        }
    }
    Ok("10000 sequences, lengths 1-50".into())
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

fn phi_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rule = EmbeddingRule::Adjacent;
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let n = rng.gen_range(5..200);
        let corpus = random_corpus(&mut rng, n, 12);
        let t: Vec<f64> = corpus
            .iter()
            .map(|u| f64::from(u8::from(u.label().is_positive())))
            .collect();
        let q: Vec<f64> = corpus
            .iter()
            .map(|u| f64::from(u8::from(has_embedding_property(u.tokens(), rule))))
            .collect();
        match (phi_correlation(&corpus, rule), pearson(&t, &q)) {
            (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
            (None, None) => {}
            (a, b) => return Err(format!("case {case}: phi {a:?}, pearson {b:?}")),
        }
    }
    check(worst <= 1e-12, format!("max |phi - pearson| = {worst:e}"))?;
    let diagonal = corpus_from_lines(&[
        "1\tkoi_hi pray_en karo_hi",
        "1\tbas_hi party_en karo_hi",
        "0\tgood_en morning_en",
        "0\tkya_hi baat_hi",
    ]);
    let d = phi_correlation(&diagonal, rule);
    check(d == Some(1.0), format!("diagonal table gives {d:?}"))?;
    let independent = corpus_from_lines(&[
        "1\tkoi_hi pray_en karo_hi",
        "1\tgood_en morning_en",
        "0\tbas_hi party_en karo_hi",
        "0\tkya_hi baat_hi",
    ]);
    let i = phi_correlation(&independent, rule);
    check(
        i == Some(0.0),
        format!("independent table gives {i:?} ({:?})", contingency(&independent, rule)),
    )?;
    Ok(format!("1000 corpora, max deviation {worst:e}"))
}

fn switching_direction() -> Outcome {
    let start = Instant::now();
    let corpus = switching_corpus(&SyntheticConfig::default());
    let report = ablate_switching(&corpus, &PipelineConfig::default(), 10, 42).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let base = report.without_switching.mean_macro_f1;
    let with = report.with_switching.mean_macro_f1;
    let detail = format!(
        "without {base:.4}, with {with:.4}, delta {:.4}, {elapsed:.1?}",
        report.delta
    );
    check(report.delta >= 0.10, format!("delta below 0.10: {detail}"))?;
    check(
        (base - 0.5).abs() <= 0.07,
        format!("baseline outside 0.5 +/- 0.07: {detail}"),
    )?;
    within(elapsed, Duration::from_secs(60))?;
    Ok(detail)
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dim = 8;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..40 {
        let mut pairs = Vec::new();
        for j in 0..dim {
            if rng.gen_bool(0.5) {
                pairs.push((j, rng.gen_range(-2.0..2.0)));
            }
        }
        xs.push(SparseVector::from_pairs(dim, pairs));
        ys.push(Label::from_bool(i % 2 == 0));
    }
    let objective = Objective::new(&xs, &ys, 0.01).map_err(|e| e.to_string())?;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let b: f64 = rng.gen_range(-1.0..1.0);
        let (_, grad, grad_b) = objective.loss_and_gradient(&w, b);
        let mut numeric = Vec::with_capacity(dim + 1);
        for i in 0..dim {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[i] += h;
            down[i] -= h;
            numeric.push((objective.loss(&up, b) - objective.loss(&down, b)) / (2.0 * h));
        }
        numeric.push((objective.loss(&w, b + h) - objective.loss(&w, b - h)) / (2.0 * h));
        let analytic: Vec<f64> = grad.iter().copied().chain([grad_b]).collect();
        let diff = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| (a - n).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-8);
        worst = worst.max(diff / scale);
    }
    check(worst < 1e-4, format!("relative error {worst:e}"))?;
    Ok(format!("100 points, max relative error {worst:e}"))
}

fn subsampling_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..200 {
        let n = rng.gen_range(1..150);
        let corpus = random_corpus(&mut rng, n, 6);
        // Fixed scorer straddling tau.
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0 * DEFAULT_TAU)).collect();
        let scorer = |u: &LabeledUtterance| scores[u.id];
        let kept = subsample_negatives(&corpus, &scorer, DEFAULT_TAU).map_err(|e| e.to_string())?;
        let kept_ids: Vec<usize> = kept.iter().map(|u| u.id).collect();
        let positives: Vec<usize> = corpus
            .iter()
            .filter(|u| u.label().is_positive())
            .map(|u| u.id)
            .collect();
        check(
            positives.iter().all(|id| kept_ids.contains(id)) && kept.positives() == corpus.positives(),
            format!("case {case}: a positive was removed"),
        )?;
        for u in &corpus {
            let removed = !kept_ids.contains(&u.id);
            let expected = !u.label().is_positive() && scores[u.id] < DEFAULT_TAU;
            check(
                removed == expected,
                format!(
                    "case {case}: utterance {} wrongly {}",
                    u.id,
                    if removed { "removed" } else { "kept" }
                ),
            )?;
        }
        let again = subsample_negatives(&kept, &scorer, DEFAULT_TAU).map_err(|e| e.to_string())?;
        check(again == kept, format!("case {case}: not idempotent"))?;
    }
    Ok(format!("200 corpora, tau {DEFAULT_TAU}"))
}

fn macro_f1_hand_cases() -> Outcome {
    use Label::{Negative as N, Positive as P};
    let balanced = macro_f1(&[P, P, N, N], &[P, N, P, N]).map_err(|e| e.to_string())?;
    check(
        balanced.macro_f1 == 0.5,
        format!("confusion (1,1,1,1) gives {}", balanced.macro_f1),
    )?;
    let all_pos = macro_f1(&[P, P], &[P, N]).map_err(|e| e.to_string())?;
    check(
        all_pos.macro_f1 == 1.0 / 3.0,
        format!("all-positive gives {}", all_pos.macro_f1),
    )?;
    Ok("0.5 and 1/3".into())
}

fn camel_case_segmentation() -> Outcome {
    let parts = segment_camel_case("#AadabArzHai".trim_start_matches('#'));
    check(parts == ["Aadab", "Arz", "Hai"], format!("segments {parts:?}"))?;
    let normalized: Vec<String> = normalize(&[("#AadabArzHai", LangTag::Hi)], &PreprocessConfig::default())
        .iter()
        .map(|t| t.surface().to_string())
        .collect();
    check(
        normalized == ["hashtag", "aadab", "arz", "hai"],
        format!("normalized hashtag {normalized:?}"),
    )?;
    Ok(format!("{parts:?}"))
}

fn chi_squared() -> Outcome {
    let corpus = corpus_from_lines(&[
        "1\tgood_en the_en",
        "1\tgood_en day_en",
        "0\tbad_en the_en",
        "0\tbad_en day_en",
    ]);
    let spec = FeatureSpec {
        kinds: [FeatureKind::Bow].into_iter().collect(),
        ..Default::default()
    };
    let vocab = build_vocabulary(&corpus, &spec, 1).map_err(|e| e.to_string())?;
    let associated = chi2_score(&FeatureKey::new(FeatureKind::Bow, "good"), &corpus, &vocab);
    let independent = chi2_score(&FeatureKey::new(FeatureKind::Bow, "the"), &corpus, &vocab);
    check(associated == 4.0, format!("associated feature scores {associated}"))?;
    check(independent == 0.0, format!("independent feature scores {independent}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for case in 0..200 {
        let n = rng.gen_range(2..40);
        let corpus = random_corpus(&mut rng, n, 8);
        let vocab = build_vocabulary(&corpus, &spec, 1).map_err(|e| e.to_string())?;
        let k = rng.gen_range(1..vocab.len() + 10);
        let scores = chi2_scores(&corpus, &vocab);
        let selected = chi2_select(&corpus, &vocab, k).map_err(|e| e.to_string())?;
        check(
            selected.len() == k.min(vocab.len()),
            format!("case {case}: selected {} of {}", selected.len(), vocab.len()),
        )?;
        let chosen = |key: &FeatureKey| selected.index_of(key).is_some();
        let min_in = vocab
            .keys()
            .iter()
            .zip(&scores)
            .filter(|(key, _)| chosen(key))
            .map(|(_, s)| *s)
            .fold(f64::INFINITY, f64::min);
        let max_out = vocab
            .keys()
            .iter()
            .zip(&scores)
            .filter(|(key, _)| !chosen(key))
            .map(|(_, s)| *s)
            .fold(f64::NEG_INFINITY, f64::max);
        check(
            min_in >= max_out,
            format!("case {case}: rejected feature scores {max_out} > {min_in}"),
        )?;
    }
    Ok("4.0 / 0.0, top-k on 200 corpora".into())
}

fn cv_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = switching_corpus(&SyntheticConfig {
        utterances: 400,
        ..Default::default()
    });
    let path = dir.path().join("synthetic.tsv");
    let mut buf = Vec::new();
    corpus.write_to(&mut buf).map_err(|e| e.to_string())?;
    std::fs::write(&path, buf).map_err(|e| e.to_string())?;
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_codemix"))
            .args(["--seed", "17", "--format", "json", "cv", "--ablate-switching"])
            .arg(&path)
            .env_remove("CODEMIX_CONFIG")
            .env("RUST_LOG", "error")
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    check(
        a.status.success() && b.status.success(),
        String::from_utf8_lossy(&a.stderr).into_owned(),
    )?;
    check(
        !a.stdout.is_empty() && a.stdout == b.stdout,
        "reports differ between runs",
    )?;
    Ok(format!("{} identical bytes", a.stdout.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("golden worked example", golden_example),
        ("switching oracle equivalence", oracle_equivalence),
        ("phi correctness", phi_correctness),
        ("switching features improve macro-F1", switching_direction),
        ("logistic gradient check", gradient_check),
        ("sub-sampling invariants", subsampling_invariants),
        ("macro-F1 hand cases", macro_f1_hand_cases),
        ("camel-case hashtag segmentation", camel_case_segmentation),
        ("chi-squared scores and top-k", chi_squared),
        ("cv determinism", cv_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
