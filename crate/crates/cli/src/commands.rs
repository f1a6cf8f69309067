use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use codemix::model::{subsample_negatives, EvalReport, LinearModel};
use codemix::pipeline::{ablate_switching, cross_validate, CvReport, FittedPipeline, PipelineConfig};
use codemix::preprocess::{normalize_corpus, PreprocessConfig};
use codemix::stats::{render_tsv, summarize};
use codemix::switching::{has_embedding_property, switching_features, EmbeddingRule};
use codemix::textfeat::{vector_dim, IndicativeLexicon, Vocabulary};
use codemix::{load_corpus, LabeledCorpus};
use serde::{Deserialize, Serialize};

use crate::config::{self, FileConfig, Format};
use crate::output::{emit, write_atomically};
use crate::{Cli, Command};

const SIDECAR_VERSION: u32 = 1;

pub fn run(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let common = &cli.common;
    let preprocess = config::preprocess(common, &file);
    let seed = config::seed(common, &file);
    match cli.command {
        Command::Stats { corpora, output } => {
            let rule = config::embedding_rule(common, &file);
            let mut summaries = Vec::with_capacity(corpora.len());
            for path in &corpora {
                let (_, corpus) = load(path, preprocess.as_ref())?;
                summaries.push(summarize(&corpus, rule));
            }
            let text = match config::format(common, &file, Format::Tsv) {
                Format::Tsv => render_tsv(&summaries),
                Format::Json => json_line(&summaries)?,
            };
            emit(output.as_deref(), text.as_bytes())
        }
        Command::Features { corpus, output } => {
            let rule = config::embedding_rule(common, &file);
            let (_, corpus) = load(&corpus, preprocess.as_ref())?;
            let text = features_text(&corpus, rule, config::format(common, &file, Format::Json))?;
            emit(output.as_deref(), text.as_bytes())
        }
        Command::Train {
            corpus,
            model,
            export_vectors,
            pipeline,
        } => {
            let cfg = config::pipeline(&pipeline, common, &file)?;
            let (_, corpus) = load(&corpus, preprocess.as_ref())?;
            let fitted = FittedPipeline::fit(&corpus, &cfg)?;
            save_fitted(&model, &fitted, preprocess.as_ref())?;
            if let Some(path) = export_vectors {
                let mut text = String::new();
                for u in &corpus {
                    let x = fitted.vectorize(u.tokens());
                    let _ = writeln!(text, "{} {}", u.label().as_digit(), x.to_sparse_text());
                }
                write_atomically(&path, text.as_bytes())?;
            }
            Ok(())
        }
        Command::Eval { corpus, model, output } => {
            let (fitted, saved_preprocess) = load_fitted(&model)?;
            let (_, corpus) = load(&corpus, saved_preprocess.as_ref())?;
            let report = fitted.evaluate(&corpus)?;
            let text = match config::format(common, &file, Format::Json) {
                Format::Json => json_line(&report)?,
                Format::Tsv => eval_tsv(&report),
            };
            emit(output.as_deref(), text.as_bytes())
        }
        Command::Cv {
            corpus,
            k,
            ablate_switching: ablate,
            output,
            pipeline,
        } => {
            let cfg = config::pipeline(&pipeline, common, &file)?;
            let k = config::folds(k, &file);
            let (_, corpus) = load(&corpus, preprocess.as_ref())?;
            let format = config::format(common, &file, Format::Tsv);
            let text = if ablate {
                let report = ablate_switching(&corpus, &cfg, k, seed)?;
                match format {
                    Format::Json => json_line(&report)?,
                    Format::Tsv => cv_tsv(&[&report.without_switching, &report.with_switching], Some(report.delta)),
                }
            } else {
                let report = cross_validate(&corpus, &cfg, k, seed)?;
                match format {
                    Format::Json => json_line(&report)?,
                    Format::Tsv => cv_tsv(&[&report], None),
                }
            };
            emit(output.as_deref(), text.as_bytes())
        }
        Command::Subsample {
            corpus,
            output,
            tau,
            model,
            pipeline,
        } => {
            let tau = config::tau(tau, &file);
            let (raw, kept_ids) = match model {
                Some(model) => {
                    let (fitted, saved_preprocess) = load_fitted(&model)?;
                    let (raw, corpus) = load(&corpus, saved_preprocess.as_ref())?;
                    (raw, kept(&subsample_negatives(&corpus, &fitted, tau)?))
                }
                None => {
                    let cfg = config::pipeline(&pipeline, common, &file)?;
                    let (raw, corpus) = load(&corpus, preprocess.as_ref())?;
                    let fitted = FittedPipeline::fit(&corpus, &cfg)?;
                    (raw, kept(&subsample_negatives(&corpus, &fitted, tau)?))
                }
            };
            let filtered = raw.filtered(|u| kept_ids.contains(&u.id));
            let mut buf = Vec::new();
            filtered.write_to(&mut buf)?;
            write_atomically(&output, &buf)
        }
    }
}

fn kept(corpus: &LabeledCorpus) -> HashSet<usize> {
    corpus.iter().map(|u| u.id).collect()
}

/// Loads a corpus and returns it both as read and after preprocessing.
fn load(path: &Path, preprocess: Option<&PreprocessConfig>) -> Result<(LabeledCorpus, LabeledCorpus)> {
    let task = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let raw = load_corpus(BufReader::new(f), &task).with_context(|| format!("reading {}", path.display()))?;
    let normalized = match preprocess {
        Some(cfg) => normalize_corpus(&raw, cfg).with_context(|| format!("preprocessing {}", path.display()))?,
        None => raw.clone(),
    };
    Ok((raw, normalized))
}

fn json_line<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct FeatureRow {
    id: usize,
    label: u8,
    q: bool,
    en_hi_switches: u32,
    hi_en_switches: u32,
    v: u32,
    fraction_en: f64,
    fraction_hi: f64,
    mean_hi_en: f64,
    stddev_hi_en: f64,
    mean_en_hi: f64,
    stddev_en_hi: f64,
}

fn features_text(corpus: &LabeledCorpus, rule: EmbeddingRule, format: Format) -> Result<String> {
    let mut out = String::new();
    if format == Format::Tsv {
        out.push_str("id\tlabel\tq\t");
        out.push_str(&codemix::switching::FEATURE_NAMES.join("\t"));
        out.push('\n');
    }
    for u in corpus {
        let p = switching_features(u.tokens());
        let row = FeatureRow {
            id: u.id,
            label: u.label().as_digit(),
            q: has_embedding_property(u.tokens(), rule),
            en_hi_switches: p.en_hi_switches,
            hi_en_switches: p.hi_en_switches,
            v: p.v,
            fraction_en: p.fraction_en,
            fraction_hi: p.fraction_hi,
            mean_hi_en: p.mean_hi_en,
            stddev_hi_en: p.stddev_hi_en,
            mean_en_hi: p.mean_en_hi,
            stddev_en_hi: p.stddev_en_hi,
        };
        match format {
            Format::Json => out.push_str(&json_line(&row)?),
            Format::Tsv => {
                let _ = write!(out, "{}\t{}\t{}", row.id, row.label, u8::from(row.q));
                for v in p.to_array() {
                    let _ = write!(out, "\t{v}");
                }
                out.push('\n');
            }
        }
    }
    Ok(out)
}

fn eval_tsv(r: &EvalReport) -> String {
    let c = &r.confusion;
    format!(
        "macro_f1\tf1_positive\tf1_negative\ttp\tfp\tfn\ttn\n{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
        r.macro_f1, r.f1_positive, r.f1_negative, c.tp, c.fp, c.fn_, c.tn
    )
}

fn run_label(r: &CvReport) -> &'static str {
    if r.with_switching {
        "with_switching"
    } else {
        "without_switching"
    }
}

/// One row per fold, one macro-F1 column per run, then the mean (and delta).
fn cv_tsv(runs: &[&CvReport], delta: Option<f64>) -> String {
    let mut out = String::from("fold\ttest_size");
    for r in runs {
        let _ = write!(out, "\t{}", run_label(r));
    }
    out.push('\n');
    for (i, fold) in runs[0].folds.iter().enumerate() {
        let _ = write!(out, "{}\t{}", fold.fold, fold.test_size);
        for r in runs {
            match (&r.folds[i].report, &r.folds[i].skipped) {
                (Some(rep), _) => {
                    let _ = write!(out, "\t{}", rep.macro_f1);
                }
                (None, Some(reason)) => {
                    let _ = write!(out, "\tskipped: {reason}");
                }
                (None, None) => out.push_str("\tNA"),
            }
        }
        out.push('\n');
    }
    out.push_str("mean\t");
    for r in runs {
        let _ = write!(out, "\t{}", r.mean_macro_f1);
    }
    out.push('\n');
    if let Some(d) = delta {
        let _ = writeln!(out, "delta\t\t{d}");
    }
    out
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    format_version: u32,
    preprocess: Option<PreprocessConfig>,
    config: PipelineConfig,
    vocabulary: Vocabulary,
    lexicons: Vec<IndicativeLexicon>,
}

fn sidecar_path(model: &Path) -> PathBuf {
    let mut name = model.as_os_str().to_owned();
    name.push(".pipeline.json");
    PathBuf::from(name)
}

fn save_fitted(model_path: &Path, fitted: &FittedPipeline, preprocess: Option<&PreprocessConfig>) -> Result<()> {
    let sidecar = Sidecar {
        format_version: SIDECAR_VERSION,
        preprocess: preprocess.cloned(),
        config: fitted.config.clone(),
        vocabulary: fitted.vocabulary.clone(),
        lexicons: fitted.lexicons.clone(),
    };
    let mut model_bytes = Vec::new();
    fitted.model.write_to(&mut model_bytes)?;
    let sidecar_bytes = serde_json::to_vec(&sidecar)?;
    let side = sidecar_path(model_path);
    write_atomically(&side, &sidecar_bytes)?;
    if let Err(e) = write_atomically(model_path, &model_bytes) {
        let _ = std::fs::remove_file(&side);
        return Err(e);
    }
    Ok(())
}

fn load_fitted(model_path: &Path) -> Result<(FittedPipeline, Option<PreprocessConfig>)> {
    let side = sidecar_path(model_path);
    let f = File::open(&side).with_context(|| format!("opening {}", side.display()))?;
    let sidecar: Sidecar =
        serde_json::from_reader(BufReader::new(f)).with_context(|| format!("reading {}", side.display()))?;
    if sidecar.format_version != SIDECAR_VERSION {
        bail!(
            "{}: unsupported sidecar version {}",
            side.display(),
            sidecar.format_version
        );
    }
    let dim = vector_dim(&sidecar.vocabulary, sidecar.config.with_switching);
    let f = File::open(model_path).with_context(|| format!("opening {}", model_path.display()))?;
    let model = LinearModel::read_from(BufReader::new(f), Some(dim))
        .with_context(|| format!("reading {}", model_path.display()))?;
    Ok((
        FittedPipeline {
            config: sidecar.config,
            vocabulary: sidecar.vocabulary,
            lexicons: sidecar.lexicons,
            model,
        },
        sidecar.preprocess,
    ))
}
