//! Switching-feature ablation on the default synthetic corpus.

use codemix::pipeline::{ablate_switching, PipelineConfig};
use codemix::synth::{switching_corpus, SyntheticConfig};

fn main() {
    let corpus = switching_corpus(&SyntheticConfig::default());
    let t = std::time::Instant::now();
    let r = ablate_switching(&corpus, &PipelineConfig::default(), 10, 42).unwrap();
    println!(
        "without {:.4} with {:.4} delta {:.4} ({:?})",
        r.without_switching.mean_macro_f1,
        r.with_switching.mean_macro_f1,
        r.delta,
        t.elapsed()
    );
}
