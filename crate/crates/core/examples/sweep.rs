//! A small sweep over interaction order, then its summary.
//!
//! cargo run --release --example sweep -- [out_dir]

use xfid::harness::report;
use xfid::model_gen::GridSelection;
use xfid::{run_sweep, ExperimentConfig};

fn main() {
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("xfid-sweep"));
    let cfg = ExperimentConfig {
        grid: GridSelection {
            d: vec![4],
            n_dummy_frac: vec![0.0],
            pct_nonlinear: vec![0.75],
            pct_interact: vec![0.5],
            order_interact: vec![1, 2, 3],
        },
        models_per_cell: 3,
        samples_per_model: 20,
        record_timing: false,
        ..ExperimentConfig::default()
    };
    let outcome = run_sweep(&cfg, &out).unwrap();
    println!("{} rows, {} reused, {}", outcome.records.len(), outcome.reused, outcome.results_path.display());
    let summary = report(&out, &out.join("summary.csv")).unwrap();
    for r in summary.iter().filter(|r| r.cell != "all") {
        println!("{:28} {:5} cosine {:.3}  maiou {:.3}", r.cell, r.explainer, r.mean_cosine, r.mean_maiou);
    }
}
