//! Exact and sampled KernelSHAP against a k-means background.
//!
//! cargo run --release --example kernel_shap

use xfid::explain::{background_for, explain_kernelshap, Deadline, ShapConfig};
use xfid::{generate_model, sample_dataset, GenParams};

fn main() {
    let params = GenParams { d: 14, n_dummy: 2, pct_nonlinear: 0.5, pct_interact: 0.3, order_interact: 2, seed: 3 };
    let model = generate_model(&params).unwrap();
    let data = sample_dataset(params.d, 4);
    let background = background_for(&data, 100, 0);
    let x = data.row(5);

    let exact = ShapConfig { force_exact: true, ..ShapConfig::default() };
    let sampled = ShapConfig::default();
    println!("default mode for d = {}: {:?}", params.d, sampled.mode(params.d));
    for (name, cfg) in [("exact", &exact), ("sampled", &sampled)] {
        let e = explain_kernelshap(&model, &x, &background, cfg, 9, Deadline::none()).unwrap();
        let gap = e.phi.iter().sum::<f64>() - (e.full_value - e.base_value);
        println!("{name:8} coalitions {:6}  efficiency gap {gap:.1e}", e.coalitions);
        println!("         phi {:.3?}", e.phi);
    }
    println!("dummy features {:?}", model.dummy_features());
}
