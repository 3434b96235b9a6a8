//! Explain a generated model with all three explainers, correct the raw
//! outputs onto the contribution scale and score them.
//!
//! cargo run --release --example equivalence_metrics

use xfid::equivalence::adjust;
use xfid::explain::Deadline;
use xfid::harness::choose_samples;
use xfid::{explain_batch, explain_ground_truth, sample_dataset, score_explanation};
use xfid::{ExplainerId, ExplainerSettings, GenParams};

fn main() {
    let params = GenParams { d: 5, n_dummy: 1, pct_nonlinear: 0.5, pct_interact: 0.25, order_interact: 2, seed: 21 };
    let data = sample_dataset(params.d, 22);
    let model = xfid::model_gen::generate_model_with(&params, Some(data.x()), Default::default()).unwrap();
    let gt = explain_ground_truth(&model, &data).unwrap();
    let samples = choose_samples(data.n(), 40, 23);
    let outputs: Vec<f64> = samples.iter().map(|&s| gt.total(s)).collect();
    println!("{}", model.to_json());

    for id in ExplainerId::ALL {
        let expl = explain_batch(id, &model, &data, &samples, &ExplainerSettings::default(), 24, Deadline::none())
            .expect("explainable");
        let adjusted = adjust(&expl, &data).unwrap();
        let s = score_explanation(&gt, &adjusted, &outputs, 1e-8);
        println!(
            "{id:5} maiou {:.3}  cosine {:.4}  euclidean {:.4}  nrmse {:?}  rmse {:.4}",
            s.maiou, s.mean_cosine, s.mean_euclidean, s.mean_nrmse, s.explainer_rmse
        );
    }
}
