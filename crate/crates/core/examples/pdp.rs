//! Partial dependence curves and the local values read off them.
//!
//! cargo run --example pdp

use xfid::explain::{Deadline, PdCurves};
use xfid::{sample_dataset, AdditiveModel, Effect, Expr, UnaryOp};

fn main() {
    // Main effects only, so centered PD recovers each f_j up to a constant.
    let model = AdditiveModel::new(
        3,
        vec![
            Effect::new(Expr::unary(UnaryOp::Square, Expr::leaf(0))).unwrap(),
            Effect::new(Expr::unary(UnaryOp::Sin, Expr::leaf(1))).unwrap(),
            Effect::new(Expr::unary(UnaryOp::Exp, Expr::leaf(2))).unwrap(),
        ],
    )
    .unwrap();
    let data = sample_dataset(3, 2);
    let curves = PdCurves::compute(&model, &data, Deadline::none()).unwrap();
    let means = curves.dataset_means(&data);
    let x0 = data.x().column(0).to_vec();
    let mean_sq = x0.iter().map(|v| v * v).sum::<f64>() / x0.len() as f64;
    for v in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        let pd = curves.value(0, v) - means[0];
        println!("x0 = {v:5.2}  centered PD {pd:8.4}  centered x0^2 {:8.4}", v * v - mean_sq);
    }
    println!("grid points per feature: {}", curves.grid(0).len());
    println!("local PD at row 0: {:.4?}", curves.local(&data.row(0)));
}
