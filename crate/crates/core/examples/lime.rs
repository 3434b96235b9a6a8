//! A local linear surrogate, mapped back to raw-feature contributions.
//!
//! cargo run --example lime

use xfid::equivalence::lime_unnormalize;
use xfid::explain::{explain_lime, LimeConfig};
use xfid::{sample_dataset, AdditiveModel, BinaryOp, Effect, Expr, UnaryOp};

fn main() {
    let model = AdditiveModel::new(
        3,
        vec![
            Effect::new(Expr::leaf(0)).unwrap(),
            Effect::new(Expr::binary(BinaryOp::Mul, Expr::leaf(1), Expr::leaf(1))).unwrap(),
            Effect::new(Expr::unary(UnaryOp::Tanh, Expr::leaf(2))).unwrap(),
        ],
    )
    .unwrap();
    let data = sample_dataset(3, 3);
    let x = data.row(0);
    for ridge in [1.0, 1e-6] {
        let cfg = LimeConfig { ridge, ..LimeConfig::default() };
        let e = explain_lime(&model, &data, &x, &cfg, 11).unwrap();
        let (t0, t) = lime_unnormalize(e.intercept, &e.coef, &e.mu, &e.sigma);
        let contrib: Vec<f64> = x.iter().zip(&t).map(|(xi, ti)| xi * ti).collect();
        println!("ridge {ridge:e}: z-coef {:.4?}", e.coef);
        println!("  raw intercept {t0:.4}, contributions {contrib:.4?}, dropped {}", e.dropped);
    }
    println!("x = {x:.4?}");
}
