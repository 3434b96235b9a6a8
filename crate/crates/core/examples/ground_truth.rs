//! Build a model by hand, sample its dataset and read off exact contributions.
//!
//! cargo run --example ground_truth

use xfid::{explain_ground_truth, sample_dataset, AdditiveModel, BinaryOp, Effect, Expr, UnaryOp};

fn main() {
    // F(x) = 2 x0 + sin(x1) + x2 x3, with x4 unused
    let two_x0 = Expr::binary(BinaryOp::Mul, Expr::Const(2.0), Expr::leaf(0));
    let effects = vec![
        Effect::new(two_x0).unwrap(),
        Effect::new(Expr::unary(UnaryOp::Sin, Expr::leaf(1))).unwrap(),
        Effect::new(Expr::binary(BinaryOp::Mul, Expr::leaf(2), Expr::leaf(3))).unwrap(),
    ];
    let model = AdditiveModel::new(5, effects).unwrap();
    for e in model.effects() {
        println!("{:?}: {}", e.features(), e.expr());
    }
    println!("{}", model.to_json());

    let data = sample_dataset(model.d(), 1);
    let gt = explain_ground_truth(&model, &data).unwrap();
    println!("n = {}, dummy features {:?}", data.n(), model.dummy_features());
    println!("E[C_j] = {:?}", gt.expected);
    for s in 0..3 {
        let x = data.row(s);
        println!("x = {x:.3?}\n  C = {:.4?}  sum = {:.6}  F = {:.6}", gt.at(s).to_vec(), gt.total(s), model.eval(&x));
    }
}
