//! Draw random additive models at a few grid points and print them.
//!
//! cargo run --example generate_model

use xfid::{generate_model, GenParams};

fn main() {
    for (order, pi) in [(1, 0.0), (2, 0.5), (3, 0.5)] {
        let params = GenParams { d: 6, n_dummy: 1, pct_nonlinear: 0.75, pct_interact: pi, order_interact: order, seed: 7 };
        let model = generate_model(&params).expect("valid parameters");
        println!("order {order}: {} effects, dummies {:?}", model.m(), model.dummy_features());
        for e in model.effects() {
            println!("  {:?}  {}", e.features(), e.expr().to_json());
        }
    }
}
