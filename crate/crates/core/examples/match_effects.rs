//! Effect alignment and MaIoU on a few hand-picked cases.
//!
//! cargo run --example match_effects

use xfid::match_effects;

fn show(label: &str, model: &[Vec<usize>], explainer: &[Vec<usize>]) {
    let m = match_effects(model, explainer);
    println!("{label}: MaIoU {:.4}", m.maiou);
    for g in &m.groups {
        let lhs: Vec<_> = g.model.iter().map(|&j| &model[j]).collect();
        let rhs: Vec<_> = g.explainer.iter().map(|&k| &explainer[k]).collect();
        println!("  {lhs:?} <-> {rhs:?}");
    }
}

fn main() {
    let singles: Vec<Vec<usize>> = (0..4).map(|i| vec![i]).collect();
    show("exact structure", &singles, &singles);
    show("pairwise truth, main-effect explainer", &[vec![0], vec![1, 2], vec![3]], &singles);
    // One effect over every feature swallows everything into one group.
    show("single all-feature effect", &singles, &[vec![0, 1, 2, 3]]);
    show("missed effect", &[vec![0], vec![1]], &[vec![0]]);
}
