//! End-to-end acceptance checks. Runs as a plain binary so every check prints
//! its own PASS/FAIL line; the process fails if any check fails.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xfid::alignment::components;
use xfid::equivalence::adjust;
use xfid::explain::{background_for, explain_kernelshap, Background, Deadline, FnModel, ShapConfig};
use xfid::harness::choose_samples;
use xfid::metrics::{aggregate, cosine_distance, euclidean_distance, nrmse, spearman_rho};
use xfid::model_gen::{generate_model_with, GenOptions};
use xfid::{
    explain_batch, explain_ground_truth, match_effects, run_sweep, sample_dataset, score_explanation, BlackBox,
    Dataset, ExperimentConfig, ExplainerId, ExplainerSettings, GenParams, GridSelection, MatchGroup, Status,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Draws the dataset, then a model valid on it. Generation failures are
/// returned so callers can count them.
fn model_and_data(params: &GenParams, data_seed: u64) -> Option<(xfid::AdditiveModel, Dataset)> {
    let data = sample_dataset(params.d, data_seed);
    let model = generate_model_with(params, Some(data.x()), GenOptions::default()).ok()?;
    Some((model, data))
}

fn additivity() -> Outcome {
    let grid = GridSelection {
        d: vec![2, 4, 7, 16],
        n_dummy_frac: vec![0.0, 0.475],
        pct_nonlinear: vec![0.0, 0.75, 1.5],
        pct_interact: vec![0.5],
        order_interact: vec![1, 2, 3],
    };
    let cells = grid.points();
    let mut worst = 0.0f64;
    let mut failed = 0;
    let mut rows = 0usize;
    for i in 0..200 {
        let cell = cells[i % cells.len()];
        let Some((model, data)) = model_and_data(&cell.params(i as u64), 10_000 + i as u64) else {
            failed += 1;
            continue;
        };
        let gt = explain_ground_truth(&model, &data).expect("validated model");
        for s in 0..data.n() {
            worst = worst.max((gt.total(s) - model.eval(&data.row(s))).abs());
        }
        rows += data.n();
    }
    check(
        worst == 0.0 && failed == 0,
        format!("200 models, {rows} rows, max |sum C - F| = {worst:e}, generation failures {failed}"),
    )
}

/// Shapley values by averaging marginal contributions over every ordering,
/// with its own value function.
fn permutation_shapley<M: BlackBox>(model: &M, x: &[f64], bg: &Background) -> Vec<f64> {
    let d = x.len();
    let value = |present: &[bool]| -> f64 {
        let mut z = vec![0.0; d];
        let mut total = 0.0;
        for (row, w) in bg.rows().rows().into_iter().zip(bg.weights()) {
            for i in 0..d {
                z[i] = if present[i] { x[i] } else { row[i] };
            }
            total += w * model.predict(&z);
        }
        total
    };
    let mut perm: Vec<usize> = (0..d).collect();
    let mut phi = vec![0.0; d];
    let mut count = 0usize;
    // Heap's algorithm
    let mut c = vec![0usize; d];
    let visit = |perm: &[usize], phi: &mut [f64]| {
        let mut present = vec![false; d];
        let mut prev = value(&present);
        for &i in perm {
            present[i] = true;
            let next = value(&present);
            phi[i] += next - prev;
            prev = next;
        }
    };
    visit(&perm, &mut phi);
    count += 1;
    let mut i = 0;
    while i < d {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm, &mut phi);
            count += 1;
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    phi.iter().map(|p| p / count as f64).collect()
}

fn linear_params(i: u64, max_d: usize) -> GenParams {
    let d = 2 + (i as usize % (max_d - 1));
    GenParams {
        d,
        n_dummy: (i as usize / 3) % d.min(3),
        pct_nonlinear: 0.0,
        pct_interact: 0.0,
        order_interact: 1,
        seed: i,
    }
}

fn exact_shapley() -> Outcome {
    let exact = ShapConfig { force_exact: true, ..ShapConfig::default() };
    let settings = ExplainerSettings { shap: exact.clone(), ..ExplainerSettings::default() };
    let mut oracle_err = 0.0f64;
    let mut worst_cos = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..20u64 {
        let params = linear_params(i, 6);
        let (model, data) = model_and_data(&params, 20_000 + i).expect("linear models are always valid");
        let bg = background_for(&data, 100, i);
        // An affine black box with arbitrary coefficients goes through the same check.
        let coef: Vec<f64> = (0..params.d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let affine = FnModel::new(params.d, |x: &[f64]| 0.5 + x.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>());
        for s in [0, 1, 2] {
            let x = data.row(s);
            let shap = explain_kernelshap(&model, &x, &bg, &exact, s as u64, Deadline::none()).unwrap();
            let oracle = permutation_shapley(&model, &x, &bg);
            let shap2 = explain_kernelshap(&affine, &x, &bg, &exact, s as u64, Deadline::none()).unwrap();
            let oracle2 = permutation_shapley(&affine, &x, &bg);
            for (a, b) in shap.phi.iter().zip(&oracle).chain(shap2.phi.iter().zip(&oracle2)) {
                oracle_err = oracle_err.max((a - b).abs());
            }
        }
        let gt = explain_ground_truth(&model, &data).unwrap();
        let samples = choose_samples(data.n(), 50, i);
        let expl = explain_batch(ExplainerId::Shap, &model, &data, &samples, &settings, i, Deadline::none()).unwrap();
        let outputs: Vec<f64> = samples.iter().map(|&s| gt.total(s)).collect();
        let scores = score_explanation(&gt, &adjust(&expl, &data).unwrap(), &outputs, 1e-8);
        worst_cos = worst_cos.max(scores.mean_cosine);
    }
    check(
        oracle_err <= 1e-8 && worst_cos <= 1e-6,
        format!("max |phi - permutation oracle| = {oracle_err:.2e}, worst mean cosine = {worst_cos:.2e}"),
    )
}

fn lime_linear() -> Outcome {
    let mut settings = ExplainerSettings::default();
    settings.lime.ridge = 1e-6;
    settings.lime.num_samples = 5000;
    let mut cosines = Vec::new();
    for i in 0..20u64 {
        let params = linear_params(100 + i, 8);
        let (model, data) = model_and_data(&params, 30_000 + i).expect("linear models are always valid");
        let gt = explain_ground_truth(&model, &data).unwrap();
        let samples = choose_samples(data.n(), 50, i);
        let expl = explain_batch(ExplainerId::Lime, &model, &data, &samples, &settings, i, Deadline::none()).unwrap();
        let outputs: Vec<f64> = samples.iter().map(|&s| gt.total(s)).collect();
        cosines.push(score_explanation(&gt, &adjust(&expl, &data).unwrap(), &outputs, 1e-8).mean_cosine);
    }
    let mean = cosines.iter().sum::<f64>() / cosines.len() as f64;
    let worst = cosines.iter().cloned().fold(0.0, f64::max);
    check(mean <= 1e-3, format!("mean cosine {mean:.2e} over 20 models (worst model {worst:.2e})"))
}

fn pdp_main_effects() -> Outcome {
    let dims = [2, 4, 7];
    let nonlinearity = [0.375, 0.75, 1.125, 1.5];
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let mut effects = 0;
    for i in 0..20usize {
        let params = GenParams {
            d: dims[i % dims.len()],
            n_dummy: 0,
            pct_nonlinear: nonlinearity[i % nonlinearity.len()],
            pct_interact: 0.0,
            order_interact: 1,
            seed: i as u64,
        };
        let (model, data) = model_and_data(&params, 1000 + i as u64).expect("main-effect models are valid");
        let gt = explain_ground_truth(&model, &data).unwrap();
        let samples: Vec<usize> = (0..data.n()).collect();
        let expl = explain_batch(
            ExplainerId::Pdp,
            &model,
            &data,
            &samples,
            &ExplainerSettings::default(),
            0,
            Deadline::none(),
        )
        .unwrap();
        let outputs: Vec<f64> = samples.iter().map(|&s| gt.total(s)).collect();
        let scores = score_explanation(&gt, &adjust(&expl, &data).unwrap(), &outputs, 1e-8);
        for (group, e) in scores.matching.groups.iter().zip(&scores.per_group_nrmse) {
            effects += 1;
            let e = e.unwrap_or(f64::INFINITY);
            worst = worst.max(e);
            if e > 0.05 {
                let j = group.model[0];
                failures.push(format!("model {i} {}: {e:.3}", model.effects()[j].expr().to_json()));
            }
        }
    }
    let mut detail = format!("{effects} effects, worst NRMSE {worst:.3}");
    if !failures.is_empty() {
        detail += &format!("; above 0.05: {}", failures.join(", "));
    }
    check(failures.is_empty(), detail)
}

/// Connected components by repeated relaxation over the overlap matrix.
fn oracle_components(model: &[Vec<usize>], expl: &[Vec<usize>]) -> Vec<MatchGroup> {
    let m = model.len();
    let n = m + expl.len();
    let overlaps = |j: usize, k: usize| model[j].iter().any(|f| expl[k].contains(f));
    let mut label: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for j in 0..m {
            for k in 0..expl.len() {
                if overlaps(j, k) {
                    let lo = label[j].min(label[m + k]);
                    if label[j] != lo || label[m + k] != lo {
                        label[j] = lo;
                        label[m + k] = lo;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut groups: BTreeMap<usize, MatchGroup> = BTreeMap::new();
    for (v, &l) in label.iter().enumerate() {
        let g = groups.entry(l).or_insert(MatchGroup { model: vec![], explainer: vec![] });
        if v < m {
            g.model.push(v);
        } else {
            g.explainer.push(v - m);
        }
    }
    let mut out: Vec<MatchGroup> = groups.into_values().collect();
    out.sort();
    out
}

fn set_of(v: &[usize]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort();
    s.dedup();
    s
}

/// Splitting as stated: a component whose every vertex has an identical
/// partner across the graph breaks into one group per distinct feature set.
fn oracle_groups(model: &[Vec<usize>], expl: &[Vec<usize>]) -> Vec<MatchGroup> {
    let mut out = Vec::new();
    for c in oracle_components(model, expl) {
        let ms: Vec<Vec<usize>> = c.model.iter().map(|&j| set_of(&model[j])).collect();
        let es: Vec<Vec<usize>> = c.explainer.iter().map(|&k| set_of(&expl[k])).collect();
        let paired = !ms.is_empty() && !es.is_empty() && ms.iter().all(|s| es.contains(s)) && es.iter().all(|s| ms.contains(s));
        if !paired {
            out.push(c);
            continue;
        }
        let mut distinct = ms.clone();
        distinct.sort();
        distinct.dedup();
        for s in distinct {
            out.push(MatchGroup {
                model: c.model.iter().zip(&ms).filter(|(_, t)| **t == s).map(|(j, _)| *j).collect(),
                explainer: c.explainer.iter().zip(&es).filter(|(_, t)| **t == s).map(|(k, _)| *k).collect(),
            });
        }
    }
    out.sort();
    out
}

fn oracle_maiou(groups: &[MatchGroup], model: &[Vec<usize>], expl: &[Vec<usize>]) -> f64 {
    if groups.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for g in groups {
        let mut ious = Vec::new();
        for &j in &g.model {
            for &k in &g.explainer {
                let a = set_of(&model[j]);
                let b = set_of(&expl[k]);
                let inter = a.iter().filter(|f| b.contains(f)).count();
                if inter > 0 {
                    let union = a.len() + b.len() - inter;
                    ious.push(inter as f64 / union as f64);
                }
            }
        }
        if !ious.is_empty() {
            total += ious.iter().sum::<f64>() / ious.len() as f64;
        }
    }
    total / groups.len() as f64
}

fn random_effects(rng: &mut ChaCha8Rng, d: usize, count: usize) -> Vec<Vec<usize>> {
    (0..count)
        .map(|_| {
            let size = rng.random_range(1..=d.min(3));
            let mut s: Vec<usize> = (0..size).map(|_| rng.random_range(0..d)).collect();
            s.sort();
            s.dedup();
            s
        })
        .collect()
}

fn match_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut partition_mismatch = 0;
    let mut split_mismatch = 0;
    let mut maiou_err = 0.0f64;
    for _ in 0..1000 {
        let d = rng.random_range(1..=8);
        let m = rng.random_range(0..=6);
        let mh = rng.random_range(0..=6);
        let model = random_effects(&mut rng, d, m);
        let expl = random_effects(&mut rng, d, mh);
        let mut pre = components(&model, &expl);
        pre.sort();
        if pre != oracle_components(&model, &expl) {
            partition_mismatch += 1;
        }
        let r = match_effects(&model, &expl);
        let mut groups = r.groups.clone();
        groups.sort();
        let expected = oracle_groups(&model, &expl);
        if groups != expected {
            split_mismatch += 1;
        }
        maiou_err = maiou_err.max((r.maiou - oracle_maiou(&expected, &model, &expl)).abs());
    }
    let mut exploit_ok = true;
    for d in 1..=16 {
        let singles: Vec<Vec<usize>> = (0..d).map(|i| vec![i]).collect();
        let all = vec![(0..d).collect::<Vec<_>>()];
        exploit_ok &= (match_effects(&singles, &all).maiou - 1.0 / d as f64).abs() < 1e-15;
    }
    check(
        partition_mismatch == 0 && split_mismatch == 0 && maiou_err <= 1e-12 && exploit_ok,
        format!(
            "1000 instances: component mismatches {partition_mismatch}, split mismatches {split_mismatch}, \
             max MaIoU error {maiou_err:.1e}, all-feature exploit gives 1/d: {exploit_ok}"
        ),
    )
}

fn trend_config() -> ExperimentConfig {
    ExperimentConfig {
        grid: GridSelection {
            d: vec![4, 16],
            n_dummy_frac: vec![0.0],
            pct_nonlinear: vec![0.75],
            pct_interact: vec![0.5],
            order_interact: vec![1, 2, 3],
        },
        models_per_cell: 10,
        samples_per_model: 50,
        record_timing: false,
        ..ExperimentConfig::default()
    }
}

struct TrendRun {
    /// (explainer, d, order) -> mean cosine over successful rows
    cells: BTreeMap<(String, usize, usize), f64>,
    grand: BTreeMap<String, f64>,
    failed: usize,
    bytes: Vec<u8>,
}

fn trend_sweep() -> TrendRun {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_sweep(&trend_config(), dir.path()).unwrap();
    let bytes = std::fs::read(&outcome.results_path).unwrap();
    let mut sums: BTreeMap<(String, usize, usize), (f64, usize)> = BTreeMap::new();
    let mut failed = 0;
    for r in &outcome.records {
        if r.status != Status::Ok {
            failed += 1;
            continue;
        }
        let e = sums.entry((r.explainer.clone(), r.d, r.order_interact)).or_default();
        e.0 += r.mean_cosine.unwrap();
        e.1 += 1;
    }
    let cells = sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect();
    let grand = aggregate(&outcome.records)
        .into_iter()
        .filter(|r| r.cell == "all")
        .map(|r| (r.explainer, r.mean_cosine))
        .collect();
    TrendRun { cells, grand, failed, bytes }
}

fn interaction_trend(run: &TrendRun) -> Outcome {
    let mut pass = true;
    let mut lines = Vec::new();
    for x in ExplainerId::ALL {
        for d in [4, 16] {
            let m: Vec<f64> = (1..=3).map(|o| run.cells[&(x.name().to_string(), d, o)]).collect();
            let ok = m[0] <= m[1] && m[1] <= m[2] && m[2] > m[0];
            pass &= ok;
            lines.push(format!("{x} d={d}: {:.3} {:.3} {:.3}{}", m[0], m[1], m[2], if ok { "" } else { " (not monotone)" }));
        }
    }
    check(pass, format!("mean cosine by order 1/2/3, {} failed tasks; {}", run.failed, lines.join("; ")))
}

fn shap_ranks_first(run: &TrendRun) -> Outcome {
    let shap = run.grand["shap"];
    let pass = run.grand.iter().all(|(x, &v)| x == "shap" || shap < v);
    let text: Vec<String> = run.grand.iter().map(|(x, v)| format!("{x} {v:.4}")).collect();
    check(pass, format!("grand-mean cosine: {}", text.join(", ")))
}

fn determinism(first: &TrendRun) -> Outcome {
    let second = trend_sweep();
    check(
        first.bytes == second.bytes,
        format!("two runs, results.csv {} and {} bytes, identical: {}", first.bytes.len(), second.bytes.len(), first.bytes == second.bytes),
    )
}

fn brute_spearman(u: &[f64], w: &[f64]) -> f64 {
    // Ranks without ties by counting, then the Pearson formula on ranks.
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|a| {
                let below = v.iter().filter(|b| *b < a).count() as f64;
                let equal = v.iter().filter(|b| *b == a).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (ru, rw) = (rank(u), rank(w));
    let n = u.len() as f64;
    let (mu, mw) = (ru.iter().sum::<f64>() / n, rw.iter().sum::<f64>() / n);
    let cov: f64 = ru.iter().zip(&rw).map(|(a, b)| (a - mu) * (b - mw)).sum();
    let su: f64 = ru.iter().map(|a| (a - mu).powi(2)).sum();
    let sw: f64 = rw.iter().map(|b| (b - mw).powi(2)).sum();
    cov / (su * sw).sqrt()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

fn metric_oracles() -> Outcome {
    let mut spearman_err = 0.0f64;
    let mut checked = 0;
    for k in 2..=5 {
        let base: Vec<f64> = (0..k).map(|i| i as f64 * 1.5 - 2.0).collect();
        for p in permutations(k) {
            let w: Vec<f64> = p.iter().map(|&i| base[i]).collect();
            // the closed form for distinct ranks, 1 - 6 sum d^2 / (k (k^2 - 1))
            let d2: f64 = p.iter().enumerate().map(|(i, &j)| ((i as f64) - (j as f64)).powi(2)).sum();
            let kf = k as f64;
            let closed = 1.0 - 6.0 * d2 / (kf * (kf * kf - 1.0));
            let rho = spearman_rho(&base, &w).unwrap();
            spearman_err = spearman_err.max((rho - closed).abs()).max((rho - brute_spearman(&base, &w)).abs());
            checked += 1;
        }
    }
    // ties
    let tied = [1.0, 2.0, 2.0, 3.0, 5.0];
    for p in permutations(5) {
        let w: Vec<f64> = p.iter().map(|&i| tied[i]).collect();
        if let Ok(rho) = spearman_rho(&tied, &w) {
            spearman_err = spearman_err.max((rho - brute_spearman(&tied, &w)).abs());
        }
    }
    let tables = [
        cosine_distance(&[1.0, 2.0], &[1.0, 2.0]) == 0.0,
        cosine_distance(&[1.0, 0.0], &[0.0, 1.0]) == 1.0,
        cosine_distance(&[1.0, 2.0], &[-1.0, -2.0]) == 2.0,
        cosine_distance(&[0.0, 0.0], &[0.0, 0.0]) == 0.0,
        euclidean_distance(&[0.0, 0.0], &[3.0, 4.0]) == 5.0,
        euclidean_distance(&[1.0, 2.0], &[1.0, 2.0]) == 0.0,
        nrmse(&[0.0, 1.0, 2.0, 3.0, 4.0], &[0.0, 1.0, 2.0, 3.0, 4.0]) == Ok(0.0),
        nrmse(&[0.0, 1.0, 2.0, 3.0, 4.0], &[2.0, 3.0, 4.0, 5.0, 6.0]) == Ok(1.0),
        nrmse(&[0.0, 10.0, 20.0, 30.0, 40.0], &[20.0, 30.0, 40.0, 50.0, 60.0]) == Ok(1.0),
    ];
    let tables_ok = tables.iter().all(|&t| t);
    check(
        spearman_err <= 1e-12 && tables_ok,
        format!("{checked} permutations, max Spearman error {spearman_err:.1e}, example tables exact: {tables_ok}"),
    )
}

fn main() {
    let mut all_pass = true;
    let mut report = |name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        all_pass &= o.pass;
        println!(
            "{} {name:<28} {:>7.1}s  {}",
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
    };
    report("ground-truth additivity", &mut additivity);
    report("exact Shapley recovery", &mut exact_shapley);
    report("LIME linear recovery", &mut lime_linear);
    report("PDP main-effect recovery", &mut pdp_main_effects);
    report("effect matching oracle", &mut match_oracle);
    let mut run = None;
    report("disagreement grows w/ order", &mut || {
        let r = trend_sweep();
        let o = interaction_trend(&r);
        run = Some(r);
        o
    });
    let run = run.expect("sweep ran");
    report("KernelSHAP ranks first", &mut || shap_ranks_first(&run));
    report("sweep determinism", &mut || determinism(&run));
    report("metric oracles", &mut metric_oracles);
    if !all_pass {
        eprintln!("acceptance: at least one check failed");
        std::process::exit(1);
    }
}
