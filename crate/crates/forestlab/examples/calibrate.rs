use forestlab::diagnostics::{evaluate, permutation_importance, usage_statistics};
use forestlab::forest::{ArmSpec, ArmedForest, Forest, ForestParams};
use forestlab::rng::rng_from_seed;
use forestlab::sim::{simulate_model8, BetaChoice, Model8Params};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mode = args.get(1).map(|s| s.as_str()).unwrap_or("speed");
    match mode {
        "speed" => speed(),
        "usage" => usage_seeds(),
        _ => eprintln!("unknown mode"),
    }
}

fn speed() {
    let n = 10_000;
    let params = Model8Params::new(BetaChoice::ThreeQuarterAlpha);
    let train = simulate_model8(n, &params, &mut rng_from_seed(101)).unwrap();
    let test = simulate_model8(n, &params, &mut rng_from_seed(202)).unwrap();

    let t0 = Instant::now();
    let rf3 = Forest::fit(&train, &ForestParams::new(7).with_mtry(3)).unwrap();
    println!("rf3 fit: {:.1?}", t0.elapsed());
    let t0 = Instant::now();
    let m = evaluate(&rf3, &test);
    println!("rf3 eval: {:.1?} mse={:.4}", t0.elapsed(), m.mse);
    drop(rf3);

    let t0 = Instant::now();
    let armed = ArmedForest::fit(&train, ArmSpec::delta(0, 1), &ForestParams::new(7).with_mtry(3)).unwrap();
    println!("armed fit: {:.1?}", t0.elapsed());
    let t0 = Instant::now();
    let m = evaluate(&armed, &test);
    println!("armed eval: {:.1?} mse={:.4}", t0.elapsed(), m.mse);

    let t0 = Instant::now();
    let imp = permutation_importance(&armed, &test, 1000, 31).unwrap();
    println!("importance 1000 perms: {:.1?}", t0.elapsed());
    let order = imp.ranking();
    println!("ranking: {:?}", order.iter().map(|&j| format!("x{}", j + 1)).collect::<Vec<_>>());
    for v in &imp.variables {
        println!("  I[{}] = {:.2}", v.name, v.importance_pct);
    }
}

fn usage_seeds() {
    for beta in [BetaChoice::ThreeQuarterAlpha, BetaChoice::NegAlpha] {
        println!("=== {:?} ===", beta);
        let params = Model8Params::new(beta);
        for seed in [11u64, 22, 33] {
            let train = simulate_model8(10_000, &params, &mut rng_from_seed(seed)).unwrap();
            let full = Forest::fit(&train, &ForestParams::new(seed ^ 0xf00).with_mtry(10)).unwrap();
            // Depth statistics of the fitted trees.
            let mut max_depth = 0usize;
            let mut deep_joint_rows = 0u64;
            let mut joint_rows = 0u64;
            let mut total_rows = 0u64;
            for tree in &full.trees {
                // depth + involvement per leaf via walk
                let mut stack = vec![(tree.root as usize, 0usize, false, false)];
                while let Some((id, depth, sx1, sx2)) = stack.pop() {
                    let n = &tree.nodes[id];
                    if n.is_leaf() {
                        max_depth = max_depth.max(depth);
                        total_rows += n.n_rows as u64;
                        if sx1 && sx2 {
                            joint_rows += n.n_rows as u64;
                            if depth > 30 { deep_joint_rows += n.n_rows as u64; }
                        }
                        continue;
                    }
                    let f = n.feature;
                    stack.push((n.left as usize, depth + 1, sx1 || f == 0, sx2 || f == 1));
                    stack.push((n.right as usize, depth + 1, sx1 || f == 0, sx2 || f == 1));
                }
            }
            let usage = usage_statistics(&full.trees, &[0, 1], &train).unwrap();
            println!(
                "seed {seed}: mid={:.4} median_joint={:.4} data_frac={:.4} (beyond depth30: {:.4}) max_depth={max_depth} mean_any={:?}",
                usage.mid_construction_share().unwrap(),
                usage.median_joint(),
                usage.data_fraction_joint,
                deep_joint_rows as f64 / total_rows as f64,
                usage.mean_any,
            );
        }
    }
}
