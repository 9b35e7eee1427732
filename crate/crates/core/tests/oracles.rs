mod common;

use common::*;
use gpac::gpac::{objective_value, Solver};
use gpac::graph::{default_theta, expand_adjacency};
use gpac::metrics::{acc, ari, nmi};
use gpac::{FuzzyPartition, GpacConfig, HardPartition};
use rand::Rng;

fn small_config(c: usize, k: usize, n: usize, seed: u64) -> GpacConfig {
    GpacConfig {
        k,
        batch_size: n,
        seed,
        beta_max: 0.7,
        beta_ramp_epochs: 0,
        alpha: 0.8,
        m: 1.2,
        ..GpacConfig::new(c)
    }
}

#[test]
fn accelerated_scores_match_dense_formula() {
    let mut r = rng(11);
    for case in 0..8 {
        let n = r.random_range(20..90);
        let c = [2, 3, 5][case % 3];
        let k = r.random_range(2..7);
        let data = random_dataset(&mut r, n, 2);
        let cfg = small_config(c, k, n, case as u64);
        let theta = default_theta(n, c, k);
        let graphs = graphs_for(&data, k, theta);
        let adj = dense_adjacency(&graphs.knn, theta);
        let (p, v) = random_partitions(&mut r, n, c);
        let mut solver = Solver::from_state(&data, &cfg, graphs, p, v).unwrap();
        let in_batch = vec![true; n];
        let mut worst = 0.0f64;
        solver
            .run_epoch_observed(|view| {
                let (sp, sv) = dense_scores(view.probs, view.labels, c, &adj, &in_batch, view.sample, cfg.alpha, cfg.m);
                for l in 0..c {
                    worst = worst.max((sp[l] - view.scores.s_p[l]).abs());
                    worst = worst.max((sv[l] - view.scores.s_v[l]).abs());
                }
            })
            .unwrap();
        assert!(worst <= 1e-12, "case {case}: deviation {worst:e}");
    }
}

#[test]
fn minibatch_scores_only_count_batch_neighbors() {
    let mut r = rng(12);
    let n = 60;
    let c = 3;
    let data = random_dataset(&mut r, n, 2);
    let cfg = GpacConfig { batch_size: 16, ..small_config(c, 5, n, 4) };
    let graphs = graphs_for(&data, 5, 2);
    let adj = dense_adjacency(&graphs.knn, 2);
    let (p, v) = random_partitions(&mut r, n, c);
    let mut solver = Solver::from_state(&data, &cfg, graphs, p, v).unwrap();
    let mut checked = 0;
    solver
        .run_epoch_observed(|view| {
            let mut in_batch = vec![false; n];
            view.batch.iter().for_each(|&j| in_batch[j] = true);
            let (sp, sv) = dense_scores(view.probs, view.labels, c, &adj, &in_batch, view.sample, cfg.alpha, cfg.m);
            for l in 0..c {
                assert!((sp[l] - view.scores.s_p[l]).abs() <= 1e-12);
                assert!((sv[l] - view.scores.s_v[l]).abs() <= 1e-12);
            }
            checked += 1;
        })
        .unwrap();
    assert_eq!(checked, n);
}

#[test]
fn objective_matches_triple_loop() {
    let mut r = rng(13);
    for case in 0..30 {
        let n = r.random_range(3..=12);
        let c = r.random_range(2..=4).min(n);
        let k = r.random_range(1..n.min(4));
        let theta = r.random_range(1..=3);
        let alpha = r.random_range(0.0..2.0);
        let m = r.random_range(1.05..3.0);
        let data = random_dataset(&mut r, n, 3);
        let graphs = graphs_for(&data, k, theta);
        let adj = dense_adjacency(&graphs.knn, theta);
        let (p, v) = random_partitions(&mut r, n, c);
        let fast = objective_value(&p, &v, &graphs.adjacency, alpha, m);
        let slow = brute_objective(p.as_slice(), v.labels(), c, &adj, alpha, m);
        let rel = (fast - slow).abs() / slow.abs().max(1e-300);
        assert!(rel <= 1e-9, "case {case}: {fast} vs {slow}");
    }
}

#[test]
fn bfs_expansion_matches_matrix_powers() {
    let mut r = rng(14);
    for _ in 0..20 {
        let n = r.random_range(5..50);
        let k = r.random_range(1..4);
        let data = random_dataset(&mut r, n, 2);
        let knn = gpac::graph::build_knn_graph(&data, k, None).unwrap();
        for theta in 1..=4 {
            let a = expand_adjacency(&knn, theta);
            let dense = dense_adjacency(&knn, theta);
            for i in 0..n {
                let want: Vec<usize> = (0..n).filter(|&j| dense[i][j]).collect();
                assert_eq!(a.set(i), &want[..], "theta {theta}, row {i}");
            }
        }
    }
}

#[test]
fn solver_epoch_matches_naive_reimplementation() {
    let mut r = rng(15);
    for (case, batch) in [(0, 1000), (1, 17), (2, 1000), (3, 9)] {
        let n = 48;
        let c = 2 + case % 2;
        let data = random_dataset(&mut r, n, 2);
        let cfg = GpacConfig { batch_size: batch, ..small_config(c, 4, n, case as u64) };
        let graphs = graphs_for(&data, 4, 2);
        let adj = dense_adjacency(&graphs.knn, 2);
        let knn = graphs.knn.clone();
        let (p, v) = random_partitions(&mut r, n, c);
        let mut solver = Solver::from_state(&data, &cfg, graphs, p.clone(), v.clone()).unwrap();
        let mut probs = p.as_slice().to_vec();
        let mut labels = v.labels().to_vec();
        for epoch in 0..3 {
            let mut order = Vec::new();
            let beta = cfg.beta_at(epoch);
            solver.run_epoch_observed(|view| order.push(view.sample)).unwrap();
            naive_epoch(&mut probs, &mut labels, c, &knn, &adj, &order, batch.min(n), &cfg, beta);
            assert_eq!(solver.labels(), &labels[..], "case {case} epoch {epoch}");
            for (a, b) in solver.probs().iter().zip(&probs) {
                assert!((a - b).abs() < 1e-9, "case {case} epoch {epoch}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn balanced_counts_minimize_the_hard_self_term() {
    for n in 1..=8usize {
        for c in 2..=3usize {
            let total = c.pow(n as u32);
            let mut best = f64::INFINITY;
            let mut values = Vec::with_capacity(total);
            for code in 0..total {
                let labels: Vec<usize> = (0..n).map(|i| code / c.pow(i as u32) % c).collect();
                let hard = HardPartition::new(labels.clone(), c).unwrap();
                let counts = hard.counts();
                let fast = counts.iter().map(|&k| (k * k) as f64).sum::<f64>() - n as f64;
                let mut pairs = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        if i != j && labels[i] == labels[j] {
                            pairs += 1.0;
                        }
                    }
                }
                assert_eq!(fast, pairs);
                let balanced = counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1;
                best = best.min(pairs);
                values.push((pairs, balanced));
            }
            for (v, balanced) in values {
                assert_eq!(v == best, balanced, "n={n} c={c}");
            }
        }
    }
}

#[test]
fn uniform_probabilities_minimize_fuzzy_term_without_votes() {
    let mut r = rng(16);
    let n = 10;
    let c = 3;
    let data = random_dataset(&mut r, n, 2);
    let graphs = graphs_for(&data, 3, 1);
    let (_, v) = random_partitions(&mut r, n, c);
    let uniform = FuzzyPartition::uniform(n, c);
    let base = objective_value(&uniform, &v, &graphs.adjacency, 0.0, 2.0);
    for _ in 0..200 {
        let (p, _) = random_partitions(&mut r, n, c);
        assert!(objective_value(&p, &v, &graphs.adjacency, 0.0, 2.0) >= base - 1e-9);
    }
}

#[test]
fn acc_matches_exhaustive_matching() {
    let mut r = rng(17);
    for _ in 0..200 {
        let n = r.random_range(1..=8);
        let kp = r.random_range(1..=4);
        let kt = r.random_range(1..=4);
        let pred: Vec<usize> = (0..n).map(|_| r.random_range(0..kp)).collect();
        let truth: Vec<usize> = (0..n).map(|_| r.random_range(0..kt)).collect();
        assert_eq!(acc(&pred, &truth).unwrap(), brute_acc(&pred, &truth), "{pred:?} {truth:?}");
    }
}

#[test]
fn ari_matches_pair_enumeration() {
    let mut r = rng(18);
    for _ in 0..200 {
        let n = r.random_range(2..=10);
        let pred: Vec<usize> = (0..n).map(|_| r.random_range(0..4)).collect();
        let truth: Vec<usize> = (0..n).map(|_| r.random_range(0..4)).collect();
        let (fast, slow) = (ari(&pred, &truth).unwrap(), brute_ari(&pred, &truth));
        assert!((fast - slow).abs() <= 1e-12, "{pred:?} {truth:?}: {fast} vs {slow}");
    }
}

#[test]
fn nmi_ignores_relabeling() {
    let mut r = rng(19);
    for _ in 0..200 {
        let n = r.random_range(2..=30);
        let pred: Vec<usize> = (0..n).map(|_| r.random_range(0..5)).collect();
        let truth: Vec<usize> = (0..n).map(|_| r.random_range(0..5)).collect();
        let perm = &permutations(5)[r.random_range(0..120)];
        let relabeled: Vec<usize> = pred.iter().map(|&p| perm[p]).collect();
        assert_eq!(nmi(&pred, &truth).unwrap(), nmi(&relabeled, &truth).unwrap());
    }
}
