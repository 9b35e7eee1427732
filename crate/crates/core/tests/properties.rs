mod common;

use common::*;
use gpac::gpac::{fuzzy_from_scores, guard_scores, project_local_consistency, Solver};
use gpac::synth::BlobSpec;
use gpac::{fit, FuzzyPartition, GpacConfig};
use proptest::prelude::*;

fn column_sums(probs: &[f64], c: usize) -> Vec<f64> {
    let mut out = vec![0.0; c];
    for row in probs.chunks_exact(c) {
        for (o, p) in out.iter_mut().zip(row) {
            *o += p;
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rows_stay_stochastic_and_aggregates_stay_exact(
        seed in 0u64..1000,
        n in 20usize..80,
        c in 2usize..5,
        batch in 5usize..80,
        m in 1.05f64..2.5,
    ) {
        let mut r = rng(seed);
        let data = random_dataset(&mut r, n, 2);
        let cfg = GpacConfig { batch_size: batch, m, k: 4, seed, beta_ramp_epochs: 2, ..GpacConfig::new(c) };
        let (p, v) = random_partitions(&mut r, n, c);
        let mut solver = Solver::from_state(&data, &cfg, graphs_for(&data, 4, 2), p, v).unwrap();
        for _ in 0..3 {
            let mut bad = None;
            solver.run_epoch_observed(|view| {
                for (i, row) in view.probs.chunks_exact(c).enumerate() {
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > 1e-9 || row.iter().any(|&x| x < 0.0) {
                        bad = Some(i);
                    }
                }
            }).unwrap();
            prop_assert_eq!(bad, None);
            let fresh = column_sums(solver.probs(), c);
            for (a, b) in solver.aggregates().p_tilde.iter().zip(&fresh) {
                prop_assert!((a - b).abs() <= 1e-6);
            }
            let mut counts = vec![0.0; c];
            solver.labels().iter().for_each(|&l| counts[l] += 1.0);
            prop_assert_eq!(&solver.aggregates().v_tilde, &counts);
        }
        prop_assert!(FuzzyPartition::new(solver.probs().to_vec(), n, c).is_ok());
    }

    #[test]
    fn uniform_memberships_are_a_fixed_point_without_votes_or_projection(
        seed in 0u64..1000,
        n in 10usize..60,
        c in 2usize..6,
    ) {
        let mut r = rng(seed);
        let data = random_dataset(&mut r, n, 3);
        let cfg = GpacConfig { alpha: 0.0, beta_max: 0.0, k: 3, seed, ..GpacConfig::new(c) };
        let (_, v) = random_partitions(&mut r, n, c);
        let uniform = FuzzyPartition::uniform(n, c);
        let mut solver = Solver::from_state(&data, &cfg, graphs_for(&data, 3, 2), uniform.clone(), v).unwrap();
        solver.run_epoch().unwrap();
        for (a, b) in solver.probs().iter().zip(uniform.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn lower_m_sharpens_memberships(
        scores in prop::collection::vec(-50.0f64..50.0, 2..6),
        m in 1.1f64..3.0,
        dm in 0.01f64..0.09,
    ) {
        let mut s = scores;
        guard_scores(&mut s);
        let sorted = { let mut t = s.clone(); t.sort_by(f64::total_cmp); t };
        prop_assume!(sorted[1] - sorted[0] > 1e-6);
        let soft = fuzzy_from_scores(&s, m).unwrap();
        let sharp = fuzzy_from_scores(&s, m - dm).unwrap();
        let max = |p: &[f64]| p.iter().cloned().fold(0.0, f64::max);
        if max(&soft) < 1.0 {
            prop_assert!(max(&sharp) > max(&soft), "{:?} {:?}", soft, sharp);
        } else {
            prop_assert_eq!(max(&sharp), 1.0);
        }
    }

    #[test]
    fn projection_beats_every_grid_point(
        raw_star in prop::collection::vec(0.01f64..1.0, 2..=3),
        raw_bar in prop::collection::vec(0.01f64..1.0, 3),
        beta in 0.0f64..5.0,
    ) {
        let c = raw_star.len();
        let norm = |v: &[f64]| { let t: f64 = v.iter().sum(); v.iter().map(|x| x / t).collect::<Vec<_>>() };
        let p_star = norm(&raw_star);
        let p_bar = norm(&raw_bar[..c]);
        let cost = |p: &[f64]| -> f64 {
            p.iter().zip(&p_star).zip(&p_bar)
                .map(|((x, a), b)| (x - a).powi(2) + beta * (x - b).powi(2))
                .sum()
        };
        let p = project_local_consistency(&p_star, &p_bar, beta);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let best = cost(&p);
        let steps = 400;
        let mut grid_best = (f64::INFINITY, vec![]);
        // the affine hull, extended a little past the simplex
        for a in -20..=steps + 20 {
            let x = a as f64 / steps as f64;
            let bs: Vec<i32> = if c == 2 { vec![0] } else { (-20..=steps + 20).collect() };
            for b in bs {
                let y = b as f64 / steps as f64;
                let q = if c == 2 { vec![x, 1.0 - x] } else { vec![x, y, 1.0 - x - y] };
                let v = cost(&q);
                if v < grid_best.0 {
                    grid_best = (v, q);
                }
            }
        }
        prop_assert!(best <= grid_best.0 + 1e-12);
        let dist = p.iter().zip(&grid_best.1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(dist <= 1.0 / steps as f64 + 1e-12);
    }
}

#[test]
fn identical_inputs_give_bitwise_identical_output() {
    let data = BlobSpec::grid(3, 80, 6.0, 1.0).with_noise(0.1).generate(5).unwrap();
    let cfg = GpacConfig { batch_size: 50, seed: 9, ..GpacConfig::new(3) };
    let a = fit(&data, &cfg).unwrap();
    let b = fit(&data, &cfg).unwrap();
    assert_eq!(a.predictions, b.predictions);
    assert_eq!(a.hard, b.hard);
    let bits = |p: &FuzzyPartition| p.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.fuzzy), bits(&b.fuzzy));
}
