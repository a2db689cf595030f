mod common;

use autoboot_core::bootstrap::{balance_score, compose, select_balanced, select_balanced_bruteforce};
use autoboot_core::metrics::l1_avg;
use autoboot_core::rng;
use autoboot_core::store::Dataset;
use common::dataset;
use rand::seq::SliceRandom;
use rand::Rng;

/// Coordinates on a 1/64 grid inside the workspace, so every objective sum
/// is exact and ties are real ties.
fn dyadic(rng: &mut rng::SimRng) -> [f64; 2] {
    [rng.random_range(0..10) as f64 / 64.0, rng.random_range(0..10) as f64 / 64.0]
}

fn instance(rng: &mut rng::SimRng) -> (Dataset, Dataset, usize) {
    let n = rng.random_range(1..=12);
    let k = rng.random_range(1..=n.min(4));
    let m = rng.random_range(1..=6);
    // Shuffled ids make the id tie-break independent of storage order.
    let mut ids: Vec<u64> = (0..n as u64).map(|i| i * 3 + 1).collect();
    ids.shuffle(rng);
    let mut prior = dataset("prior", 0, &(0..n).map(|_| dyadic(rng)).collect::<Vec<_>>());
    for (e, id) in prior.episodes.iter_mut().zip(ids) {
        e.episode_id = id;
    }
    let new = dataset("new", 1000, &(0..m).map(|_| dyadic(rng)).collect::<Vec<_>>());
    (prior, new, k)
}

fn objective(sel: &Dataset, new: &Dataset) -> f64 {
    sel.green_inits.iter().map(|&p| balance_score(p, new)).sum()
}

fn id_set(d: &Dataset) -> Vec<u64> {
    let mut ids = d.ids();
    ids.sort_unstable();
    ids
}

#[test]
fn exact_selector_matches_brute_force() {
    let mut rng = rng::stream(100);
    for _ in 0..500 {
        let (prior, new, k) = instance(&mut rng);
        let fast = select_balanced(&prior, &new, k).unwrap();
        let slow = select_balanced_bruteforce(&prior, &new, k).unwrap();
        assert_eq!(objective(&fast, &new), objective(&slow, &new));
        assert_eq!(id_set(&fast), id_set(&slow));
    }
}

#[test]
fn averaging_the_objective_selects_the_same_set() {
    let mut rng = rng::stream(101);
    for _ in 0..200 {
        let (prior, new, k) = instance(&mut rng);
        let chosen = id_set(&select_balanced(&prior, &new, k).unwrap());
        // Rank by the average distance instead of the sum.
        let scale = (k * new.len()) as f64;
        let mut order: Vec<usize> = (0..prior.len()).collect();
        order.sort_by(|&a, &b| {
            let sa = balance_score(prior.green_inits[a], &new) / scale;
            let sb = balance_score(prior.green_inits[b], &new) / scale;
            sb.total_cmp(&sa)
                .then(prior.episodes[a].episode_id.cmp(&prior.episodes[b].episode_id))
        });
        let mut avg: Vec<u64> = order[..k].iter().map(|&i| prior.episodes[i].episode_id).collect();
        avg.sort_unstable();
        assert_eq!(avg, chosen);
    }
}

#[test]
fn balancing_spreads_clustered_data() {
    let mut rng = rng::stream(102);
    let mut wins = 0;
    for _ in 0..100 {
        let prior = dataset(
            "prior",
            0,
            &(0..100)
                .map(|_| [rng.random_range(0.0..0.15), rng.random_range(0.0..0.15)])
                .collect::<Vec<_>>(),
        );
        let c = [rng.random_range(0.03..0.12), rng.random_range(0.03..0.12)];
        let new = dataset(
            "new",
            1000,
            &(0..50)
                .map(|_| [c[0] + rng.random_range(-0.02..0.02), c[1] + rng.random_range(-0.02..0.02)])
                .collect::<Vec<_>>(),
        );
        let balanced = compose(&select_balanced(&prior, &new, 50).unwrap(), &new).unwrap();
        let mut idx: Vec<usize> = (0..100).collect();
        idx.shuffle(&mut rng);
        let random = Dataset::new("prior", idx[..50].iter().map(|&i| prior.episodes[i].clone()).collect());
        let random = compose(&random, &new).unwrap();
        if l1_avg(&balanced.green_inits).unwrap() >= l1_avg(&random.green_inits).unwrap() {
            wins += 1;
        }
    }
    assert!(wins >= 90, "{wins}/100");
}

#[test]
fn selection_keeps_prior_order_and_tags() {
    let prior = dataset("S1", 0, &[[0.0, 0.0], [0.15, 0.15], [0.0, 0.15], [0.07, 0.07]]);
    let new = dataset("S2", 10, &[[0.07, 0.07]]);
    let sel = select_balanced(&prior, &new, 3).unwrap();
    assert_eq!(sel.ids(), vec![0, 1, 2]);
    let both = compose(&sel, &new).unwrap();
    assert_eq!(both.ids(), vec![0, 1, 2, 10]);
    assert_eq!(both.green_inits[3], [0.07, 0.07]);
}
