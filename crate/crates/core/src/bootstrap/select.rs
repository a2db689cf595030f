//! Balanced selection of prior episodes and dataset composition.

use std::cmp::Ordering;
use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::metrics::dispersion::l1;
use crate::store::Dataset;

/// Largest number of subsets the brute-force oracle will enumerate.
pub const BRUTEFORCE_LIMIT: u128 = 1_000_000;

/// Total L1 distance from `p` to every initial position of `new`.
pub fn balance_score(p: [f64; 2], new: &Dataset) -> f64 {
    new.green_inits.iter().map(|&q| l1(p, q)).sum()
}

fn check(prior: &Dataset, new: &Dataset, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::validation("k", "must be at least 1"));
    }
    if prior.len() < k {
        return Err(Error::InsufficientData {
            needed: k,
            got: prior.len(),
        });
    }
    if new.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    Ok(())
}

fn subset(prior: &Dataset, mut idx: Vec<usize>) -> Dataset {
    idx.sort_unstable();
    Dataset::new(
        prior.stage_tag.clone(),
        idx.into_iter().map(|i| prior.episodes[i].clone()).collect(),
    )
}

/// The `k` prior episodes whose initial green positions lie farthest (in
/// summed L1 distance) from those of `new`. The objective separates per
/// candidate, so the top `k` marginal scores are optimal; equal scores go to
/// the lower episode id. The result keeps prior order.
pub fn select_balanced(prior: &Dataset, new: &Dataset, k: usize) -> Result<Dataset> {
    check(prior, new, k)?;
    let scores: Vec<f64> = prior.green_inits.iter().map(|&p| balance_score(p, new)).collect();
    let mut order: Vec<usize> = (0..prior.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then(prior.episodes[a].episode_id.cmp(&prior.episodes[b].episode_id))
    });
    order.truncate(k);
    Ok(subset(prior, order))
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c > BRUTEFORCE_LIMIT {
            return c;
        }
    }
    c
}

/// Exhaustive version of [`select_balanced`]: evaluates the double sum for
/// every `k`-subset and keeps the best, preferring the lexicographically
/// smallest sorted id list among equal objectives. Only for testing.
pub fn select_balanced_bruteforce(prior: &Dataset, new: &Dataset, k: usize) -> Result<Dataset> {
    check(prior, new, k)?;
    let n = prior.len();
    if binomial(n, k) > BRUTEFORCE_LIMIT {
        return Err(Error::Size(format!("C({n}, {k}) exceeds {BRUTEFORCE_LIMIT} subsets")));
    }
    // Enumerate over positions sorted by id so lexicographic index order is
    // lexicographic id order.
    let mut by_id: Vec<usize> = (0..n).collect();
    by_id.sort_by_key(|&i| prior.episodes[i].episode_id);

    let objective = |comb: &[usize]| -> f64 {
        let mut total = 0.0;
        for &c in comb {
            let p = prior.green_inits[by_id[c]];
            for &q in &new.green_inits {
                total += (p[0] - q[0]).abs() + (p[1] - q[1]).abs();
            }
        }
        total
    };

    let mut comb: Vec<usize> = (0..k).collect();
    let mut best = comb.clone();
    let mut best_value = objective(&comb);
    loop {
        // Next combination in lexicographic order.
        let Some(i) = (0..k).rev().find(|&i| comb[i] != i + n - k) else {
            break;
        };
        comb[i] += 1;
        for j in i + 1..k {
            comb[j] = comb[j - 1] + 1;
        }
        let v = objective(&comb);
        if v.partial_cmp(&best_value) == Some(Ordering::Greater) {
            best_value = v;
            best.clone_from(&comb);
        }
    }
    Ok(subset(prior, best.into_iter().map(|c| by_id[c]).collect()))
}

/// Union of a prior selection and a new dataset. Episodes keep their own
/// stage tags; an episode id present in both is rejected.
pub fn compose(selected_prior: &Dataset, new: &Dataset) -> Result<Dataset> {
    if new.is_empty() {
        return Ok(selected_prior.clone());
    }
    if selected_prior.is_empty() {
        return Ok(new.clone());
    }
    let mut seen = HashSet::new();
    for e in selected_prior.episodes.iter().chain(&new.episodes) {
        if !seen.insert(e.episode_id) {
            return Err(Error::DataIntegrity(format!("episode id {} appears twice", e.episode_id)));
        }
    }
    Ok(Dataset::new(
        format!("{}+{}", selected_prior.stage_tag, new.stage_tag),
        selected_prior.episodes.iter().chain(&new.episodes).cloned().collect(),
    ))
}
