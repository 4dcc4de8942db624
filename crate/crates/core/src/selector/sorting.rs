//! Fast non-dominated sorting and crowding distance, maximization
//! convention.

use crate::error::{Error, Result};
use crate::reward::MoFitness;

/// Partition fitness vectors into Pareto fronts: front 0 is the
/// non-dominated set, each later front is non-dominated once the earlier
/// fronts are removed. Every index appears in exactly one front.
pub fn fast_non_dominated_sort(fitnesses: &[MoFitness]) -> Result<Vec<Vec<usize>>> {
    if fitnesses.is_empty() {
        return Ok(Vec::new());
    }
    let dims = fitnesses[0].len();
    if let Some(bad) = fitnesses.iter().find(|f| f.len() != dims) {
        return Err(Error::DimensionMismatch(format!(
            "fitness vectors of length {} and {}",
            dims,
            bad.len()
        )));
    }

    let n = fitnesses.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    let mut fronts: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = Vec::new();

    for i in 0..n {
        for j in (i + 1)..n {
            if fitnesses[i].dominates(&fitnesses[j]) {
                dominated_by[i].push(j);
                domination_count[j] += 1;
            } else if fitnesses[j].dominates(&fitnesses[i]) {
                dominated_by[j].push(i);
                domination_count[i] += 1;
            }
        }
        if domination_count[i] == 0 {
            current.push(i);
        }
    }
    // Indices with zero count were collected in ascending order, but i's
    // count may still grow while later j are scanned; filter afterwards.
    current.retain(|&i| domination_count[i] == 0);

    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                domination_count[j] -= 1;
                if domination_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    Ok(fronts)
}

/// Crowding distance of each member of one front. Boundary individuals per
/// objective get infinity; interior ones accumulate normalized neighbor
/// gaps.
pub fn crowding_distance(front: &[MoFitness]) -> Vec<f64> {
    let n = front.len();
    if n == 0 {
        return Vec::new();
    }
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let dims = front[0].len();
    let mut distance = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for obj in 0..dims {
        order.sort_by(|&a, &b| front[a].values[obj].total_cmp(&front[b].values[obj]));
        let lo = front[order[0]].values[obj];
        let hi = front[order[n - 1]].values[obj];
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for k in 1..n - 1 {
            let gap = front[order[k + 1]].values[obj] - front[order[k - 1]].values[obj];
            distance[order[k]] += gap / range;
        }
    }
    distance
}

/// (rank, crowding) pairs for a pool of fitness vectors, as used by both
/// survival and tournament selection.
pub fn rank_and_crowding(fitnesses: &[MoFitness]) -> Result<(Vec<usize>, Vec<f64>)> {
    let fronts = fast_non_dominated_sort(fitnesses)?;
    let mut rank = vec![0usize; fitnesses.len()];
    let mut crowding = vec![0.0f64; fitnesses.len()];
    for (r, front) in fronts.iter().enumerate() {
        let members: Vec<MoFitness> = front.iter().map(|&i| fitnesses[i].clone()).collect();
        let dist = crowding_distance(&members);
        for (&i, d) in front.iter().zip(dist) {
            rank[i] = r;
            crowding[i] = d;
        }
    }
    Ok((rank, crowding))
}

/// Indices of the `n` survivors of a combined pool under (front rank,
/// crowding distance descending) ordering. Ties keep the lower index so the
/// result is deterministic.
pub fn select_survivors(fitnesses: &[MoFitness], n: usize) -> Result<Vec<usize>> {
    let (rank, crowding) = rank_and_crowding(fitnesses)?;
    let mut order: Vec<usize> = (0..fitnesses.len()).collect();
    order.sort_by(|&a, &b| {
        rank[a]
            .cmp(&rank[b])
            .then_with(|| crowding[b].total_cmp(&crowding[a]))
            .then_with(|| a.cmp(&b))
    });
    order.truncate(n);
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn fit(values: &[f64]) -> MoFitness {
        MoFitness { values: values.to_vec() }
    }

    /// Brute-force oracle: a front is everything not dominated by any
    /// remaining member; peel repeatedly.
    fn brute_force_fronts(fitnesses: &[MoFitness]) -> Vec<Vec<usize>> {
        let mut remaining: Vec<usize> = (0..fitnesses.len()).collect();
        let mut fronts = Vec::new();
        while !remaining.is_empty() {
            let front: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&i| {
                    !remaining.iter().any(|&j| j != i && fitnesses[j].dominates(&fitnesses[i]))
                })
                .collect();
            remaining.retain(|i| !front.contains(i));
            fronts.push(front);
        }
        fronts
    }

    #[test]
    fn single_individual_single_front() {
        let fronts = fast_non_dominated_sort(&[fit(&[1.0, 2.0, 3.0, 4.0])]).unwrap();
        assert_eq!(fronts, vec![vec![0]]);
    }

    #[test]
    fn strict_domination_splits_fronts() {
        let fronts = fast_non_dominated_sort(&[
            fit(&[1.0, 1.0, 1.0, 1.0]),
            fit(&[0.5, 0.5, 0.5, 0.5]),
        ])
        .unwrap();
        assert_eq!(fronts, vec![vec![0], vec![1]]);
    }

    #[test]
    fn matches_brute_force_oracle_on_random_populations() {
        let mut rng = crate::rng::stream(5, &[1]);
        for trial in 0..50 {
            let n = rng.random_range(2..=30);
            let fitnesses: Vec<MoFitness> = (0..n)
                .map(|_| fit(&[(); 4].map(|_| (rng.random_range(0..5) as f64) / 4.0)))
                .collect();
            let got = fast_non_dominated_sort(&fitnesses).unwrap();
            let want = brute_force_fronts(&fitnesses);
            assert_eq!(got, want, "trial {trial}");
        }
    }

    #[test]
    fn fronts_partition_the_population() {
        let mut rng = crate::rng::stream(5, &[2]);
        let fitnesses: Vec<MoFitness> =
            (0..40).map(|_| fit(&[(); 4].map(|_| rng.random_range(0.0..2.0)))).collect();
        let fronts = fast_non_dominated_sort(&fitnesses).unwrap();
        let mut seen = vec![false; fitnesses.len()];
        for front in &fronts {
            for &i in front {
                assert!(!seen[i], "index {i} in two fronts");
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let err = fast_non_dominated_sort(&[fit(&[1.0, 2.0]), fit(&[1.0])]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn crowding_small_fronts_are_boundaries() {
        assert_eq!(crowding_distance(&[fit(&[1.0, 2.0])]), vec![f64::INFINITY]);
        assert_eq!(
            crowding_distance(&[fit(&[1.0, 2.0]), fit(&[2.0, 1.0])]),
            vec![f64::INFINITY, f64::INFINITY]
        );
    }

    #[test]
    fn crowding_evenly_spaced_interior_is_uniform() {
        // Five collinear evenly spaced points in 2-D objective space: each
        // interior point spans 2/4 of the range per objective, so all
        // interior distances equal 0.5 + 0.5 = 1.
        let front: Vec<MoFitness> =
            (0..5).map(|i| fit(&[i as f64, 4.0 - i as f64])).collect();
        let d = crowding_distance(&front);
        assert_eq!(d[0], f64::INFINITY);
        assert_eq!(d[4], f64::INFINITY);
        for &v in &d[1..4] {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn survivors_match_rank_then_crowding_oracle() {
        let mut rng = crate::rng::stream(5, &[3]);
        for _ in 0..20 {
            let pool: Vec<MoFitness> =
                (0..20).map(|_| fit(&[(); 4].map(|_| rng.random_range(0.0..1.0)))).collect();
            let n = 10;
            let survivors = select_survivors(&pool, n).unwrap();
            assert_eq!(survivors.len(), n);

            let (rank, crowding) = rank_and_crowding(&pool).unwrap();
            let mut oracle: Vec<usize> = (0..pool.len()).collect();
            oracle.sort_by(|&a, &b| {
                rank[a]
                    .cmp(&rank[b])
                    .then_with(|| crowding[b].total_cmp(&crowding[a]))
                    .then_with(|| a.cmp(&b))
            });
            assert_eq!(survivors, oracle[..n].to_vec());
        }
    }
}
