//! Independent exact references: minimum spanning trees, optimal partitions,
//! the jump-window probability `p_pc`, and the exact offspring-distance law of
//! a single-offspring iteration.

use crate::engine::ResolvedHyper;
use crate::problems::{Dsu, MstInstance, PartitionInstance};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("partition instance with {n} objects and total weight {total} is too large for exact methods")]
    PartitionTooLarge { n: usize, total: u64 },
    #[error("bounding {upper} of the {which} distribution is below sqrt(2k) for k={k}")]
    WindowNotCovered {
        which: &'static str,
        upper: u64,
        k: u64,
    },
    #[error("jump size must be at least 1")]
    ZeroJump,
}

/// Weight of a minimum spanning tree (Kruskal with union–find).
pub fn kruskal_mst_weight(inst: &MstInstance) -> u64 {
    let mut order: Vec<usize> = (0..inst.edge_count()).collect();
    order.sort_by_key(|&i| (inst.edges()[i].weight, i));
    let mut dsu = Dsu::new(inst.vertices());
    let mut total = 0;
    let mut used = 0;
    for i in order {
        let e = inst.edges()[i];
        if dsu.union(e.a, e.b) {
            total += e.weight;
            used += 1;
            if used + 1 == inst.vertices() {
                break;
            }
        }
    }
    total
}

/// Minimum weight over every `(n_v - 1)`-edge subset that spans the graph.
/// Exponential; meant for tiny graphs.
pub fn brute_force_mst_weight(inst: &MstInstance) -> u64 {
    let m = inst.edge_count();
    assert!(m <= 24, "brute force over 2^{m} subsets is too large");
    let need = inst.vertices() - 1;
    let mut best = u64::MAX;
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != need {
            continue;
        }
        let mut dsu = Dsu::new(inst.vertices());
        let mut merged = 0;
        let mut weight = 0;
        for (i, e) in inst.edges().iter().enumerate() {
            if mask >> i & 1 == 1 {
                weight += e.weight;
                if dsu.union(e.a, e.b) {
                    merged += 1;
                }
            }
        }
        if merged == need {
            best = best.min(weight);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionMethod {
    Exhaustive,
    MeetInTheMiddle,
    SubsetSum,
}

/// Smallest achievable heavier-bin weight, choosing the method by size:
/// exhaustive up to 16 objects, meet-in-the-middle up to 24, and a subset-sum
/// bitset when the total weight is at most `10^6`.
pub fn partition_optimum(inst: &PartitionInstance) -> Result<u64, OracleError> {
    let method = if inst.len() <= 16 {
        PartitionMethod::Exhaustive
    } else if inst.len() <= 24 {
        PartitionMethod::MeetInTheMiddle
    } else if inst.total() <= 1_000_000 {
        PartitionMethod::SubsetSum
    } else {
        return Err(OracleError::PartitionTooLarge {
            n: inst.len(),
            total: inst.total(),
        });
    };
    Ok(partition_optimum_with(inst, method))
}

pub fn partition_optimum_with(inst: &PartitionInstance, method: PartitionMethod) -> u64 {
    let w = inst.weights();
    let total = inst.total();
    let heavier = |s: u64| s.max(total - s);
    match method {
        PartitionMethod::Exhaustive => subset_sums(w).into_iter().map(heavier).min().unwrap(),
        PartitionMethod::MeetInTheMiddle => {
            let (left, right) = w.split_at(w.len() / 2);
            let a = subset_sums(left);
            let mut b = subset_sums(right);
            b.sort_unstable();
            b.dedup();
            let half = total / 2;
            let mut best = total;
            for s in a {
                // Closest right-hand sums around the target `total/2 - s`.
                let target = half.saturating_sub(s);
                let pos = b.partition_point(|&x| x < target);
                for idx in [pos.wrapping_sub(1), pos, pos + 1] {
                    if let Some(&r) = b.get(idx) {
                        best = best.min(heavier(s + r));
                    }
                }
            }
            best
        }
        PartitionMethod::SubsetSum => {
            let size = total as usize + 1;
            let mut reach = vec![0u64; size.div_ceil(64)];
            reach[0] = 1;
            for &wi in w {
                shift_or(&mut reach, wi as usize);
            }
            (0..size)
                .filter(|&s| reach[s / 64] >> (s % 64) & 1 == 1)
                .map(|s| heavier(s as u64))
                .min()
                .unwrap()
        }
    }
}

fn subset_sums(w: &[u64]) -> Vec<u64> {
    let mut sums = vec![0u64];
    for &x in w {
        let len = sums.len();
        for i in 0..len {
            sums.push(sums[i] + x);
        }
    }
    sums
}

/// `bits |= bits << shift` over a little-endian word array.
fn shift_or(bits: &mut [u64], shift: usize) {
    let (words, rem) = (shift / 64, shift % 64);
    for i in (0..bits.len()).rev() {
        let mut v = 0;
        if i >= words {
            v = bits[i - words] << rem;
            if rem != 0 && i > words {
                v |= bits[i - words - 1] >> (64 - rem);
            }
        }
        bits[i] |= v;
    }
}

/// Finite-`n` jump-window probabilities for a resolved hyperparameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryProbe {
    pub n: usize,
    pub k: u64,
    /// `Pr[p ∈ [√(k/n), √(2k/n)]]`.
    pub p_window: f64,
    /// `Pr[c ∈ [√(k/n), √(2k/n)]]`.
    pub c_window: f64,
    /// Product of the two window probabilities.
    pub p_pc: f64,
}

/// Integer range `[⌈√k⌉..⌊√(2k)⌋]` of power-law draws `i` with
/// `i/√n ∈ [√(k/n), √(2k/n)]`.
pub fn jump_window(k: u64) -> (u64, u64) {
    let lo = k.isqrt();
    let lo = if lo * lo < k { lo + 1 } else { lo };
    (lo, (2 * k).isqrt())
}

pub fn compute_p_pc(hyper: &ResolvedHyper, k: u64) -> Result<TheoryProbe, OracleError> {
    if k == 0 {
        return Err(OracleError::ZeroJump);
    }
    let (lo, hi) = jump_window(k);
    let window = |which: &'static str, dist: &crate::powerlaw::PowerLaw| {
        let upper = dist.upper().finite().expect("p and c bounds are finite");
        if upper.saturating_mul(upper) < 2 * k {
            return Err(OracleError::WindowNotCovered { which, upper, k });
        }
        Ok((lo..=hi).map(|i| dist.pmf(i)).sum::<f64>())
    };
    let p_window = window("p", hyper.p())?;
    let c_window = window("c", hyper.c())?;
    Ok(TheoryProbe {
        n: hyper.n(),
        k,
        p_window,
        c_window,
        p_pc: p_window * c_window,
    })
}

fn binomial_pmf_table(n: usize, p: f64) -> Vec<f64> {
    // Coefficients by Pascal's rule keep every entry exact up to n = 1000.
    let mut coeff = vec![1.0f64; n + 1];
    for row in 1..=n {
        for j in (1..row).rev() {
            coeff[j] += coeff[j - 1];
        }
    }
    (0..=n)
        .map(|j| coeff[j] * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32))
        .collect()
}

/// Exact law of the Hamming distance between parent and crossover offspring
/// when one mutant flips `ℓ ~ Bin(n, p)` bits and the offspring keeps each
/// flipped bit with probability `c`.
pub fn composite_offspring_distribution(n: usize, p: f64, c: f64) -> Vec<f64> {
    let ell = binomial_pmf_table(n, p);
    let mut out = vec![0.0; n + 1];
    for (l, &pl) in ell.iter().enumerate() {
        for (h, ph) in binomial_pmf_table(l, c).into_iter().enumerate() {
            out[h] += pl * ph;
        }
    }
    out
}

/// `Bin(n, p)` probabilities, exposed for comparisons.
pub fn binomial_distribution(n: usize, p: f64) -> Vec<f64> {
    binomial_pmf_table(n, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::gen_random_mst_instance;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    #[test]
    fn kruskal_examples() {
        let tri = MstInstance::new(3, vec![(0, 1, 1), (1, 2, 2), (0, 2, 3)]).unwrap();
        assert_eq!(kruskal_mst_weight(&tri), 3);
        let path = MstInstance::new(4, vec![(0, 1, 4), (1, 2, 9), (2, 3, 2)]).unwrap();
        assert_eq!(kruskal_mst_weight(&path), 15);
        let square =
            MstInstance::new(4, vec![(0, 1, 1), (1, 2, 10), (2, 3, 1), (3, 0, 10)]).unwrap();
        assert_eq!(kruskal_mst_weight(&square), 12);
        assert_eq!(brute_force_mst_weight(&square), 12);
    }

    #[test]
    fn kruskal_matches_brute_force() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(21);
        for _ in 0..200 {
            let nv = 2 + (rand::Rng::random_range(&mut rng, 0..5usize));
            let max_m = nv * (nv - 1) / 2;
            let m = rand::Rng::random_range(&mut rng, nv - 1..=max_m);
            let inst = gen_random_mst_instance(nv, m, 10, &mut rng).unwrap();
            assert_eq!(kruskal_mst_weight(&inst), brute_force_mst_weight(&inst));
        }
    }

    #[test]
    fn partition_examples() {
        let p = |w: Vec<u64>| partition_optimum(&PartitionInstance::new(w).unwrap()).unwrap();
        assert_eq!(p(vec![3, 2, 2]), 4);
        assert_eq!(p(vec![5, 5]), 5);
        assert_eq!(p(vec![7, 1, 1, 1]), 7);
    }

    #[test]
    fn partition_methods_agree() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
        for n in [1, 2, 5, 11, 16] {
            for _ in 0..20 {
                let inst =
                    crate::problems::gen_random_partition_instance(n, 100, &mut rng).unwrap();
                let e = partition_optimum_with(&inst, PartitionMethod::Exhaustive);
                assert_eq!(e, partition_optimum_with(&inst, PartitionMethod::MeetInTheMiddle));
                assert_eq!(e, partition_optimum_with(&inst, PartitionMethod::SubsetSum));
                assert!(e >= inst.total().div_ceil(2) && e <= inst.total());
            }
        }
    }

    #[test]
    fn partition_too_large() {
        let inst = PartitionInstance::new(vec![1_000_000; 30]).unwrap();
        assert!(matches!(
            partition_optimum(&inst),
            Err(OracleError::PartitionTooLarge { .. })
        ));
        let inst = PartitionInstance::new(vec![3; 30]).unwrap();
        assert_eq!(partition_optimum(&inst).unwrap(), 45);
    }

    #[test]
    fn window_is_nonempty_for_all_k() {
        for k in 2..=10_000u64 {
            let (lo, hi) = jump_window(k);
            assert!(lo <= hi, "k={k}");
            assert!(lo * lo >= k && (lo - 1) * (lo - 1) < k);
            assert!(hi * hi <= 2 * k && (hi + 1) * (hi + 1) > 2 * k);
        }
        assert_eq!(jump_window(4), (2, 2));
    }

    #[test]
    fn composite_distribution_special_cases() {
        let d = composite_offspring_distribution(2, 1.0, 1.0);
        assert!((d[2] - 1.0).abs() < 1e-15 && d[0].abs() < 1e-15);
        let d = composite_offspring_distribution(7, 0.4, 1.0);
        for (a, b) in d.iter().zip(binomial_distribution(7, 0.4)) {
            assert!((a - b).abs() < 1e-15);
        }
        let d = composite_offspring_distribution(10, 0.3, 0.3);
        for (a, b) in d.iter().zip(binomial_distribution(10, 0.09)) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
