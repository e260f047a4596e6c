use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::scalar::Real;
use crate::tensor::sample::{gaussian_vec, rng};

const DIM: usize = 3;

/// How a family of rank-one matrices was generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RankOneFamily {
    /// `X_i = u w_i^T`.
    SharedColumn,
    /// `X_i = u_i v^T`.
    SharedRow,
    /// A shared-column family with its last member replaced by a generic rank-one.
    NearMiss,
}

/// Counts from [`rank_one_sum_property`].
#[derive(Clone, Debug, Serialize)]
pub struct RankOneReport {
    pub p: usize,
    pub trials: usize,
    pub seed: u64,
    /// Families that met the pairwise hypothesis.
    pub hypothesis_families: usize,
    /// Hypothesis families whose total sum had rank above one.
    pub conclusion_failures: usize,
    /// Hypothesis families whose members did not share a column or row space.
    pub structure_failures: usize,
    pub near_miss_families: usize,
    /// Near-miss families rejected by the pairwise filter.
    pub near_miss_excluded: usize,
    /// Near-miss families whose total sum had rank above one.
    pub near_miss_sum_rank_above_one: usize,
    /// Seeds of hypothesis families that broke the conclusion.
    pub failing_seeds: Vec<u64>,
}

/// Numerical rank with singular values above `tol * scale` counted.
pub fn rank_of<T: Real>(m: &CMat<T>, scale: T, tol: f64) -> usize {
    linalg::singular_values(m)
        .into_iter()
        .filter(|&s| s > T::lit(tol) * scale)
        .count()
}

fn outer<T: Real>(u: &linalg::CVec<T>, v: &linalg::CVec<T>) -> CMat<T> {
    u * v.transpose()
}

fn family<T: Real>(kind: RankOneFamily, p: usize, seed: u64) -> Vec<CMat<T>> {
    let mut g = rng(seed);
    let fixed = gaussian_vec::<T, _>(DIM, &mut g);
    let mut out: Vec<CMat<T>> = (0..p)
        .map(|_| {
            let x = gaussian_vec::<T, _>(DIM, &mut g);
            match kind {
                RankOneFamily::SharedRow => outer(&x, &fixed),
                _ => outer(&fixed, &x),
            }
        })
        .collect();
    if kind == RankOneFamily::NearMiss {
        let a = gaussian_vec::<T, _>(DIM, &mut g);
        let b = gaussian_vec::<T, _>(DIM, &mut g);
        out[p - 1] = outer(&a, &b);
    }
    out
}

/// Whether every member has rank one and every pairwise sum rank at most one.
pub(crate) fn pairwise_hypothesis<T: Real>(xs: &[CMat<T>], scale: T, tol: f64) -> bool {
    xs.iter().all(|x| rank_of(x, scale, tol) == 1)
        && (0..xs.len()).all(|i| (i + 1..xs.len()).all(|j| rank_of(&(&xs[i] + &xs[j]), scale, tol) <= 1))
}

/// Whether the members' column spaces, or their row spaces, all coincide.
pub(crate) fn shares_a_space<T: Real>(xs: &[CMat<T>], scale: T, tol: f64) -> bool {
    let cols = CMat::from_fn(xs[0].nrows(), xs.len() * xs[0].ncols(), |i, j| {
        xs[j / xs[0].ncols()][(i, j % xs[0].ncols())]
    });
    let rows = CMat::from_fn(xs.len() * xs[0].nrows(), xs[0].ncols(), |i, j| {
        xs[i / xs[0].nrows()][(i % xs[0].nrows(), j)]
    });
    rank_of(&cols, scale, tol) == 1 || rank_of(&rows, scale, tol) == 1
}

/// Property harness for sums of rank-one matrices whose pairwise sums are
/// rank one: the total sum must have rank at most one.
///
/// Trial `i` draws family `i mod 3` of `p` complex `3 x 3` matrices with seed
/// `seed + i`. Families passing the pairwise filter are checked two ways:
/// total-sum rank, and a shared column or row space among the members.
pub fn rank_one_sum_property(p: usize, trials: usize, seed: u64) -> Result<RankOneReport> {
    if p < 3 {
        return Err(Error::format("p", format!("needs p >= 3, got {p}")));
    }
    const TOL: f64 = 1e-9;
    let mut report = RankOneReport {
        p,
        trials,
        seed,
        hypothesis_families: 0,
        conclusion_failures: 0,
        structure_failures: 0,
        near_miss_families: 0,
        near_miss_excluded: 0,
        near_miss_sum_rank_above_one: 0,
        failing_seeds: Vec::new(),
    };
    for i in 0..trials {
        let s = seed.wrapping_add(i as u64);
        let kind = [RankOneFamily::SharedColumn, RankOneFamily::SharedRow, RankOneFamily::NearMiss][i % 3];
        let xs = family::<f64>(kind, p, s);
        let scale = xs.iter().map(linalg::frobenius).fold(0.0, f64::max);
        let sum = xs.iter().skip(1).fold(xs[0].clone(), |acc, x| acc + x);
        let sum_rank = rank_of(&sum, scale, TOL);
        let holds = pairwise_hypothesis(&xs, scale, TOL);
        if kind == RankOneFamily::NearMiss {
            report.near_miss_families += 1;
            if !holds {
                report.near_miss_excluded += 1;
            }
            if sum_rank > 1 {
                report.near_miss_sum_rank_above_one += 1;
            }
        }
        if holds {
            report.hypothesis_families += 1;
            if sum_rank > 1 {
                report.conclusion_failures += 1;
                report.failing_seeds.push(s);
            }
            if !shares_a_space(&xs, scale, TOL) {
                report.structure_failures += 1;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Complex;

    fn e(i: usize, j: usize, c: f64) -> CMat<f64> {
        let mut m = CMat::zeros(2, 2);
        m[(i, j)] = Complex::new(c, 0.0);
        m
    }

    #[test]
    fn generated_families() {
        let r = rank_one_sum_property(4, 300, 7).unwrap();
        assert_eq!(r.hypothesis_families, 200);
        assert_eq!(r.conclusion_failures, 0);
        assert_eq!(r.structure_failures, 0);
        assert_eq!(r.near_miss_excluded, r.near_miss_families);
        assert_eq!(r.near_miss_sum_rank_above_one, r.near_miss_families);
        assert!(rank_one_sum_property(2, 1, 0).is_err());
    }

    #[test]
    fn cross_pair_is_filtered() {
        let xs = vec![e(0, 0, 1.0), e(0, 1, 1.0), e(1, 0, 1.0)];
        assert!(!pairwise_hypothesis(&xs, 1.0, 1e-9));
        assert_eq!(rank_of(&(&xs[1] + &xs[2]), 1.0, 1e-9), 2);
    }

    #[test]
    fn cancelling_family_sums_to_zero() {
        let xs = vec![e(0, 0, 1.0), e(0, 1, 1.0), e(0, 0, -1.0) + e(0, 1, -1.0)];
        assert!(pairwise_hypothesis(&xs, 1.0, 1e-9));
        let sum = xs.iter().skip(1).fold(xs[0].clone(), |a, x| a + x);
        assert_eq!(rank_of(&sum, 1.0, 1e-9), 0);
    }
}
