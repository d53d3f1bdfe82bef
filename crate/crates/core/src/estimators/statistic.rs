//! Test statistics for the application domains.

use serde::{Deserialize, Serialize};

use crate::table::{BinaryMatrix, Covariates};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum StatisticKind {
    /// `t(x) = x`.
    Identity,
    /// median of label-1 values minus median of label-0 values.
    MedianDiff,
    /// `sum_ij v_ij x_ij`, the sufficient statistic of the covariate effect.
    LinearCovariate(Covariates),
    /// `max_{d=1..4}` of the number of pairs with `T^j - T^i = d`.
    LagCountPlus,
    /// `-min_{d=1..4}` of the same lag counts.
    LagCountMinus,
    /// Mean squared off-diagonal co-occurrence `sum_{i != j} (x x^T)_ij^2 / (m (m - 1))`.
    FinchS2Bar,
    /// Sum of the 1-based column indices of the ones in the first row.
    ColumnIndexSum,
}

/// Observation shapes the statistics are evaluated on.
#[derive(Debug, Clone, Copy)]
pub enum StatData<'a> {
    Scalar(f64),
    Labeled { values: &'a [f64], labels: &'a [bool] },
    Matrix(&'a BinaryMatrix),
    SpikePair { ti: &'a [i64], tj: &'a [i64] },
}

/// Permutation-invariant transform of the pooled sequence `(t(X), t(Y_1), ..., t(Y_n))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PooledTransform {
    #[default]
    None,
    /// Average ranks (ties share the mean of their positions), 1-based.
    Rank,
    /// Subtract the pooled mean and divide by the pooled standard deviation.
    CenterScale,
}

impl PooledTransform {
    pub fn apply(self, pooled: &mut [f64]) {
        match self {
            PooledTransform::None => {}
            PooledTransform::Rank => {
                let mut idx: Vec<usize> = (0..pooled.len()).collect();
                idx.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
                let mut ranks = vec![0.0; pooled.len()];
                let mut start = 0;
                while start < idx.len() {
                    let mut end = start + 1;
                    while end < idx.len() && pooled[idx[end]] == pooled[idx[start]] {
                        end += 1;
                    }
                    let avg = (start + end + 1) as f64 / 2.0;
                    for &i in &idx[start..end] {
                        ranks[i] = avg;
                    }
                    start = end;
                }
                pooled.copy_from_slice(&ranks);
            }
            PooledTransform::CenterScale => {
                let finite: Vec<f64> = pooled.iter().copied().filter(|v| v.is_finite()).collect();
                if finite.is_empty() {
                    return;
                }
                let n = finite.len() as f64;
                let mean = finite.iter().sum::<f64>() / n;
                let sd = (finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                let scale = if sd > 0.0 { sd } else { 1.0 };
                for v in pooled.iter_mut() {
                    *v = (*v - mean) / scale;
                }
            }
        }
    }
}

pub fn evaluate_statistic(kind: &StatisticKind, data: StatData<'_>) -> Result<f64> {
    match (kind, data) {
        (StatisticKind::Identity, StatData::Scalar(x)) => Ok(x),
        (StatisticKind::MedianDiff, StatData::Labeled { values, labels }) => {
            median_diff(values, labels)
        }
        (StatisticKind::LinearCovariate(v), StatData::Matrix(x)) => v.dot(x),
        (StatisticKind::LagCountPlus, StatData::SpikePair { ti, tj }) => {
            Ok(lag_counts(ti, tj, 1..=4).into_iter().max().unwrap_or(0) as f64)
        }
        (StatisticKind::LagCountMinus, StatData::SpikePair { ti, tj }) => {
            Ok(-(lag_counts(ti, tj, 1..=4).into_iter().min().unwrap_or(0) as f64))
        }
        (StatisticKind::FinchS2Bar, StatData::Matrix(x)) => co_occurrence_s2(x),
        (StatisticKind::ColumnIndexSum, StatData::Matrix(x)) => {
            if x.rows() == 0 {
                return Err(Error::shape("column-index sum needs at least one row"));
            }
            Ok(column_index_sum(x.row(0)) as f64)
        }
        (kind, data) => Err(Error::shape(format!("statistic {kind:?} cannot use data {data:?}"))),
    }
}

/// Median with the midpoint of the two central order statistics for even counts.
pub fn median(values: &mut [f64]) -> Option<f64> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mid = n / 2;
    let (_, &mut hi, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    if n % 2 == 1 {
        Some(hi)
    } else {
        let lo = values[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(0.5 * (lo + hi))
    }
}

pub fn median_diff(values: &[f64], labels: &[bool]) -> Result<f64> {
    if values.len() != labels.len() {
        return Err(Error::shape(format!(
            "{} values but {} labels",
            values.len(),
            labels.len()
        )));
    }
    let mut ones = Vec::with_capacity(values.len());
    let mut zeros = Vec::with_capacity(values.len());
    for (&v, &l) in values.iter().zip(labels) {
        if l { ones.push(v) } else { zeros.push(v) }
    }
    match (median(&mut ones), median(&mut zeros)) {
        (Some(a), Some(b)) => Ok(a - b),
        _ => Err(Error::shape("median difference needs both labels present")),
    }
}

/// Number of pairs `(k, l)` with `tj[l] - ti[k] = d`, for each `d`; inputs strictly increasing.
pub fn lag_counts(ti: &[i64], tj: &[i64], lags: impl IntoIterator<Item = i64>) -> Vec<usize> {
    lags.into_iter()
        .map(|d| {
            let (mut a, mut b, mut count) = (0, 0, 0);
            while a < ti.len() && b < tj.len() {
                let shifted = ti[a] + d;
                match shifted.cmp(&tj[b]) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => b += 1,
                    std::cmp::Ordering::Equal => {
                        count += 1;
                        a += 1;
                        b += 1;
                    }
                }
            }
            count
        })
        .collect()
}

pub fn column_index_sum(first_row: &[u8]) -> usize {
    first_row.iter().enumerate().filter(|(_, &v)| v == 1).map(|(j, _)| j + 1).sum()
}

/// Row-packed bitsets for fast co-occurrence counts.
pub(crate) fn row_bits(x: &BinaryMatrix) -> Vec<Vec<u64>> {
    let words = x.cols().div_ceil(64);
    (0..x.rows())
        .map(|i| {
            let mut bits = vec![0u64; words];
            for (j, &v) in x.row(i).iter().enumerate() {
                if v == 1 {
                    bits[j / 64] |= 1 << (j % 64);
                }
            }
            bits
        })
        .collect()
}

/// Sum over ordered pairs `i != j` of squared shared-column counts.
pub(crate) fn co_occurrence_square_sum(bits: &[Vec<u64>]) -> u64 {
    let mut total = 0u64;
    for i in 0..bits.len() {
        for j in (i + 1)..bits.len() {
            let shared: u64 = bits[i]
                .iter()
                .zip(&bits[j])
                .map(|(a, b)| u64::from((a & b).count_ones()))
                .sum();
            total += 2 * shared * shared;
        }
    }
    total
}

pub fn co_occurrence_s2(x: &BinaryMatrix) -> Result<f64> {
    let m = x.rows();
    if m < 2 {
        return Err(Error::shape("co-occurrence statistic needs at least two rows"));
    }
    let sq = co_occurrence_square_sum(&row_bits(x));
    Ok(sq as f64 / (m * (m - 1)) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_diff_example() {
        let t = evaluate_statistic(
            &StatisticKind::MedianDiff,
            StatData::Labeled { values: &[1.0, 2.0, 3.0, 10.0], labels: &[true, true, false, false] },
        )
        .unwrap();
        assert_eq!(t, -5.0);
    }

    #[test]
    fn median_odd_and_even() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&mut []), None);
    }

    #[test]
    fn lag_count_example() {
        let ti = [0, 5];
        let tj = [2, 6];
        assert_eq!(lag_counts(&ti, &tj, 1..=4), vec![1, 1, 0, 0]);
        let plus = evaluate_statistic(&StatisticKind::LagCountPlus, StatData::SpikePair { ti: &ti, tj: &tj });
        assert_eq!(plus.unwrap(), 1.0);
        let minus = evaluate_statistic(&StatisticKind::LagCountMinus, StatData::SpikePair { ti: &ti, tj: &tj });
        assert_eq!(minus.unwrap(), 0.0);
    }

    #[test]
    fn lag_counts_match_brute_force() {
        let ti = [1, 3, 4, 9, 12, 13, 20];
        let tj = [2, 4, 5, 7, 8, 13, 15, 16, 17, 24];
        let got = lag_counts(&ti, &tj, 0..=6);
        for (d, &c) in (0..=6).zip(&got) {
            let brute = ti.iter().flat_map(|a| tj.iter().map(move |b| b - a)).filter(|&x| x == d).count();
            assert_eq!(c, brute);
        }
    }

    #[test]
    fn s2_matches_dense_product() {
        let x = BinaryMatrix::from_rows(&[vec![1, 1, 0, 1], vec![1, 0, 1, 1], vec![0, 1, 1, 1]]).unwrap();
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let g: usize = (0..4).filter(|&k| x.get(i, k) && x.get(j, k)).count();
                    s += (g * g) as f64;
                }
            }
        }
        assert_eq!(co_occurrence_s2(&x).unwrap(), s / 6.0);
    }

    #[test]
    fn shape_errors() {
        let x = BinaryMatrix::zeros(2, 2);
        assert!(evaluate_statistic(&StatisticKind::MedianDiff, StatData::Matrix(&x)).is_err());
        assert!(evaluate_statistic(
            &StatisticKind::MedianDiff,
            StatData::Labeled { values: &[1.0], labels: &[true, false] }
        )
        .is_err());
        let v = Covariates::new(3, 2, vec![0.0; 6]).unwrap();
        assert!(evaluate_statistic(&StatisticKind::LinearCovariate(v), StatData::Matrix(&x)).is_err());
    }

    #[test]
    fn rank_transform_averages_ties() {
        let mut v = [3.0, 1.0, 3.0, f64::NEG_INFINITY];
        PooledTransform::Rank.apply(&mut v);
        assert_eq!(v, [3.5, 2.0, 3.5, 1.0]);
    }
}
