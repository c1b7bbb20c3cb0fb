//! Empirical cumulative distributions, cumulative entropy and the fraction of
//! cumulative information of a target given a feature subset.
//!
//! All estimates are plug-in estimates on the empirical (complementary)
//! cumulative distribution. Features only enter through comparisons, so every
//! quantity here is unchanged, bit for bit, by strictly increasing transforms
//! of a feature.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Grids larger than this are rejected instead of silently taking hours.
pub const MAX_GRID_POINTS: usize = 20_000_000;

/// Which side of the distribution is accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `P(Z <= z)`
    Forward,
    /// `P(Z >= z)`
    Reverse,
}

impl Orientation {
    pub const BOTH: [Orientation; 2] = [Orientation::Forward, Orientation::Reverse];

    /// Maps a value onto a key whose `<=` order is the orientation's order.
    #[inline]
    pub(crate) fn key(self, v: f64) -> f64 {
        match self {
            Orientation::Forward => v,
            Orientation::Reverse => -v,
        }
    }
}

/// Distinct values of a sample with the orientation's cumulative counts.
///
/// `distinct_values` is always strictly increasing. For the forward
/// orientation `cum_counts[i]` is the number of samples `<= distinct_values[i]`,
/// for the reverse orientation the number of samples `>= distinct_values[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedProfile {
    pub distinct_values: Vec<f64>,
    pub cum_counts: Vec<usize>,
    pub orientation: Orientation,
}

impl SortedProfile {
    pub fn n(&self) -> usize {
        match self.orientation {
            Orientation::Forward => *self.cum_counts.last().unwrap_or(&0),
            Orientation::Reverse => *self.cum_counts.first().unwrap_or(&0),
        }
    }

    /// Gaps between consecutive distinct values paired with the count of
    /// samples on the accumulated side of each gap.
    fn gap_counts(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        let k = self.distinct_values.len();
        (0..k.saturating_sub(1)).map(move |i| {
            let gap = self.distinct_values[i + 1] - self.distinct_values[i];
            let count = match self.orientation {
                Orientation::Forward => self.cum_counts[i],
                Orientation::Reverse => self.cum_counts[i + 1],
            };
            (gap, count)
        })
    }
}

pub fn sorted_profile(values: &[f64], orientation: Orientation) -> Result<SortedProfile> {
    if values.is_empty() {
        return Err(Error::EmptyColumn);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut distinct_values: Vec<f64> = Vec::new();
    let mut le_counts = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        if distinct_values.last() == Some(&v) {
            *le_counts.last_mut().unwrap() = i + 1;
        } else {
            distinct_values.push(v);
            le_counts.push(i + 1);
        }
    }

    let n = values.len();
    let cum_counts = match orientation {
        Orientation::Forward => le_counts,
        Orientation::Reverse => {
            let mut ge = Vec::with_capacity(le_counts.len());
            let mut below = 0;
            for &c in &le_counts {
                ge.push(n - below);
                below = c;
            }
            ge
        }
    };
    Ok(SortedProfile {
        distinct_values,
        cum_counts,
        orientation,
    })
}

/// `-sum_i gap_i * p_i * ln p_i` with `p_i = counts_i / total`.
///
/// Shared by the marginal and the conditional estimates so that a
/// conditioning set holding every sample reproduces the marginal exactly.
#[inline]
pub(crate) fn entropy_from_counts(gaps: &[f64], counts: &[usize], total: usize) -> f64 {
    let t = total as f64;
    let mut s = 0.0;
    for (gap, &c) in gaps.iter().zip(counts) {
        if c > 0 && c < total {
            let p = c as f64 / t;
            s -= gap * p * p.ln();
        }
    }
    s
}

/// Empirical cumulative entropy (or, for the reverse orientation, cumulative
/// residual entropy) in the units of `values`.
pub fn cumulative_entropy(values: &[f64], orientation: Orientation) -> Result<f64> {
    let profile = sorted_profile(values, orientation)?;
    let (gaps, counts): (Vec<f64>, Vec<usize>) = profile.gap_counts().unzip();
    Ok(entropy_from_counts(&gaps, &counts, values.len()))
}

/// How conditioning thresholds are laid out over a feature subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridStrategy {
    /// Cartesian product of every feature's distinct values.
    Full,
    /// Distinct observed joint feature vectors, weighted by how often each occurs.
    #[default]
    Sample,
}

impl std::str::FromStr for GridStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(GridStrategy::Full),
            "sample" => Ok(GridStrategy::Sample),
            other => Err(Error::InvalidArgument(format!("unknown grid strategy {other:?}"))),
        }
    }
}

/// Joint threshold vectors at which conditional distributions are evaluated.
///
/// Points are stored flat, `dim` values per point, in lexicographic order of
/// the subset's canonical (ascending index) feature order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub strategy: GridStrategy,
    pub features: Vec<usize>,
    pub dim: usize,
    pub points: Vec<f64>,
    /// Weight of each point: observation count for `Sample`, 1 for `Full`.
    pub multiplicity: Vec<usize>,
}

impl GridSpec {
    pub fn m(&self) -> usize {
        self.multiplicity.len()
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }

    pub fn total_weight(&self) -> usize {
        self.multiplicity.iter().sum()
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap() {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn distinct_sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup_by(|a, b| a == b);
    v
}

pub fn build_grid<S: AsRef<str>>(
    dataset: &Dataset,
    subset: &[S],
    strategy: GridStrategy,
) -> Result<GridSpec> {
    let features = dataset.resolve(subset)?;
    build_grid_indices(dataset, &features, strategy)
}

pub(crate) fn build_grid_indices(
    dataset: &Dataset,
    features: &[usize],
    strategy: GridStrategy,
) -> Result<GridSpec> {
    if features.is_empty() {
        return Err(Error::EmptySubset);
    }
    let dim = features.len();
    let n = dataset.n_rows();
    match strategy {
        GridStrategy::Sample => {
            let mut rows: Vec<&[f64]> = Vec::with_capacity(n);
            let mut flat = Vec::with_capacity(n * dim);
            for k in 0..n {
                for &f in features {
                    flat.push(dataset.feature(f)[k]);
                }
            }
            for k in 0..n {
                rows.push(&flat[k * dim..(k + 1) * dim]);
            }
            rows.sort_by(|a, b| lex_cmp(a, b));
            let mut points = Vec::new();
            let mut multiplicity: Vec<usize> = Vec::new();
            let mut last: Option<&[f64]> = None;
            for row in rows {
                if last.is_some_and(|l| lex_cmp(l, row) == Ordering::Equal) {
                    *multiplicity.last_mut().unwrap() += 1;
                } else {
                    points.extend_from_slice(row);
                    multiplicity.push(1);
                    last = Some(row);
                }
            }
            Ok(GridSpec {
                strategy,
                features: features.to_vec(),
                dim,
                points,
                multiplicity,
            })
        }
        GridStrategy::Full => {
            let axes: Vec<Vec<f64>> = features
                .iter()
                .map(|&f| distinct_sorted(dataset.feature(f)))
                .collect();
            let m = axes
                .iter()
                .try_fold(1usize, |acc, a| acc.checked_mul(a.len()))
                .filter(|&m| m <= MAX_GRID_POINTS)
                .ok_or_else(|| Error::BudgetExceeded {
                    nodes: axes.iter().map(|a| a.len() as u128).product(),
                    budget: MAX_GRID_POINTS as u128,
                })?;
            let mut points = Vec::with_capacity(m * dim);
            let mut idx = vec![0usize; dim];
            for _ in 0..m {
                for (axis, &i) in axes.iter().zip(&idx) {
                    points.push(axis[i]);
                }
                // odometer, last axis fastest: lexicographic order
                for p in (0..dim).rev() {
                    idx[p] += 1;
                    if idx[p] < axes[p].len() {
                        break;
                    }
                    idx[p] = 0;
                }
            }
            Ok(GridSpec {
                strategy,
                features: features.to_vec(),
                dim,
                points,
                multiplicity: vec![1; m],
            })
        }
    }
}

/// The target sorted into distinct levels under one orientation.
#[derive(Debug, Clone)]
pub(crate) struct TargetLevels {
    pub orientation: Orientation,
    pub n: usize,
    /// Sample indices in ascending key order, ties in index order.
    pub order: Vec<usize>,
    /// `level_ends[i]`: number of samples in levels `0..=i`.
    pub level_ends: Vec<usize>,
    /// Positive gaps between consecutive levels (`r - 1` of them).
    pub gaps: Vec<f64>,
    /// Distinct values in key order (so decreasing for `Reverse`).
    pub values: Vec<f64>,
    pub entropy: f64,
}

impl TargetLevels {
    pub fn new(target: &[f64], orientation: Orientation) -> Result<Self> {
        let n = target.len();
        if n == 0 {
            return Err(Error::EmptyColumn);
        }
        let keys: Vec<f64> = target.iter().map(|&v| orientation.key(v)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| keys[a].partial_cmp(&keys[b]).unwrap().then(a.cmp(&b)));

        let mut level_ends: Vec<usize> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        for (pos, &k) in order.iter().enumerate() {
            if values.last().is_some_and(|&v| orientation.key(v) == keys[k]) {
                *level_ends.last_mut().unwrap() = pos + 1;
            } else {
                values.push(target[k]);
                level_ends.push(pos + 1);
            }
        }
        if values.len() < 2 {
            return Err(Error::DegenerateTarget);
        }
        let gaps: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let entropy = entropy_from_counts(&gaps, &level_ends[..gaps.len()], n);
        if entropy <= 0.0 {
            return Err(Error::DegenerateTarget);
        }
        Ok(Self {
            orientation,
            n,
            order,
            level_ends,
            gaps,
            values,
            entropy,
        })
    }

    pub fn r(&self) -> usize {
        self.values.len()
    }

    /// Feature rows of `features` in this target order, oriented keys, flat.
    pub fn keyed_rows(&self, dataset: &Dataset, features: &[usize]) -> Vec<f64> {
        let mut rows = Vec::with_capacity(self.n * features.len());
        for &k in &self.order {
            for &f in features {
                rows.push(self.orientation.key(dataset.feature(f)[k]));
            }
        }
        rows
    }

    /// Size of the conditioning set and its cumulative entropy for one
    /// threshold vector (already oriented).
    pub fn conditional(&self, rows: &[f64], dim: usize, threshold: &[f64], counts: &mut Vec<usize>) -> (usize, f64) {
        counts.clear();
        let mut c = 0usize;
        let mut start = 0usize;
        for &end in &self.level_ends {
            for row in rows[start * dim..end * dim].chunks_exact(dim) {
                if row.iter().zip(threshold).all(|(x, t)| x <= t) {
                    c += 1;
                }
            }
            counts.push(c);
            start = end;
        }
        let b = c;
        let h = if b == 0 {
            0.0
        } else {
            entropy_from_counts(&self.gaps, &counts[..self.gaps.len()], b)
        };
        (b, h)
    }

    /// Conditioning-set size and conditional entropy at every grid point.
    pub fn grid_terms(&self, dataset: &Dataset, grid: &GridSpec) -> Vec<(usize, f64)> {
        let dim = grid.dim;
        let rows = self.keyed_rows(dataset, &grid.features);
        let eval = |j: usize, counts: &mut Vec<usize>| {
            let threshold: Vec<f64> = grid.point(j).iter().map(|&v| self.orientation.key(v)).collect();
            self.conditional(&rows, dim, &threshold, counts)
        };
        let r = self.r();
        if grid.m() * self.n < 1 << 16 {
            let mut counts = Vec::with_capacity(r);
            (0..grid.m()).map(|j| eval(j, &mut counts)).collect()
        } else {
            (0..grid.m())
                .into_par_iter()
                .map_init(|| Vec::with_capacity(r), |counts, j| eval(j, counts))
                .collect()
        }
    }

    /// Fraction of cumulative information from per-point terms.
    ///
    /// Each grid point contributes the residual ratio `h_j / H(Y)`; points
    /// whose conditioning set is empty contribute 1.
    pub fn fraction_from_terms(&self, grid: &GridSpec, terms: &[(usize, f64)]) -> f64 {
        let mut acc = 0.0;
        for (&(b, h), &w) in terms.iter().zip(&grid.multiplicity) {
            let ratio = if b == 0 || b == self.n { 1.0 } else { h / self.entropy };
            acc += w as f64 * ratio;
        }
        1.0 - acc / grid.total_weight() as f64
    }
}

/// Forward and reverse fraction of cumulative information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionPair {
    pub forward: f64,
    pub reverse: f64,
}

impl FractionPair {
    pub fn get(&self, orientation: Orientation) -> f64 {
        match orientation {
            Orientation::Forward => self.forward,
            Orientation::Reverse => self.reverse,
        }
    }
}

pub fn fraction_score(dataset: &Dataset, grid: &GridSpec, orientation: Orientation) -> Result<f64> {
    let levels = TargetLevels::new(dataset.target(), orientation)?;
    let terms = levels.grid_terms(dataset, grid);
    Ok(levels.fraction_from_terms(grid, &terms))
}

/// Fraction of cumulative information `D = 1 - D_r` in both orientations.
///
/// The residual `D_r` averages, over the grid points `x_j`, the cumulative
/// entropy of `Y` among samples with `X <= x_j` (or `>=` for the reverse
/// orientation) relative to the marginal cumulative entropy of `Y`.
pub fn fraction_scores<S: AsRef<str>>(dataset: &Dataset, subset: &[S], grid: &GridSpec) -> Result<FractionPair> {
    let features = dataset.resolve(subset)?;
    if features != grid.features {
        return Err(Error::InvalidArgument("grid was built for a different subset".into()));
    }
    Ok(FractionPair {
        forward: fraction_score(dataset, grid, Orientation::Forward)?,
        reverse: fraction_score(dataset, grid, Orientation::Reverse)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ds(target: Vec<f64>, feats: Vec<(&str, Vec<f64>)>) -> Dataset {
        Dataset::new(
            "y",
            target,
            feats.into_iter().map(|(n, v)| (n.to_string(), v)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn profile_counts() {
        let p = sorted_profile(&[0.0, 1.0, 1.0], Orientation::Forward).unwrap();
        assert_eq!(p.distinct_values, vec![0.0, 1.0]);
        assert_eq!(p.cum_counts, vec![1, 3]);

        let p = sorted_profile(&[5.0], Orientation::Forward).unwrap();
        assert_eq!(p.distinct_values, vec![5.0]);
        assert_eq!(p.cum_counts, vec![1]);

        let p = sorted_profile(&[0.0, 1.0, 2.0], Orientation::Reverse).unwrap();
        assert_eq!(p.distinct_values, vec![0.0, 1.0, 2.0]);
        assert_eq!(p.cum_counts, vec![3, 2, 1]);

        assert_eq!(sorted_profile(&[], Orientation::Forward).unwrap_err(), Error::EmptyColumn);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(cumulative_entropy(&[3.0, 3.0, 3.0], Orientation::Forward).unwrap(), 0.0);
        // -(1/2) ln(1/2)
        assert_abs_diff_eq!(
            cumulative_entropy(&[0.0, 1.0], Orientation::Forward).unwrap(),
            0.346_573_590_279_972_6,
            epsilon = 1e-12
        );
        // -(1/3) ln(1/3) - (2/3) ln(2/3)
        assert_abs_diff_eq!(
            cumulative_entropy(&[0.0, 1.0, 2.0], Orientation::Forward).unwrap(),
            0.636_514_168_294_813_2,
            epsilon = 1e-12
        );
        assert_eq!(cumulative_entropy(&[], Orientation::Reverse).unwrap_err(), Error::EmptyColumn);
    }

    #[test]
    fn reverse_entropy_mirrors_forward() {
        let v = [0.3, 1.0, 1.0, 2.5, 7.0, -1.0];
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        assert_abs_diff_eq!(
            cumulative_entropy(&v, Orientation::Reverse).unwrap(),
            cumulative_entropy(&neg, Orientation::Forward).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn grid_shapes() {
        let d = ds(
            vec![0.0, 1.0, 2.0, 3.0, 4.0],
            vec![
                ("a", vec![0.0, 1.0, 1.0, 2.0, 2.0]),
                ("b", vec![0.0, 1.0, 1.0, 2.0, 0.0]),
                ("c", vec![0.0, 1.0, 1.0, 1.0, 1.0]),
            ],
        );
        let g = build_grid(&d, &["c"], GridStrategy::Sample).unwrap();
        assert_eq!(g.m(), 2);
        assert_eq!(g.points, vec![0.0, 1.0]);
        assert_eq!(g.multiplicity, vec![1, 4]);
        let g = build_grid(&d, &["c"], GridStrategy::Full).unwrap();
        assert_eq!(g.points, vec![0.0, 1.0]);

        // 3 x 3 distinct values
        assert_eq!(build_grid(&d, &["a", "b"], GridStrategy::Full).unwrap().m(), 9);
        // rows (1,1) twice -> 4 distinct joint points
        let g = build_grid(&d, &["b", "a"], GridStrategy::Sample).unwrap();
        assert_eq!(g.m(), 4);
        assert_eq!(g.total_weight(), 5);

        assert_eq!(
            build_grid(&d, &["zz"], GridStrategy::Sample).unwrap_err(),
            Error::NoSuchColumn("zz".into())
        );
    }

    #[test]
    fn constant_feature_scores_zero() {
        let d = ds(vec![0.0, 1.0, 2.0, 5.0], vec![("c", vec![0.0; 4])]);
        for strategy in [GridStrategy::Sample, GridStrategy::Full] {
            let g = build_grid(&d, &["c"], strategy).unwrap();
            let s = fraction_scores(&d, &["c"], &g).unwrap();
            assert_eq!(s.forward, 0.0);
            assert_eq!(s.reverse, 0.0);
        }
    }

    #[test]
    fn degenerate_target_is_an_error() {
        let d = ds(vec![1.0; 4], vec![("a", vec![0.0, 1.0, 2.0, 3.0])]);
        let g = build_grid(&d, &["a"], GridStrategy::Sample).unwrap();
        assert_eq!(fraction_scores(&d, &["a"], &g).unwrap_err(), Error::DegenerateTarget);
    }

    #[test]
    fn hand_computed_fraction() {
        // y = x = [0, 1, 2]. Forward conditioning sets are {0}, {0,1}, {0,1,2}:
        // entropies 0, (1/2)ln2 * 1 gap, H. Mean residual = (0 + 0.5 ln 2 / H + 1) / 3.
        let d = ds(vec![0.0, 1.0, 2.0], vec![("x", vec![0.0, 1.0, 2.0])]);
        let g = build_grid(&d, &["x"], GridStrategy::Sample).unwrap();
        let s = fraction_scores(&d, &["x"], &g).unwrap();
        let h = 0.636_514_168_294_813_2;
        let expected = 1.0 - (0.0 + 0.5 * std::f64::consts::LN_2 / h + 1.0) / 3.0;
        assert_abs_diff_eq!(s.forward, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(s.reverse, expected, epsilon = 1e-12);
    }

    #[test]
    fn grid_of_other_subset_rejected() {
        let d = ds(vec![0.0, 1.0, 2.0], vec![("x", vec![0.0, 1.0, 2.0]), ("z", vec![1.0, 0.0, 2.0])]);
        let g = build_grid(&d, &["x"], GridStrategy::Sample).unwrap();
        assert!(fraction_scores(&d, &["z"], &g).is_err());
    }
}
