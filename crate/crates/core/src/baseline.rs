//! Expected fraction of cumulative information under independence.
//!
//! Permuting the target against the (jointly kept) feature rows leaves every
//! conditioning-set size `b_j` fixed and turns the target values inside each
//! set into a uniformly random `b_j`-subset. The expected residual ratio of a
//! grid point therefore depends only on `b_j`, and the per-level counts follow
//! a hypergeometric law. [`ExpectedResidual`] tabulates that expectation
//! exactly for every `b`, which is what [`expected_fraction`] uses.
//!
//! [`hypergeometric_weight`], [`expected_gap`] and
//! [`expected_fraction_rank_table`] implement the rank-table approximation that
//! treats the gap of each row separately; it is kept for comparison.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{build_grid_indices, GridSpec, GridStrategy, Orientation, TargetLevels};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    ClosedForm,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineEstimate {
    pub value: f64,
    pub stderr: f64,
    pub method: BaselineMethod,
    pub permutations: usize,
}

/// `ln k!` for `k = 0..=n`.
#[derive(Debug, Clone)]
pub(crate) struct LogFactorial(Vec<f64>);

impl LogFactorial {
    pub fn new(n: usize) -> Self {
        let mut t = Vec::with_capacity(n + 1);
        t.push(0.0);
        let mut acc = 0.0;
        for k in 1..=n {
            acc += (k as f64).ln();
            t.push(acc);
        }
        Self(t)
    }

    /// `ln C(n, k)`, `-inf` outside `0 <= k <= n`.
    pub fn ln_choose(&self, n: i64, k: i64) -> f64 {
        if n < 0 || k < 0 || k > n {
            return f64::NEG_INFINITY;
        }
        let (n, k) = (n as usize, k as usize);
        self.0[n] - self.0[k] - self.0[n - k]
    }
}

/// Probability that a row-`i` cell of the rank table holds `n_ij` of the
/// `b_j` column entries: `C(r-i, b-n) C(i-1, n-1) / C(r-1, b-1)`.
pub fn hypergeometric_weight(n_ij: usize, i: usize, b_j: usize, r: usize) -> Result<f64> {
    if i == 0 || i > r || b_j == 0 || b_j > r {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= i <= r and 1 <= b_j <= r (i = {i}, b_j = {b_j}, r = {r})"
        )));
    }
    let lo = (i + b_j).saturating_sub(r);
    let hi = i.min(b_j);
    if n_ij < lo || n_ij > hi {
        return Err(Error::InfeasibleCellCount { count: n_ij, lo, hi });
    }
    let lf = LogFactorial::new(r);
    let (n, i, b, r) = (n_ij as i64, i as i64, b_j as i64, r as i64);
    let ln = lf.ln_choose(r - i, b - n) + lf.ln_choose(i - 1, n - 1) - lf.ln_choose(r - 1, b - 1);
    Ok(ln.exp())
}

/// Rank-table view of a subset: distinct target levels against grid columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyLayout {
    pub n: usize,
    pub r: usize,
    pub c: usize,
    /// Multiplicity of each distinct target level, in orientation order.
    pub row_marginals: Vec<usize>,
    /// Conditioning-set size of each grid column.
    pub column_marginals: Vec<usize>,
    /// Distinct target values, ascending in the orientation's key.
    pub sorted_target_values: Vec<f64>,
}

impl ContingencyLayout {
    pub fn new(dataset: &Dataset, grid: &GridSpec, orientation: Orientation) -> Result<Self> {
        let levels = TargetLevels::new(dataset.target(), orientation)?;
        let terms = levels.grid_terms(dataset, grid);
        Ok(Self::from_levels(&levels, terms.iter().map(|&(b, _)| b).collect()))
    }

    pub(crate) fn from_levels(levels: &TargetLevels, column_marginals: Vec<usize>) -> Self {
        let mut row_marginals = Vec::with_capacity(levels.r());
        let mut prev = 0;
        for &e in &levels.level_ends {
            row_marginals.push(e - prev);
            prev = e;
        }
        Self {
            n: levels.n,
            r: levels.r(),
            c: column_marginals.len(),
            row_marginals,
            column_marginals,
            sorted_target_values: levels.values.clone(),
        }
    }

    fn gap(&self, i: usize, k: usize) -> f64 {
        (self.sorted_target_values[i - 1 + k] - self.sorted_target_values[i - 1]).abs()
    }
}

/// Expected distance from row `i` to the next occupied row of a column with
/// `b_j` entries (1-based `i`).
pub fn expected_gap(i: usize, b_j: usize, layout: &ContingencyLayout) -> Result<f64> {
    let r = layout.r;
    if i >= r {
        return Err(Error::NoGapBeyondLast { row: i, rows: r });
    }
    if i == 0 || b_j == 0 {
        return Err(Error::InvalidArgument(format!("need i >= 1 and b_j >= 1 (i = {i}, b_j = {b_j})")));
    }
    if b_j == 1 {
        let m = r - i;
        return Ok((1..=m).map(|k| layout.gap(i, k)).sum::<f64>() / m as f64);
    }
    let k_max = (layout.n + 1).saturating_sub(b_j).min(r - i).max(1);
    let lf = LogFactorial::new(r);
    let ln_w: Vec<f64> = (1..=k_max)
        .map(|k| lf.ln_choose(r as i64 - k as i64 - 1, b_j as i64 - 2))
        .collect();
    let top = ln_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        // no admissible position: the next row is the only candidate
        return Ok(layout.gap(i, 1));
    }
    let mut norm = 0.0;
    let mut acc = 0.0;
    for (k, lw) in (1..=k_max).zip(ln_w) {
        let w = (lw - top).exp();
        norm += w;
        acc += w * layout.gap(i, k);
    }
    Ok(acc / norm)
}

/// Exact expected residual ratio `g(b) = E[h(Y_S)] / H(Y)` for a uniformly
/// random `b`-subset `S` of the samples, tabulated for `b = 0..=n`.
///
/// `g(0)` and `g(n)` are 1 by convention and by construction respectively.
#[derive(Debug, Clone)]
pub struct ExpectedResidual {
    g: Vec<f64>,
}

impl ExpectedResidual {
    pub(crate) fn new(levels: &TargetLevels) -> Self {
        let n = levels.n;
        let lf = LogFactorial::new(n);
        let ln_int: Vec<f64> = (0..=n).map(|k| (k as f64).ln()).collect();
        let cums = &levels.level_ends[..levels.gaps.len()];
        let one = |b: usize| -> f64 {
            if b == 0 || b == n {
                return 1.0;
            }
            let mut e = 0.0;
            for (&gap, &a) in levels.gaps.iter().zip(cums) {
                e += gap * expected_phi(n, a, b, &lf, &ln_int);
            }
            e / levels.entropy
        };
        let g = if n < 64 {
            (0..=n).map(one).collect()
        } else {
            (0..=n).into_par_iter().map(one).collect()
        };
        Self { g }
    }

    pub fn g(&self, b: usize) -> f64 {
        self.g[b]
    }

    /// `1 - weighted mean of g(b_j)` over the grid.
    pub fn fraction(&self, grid: &GridSpec, sizes: impl Iterator<Item = usize>) -> f64 {
        let mut acc = 0.0;
        for (b, &w) in sizes.zip(&grid.multiplicity) {
            acc += w as f64 * self.g[b];
        }
        1.0 - acc / grid.total_weight() as f64
    }
}

/// `E[-(K/b) ln(K/b)]` for `K ~ Hypergeometric(population n, successes a, draws b)`.
///
/// Walks the pmf outward from its mode with the ratio recurrence and stops
/// once terms drop below double precision relative to the mode.
fn expected_phi(n: usize, a: usize, b: usize, lf: &LogFactorial, ln_int: &[f64]) -> f64 {
    let lo = (a + b).saturating_sub(n);
    let hi = a.min(b);
    let mode = (((b + 1) * (a + 1)) / (n + 2)).clamp(lo, hi);
    let (ni, ai, bi, mi) = (n as i64, a as i64, b as i64, mode as i64);
    let ln_p = lf.ln_choose(ai, mi) + lf.ln_choose(ni - ai, bi - mi) - lf.ln_choose(ni, bi);
    let p_mode = ln_p.exp();
    let bf = b as f64;
    let ln_b = ln_int[b];
    let phi = |k: usize| -> f64 {
        if k == 0 || k == b {
            0.0
        } else {
            let p = k as f64 / bf;
            -p * (ln_int[k] - ln_b)
        }
    };
    let cut = p_mode * 1e-18;

    let mut acc = p_mode * phi(mode);
    let rest = n as i64 - a as i64 - b as i64;
    let mut p = p_mode;
    for k in mode..hi {
        let kf = k as f64;
        p *= ((a - k) as f64) * ((b - k) as f64) / ((kf + 1.0) * ((rest + k as i64 + 1) as f64));
        acc += p * phi(k + 1);
        if p < cut {
            break;
        }
    }
    let mut p = p_mode;
    for k in (lo + 1..=mode).rev() {
        let kf = k as f64;
        p *= kf * ((rest + k as i64) as f64) / (((a - k + 1) as f64) * ((b - k + 1) as f64));
        acc += p * phi(k - 1);
        if p < cut {
            break;
        }
    }
    acc
}

/// Closed-form expected fraction of cumulative information under random
/// permutation of the target against the feature rows.
pub fn expected_fraction<S: AsRef<str>>(
    dataset: &Dataset,
    subset: &[S],
    grid: &GridSpec,
    orientation: Orientation,
) -> Result<BaselineEstimate> {
    check_grid(dataset, subset, grid)?;
    let levels = TargetLevels::new(dataset.target(), orientation)?;
    let table = ExpectedResidual::new(&levels);
    let terms = levels.grid_terms(dataset, grid);
    Ok(BaselineEstimate {
        value: table.fraction(grid, terms.iter().map(|&(b, _)| b)),
        stderr: 0.0,
        method: BaselineMethod::ClosedForm,
        permutations: 0,
    })
}

/// Rank-table approximation: each row contributes its expected gap times the
/// hypergeometric expectation of `-(n_ij/n) ln(n_ij/b_j)`, normalized by the
/// marginal cumulative entropy. Needs a tie-free target.
pub fn expected_fraction_rank_table<S: AsRef<str>>(
    dataset: &Dataset,
    subset: &[S],
    grid: &GridSpec,
    orientation: Orientation,
) -> Result<BaselineEstimate> {
    check_grid(dataset, subset, grid)?;
    let layout = ContingencyLayout::new(dataset, grid, orientation)?;
    let levels = TargetLevels::new(dataset.target(), orientation)?;
    if layout.r != layout.n {
        return Err(Error::InvalidArgument("rank-table approximation needs distinct target values".into()));
    }
    let r = layout.r;
    let mut cache: Vec<Option<f64>> = vec![None; r + 1];
    let mut acc = 0.0;
    for (&b, &w) in layout.column_marginals.iter().zip(&grid.multiplicity) {
        let ratio = if b == 0 || b == r {
            1.0
        } else {
            match cache[b] {
                Some(v) => v,
                None => {
                    let mut h = 0.0;
                    for i in 1..r {
                        let gap = expected_gap(i, b, &layout)?;
                        let lo = (i + b).saturating_sub(r).max(1);
                        let mut e = 0.0;
                        for k in lo..=i.min(b) {
                            let share = k as f64 / layout.n as f64;
                            e -= hypergeometric_weight(k, i, b, r)? * share * (k as f64 / b as f64).ln();
                        }
                        h += gap * e;
                    }
                    let v = h / levels.entropy;
                    cache[b] = Some(v);
                    v
                }
            }
        };
        acc += w as f64 * ratio;
    }
    Ok(BaselineEstimate {
        value: 1.0 - acc / grid.total_weight() as f64,
        stderr: 0.0,
        method: BaselineMethod::ClosedForm,
        permutations: 0,
    })
}

/// Monte Carlo estimate of the expected fraction: the target is shuffled
/// against the feature rows `permutations` times.
///
/// Permutation `p` draws from its own ChaCha8 stream `(seed, p)`, so the
/// result does not depend on how work is split across threads.
pub fn expected_fraction_mc<S: AsRef<str>>(
    dataset: &Dataset,
    subset: &[S],
    grid_strategy: GridStrategy,
    orientation: Orientation,
    permutations: usize,
    seed: u64,
) -> Result<BaselineEstimate> {
    if permutations == 0 {
        return Err(Error::InvalidArgument("permutations must be at least 1".into()));
    }
    let features = dataset.resolve(subset)?;
    let grid = build_grid_indices(dataset, &features, grid_strategy)?;
    // surface a degenerate target before spawning work
    TargetLevels::new(dataset.target(), orientation)?;

    let draws: Vec<f64> = (0..permutations)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let mut target = dataset.target().to_vec();
            target.shuffle(&mut rng);
            let levels = TargetLevels::new(&target, orientation).expect("permutation keeps the target non-degenerate");
            let shuffled = dataset.with_target(target).expect("same shape");
            let terms = levels.grid_terms(&shuffled, &grid);
            levels.fraction_from_terms(&grid, &terms)
        })
        .collect();

    let p = permutations as f64;
    let mean = draws.iter().sum::<f64>() / p;
    let stderr = if permutations > 1 {
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (p - 1.0);
        (var / p).sqrt()
    } else {
        0.0
    };
    Ok(BaselineEstimate {
        value: mean,
        stderr,
        method: BaselineMethod::MonteCarlo,
        permutations,
    })
}

fn check_grid<S: AsRef<str>>(dataset: &Dataset, subset: &[S], grid: &GridSpec) -> Result<()> {
    if dataset.resolve(subset)? != grid.features {
        return Err(Error::InvalidArgument("grid was built for a different subset".into()));
    }
    Ok(())
}
