//! Subset search: depth-first branch and bound and an exhaustive oracle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimators::GridStrategy;
use crate::score::{compare_scores, rank_table_ordering, Scorer, SubsetScore};

/// Exhaustive search refuses lattices with more nodes than this.
pub const EXHAUSTIVE_BUDGET: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    BranchAndBound,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureOrder {
    UnivariateScoreDesc,
    InputOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Largest subset size considered; capped at the number of features.
    pub max_dim: usize,
    /// Length of the returned ranking.
    pub top_k: usize,
    pub grid_strategy: GridStrategy,
    pub mode: SearchMode,
    pub feature_order: FeatureOrder,
    /// Seed of the shuffled-copy correction for single features, if enabled.
    pub shuffle_seed: Option<u64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_dim: 3,
            top_k: 10,
            grid_strategy: GridStrategy::Sample,
            mode: SearchMode::BranchAndBound,
            feature_order: FeatureOrder::UnivariateScoreDesc,
            shuffle_seed: None,
        }
    }
}

/// Why a node was not expanded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneReason {
    /// Criterion reached the bound (`Q >= Q_bar`).
    Saturated,
    /// Bound does not exceed the incumbent.
    Bounded,
}

/// A node whose descendants were skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneEvent {
    /// Feature indices of the node.
    pub node: Vec<usize>,
    /// Features that descendants of the node could have added.
    pub extensions: Vec<usize>,
    /// Best selection score known when the node was pruned.
    pub incumbent: f64,
    pub reason: PruneReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Best `top_k` evaluated subsets, best first.
    pub ranked: Vec<SubsetScore>,
    pub evaluated_nodes: u64,
    pub pruned_nodes: u64,
    pub optimal: SubsetScore,
    pub prunes: Vec<PruneEvent>,
}

/// Unadjusted criterion `min(D, D')` of a subset.
pub fn criterion<S: AsRef<str>>(dataset: &Dataset, subset: &[S], grid_strategy: GridStrategy) -> Result<f64> {
    Ok(Scorer::new(dataset, grid_strategy)?.score(subset)?.pair.criterion())
}

/// Bounding value `1 - min(D0, D0')` of a subset.
pub fn bound<S: AsRef<str>>(dataset: &Dataset, subset: &[S], grid_strategy: GridStrategy) -> Result<f64> {
    Ok(Scorer::new(dataset, grid_strategy)?.score(subset)?.pair.bound())
}

fn scorer<'a>(dataset: &'a Dataset, config: &SearchConfig) -> Result<Scorer<'a>> {
    if dataset.n_features() == 0 {
        return Err(Error::NoFeatures);
    }
    if config.max_dim == 0 || config.top_k == 0 {
        return Err(Error::InvalidArgument("max_dim and top_k must be positive".into()));
    }
    let s = Scorer::new(dataset, config.grid_strategy)?;
    Ok(match config.shuffle_seed {
        Some(seed) => s.with_shuffle_correction(seed),
        None => s,
    })
}

pub fn search(dataset: &Dataset, config: &SearchConfig) -> Result<SearchResult> {
    match config.mode {
        SearchMode::BranchAndBound => branch_and_bound(dataset, config),
        SearchMode::Exhaustive => exhaustive(dataset, config),
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// Number of non-empty subsets of `m` items with at most `k` elements.
fn lattice_size(m: usize, k: usize) -> u128 {
    (1..=k.min(m)).map(|j| binomial(m, j)).sum()
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

struct Bnb<'s, 'a> {
    scorer: &'s Scorer<'a>,
    order: Vec<usize>,
    max_dim: usize,
    evaluated: Vec<SubsetScore>,
    incumbent: Option<SubsetScore>,
    pruned: u64,
    prunes: Vec<PruneEvent>,
}

impl Bnb<'_, '_> {
    fn offer(&mut self, s: &SubsetScore) {
        let better = match &self.incumbent {
            None => true,
            Some(best) => compare_scores(s, best).is_lt(),
        };
        if better {
            self.incumbent = Some(s.clone());
        }
    }

    /// Evaluates the children of `node` (positions into `order`) and descends.
    fn expand(&mut self, node: &[usize]) -> Result<()> {
        let start = node.last().map_or(0, |&p| p + 1);
        let children: Vec<Vec<usize>> = (start..self.order.len())
            .map(|p| {
                let mut c = node.to_vec();
                c.push(p);
                c
            })
            .collect();
        let scorer = self.scorer;
        let order = &self.order;
        let scores = children
            .par_iter()
            .map(|c| scorer.score_indices(&sorted(c.iter().map(|&p| order[p]).collect())))
            .collect::<Result<Vec<_>>>()?;

        for (child, score) in children.iter().zip(scores) {
            self.offer(&score);
            let remaining = self.order.len() - 1 - child[child.len() - 1];
            let depth_left = self.max_dim - child.len();
            let (q, q_bar) = (score.pair.criterion(), score.pair.bound());
            let incumbent = self.incumbent.as_ref().map_or(f64::NEG_INFINITY, |s| s.selection_score);
            self.evaluated.push(score);
            if remaining == 0 || depth_left == 0 {
                continue;
            }
            if q < q_bar && q_bar > incumbent {
                self.expand(child)?;
            } else {
                self.pruned += lattice_size(remaining, depth_left) as u64;
                self.prunes.push(PruneEvent {
                    node: sorted(child.iter().map(|&p| self.order[p]).collect()),
                    extensions: sorted(self.order[child[child.len() - 1] + 1..].to_vec()),
                    incumbent,
                    reason: if q < q_bar {
                        PruneReason::Bounded
                    } else {
                        PruneReason::Saturated
                    },
                });
            }
        }
        Ok(())
    }
}

/// Depth-first branch and bound.
///
/// Children append features that come after the node's last feature in the
/// configured order. A node is expanded only while its criterion is below its
/// bound and the bound exceeds the best selection score found so far.
pub fn branch_and_bound(dataset: &Dataset, config: &SearchConfig) -> Result<SearchResult> {
    let scorer = scorer(dataset, config)?;
    let d = dataset.n_features();
    let order: Vec<usize> = match config.feature_order {
        FeatureOrder::InputOrder => (0..d).collect(),
        FeatureOrder::UnivariateScoreDesc => {
            let singles = (0..d)
                .into_par_iter()
                .map(|f| scorer.score_indices(&[f]).map(|s| (f, s)))
                .collect::<Result<Vec<_>>>()?;
            let mut singles = singles;
            singles.sort_by(|a, b| compare_scores(&a.1, &b.1).then(a.0.cmp(&b.0)));
            singles.into_iter().map(|(f, _)| f).collect()
        }
    };
    let mut bnb = Bnb {
        scorer: &scorer,
        order,
        max_dim: config.max_dim.min(d),
        evaluated: Vec::new(),
        incumbent: None,
        pruned: 0,
        prunes: Vec::new(),
    };
    bnb.expand(&[])?;
    finish(bnb.evaluated, bnb.pruned, bnb.prunes, config.top_k)
}

fn finish(evaluated: Vec<SubsetScore>, pruned: u64, prunes: Vec<PruneEvent>, top_k: usize) -> Result<SearchResult> {
    let evaluated_nodes = evaluated.len() as u64;
    let mut ranked = rank_table_ordering(evaluated);
    let optimal = ranked.first().cloned().ok_or(Error::NoFeatures)?;
    ranked.truncate(top_k);
    Ok(SearchResult {
        ranked,
        evaluated_nodes,
        pruned_nodes: pruned,
        optimal,
        prunes,
    })
}

/// All `k`-combinations of `0..m` in lexicographic order.
pub(crate) fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > m {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let mut i = k;
        while i > 0 && c[i - 1] == m - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        c[i - 1] += 1;
        for j in i..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// Scores every subset with at most `max_dim` features.
pub fn exhaustive(dataset: &Dataset, config: &SearchConfig) -> Result<SearchResult> {
    let scorer = scorer(dataset, config)?;
    let d = dataset.n_features();
    let max_dim = config.max_dim.min(d);
    let nodes = lattice_size(d, max_dim);
    if nodes > EXHAUSTIVE_BUDGET {
        return Err(Error::BudgetExceeded {
            nodes,
            budget: EXHAUSTIVE_BUDGET,
        });
    }
    let subsets: Vec<Vec<usize>> = (1..=max_dim).flat_map(|k| combinations(d, k)).collect();
    let evaluated = subsets
        .par_iter()
        .map(|s| scorer.score_indices(s))
        .collect::<Result<Vec<_>>>()?;
    finish(evaluated, 0, Vec::new(), config.top_k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combination_counts() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(4, 2)[0], vec![0, 1]);
        assert_eq!(combinations(4, 2)[5], vec![2, 3]);
        assert_eq!(lattice_size(3, 3), 7);
        assert_eq!(lattice_size(3, 2), 6);
        assert_eq!(lattice_size(30, 30), (1u128 << 30) - 1);
    }

    fn small() -> Dataset {
        let n = 24;
        let y: Vec<f64> = (0..n).map(|i| ((i * 7) % n) as f64).collect();
        let a: Vec<f64> = y.iter().map(|v| v * 0.5 + 1.0).collect();
        let b: Vec<f64> = (0..n).map(|i| ((i * 5) % 11) as f64).collect();
        let c: Vec<f64> = (0..n).map(|i| (i % 3) as f64).collect();
        Dataset::new("y", y, vec![("a".into(), a), ("b".into(), b), ("c".into(), c)]).unwrap()
    }

    #[test]
    fn exhaustive_node_counts() {
        let d = small();
        let mut cfg = SearchConfig {
            max_dim: 3,
            top_k: 100,
            mode: SearchMode::Exhaustive,
            ..Default::default()
        };
        assert_eq!(exhaustive(&d, &cfg).unwrap().evaluated_nodes, 7);
        cfg.max_dim = 2;
        assert_eq!(exhaustive(&d, &cfg).unwrap().evaluated_nodes, 6);
    }

    #[test]
    fn bnb_matches_exhaustive() {
        let d = small();
        let cfg = SearchConfig {
            max_dim: 3,
            top_k: 100,
            ..Default::default()
        };
        let b = branch_and_bound(&d, &cfg).unwrap();
        let e = exhaustive(&d, &cfg).unwrap();
        assert_eq!(b.optimal, e.optimal);
        assert!(b.evaluated_nodes + b.pruned_nodes <= 7);
        assert_eq!(b.optimal.subset, vec!["a"]);
    }

    #[test]
    fn budget_guard() {
        let n = 5;
        let feats = (0..40).map(|k| (format!("f{k}"), (0..n).map(|i| ((i + k) % n) as f64).collect())).collect();
        let d = Dataset::new("y", (0..n).map(|i| i as f64).collect(), feats).unwrap();
        let cfg = SearchConfig {
            max_dim: 6,
            mode: SearchMode::Exhaustive,
            ..Default::default()
        };
        assert!(matches!(exhaustive(&d, &cfg).unwrap_err(), Error::BudgetExceeded { .. }));
    }
}
