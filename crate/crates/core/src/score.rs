//! Baseline-adjusted scores: the selection score (worse orientation) and the
//! assessment score (mean of both orientations).

use std::cmp::Ordering;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::ExpectedResidual;
use crate::dataset::Dataset;
use crate::error::Result;
use crate::estimators::{build_grid_indices, GridStrategy, Orientation, TargetLevels};

/// Suffix of the shuffled companion column used by the one-dimensional correction.
pub const SHUFFLED_SUFFIX: &str = "~shuffled";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorePair {
    pub d_forward: f64,
    pub d_reverse: f64,
    pub baseline_forward: f64,
    pub baseline_reverse: f64,
}

impl ScorePair {
    pub fn adjusted_forward(&self) -> f64 {
        self.d_forward - self.baseline_forward
    }

    pub fn adjusted_reverse(&self) -> f64 {
        self.d_reverse - self.baseline_reverse
    }

    pub fn selection(&self) -> f64 {
        self.adjusted_forward().min(self.adjusted_reverse())
    }

    pub fn assessment(&self) -> f64 {
        0.5 * (self.d_forward + self.d_reverse) - 0.5 * (self.baseline_forward + self.baseline_reverse)
    }

    /// Unadjusted search criterion `min(D, D')`.
    pub fn criterion(&self) -> f64 {
        self.d_forward.min(self.d_reverse)
    }

    /// Bounding value `1 - min(D0, D0')`.
    pub fn bound(&self) -> f64 {
        1.0 - self.baseline_forward.min(self.baseline_reverse)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetScore {
    /// Feature names in dataset column order.
    pub subset: Vec<String>,
    pub selection_score: f64,
    pub assessment_score: f64,
    pub pair: ScorePair,
    pub n: usize,
}

impl SubsetScore {
    pub fn new(subset: Vec<String>, pair: ScorePair, n: usize) -> Self {
        Self {
            subset,
            selection_score: pair.selection(),
            assessment_score: pair.assessment(),
            pair,
            n,
        }
    }
}

struct Side {
    levels: TargetLevels,
    table: OnceLock<ExpectedResidual>,
}

/// Scores subsets of one dataset, sharing the target's sorted levels and
/// baseline tables between calls.
pub struct Scorer<'a> {
    dataset: &'a Dataset,
    strategy: GridStrategy,
    shuffle_seed: Option<u64>,
    sides: [Side; 2],
}

impl<'a> Scorer<'a> {
    pub fn new(dataset: &'a Dataset, strategy: GridStrategy) -> Result<Self> {
        let side = |o| -> Result<Side> {
            Ok(Side {
                levels: TargetLevels::new(dataset.target(), o)?,
                table: OnceLock::new(),
            })
        };
        Ok(Self {
            dataset,
            strategy,
            shuffle_seed: None,
            sides: [side(Orientation::Forward)?, side(Orientation::Reverse)?],
        })
    }

    /// Scores single features together with a shuffled copy of themselves,
    /// so that one-dimensional scores sit on the same footing as
    /// multi-dimensional ones.
    pub fn with_shuffle_correction(mut self, seed: u64) -> Self {
        self.shuffle_seed = Some(seed);
        self
    }

    pub fn dataset(&self) -> &Dataset {
        self.dataset
    }

    pub fn strategy(&self) -> GridStrategy {
        self.strategy
    }

    pub fn score<S: AsRef<str>>(&self, subset: &[S]) -> Result<SubsetScore> {
        self.score_indices(&self.dataset.resolve(subset)?)
    }

    /// `features` must be sorted ascending without duplicates.
    pub fn score_indices(&self, features: &[usize]) -> Result<SubsetScore> {
        let names = self.dataset.names_of(features);
        let pair = match (self.shuffle_seed, features) {
            (Some(seed), &[f]) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(f as u64);
                let mut copy = self.dataset.feature(f).to_vec();
                copy.shuffle(&mut rng);
                let extended = self.dataset.select(&[f])?.with_feature(format!("{}{SHUFFLED_SUFFIX}", names[0]), copy)?;
                self.pair_on(&extended, &[0, 1])?
            }
            _ => self.pair_on(self.dataset, features)?,
        };
        Ok(SubsetScore::new(names, pair, self.dataset.n_rows()))
    }

    fn pair_on(&self, data: &Dataset, features: &[usize]) -> Result<ScorePair> {
        let grid = build_grid_indices(data, features, self.strategy)?;
        let mut d = [0.0; 2];
        let mut d0 = [0.0; 2];
        for (k, side) in self.sides.iter().enumerate() {
            let terms = side.levels.grid_terms(data, &grid);
            d[k] = side.levels.fraction_from_terms(&grid, &terms);
            let table = side.table.get_or_init(|| ExpectedResidual::new(&side.levels));
            d0[k] = table.fraction(&grid, terms.iter().map(|&(b, _)| b));
        }
        Ok(ScorePair {
            d_forward: d[0],
            d_reverse: d[1],
            baseline_forward: d0[0],
            baseline_reverse: d0[1],
        })
    }
}

pub fn score_subset<S: AsRef<str>>(dataset: &Dataset, subset: &[S], grid_strategy: GridStrategy) -> Result<SubsetScore> {
    Scorer::new(dataset, grid_strategy)?.score(subset)
}

/// Descending selection score, then fewer features, then names.
pub fn compare_scores(a: &SubsetScore, b: &SubsetScore) -> Ordering {
    b.selection_score
        .total_cmp(&a.selection_score)
        .then(a.subset.len().cmp(&b.subset.len()))
        .then_with(|| {
            let mut x = a.subset.clone();
            let mut y = b.subset.clone();
            x.sort();
            y.sort();
            x.cmp(&y)
        })
}

pub fn rank_table_ordering(mut scores: Vec<SubsetScore>) -> Vec<SubsetScore> {
    scores.sort_by(compare_scores);
    scores
}
