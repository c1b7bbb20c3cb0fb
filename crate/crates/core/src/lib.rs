//! Total cumulative mutual information (TCMI) for continuous targets and
//! optimal feature-subset selection by branch and bound.
//!
//! The fraction of cumulative information `D(Y; X)` measures how much of the
//! cumulative entropy of `Y` disappears when conditioning on cumulative
//! events of the features `X`. It is estimated without density estimation
//! or binning, only ranks of the features enter, and it is corrected for
//! its chance level under independence.
//!
//! ```
//! use tcmi::{score_subset, Dataset, GridStrategy};
//!
//! let y: Vec<f64> = (0..50).map(|i| i as f64).collect();
//! let x: Vec<f64> = y.iter().map(|v| v * v).collect();
//! let data = Dataset::new("y", y, vec![("x".into(), x)]).unwrap();
//! let score = score_subset(&data, &["x"], GridStrategy::Sample).unwrap();
//! assert!(score.assessment_score > 0.3);
//! ```

pub mod baseline;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod search;
pub mod synthdata;
pub mod score;

pub use baseline::{
    expected_fraction, expected_fraction_rank_table, expected_fraction_mc, expected_gap, hypergeometric_weight,
    BaselineEstimate, BaselineMethod, ContingencyLayout,
};
pub use dataset::Dataset;
pub use error::{Error, Result};
pub use estimators::{
    build_grid, cumulative_entropy, fraction_scores, sorted_profile, FractionPair, GridSpec, GridStrategy, Orientation,
    SortedProfile,
};
pub use search::{
    bound, branch_and_bound, criterion, exhaustive, FeatureOrder, PruneEvent, PruneReason, SearchConfig, SearchMode,
    SearchResult,
};
pub use score::{rank_table_ordering, score_subset, ScorePair, Scorer, SubsetScore};
