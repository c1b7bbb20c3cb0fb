//! CSV input/output, feature augmentation and run reports.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::score::SubsetScore;

pub const SCHEMA_VERSION: u32 = 1;

pub fn load_csv(path: impl AsRef<Path>, target_name: &str) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_csv(file, target_name)
}

/// Parses a header row and numeric cells; rows are numbered from 1 after the header.
pub fn read_csv<R: Read>(reader: R, target_name: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Io(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(Error::DuplicateColumn(h.clone()));
        }
    }
    let target_col = header
        .iter()
        .position(|h| h == target_name)
        .ok_or_else(|| Error::TargetNotFound(target_name.to_string()))?;

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (k, record) in rdr.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        for (c, name) in header.iter().enumerate() {
            let cell = record.get(c).unwrap_or("");
            let fail = |message: String| Error::Parse {
                row,
                column: name.clone(),
                message,
            };
            if cell.is_empty() {
                return Err(fail("missing value".into()));
            }
            let v: f64 = cell.parse().map_err(|_| fail(format!("not a number: {cell:?}")))?;
            if !v.is_finite() {
                return Err(fail(format!("non-finite value: {cell:?}")));
            }
            columns[c].push(v);
        }
    }
    let n = columns.first().map_or(0, Vec::len);
    if n < 3 {
        return Err(Error::TooFewSamples(n));
    }
    let target = std::mem::take(&mut columns[target_col]);
    let features = header
        .into_iter()
        .zip(columns)
        .enumerate()
        .filter(|(c, _)| *c != target_col)
        .map(|(_, pair)| pair)
        .collect();
    Dataset::new(target_name, target, features)
}

/// Writes features followed by the target, 17 significant digits per value.
pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut header: Vec<&str> = dataset.feature_names().iter().map(String::as_str).collect();
    header.push(dataset.target_name());
    w.write_record(&header).map_err(io)?;
    for k in 0..dataset.n_rows() {
        let mut row: Vec<String> = (0..dataset.n_features())
            .map(|f| format!("{:.16e}", dataset.feature(f)[k]))
            .collect();
        row.push(format!("{:.16e}", dataset.target()[k]));
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    write_csv(dataset, std::io::BufWriter::new(file))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Negate,
    Abs,
}

impl Transform {
    pub fn suffix(self) -> &'static str {
        match self {
            Transform::Negate => "_neg",
            Transform::Abs => "_abs",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Transform::Negate => -v,
            Transform::Abs => v.abs(),
        }
    }
}

impl std::str::FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "negate" => Ok(Transform::Negate),
            "abs" => Ok(Transform::Abs),
            other => Err(Error::InvalidArgument(format!("unknown transform {other:?}"))),
        }
    }
}

/// Dense ranks: equal for two columns exactly when they are order-isomorphic.
fn dense_ranks(values: &[f64]) -> Vec<u32> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0u32; values.len()];
    let mut rank = 0;
    for w in 0..idx.len() {
        if w > 0 && values[idx[w]] != values[idx[w - 1]] {
            rank += 1;
        }
        ranks[idx[w]] = rank;
    }
    ranks
}

/// Appends transformed copies of every original feature, skipping copies
/// that carry the same ordering as a column already present.
pub fn augment(dataset: &Dataset, transforms: &[Transform]) -> Result<Dataset> {
    let mut names: HashSet<String> = dataset.feature_names().iter().cloned().collect();
    names.insert(dataset.target_name().to_string());
    let mut orders: HashSet<Vec<u32>> = (0..dataset.n_features()).map(|f| dense_ranks(dataset.feature(f))).collect();

    let mut features: Vec<(String, Vec<f64>)> = dataset
        .feature_names()
        .iter()
        .cloned()
        .zip((0..dataset.n_features()).map(|f| dataset.feature(f).to_vec()))
        .collect();
    for f in 0..dataset.n_features() {
        for &t in transforms {
            let column: Vec<f64> = dataset.feature(f).iter().map(|&v| t.apply(v)).collect();
            if !orders.insert(dense_ranks(&column)) {
                continue;
            }
            let name = format!("{}{}", dataset.feature_names()[f], t.suffix());
            if !names.insert(name.clone()) {
                return Err(Error::AugmentationNameClash(name));
            }
            features.push((name, column));
        }
    }
    Dataset::new(dataset.target_name(), dataset.target().to_vec(), features)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub subset: Vec<String>,
    pub selection_score: f64,
    pub assessment_score: f64,
    pub d_forward: f64,
    pub d_reverse: f64,
    pub baseline_forward: f64,
    pub baseline_reverse: f64,
}

impl From<&SubsetScore> for ResultRow {
    fn from(s: &SubsetScore) -> Self {
        Self {
            subset: s.subset.clone(),
            selection_score: s.selection_score,
            assessment_score: s.assessment_score,
            d_forward: s.pair.d_forward,
            d_reverse: s.pair.d_reverse,
            baseline_forward: s.pair.baseline_forward,
            baseline_reverse: s.pair.baseline_reverse,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub evaluated_nodes: u64,
    pub pruned_nodes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

/// Machine-readable record of one CLI run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub config: serde_json::Value,
    pub results: Vec<ResultRow>,
    pub stats: Stats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
    pub timing: Timing,
    pub version: String,
    pub seed: u64,
}

impl RunReport {
    pub fn new(command: &str, config: serde_json::Value, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config,
            results: Vec::new(),
            stats: Stats::default(),
            details: None,
            timing: Timing { wall_seconds: 0.0 },
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }

    /// One header line plus one line per result; subsets joined by commas.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "subset\tselection_score\tassessment_score\td_forward\td_reverse\tbaseline_forward\tbaseline_reverse\n",
        );
        for r in &self.results {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.subset.join(","),
                r.selection_score,
                r.assessment_score,
                r.d_forward,
                r.d_reverse,
                r.baseline_forward,
                r.baseline_reverse
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, target: &str) -> Result<Dataset> {
        read_csv(text.as_bytes(), target)
    }

    #[test]
    fn loads_three_columns() {
        let d = parse("a,b,y\n1,2,3\n4,5,6\n7,8,9\n", "y").unwrap();
        assert_eq!(d.n_features(), 2);
        assert_eq!(d.target(), &[3.0, 6.0, 9.0]);
        assert_eq!(d.feature_names(), &["a", "b"]);
    }

    #[test]
    fn input_errors() {
        let e = parse("a,b,y\n1,,3\n4,5,6\n7,8,9\n", "y").unwrap_err();
        assert_eq!(
            e,
            Error::Parse {
                row: 1,
                column: "b".into(),
                message: "missing value".into()
            }
        );
        assert!(matches!(parse("a,b,y\n1,2,3\n4,x,6\n7,8,9\n", "y").unwrap_err(), Error::Parse { row: 2, .. }));
        assert_eq!(parse("a,a,y\n1,2,3\n", "y").unwrap_err(), Error::DuplicateColumn("a".into()));
        assert_eq!(parse("a,b\n1,2\n1,2\n1,2\n", "y").unwrap_err(), Error::TargetNotFound("y".into()));
        assert_eq!(parse("a,y\n1,2\n1,2\n", "y").unwrap_err(), Error::TooFewSamples(2));
    }

    #[test]
    fn augmentation_rules() {
        let d = Dataset::new(
            "y",
            vec![0.0, 1.0, 2.0],
            vec![("a".into(), vec![-1.0, 0.5, 2.0]), ("p".into(), vec![3.0, 0.0, 1.0])],
        )
        .unwrap();
        assert_eq!(augment(&d, &[Transform::Negate]).unwrap().n_features(), 4);
        // |p| == p, and |a| orders like nothing else
        let both = augment(&d, &[Transform::Abs]).unwrap();
        assert_eq!(both.feature_names(), &["a", "p", "a_abs"]);
        let all = augment(&d, &[Transform::Negate, Transform::Abs]).unwrap();
        assert_eq!(all.feature_names(), &["a", "p", "a_neg", "a_abs", "p_neg"]);

        let clash = Dataset::new(
            "y",
            vec![0.0, 1.0, 2.0],
            vec![("a".into(), vec![-1.0, 0.5, 2.0]), ("a_neg".into(), vec![5.0, 1.0, 3.0])],
        )
        .unwrap();
        assert_eq!(
            augment(&clash, &[Transform::Negate]).unwrap_err(),
            Error::AugmentationNameClash("a_neg".into())
        );
    }

    #[test]
    fn round_trip_is_exact() {
        let d = Dataset::new(
            "y",
            vec![0.1, 1.0 / 3.0, -2.5e-300],
            vec![("a".into(), vec![std::f64::consts::PI, 1e300, -0.0])],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), "y").unwrap();
        assert_eq!(back, d);
    }
}
