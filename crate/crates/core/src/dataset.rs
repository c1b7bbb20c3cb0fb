//! Column-major table of real-valued features plus one target column.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// An immutable table of named feature columns and a named target column.
///
/// Construction validates that every column has the same length, that no
/// value is NaN or infinite and that all names (target included) are unique.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    features: Vec<Vec<f64>>,
    target_name: String,
    target: Vec<f64>,
}

impl Dataset {
    pub fn new(
        target_name: impl Into<String>,
        target: Vec<f64>,
        features: Vec<(String, Vec<f64>)>,
    ) -> Result<Self> {
        let target_name = target_name.into();
        let n = target.len();
        if n == 0 {
            return Err(Error::EmptyColumn);
        }
        check_finite(&target_name, &target)?;

        let mut seen = HashSet::new();
        seen.insert(target_name.clone());
        let mut feature_names = Vec::with_capacity(features.len());
        let mut columns = Vec::with_capacity(features.len());
        for (name, values) in features {
            if !seen.insert(name.clone()) {
                return Err(Error::DuplicateColumn(name));
            }
            if values.len() != n {
                return Err(Error::RaggedColumn {
                    name,
                    len: values.len(),
                    expected: n,
                });
            }
            check_finite(&name, &values)?;
            feature_names.push(name);
            columns.push(values);
        }

        Ok(Self {
            feature_names,
            features: columns,
            target_name,
            target,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature(&self, index: usize) -> &[f64] {
        &self.features[index]
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::NoSuchColumn(name.to_string()))
    }

    /// Column of either a feature or the target, by name.
    pub fn column(&self, name: &str) -> Result<&[f64]> {
        if name == self.target_name {
            return Ok(&self.target);
        }
        Ok(&self.features[self.feature_index(name)?])
    }

    /// Resolves names to feature indices, sorted ascending and deduplicated.
    ///
    /// The canonical order makes every downstream computation independent of
    /// the order in which a subset was spelled out.
    pub fn resolve<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        if names.is_empty() {
            return Err(Error::EmptySubset);
        }
        let mut idx = names
            .iter()
            .map(|n| self.feature_index(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        idx.sort_unstable();
        idx.dedup();
        Ok(idx)
    }

    pub fn names_of(&self, subset: &[usize]) -> Vec<String> {
        subset
            .iter()
            .map(|&i| self.feature_names[i].clone())
            .collect()
    }

    /// Returns a copy with one more feature column appended.
    pub fn with_feature(&self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let mut features: Vec<(String, Vec<f64>)> = self
            .feature_names
            .iter()
            .cloned()
            .zip(self.features.iter().cloned())
            .collect();
        features.push((name.into(), values));
        Self::new(self.target_name.clone(), self.target.clone(), features)
    }

    /// Returns a copy with the target replaced.
    pub fn with_target(&self, target: Vec<f64>) -> Result<Self> {
        let features = self
            .feature_names
            .iter()
            .cloned()
            .zip(self.features.iter().cloned())
            .collect();
        Self::new(self.target_name.clone(), target, features)
    }

    /// Returns a copy restricted to the given feature indices (in that order).
    pub fn select(&self, subset: &[usize]) -> Result<Self> {
        let features = subset
            .iter()
            .map(|&i| (self.feature_names[i].clone(), self.features[i].clone()))
            .collect();
        Self::new(self.target_name.clone(), self.target.clone(), features)
    }

    /// Returns a copy whose rows are reordered so that row `k` is old row `order[k]`.
    pub fn permute_rows(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n_rows() {
            return Err(Error::InvalidArgument(format!(
                "row permutation has {} entries for {} rows",
                order.len(),
                self.n_rows()
            )));
        }
        let pick = |col: &[f64]| order.iter().map(|&k| col[k]).collect::<Vec<_>>();
        let features = self
            .feature_names
            .iter()
            .cloned()
            .zip(self.features.iter().map(|c| pick(c)))
            .collect();
        Self::new(self.target_name.clone(), pick(&self.target), features)
    }
}

fn check_finite(name: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(row) => Err(Error::NonFinite {
            name: name.to_string(),
            row,
        }),
        None => Ok(()),
    }
}
