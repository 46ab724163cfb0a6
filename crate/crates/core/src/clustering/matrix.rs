use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discovery::ProcessModel;
use crate::error::{Error, Result};
use crate::similarity::{distance, Measure};

const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Symmetric, hollow `p × p` matrix of distances in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    #[allow(clippy::needless_range_loop)]
    pub fn new(labels: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        let p = labels.len();
        if values.len() != p || values.iter().any(|row| row.len() != p) {
            return Err(Error::InvalidMatrix(format!("expected {p}×{p} values")));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != p {
            return Err(Error::InvalidMatrix("duplicate labels".into()));
        }
        for i in 0..p {
            if values[i][i] != 0.0 {
                return Err(Error::InvalidMatrix(format!("diagonal entry {i} is not 0")));
            }
            for j in 0..p {
                let v = values[i][j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ({i}, {j}) = {v} outside [0, 1]"
                    )));
                }
                if (v - values[j][i]).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::InvalidMatrix(format!(
                        "entries ({i}, {j}) and ({j}, {i}) differ"
                    )));
                }
            }
        }
        Ok(DistanceMatrix { labels, values })
    }

    /// Fills the upper triangle from `f` and mirrors it.
    #[allow(clippy::needless_range_loop)]
    pub fn from_fn(labels: Vec<String>, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let p = labels.len();
        let mut values = vec![vec![0.0; p]; p];
        for i in 0..p {
            for j in i + 1..p {
                let v = f(i, j);
                values[i][j] = v;
                values[j][i] = v;
            }
        }
        DistanceMatrix::new(labels, values)
    }

    /// Pairwise distances between the models under `measure`, computed in
    /// parallel. Labels follow the map's key order.
    pub fn from_models(models: &BTreeMap<String, ProcessModel>, measure: Measure) -> Result<Self> {
        let labels: Vec<String> = models.keys().cloned().collect();
        let list: Vec<&ProcessModel> = models.values().collect();
        let p = list.len();
        let pairs: Vec<(usize, usize)> = (0..p)
            .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
            .collect();
        let computed: Vec<f64> = pairs
            .par_iter()
            .map(|&(i, j)| distance(measure, list[i], list[j]).map(|d| d.value))
            .collect::<Result<_>>()?;
        let mut values = vec![vec![0.0; p]; p];
        for (&(i, j), v) in pairs.iter().zip(computed) {
            values[i][j] = v;
            values[j][i] = v;
        }
        DistanceMatrix::new(labels, values)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Entries strictly above the diagonal, row by row.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let p = self.len();
        (0..p)
            .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
            .map(|(i, j)| self.values[i][j])
            .collect()
    }
}
