use serde::{Deserialize, Serialize};

use super::FeatureMatrix;

/// Nearest neighbour under Euclidean distance; ties go to the earliest row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneNnModel {
    pub num_classes: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl OneNnModel {
    pub fn fit(fm: &FeatureMatrix) -> Self {
        OneNnModel {
            num_classes: fm.num_classes(),
            rows: fm.rows().to_vec(),
            labels: fm.labels().to_vec(),
        }
    }

    pub fn num_features(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn nearest(&self, row: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, r) in self.rows.iter().enumerate() {
            let d: f64 = r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    pub fn proba(&self, row: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.num_classes];
        p[self.labels[self.nearest(row)]] = 1.0;
        p
    }
}
