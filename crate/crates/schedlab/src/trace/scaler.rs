//! Min-max feature scaling to [0, 1].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-feature min/max fitted on a training matrix.
///
/// `transform` maps the fitted minimum to 0 and maximum to 1; a constant
/// feature (min == max) maps to 0 everywhere. Values outside the fitted
/// range extrapolate linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl FeatureScaler {
    pub fn fit(matrix: &[Vec<f64>]) -> Result<Self> {
        let first = matrix
            .first()
            .ok_or_else(|| Error::validation("cannot fit a scaler on an empty matrix"))?;
        let d = first.len();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for row in matrix {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(FeatureScaler { min, max })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| {
                let range = self.max[j] - self.min[j];
                if range == 0.0 {
                    0.0
                } else {
                    (v - self.min[j]) / range
                }
            })
            .collect()
    }

    pub fn transform(&self, matrix: &[Vec<f64>]) -> Vec<Vec<f64>> {
        matrix.iter().map(|r| self.transform_row(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> Vec<Vec<f64>> {
        values.iter().map(|&v| vec![v]).collect()
    }

    #[test]
    fn endpoints_map_to_zero_and_one() {
        let scaler = FeatureScaler::fit(&column(&[1.0, 3.0])).unwrap();
        let out = scaler.transform(&column(&[1.0, 3.0]));
        assert_eq!(out, column(&[0.0, 1.0]));
    }

    #[test]
    fn constant_feature_maps_to_zero() {
        let scaler = FeatureScaler::fit(&column(&[5.0, 5.0, 5.0])).unwrap();
        let out = scaler.transform(&column(&[5.0, 5.0, 5.0]));
        assert_eq!(out, column(&[0.0, 0.0, 0.0]));
    }

    #[test]
    fn interior_points_interpolate() {
        let scaler = FeatureScaler::fit(&column(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        let out = scaler.transform(&column(&[1.0, 2.0, 3.0, 4.0]));
        let expected = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for (got, want) in out.iter().zip(expected) {
            assert!((got[0] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn fitting_set_lands_in_unit_interval() {
        let matrix: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i * 7 % 13) as f64, -3.5 + i as f64 * 0.25, 42.0])
            .collect();
        let scaler = FeatureScaler::fit(&matrix).unwrap();
        for row in scaler.transform(&matrix) {
            for v in row {
                assert!((0.0..=1.0).contains(&v), "out of range: {v}");
            }
        }
    }
}
