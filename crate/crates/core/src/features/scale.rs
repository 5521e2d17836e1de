// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

/// Per-feature min-max scaler.
///
/// Infinite entries (unreachable distances) are clamped to the largest
/// finite value seen for that feature before fitting and applying. A
/// feature whose min equals its max scales to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaler {
    /// Fits on `rows`; every row must have the same length. Panics on an
    /// empty input.
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Scaler {
        assert!(!rows.is_empty(), "cannot fit a scaler on zero vectors");
        let dim = rows[0].as_ref().len();
        let mut min = vec![f64::INFINITY; dim];
        let mut max = vec![f64::NEG_INFINITY; dim];
        for r in rows {
            for (j, &v) in r.as_ref().iter().enumerate() {
                if v.is_finite() {
                    min[j] = min[j].min(v);
                    max[j] = max[j].max(v);
                }
            }
        }
        for j in 0..dim {
            if !min[j].is_finite() {
                min[j] = 0.0;
                max[j] = 0.0;
            }
            // an infinite entry clamps to the finite max, which is then the
            // minimum too if nothing smaller was seen
        }
        Scaler { min, max }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .enumerate()
            .map(|(j, &x)| {
                let (lo, hi) = (self.min[j], self.max[j]);
                let x = if x.is_finite() { x } else { hi };
                if hi > lo {
                    ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_vector_scales_to_zero() {
        let s = Scaler::fit(&[vec![3.0, 5.0, f64::INFINITY]]);
        assert_eq!(s.apply(&[3.0, 5.0, f64::INFINITY]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn one_differing_feature() {
        let rows = vec![vec![1.0, 2.0, 7.0], vec![1.0, 4.0, 7.0]];
        let s = Scaler::fit(&rows);
        assert_eq!(s.apply(&rows[0]), vec![0.0, 0.0, 0.0]);
        assert_eq!(s.apply(&rows[1]), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn infinity_clamps_to_finite_max() {
        let rows = vec![vec![1.0], vec![3.0], vec![f64::INFINITY]];
        let s = Scaler::fit(&rows);
        assert_eq!(s.max, vec![3.0]);
        assert_eq!(s.apply(&rows[2]), vec![1.0]);
    }

    proptest! {
        #[test]
        fn min_vector_maps_to_zero(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 4), 1..20)) {
            let s = Scaler::fit(&rows);
            let mins: Vec<f64> = (0..4).map(|j| rows.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min)).collect();
            prop_assert!(s.apply(&mins).iter().all(|&x| x == 0.0));
            for r in &rows {
                prop_assert!(s.apply(r).iter().all(|&x| (0.0..=1.0).contains(&x)));
            }
        }
    }
}
