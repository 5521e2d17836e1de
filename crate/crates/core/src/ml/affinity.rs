// SPDX-License-Identifier: Apache-2.0

//! Affinity propagation clustering by responsibility/availability messages.

use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub const MAX_ITER: usize = 500;
pub const CONVERGENCE_ITER: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// Sample indices chosen as exemplars, ascending.
    pub exemplars: Vec<usize>,
    /// Cluster number (index into `exemplars`) per sample.
    pub labels: Vec<usize>,
    pub damping: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl ClusterAssignment {
    pub fn num_clusters(&self) -> usize {
        self.exemplars.len()
    }

    /// Exemplar sample index per sample.
    pub fn exemplar_of(&self, i: usize) -> usize {
        self.exemplars[self.labels[i]]
    }
}

/// Negative squared Euclidean distance between every pair of points.
pub fn neg_sq_euclidean<P: AsRef<[f64]>>(points: &[P]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| {
            points
                .iter()
                .map(|b| -a.as_ref().iter().zip(b.as_ref()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
                .collect()
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn from_exemplars(s: &[Vec<f64>], mut ex: Vec<usize>) -> (Vec<usize>, Vec<usize>) {
    let n = s.len();
    let assign = |ex: &[usize]| -> Vec<usize> {
        (0..n)
            .map(|i| {
                if let Some(k) = ex.iter().position(|&e| e == i) {
                    return k;
                }
                let mut best = 0;
                for (k, &e) in ex.iter().enumerate() {
                    if s[i][e] > s[i][ex[best]] {
                        best = k;
                    }
                }
                best
            })
            .collect()
    };
    let c = assign(&ex);
    // refine each exemplar to the member with the largest summed similarity
    for (k, e) in ex.iter_mut().enumerate() {
        let members: Vec<usize> = (0..n).filter(|&i| c[i] == k).collect();
        let mut best = members[0];
        let mut best_sum = f64::NEG_INFINITY;
        for &j in &members {
            let sum: f64 = members.iter().map(|&i| s[i][j]).sum();
            if sum > best_sum {
                best_sum = sum;
                best = j;
            }
        }
        *e = best;
    }
    ex.sort_unstable();
    ex.dedup();
    let labels = assign(&ex);
    (ex, labels)
}

/// Clusters with preference equal to the median of `similarity` (diagonal
/// included). A run that does not converge within [`MAX_ITER`] returns its
/// last state with `converged = false`.
pub fn affinity_propagation(similarity: &[Vec<f64>], damping: f64) -> Result<ClusterAssignment> {
    let n = similarity.len();
    if !(0.5..1.0).contains(&damping) {
        return Err(Error::Config(format!("damping {damping} outside [0.5, 1)")));
    }
    if n == 0 {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    if let Some(r) = similarity.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: r.len() });
    }
    let pref = median(similarity.iter().flatten().copied().collect());
    let done = |exemplars: Vec<usize>, iterations, converged| {
        let labels = (0..n)
            .map(|i| exemplars.iter().position(|&e| e == i).unwrap_or(0))
            .collect::<Vec<_>>();
        ClusterAssignment { exemplars, labels, damping, iterations, converged }
    };
    let off: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| similarity[i][j])
        .collect();
    if n == 1 || off.iter().all(|&x| x == off[0]) {
        if n > 1 && pref > off[0] {
            return Ok(done((0..n).collect(), 0, true));
        }
        let mut a = done(vec![0], 0, true);
        a.labels = vec![0; n];
        return Ok(a);
    }

    let mut s: Vec<Vec<f64>> = similarity.to_vec();
    for (i, row) in s.iter_mut().enumerate() {
        row[i] = pref;
    }
    // break ties between equally good exemplars
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for row in s.iter_mut() {
        for x in row.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *x += (f64::EPSILON * *x + f64::MIN_POSITIVE * 100.0) * z;
        }
    }

    let mut r = vec![vec![0.0; n]; n];
    let mut a = vec![vec![0.0; n]; n];
    let mut hist = vec![[false; CONVERGENCE_ITER]; n];
    let mut converged = false;
    let mut it = 0;
    let mut is_ex = vec![false; n];
    while it < MAX_ITER {
        for i in 0..n {
            let (mut k1, mut y1, mut y2) = (0, f64::NEG_INFINITY, f64::NEG_INFINITY);
            for k in 0..n {
                let v = a[i][k] + s[i][k];
                if v > y1 {
                    y2 = y1;
                    y1 = v;
                    k1 = k;
                } else if v > y2 {
                    y2 = v;
                }
            }
            for k in 0..n {
                let new = s[i][k] - if k == k1 { y2 } else { y1 };
                r[i][k] = damping * r[i][k] + (1.0 - damping) * new;
            }
        }
        for k in 0..n {
            let col: f64 = (0..n).map(|i| if i == k { r[k][k] } else { r[i][k].max(0.0) }).sum();
            for i in 0..n {
                let new = if i == k {
                    col - r[k][k]
                } else {
                    (col - r[i][k].max(0.0)).min(0.0)
                };
                a[i][k] = damping * a[i][k] + (1.0 - damping) * new;
            }
        }
        for k in 0..n {
            is_ex[k] = a[k][k] + r[k][k] > 0.0;
            hist[k][it % CONVERGENCE_ITER] = is_ex[k];
        }
        it += 1;
        if it >= CONVERGENCE_ITER {
            let stable = hist.iter().all(|h| h.iter().all(|&b| b) || h.iter().all(|&b| !b));
            if stable && is_ex.iter().any(|&b| b) {
                converged = true;
                break;
            }
        }
    }
    let ex: Vec<usize> = (0..n).filter(|&k| is_ex[k]).collect();
    if ex.is_empty() {
        log::warn!("affinity propagation found no exemplar after {it} iterations");
        let best = (0..n)
            .max_by(|&x, &y| {
                let sx: f64 = (0..n).map(|i| similarity[i][x]).sum();
                let sy: f64 = (0..n).map(|i| similarity[i][y]).sum();
                sx.total_cmp(&sy).then(y.cmp(&x))
            })
            .expect("non-empty");
        let mut a = done(vec![best], it, false);
        a.labels = vec![0; n];
        return Ok(a);
    }
    if !converged {
        log::warn!("affinity propagation did not converge in {MAX_ITER} iterations");
    }
    let (exemplars, labels) = from_exemplars(&s, ex);
    Ok(ClusterAssignment { exemplars, labels, damping, iterations: it, converged })
}

/// Parses a square similarity matrix from comma-separated rows.
pub fn read_similarity_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Config(format!("bad similarity entry {x:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    if let Some(r) = rows.iter().find(|r| r.len() != rows.len()) {
        return Err(Error::DimensionMismatch { expected: rows.len(), got: r.len() });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_points_one_cluster() {
        let pts = vec![vec![0.5, 0.5]; 6];
        let a = affinity_propagation(&neg_sq_euclidean(&pts), 0.8).unwrap();
        assert_eq!(a.num_clusters(), 1);
    }

    #[test]
    fn two_far_points() {
        let pts = vec![vec![0.0], vec![10.0]];
        let a = affinity_propagation(&neg_sq_euclidean(&pts), 0.8).unwrap();
        assert_eq!(a.exemplars, vec![0, 1]);
    }

    #[test]
    fn rejects_bad_damping() {
        let s = neg_sq_euclidean(&[vec![0.0], vec![1.0]]);
        assert!(affinity_propagation(&s, 1.0).is_err());
        assert!(affinity_propagation(&s, 0.4).is_err());
    }

    #[test]
    fn csv_reader() {
        let s = read_similarity_csv("0,-1\n-1,0\n").unwrap();
        assert_eq!(s, vec![vec![0.0, -1.0], vec![-1.0, 0.0]]);
        assert!(read_similarity_csv("0,1\n1\n").is_err());
    }
}
