// SPDX-License-Identifier: Apache-2.0

//! Random forest of CART trees with balanced class weights.

use crate::error::{Error, Result};
use crate::features::sim::derive_seed;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    /// Features tried per split; `None` means `round(sqrt(d))`.
    pub max_features: Option<usize>,
    pub min_samples_split: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { trees: 100, max_depth: 12, max_features: None, min_samples_split: 2, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    /// Class-weighted probability of the positive class.
    Leaf { p1: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { p1 } => return p1,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub n_features: usize,
    /// Weights of the negative and positive class.
    pub class_weights: [f64; 2],
    pub params: ForestParams,
    pub trees: Vec<Tree>,
}

struct Data<'a> {
    x: Vec<&'a [f64]>,
    y: Vec<bool>,
    w: [f64; 2],
}

fn gini(w0: f64, w1: f64) -> f64 {
    let t = w0 + w1;
    if t <= 0.0 {
        return 0.0;
    }
    let (p0, p1) = (w0 / t, w1 / t);
    t * (1.0 - p0 * p0 - p1 * p1)
}

struct Builder<'a> {
    data: &'a Data<'a>,
    params: &'a ForestParams,
    mtry: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn totals(&self, idx: &[usize]) -> (f64, f64) {
        let mut t = (0.0, 0.0);
        for &i in idx {
            if self.data.y[i] {
                t.1 += self.data.w[1];
            } else {
                t.0 += self.data.w[0];
            }
        }
        t
    }

    /// Best `(impurity, threshold)` for splitting `idx` on `f`.
    fn best_split(&self, idx: &[usize], f: usize, tot: (f64, f64)) -> Option<(f64, f64)> {
        let d = self.data;
        let mut order: Vec<usize> = idx.to_vec();
        order.sort_by(|&a, &b| d.x[a][f].total_cmp(&d.x[b][f]));
        let (mut l0, mut l1) = (0.0, 0.0);
        let mut best: Option<(f64, f64)> = None;
        for k in 0..order.len() - 1 {
            let i = order[k];
            if d.y[i] {
                l1 += d.w[1];
            } else {
                l0 += d.w[0];
            }
            let (a, b) = (d.x[i][f], d.x[order[k + 1]][f]);
            if a == b {
                continue;
            }
            let imp = gini(l0, l1) + gini(tot.0 - l0, tot.1 - l1);
            if best.is_none_or(|(bi, _)| imp < bi) {
                let mid = a + (b - a) / 2.0;
                let thr = if mid < b { mid } else { a };
                best = Some((imp, thr));
            }
        }
        best
    }

    fn build(&mut self, idx: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let tot = self.totals(&idx);
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf { p1: tot.1 / (tot.0 + tot.1) });
        if depth >= self.params.max_depth
            || idx.len() < self.params.min_samples_split.max(2)
            || tot.0 == 0.0
            || tot.1 == 0.0
        {
            return me;
        }
        let d = self.data.x[0].len();
        let tried = sample(rng, d, self.mtry).into_vec();
        let mut best: Option<(f64, usize, f64)> = None;
        let consider = |f: usize, best: &mut Option<(f64, usize, f64)>| {
            if let Some((imp, thr)) = self.best_split(&idx, f, tot) {
                if best.is_none_or(|(bi, _, _)| imp < bi) {
                    *best = Some((imp, f, thr));
                }
            }
        };
        for &f in &tried {
            consider(f, &mut best);
        }
        if best.is_none() {
            // keep looking past the subsample until a valid partition exists
            for f in (0..d).filter(|f| !tried.contains(f)) {
                consider(f, &mut best);
                if best.is_some() {
                    break;
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return me;
        };
        let (li, ri): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| self.data.x[i][feature] <= threshold);
        let left = self.build(li, depth + 1, rng);
        let right = self.build(ri, depth + 1, rng);
        self.nodes[me] = Node::Split { feature, threshold, left, right };
        me
    }
}

/// Trains a forest; positives are class 1.
pub fn train_classifier(
    positives: &[Vec<f64>],
    negatives: &[Vec<f64>],
    params: &ForestParams,
) -> Result<Forest> {
    if positives.is_empty() {
        return Err(Error::EmptyClass("positive"));
    }
    if negatives.is_empty() {
        return Err(Error::EmptyClass("negative"));
    }
    let dim = positives[0].len();
    for v in positives.iter().chain(negatives) {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
        }
    }
    let n = (positives.len() + negatives.len()) as f64;
    let w = [n / (2.0 * negatives.len() as f64), n / (2.0 * positives.len() as f64)];
    let data = Data {
        x: positives.iter().chain(negatives).map(|v| v.as_slice()).collect(),
        y: positives.iter().map(|_| true).chain(negatives.iter().map(|_| false)).collect(),
        w,
    };
    let mtry = params
        .max_features
        .unwrap_or_else(|| (dim as f64).sqrt().round() as usize)
        .clamp(1, dim.max(1));
    let total = data.x.len();
    let trees: Vec<Tree> = (0..params.trees.max(1))
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, &format!("tree/{t}")));
            let idx: Vec<usize> = (0..total).map(|_| rng.random_range(0..total)).collect();
            let mut b = Builder { data: &data, params, mtry, nodes: Vec::new() };
            b.build(idx, 0, &mut rng);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(Forest { n_features: dim, class_weights: w, params: *params, trees })
}

impl Forest {
    /// `[p(negative), p(positive)]`.
    pub fn predict_proba(&self, x: &[f64]) -> Result<[f64; 2]> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, got: x.len() });
        }
        let p1 = self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64;
        Ok([1.0 - p1, p1])
    }

    /// Positive-class probability of every row.
    pub fn score(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.par_iter().map(|r| self.predict_proba(r).map(|p| p[1])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blob(rng: &mut ChaCha8Rng, center: f64, n: usize, dim: usize) -> Vec<Vec<f64>> {
        let g = Normal::new(0.0, 0.05).unwrap();
        (0..n).map(|_| (0..dim).map(|_| center + g.sample(rng)).collect()).collect()
    }

    #[test]
    fn separable_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pos = blob(&mut rng, 0.8, 50, 14);
        let neg = blob(&mut rng, 0.2, 50, 14);
        let f = train_classifier(&pos, &neg, &ForestParams { trees: 20, ..Default::default() }).unwrap();
        let ok = pos.iter().filter(|x| f.predict_proba(x).unwrap()[1] > 0.5).count()
            + neg.iter().filter(|x| f.predict_proba(x).unwrap()[1] <= 0.5).count();
        assert!(ok as f64 / 100.0 >= 0.98);
        assert!(f.predict_proba(&[0.0; 14]).unwrap()[1] < 0.5);
        for t in &f.trees {
            assert!(t.depth() <= 12);
        }
    }

    #[test]
    fn empty_class_and_dimension_errors() {
        let v = vec![vec![0.0; 3]];
        assert!(matches!(train_classifier(&[], &v, &ForestParams::default()), Err(Error::EmptyClass(_))));
        assert!(matches!(train_classifier(&v, &[], &ForestParams::default()), Err(Error::EmptyClass(_))));
        let f = train_classifier(&v, &[vec![1.0; 3]], &ForestParams { trees: 3, ..Default::default() }).unwrap();
        assert!(matches!(f.predict_proba(&[0.0; 2]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn duplicated_point_is_ambiguous() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut pos = blob(&mut rng, 0.5, 1, 4);
        let neg = pos.clone();
        pos.extend(blob(&mut rng, 0.9, 1, 4));
        let mut neg = neg;
        neg.extend(blob(&mut rng, 0.1, 1, 4));
        let f = train_classifier(&pos, &neg, &ForestParams { trees: 200, ..Default::default() }).unwrap();
        let p = f.predict_proba(&pos[0]).unwrap()[1];
        assert!((p - 0.5).abs() < 0.2, "{p}");
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pos = blob(&mut rng, 0.6, 20, 5);
        let neg = blob(&mut rng, 0.4, 20, 5);
        let p = ForestParams { trees: 10, seed: 9, ..Default::default() };
        assert_eq!(train_classifier(&pos, &neg, &p).unwrap(), train_classifier(&pos, &neg, &p).unwrap());
    }
}
