// SPDX-License-Identifier: Apache-2.0

//! Diagonal-covariance Gaussian mixture fitted by EM, sized by BIC.

use crate::error::{Error, Result};
use crate::features::sim::derive_seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const VARIANCE_FLOOR: f64 = 1e-6;
const MAX_ITER: usize = 300;
const RESTARTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl Component {
    fn log_pdf(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for ((&xi, &m), &v) in x.iter().zip(&self.mean).zip(&self.var) {
            s += -0.5 * ((2.0 * PI * v).ln() + (xi - m) * (xi - m) / v);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub components: Vec<Component>,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

impl Mixture {
    pub fn dim(&self) -> usize {
        self.components[0].mean.len()
    }

    fn weighted_log_pdfs(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.components.iter().map(|c| c.weight.ln() + c.log_pdf(x)));
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let mut buf = Vec::new();
        self.weighted_log_pdfs(x, &mut buf);
        log_sum_exp(&buf)
    }

    pub fn log_likelihood(&self, data: &[Vec<f64>]) -> f64 {
        data.iter().map(|x| self.log_density(x)).sum()
    }

    pub fn num_params(&self) -> usize {
        let k = self.components.len();
        k - 1 + 2 * k * self.dim()
    }

    pub fn bic(&self, data: &[Vec<f64>]) -> f64 {
        -2.0 * self.log_likelihood(data) + self.num_params() as f64 * (data.len() as f64).ln()
    }

    /// One unclamped draw.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = self.components.len() - 1;
        for (i, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                pick = i;
                break;
            }
        }
        let c = &self.components[pick];
        c.mean
            .iter()
            .zip(&c.var)
            .map(|(&m, &v)| {
                let z: f64 = StandardNormal.sample(rng);
                m + v.sqrt() * z
            })
            .collect()
    }
}

/// EM result with the data log-likelihood recorded before every M-step.
#[derive(Debug, Clone)]
pub struct EmFit {
    pub model: Mixture,
    pub trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding followed by a few Lloyd steps.
fn init_centers(data: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![data[rng.random_range(0..data.len())].clone()];
    while centers.len() < k {
        let d: Vec<f64> = data
            .iter()
            .map(|x| centers.iter().map(|c| sq_dist(x, c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = data.len() - 1;
            for (i, &di) in d.iter().enumerate() {
                if u < di {
                    pick = i;
                    break;
                }
                u -= di;
            }
            pick
        } else {
            rng.random_range(0..data.len())
        };
        centers.push(data[next].clone());
    }
    for _ in 0..10 {
        let dim = data[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for x in data {
            let j = nearest(&centers, x);
            counts[j] += 1;
            for (s, v) in sums[j].iter_mut().zip(x) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                centers[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
    }
    centers
}

fn nearest(centers: &[Vec<f64>], x: &[f64]) -> usize {
    let mut best = 0;
    let mut bd = f64::INFINITY;
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist(x, c);
        if d < bd {
            bd = d;
            best = j;
        }
    }
    best
}

fn m_step(data: &[Vec<f64>], resp: &[Vec<f64>], prev: Option<&Mixture>) -> Mixture {
    let n = data.len() as f64;
    let dim = data[0].len();
    let k = resp[0].len();
    let components = (0..k)
        .map(|j| {
            let nk: f64 = resp.iter().map(|r| r[j]).sum();
            if nk < 1e-300 {
                let old = prev.map(|m| m.components[j].clone());
                let (mean, var) = old.map_or((data[0].clone(), vec![1.0; dim]), |c| (c.mean, c.var));
                return Component { weight: 0.0, mean, var };
            }
            // shifted by the first sample for accuracy
            let x0 = &data[0];
            let mut mean = vec![0.0; dim];
            for (x, r) in data.iter().zip(resp) {
                for d in 0..dim {
                    mean[d] += r[j] * (x[d] - x0[d]);
                }
            }
            for d in 0..dim {
                mean[d] = x0[d] + mean[d] / nk;
            }
            let mut var = vec![0.0; dim];
            for (x, r) in data.iter().zip(resp) {
                for d in 0..dim {
                    var[d] += r[j] * (x[d] - mean[d]) * (x[d] - mean[d]);
                }
            }
            var.iter_mut().for_each(|v| *v = (*v / nk).max(VARIANCE_FLOOR));
            Component { weight: nk / n, mean, var }
        })
        .collect();
    Mixture { components }
}

/// Runs EM with `k` components from a seeded k-means++ start.
pub fn fit_em(data: &[Vec<f64>], k: usize, seed: u64) -> EmFit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = init_centers(data, k, &mut rng);
    let resp: Vec<Vec<f64>> = data
        .iter()
        .map(|x| {
            let j = nearest(&centers, x);
            (0..k).map(|i| if i == j { 1.0 } else { 0.0 }).collect()
        })
        .collect();
    let mut model = m_step(data, &resp, None);
    for (c, center) in model.components.iter_mut().zip(&centers) {
        if c.weight == 0.0 {
            c.mean = center.clone();
        }
    }
    let mut trace = Vec::new();
    let mut resp = resp;
    let mut buf = Vec::new();
    for _ in 0..MAX_ITER {
        let mut ll = 0.0;
        for (x, r) in data.iter().zip(resp.iter_mut()) {
            model.weighted_log_pdfs(x, &mut buf);
            let z = log_sum_exp(&buf);
            ll += z;
            for (ri, &b) in r.iter_mut().zip(&buf) {
                *ri = (b - z).exp();
            }
        }
        let done = trace.last().is_some_and(|&prev: &f64| ll - prev <= 1e-10 * prev.abs().max(1.0));
        trace.push(ll);
        if done {
            break;
        }
        model = m_step(data, &resp, Some(&model));
    }
    EmFit { model, trace }
}

/// Fits mixtures of 1..=`max_components` components and keeps the one with
/// the lowest BIC (ties to fewer components).
pub fn fit_mixture(data: &[Vec<f64>], max_components: usize, seed: u64) -> Result<Mixture> {
    if data.len() < 2 {
        return Err(Error::TooFewSamples { need: 2, got: data.len() });
    }
    let dim = data[0].len();
    if let Some(bad) = data.iter().find(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
    }
    let mut best: Option<(f64, Mixture)> = None;
    for k in 1..=max_components.clamp(1, data.len()) {
        let fit = (0..RESTARTS)
            .map(|r| fit_em(data, k, derive_seed(seed, &format!("em/{k}/{r}"))).model)
            .map(|m| (m.log_likelihood(data), m))
            .fold(None::<(f64, Mixture)>, |acc, (ll, m)| match acc {
                Some((bl, bm)) if bl >= ll => Some((bl, bm)),
                _ => Some((ll, m)),
            })
            .map(|(_, m)| m)
            .expect("at least one restart");
        let bic = fit.bic(data);
        if best.as_ref().is_none_or(|(b, _)| bic < *b) {
            best = Some((bic, fit));
        }
    }
    let mut m = best.expect("at least one size").1;
    m.components.retain(|c| c.weight > 0.0);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::Normal;

    fn gauss(rng: &mut ChaCha8Rng, mean: f64, sd: f64, n: usize) -> Vec<Vec<f64>> {
        let g = Normal::new(mean, sd).unwrap();
        (0..n).map(|_| (0..5).map(|_| g.sample(rng)).collect()).collect()
    }

    #[test]
    fn single_gaussian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data = gauss(&mut rng, 0.4, 0.05, 100);
        let m = fit_mixture(&data, 4, 1).unwrap();
        assert_eq!(m.components.len(), 1);
        for &mu in &m.components[0].mean {
            assert!((mu - 0.4).abs() < 3.0 * 0.05 / 10.0);
        }
    }

    #[test]
    fn two_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut data = gauss(&mut rng, 0.1, 0.02, 60);
        data.extend(gauss(&mut rng, 0.9, 0.02, 60));
        let m = fit_mixture(&data, 4, 2).unwrap();
        assert_eq!(m.components.len(), 2);
        for c in &m.components {
            assert!((c.weight - 0.5).abs() <= 0.1);
        }
    }

    #[test]
    fn identical_samples() {
        let data = vec![vec![0.3; 5]; 10];
        let m = fit_mixture(&data, 3, 0).unwrap();
        assert_eq!(m.components.len(), 1);
        assert_eq!(m.components[0].mean, vec![0.3; 5]);
        assert!(m.components[0].var.iter().all(|&v| v == VARIANCE_FLOOR));
        assert!(matches!(fit_mixture(&data[..1], 3, 0), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn em_trace_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut data = gauss(&mut rng, 0.3, 0.1, 40);
        data.extend(gauss(&mut rng, 0.6, 0.1, 40));
        let fit = fit_em(&data, 3, 11);
        for w in fit.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0));
        }
        let total: f64 = fit.model.components.iter().map(|c| c.weight).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}
