//! Binary logistic regression trained by full-batch gradient descent.
//!
//! Features are standardized per column inside `fit_logreg` (constant
//! columns are left centered but unscaled) and the objective is
//! `mean(log(1 + exp(-y' w.x))) + l2/2 ||w||^2`, bias unregularized, on the
//! standardized features.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{sigmoid, softplus};

const CHUNK: usize = 512;

/// Dense row-major sample matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if rows.checked_mul(dim) != Some(data.len()) {
            return Err(Error::Consistency(format!(
                "{} values do not form a {rows}x{dim} matrix",
                data.len()
            )));
        }
        Ok(FeatureMatrix { rows, dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::Consistency("ragged feature rows".into()));
            }
            data.extend_from_slice(r);
        }
        Ok(FeatureMatrix {
            rows: rows.len(),
            dim,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegConfig {
    pub lr: f64,
    pub iters: usize,
    pub l2: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            lr: 0.1,
            iters: 500,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    /// Weights over standardized features, bias last.
    pub weights: Vec<f64>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub config: LogRegConfig,
}

impl LogRegModel {
    fn standardize(&self, x: &[f64], out: &mut [f64]) {
        for j in 0..x.len() {
            out[j] = (x[j] - self.mean[j]) / self.scale[j];
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        let d = self.mean.len();
        let terms = self.weights[..d]
            .iter()
            .zip(x)
            .zip(self.mean.iter().zip(&self.scale));
        terms.fold(self.weights[d], |s, ((w, xj), (m, sc))| {
            s + w * (xj - m) / sc
        })
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.decision(x) > 0.0
    }

    /// Regularized objective on `x` (after this model's standardization).
    pub fn objective(&self, x: &FeatureMatrix, y: &[bool]) -> f64 {
        let d = x.dim();
        let mut buf = vec![0.0; d];
        let mut total = 0.0;
        for (i, &label) in y.iter().enumerate() {
            self.standardize(x.row(i), &mut buf);
            let s = self.weights[d]
                + self.weights[..d]
                    .iter()
                    .zip(&buf)
                    .map(|(w, b)| w * b)
                    .sum::<f64>();
            total += if label { softplus(-s) } else { softplus(s) };
        }
        let reg: f64 = self.weights[..d].iter().map(|w| w * w).sum();
        total / y.len() as f64 + 0.5 * self.config.l2 * reg
    }
}

/// Fits a binary classifier. Needs at least one sample of each class.
pub fn fit_logreg(x: &FeatureMatrix, y: &[bool], cfg: &LogRegConfig) -> Result<LogRegModel> {
    let (n, d) = (x.rows(), x.dim());
    if y.len() != n {
        return Err(Error::Consistency(format!(
            "{n} samples but {} targets",
            y.len()
        )));
    }
    let positives = y.iter().filter(|&&t| t).count();
    if positives == 0 || positives == n {
        return Err(Error::Degenerate(
            "logistic regression needs both classes".into(),
        ));
    }

    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for i in 0..n {
        for j in 0..d {
            let c = x.row(i)[j] - mean[j];
            var[j] += c * c;
        }
    }
    let scale: Vec<f64> = var
        .iter()
        .map(|v| {
            let s = (v / n as f64).sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();

    let mut xs = Vec::with_capacity(n * d);
    for i in 0..n {
        xs.extend(
            x.row(i)
                .iter()
                .zip(&mean)
                .zip(&scale)
                .map(|((v, m), s)| (v - m) / s),
        );
    }

    let mut w = vec![0.0; d + 1];
    for _ in 0..cfg.iters {
        // Chunk partial sums are collected in order and added sequentially
        // so the result does not depend on the thread count.
        let partials: Vec<Vec<f64>> = xs
            .par_chunks(CHUNK * d.max(1))
            .zip(y.par_chunks(CHUNK))
            .map(|(xc, yc)| {
                let mut g = vec![0.0; d + 1];
                for (i, &label) in yc.iter().enumerate() {
                    let row = &xc[i * d..(i + 1) * d];
                    let mut s = w[d];
                    for j in 0..d {
                        s += w[j] * row[j];
                    }
                    let r = sigmoid(s) - if label { 1.0 } else { 0.0 };
                    for j in 0..d {
                        g[j] += r * row[j];
                    }
                    g[d] += r;
                }
                g
            })
            .collect();
        let mut grad = vec![0.0; d + 1];
        for p in &partials {
            for (a, b) in grad.iter_mut().zip(p) {
                *a += b;
            }
        }
        for j in 0..=d {
            let reg = if j < d { cfg.l2 * w[j] } else { 0.0 };
            w[j] -= cfg.lr * (grad[j] / n as f64 + reg);
        }
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            vertex: 0,
            epoch: 0,
            batch: 0,
        });
    }
    Ok(LogRegModel {
        weights: w,
        mean,
        scale,
        config: *cfg,
    })
}

#[cfg(test)]
mod tests {
    #![allow(clippy::needless_range_loop)]

    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn separable_pair_is_fit() {
        let x = FeatureMatrix::from_rows(&[vec![-1.0, 0.3], vec![2.0, 0.1]]).unwrap();
        let y = [false, true];
        let m = fit_logreg(&x, &y, &LogRegConfig::default()).unwrap();
        assert!(!m.predict(x.row(0)));
        assert!(m.predict(x.row(1)));
    }

    #[test]
    fn identical_features_give_one_half() {
        let x = FeatureMatrix::new(6, 3, vec![0.7; 18]).unwrap();
        let y = [true, false, true, false, true, false];
        let m = fit_logreg(&x, &y, &LogRegConfig::default()).unwrap();
        for i in 0..6 {
            assert!((m.predict_proba(x.row(i)) - 0.5).abs() < 0.01);
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let x = FeatureMatrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            fit_logreg(&x, &[true, true], &LogRegConfig::default()),
            Err(Error::Degenerate(_))
        ));
    }

    fn noisy_instance(seed: u64, n: usize, d: usize) -> (FeatureMatrix, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut data = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let row: Vec<f64> = (0..d)
                .map(|_| rng.random_range(-2.0..2.0) * 3.0 + 1.0)
                .collect();
            let s: f64 = row.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() * 0.3;
            y.push(rng.random::<f64>() < 1.0 / (1.0 + (-s).exp()));
            data.extend(row);
        }
        (FeatureMatrix::new(n, d, data).unwrap(), y)
    }

    /// Damped Newton on the same standardized objective.
    fn newton_objective(x: &FeatureMatrix, y: &[bool], l2: f64) -> f64 {
        let (n, d) = (x.rows(), x.dim());
        let mut z = vec![vec![0.0; d + 1]; n];
        for j in 0..d {
            let col: Vec<f64> = (0..n).map(|i| x.row(i)[j]).collect();
            let m = col.iter().sum::<f64>() / n as f64;
            let s = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt();
            for i in 0..n {
                z[i][j] = (col[i] - m) / s;
            }
        }
        for row in z.iter_mut() {
            row[d] = 1.0;
        }
        let p = d + 1;
        let obj = |w: &[f64]| {
            let mut f = 0.0;
            for i in 0..n {
                let s: f64 = (0..p).map(|j| w[j] * z[i][j]).sum();
                f += if y[i] {
                    (1.0 + (-s).exp()).ln()
                } else {
                    (1.0 + s.exp()).ln()
                };
            }
            f / n as f64 + 0.5 * l2 * w[..d].iter().map(|v| v * v).sum::<f64>()
        };
        let mut w = vec![0.0; p];
        for _ in 0..50 {
            let mut g = vec![0.0; p];
            let mut h = vec![vec![0.0; p]; p];
            for i in 0..n {
                let s: f64 = (0..p).map(|j| w[j] * z[i][j]).sum();
                let mu = 1.0 / (1.0 + (-s).exp());
                let r = mu - if y[i] { 1.0 } else { 0.0 };
                for a in 0..p {
                    g[a] += r * z[i][a] / n as f64;
                    for b in 0..p {
                        h[a][b] += mu * (1.0 - mu) * z[i][a] * z[i][b] / n as f64;
                    }
                }
            }
            for a in 0..d {
                g[a] += l2 * w[a];
                h[a][a] += l2;
            }
            // Gaussian elimination for h * step = g.
            let mut aug: Vec<Vec<f64>> = h
                .iter()
                .zip(&g)
                .map(|(r, &gi)| {
                    let mut r = r.clone();
                    r.push(gi);
                    r
                })
                .collect();
            for c in 0..p {
                let piv = (c..p)
                    .max_by(|&a, &b| aug[a][c].abs().total_cmp(&aug[b][c].abs()))
                    .unwrap();
                aug.swap(c, piv);
                for r in 0..p {
                    if r != c {
                        let f = aug[r][c] / aug[c][c];
                        for k in c..=p {
                            aug[r][k] -= f * aug[c][k];
                        }
                    }
                }
            }
            let step: Vec<f64> = (0..p).map(|a| aug[a][p] / aug[a][a]).collect();
            let f0 = obj(&w);
            let mut t = 1.0;
            loop {
                let cand: Vec<f64> = w.iter().zip(&step).map(|(a, b)| a - t * b).collect();
                if obj(&cand) <= f0 || t < 1e-8 {
                    w = cand;
                    break;
                }
                t *= 0.5;
            }
        }
        obj(&w)
    }

    #[test]
    fn objective_matches_newton_reference() {
        for seed in 0..5 {
            let (x, y) = noisy_instance(seed, 300, 4);
            let cfg = LogRegConfig::default();
            let m = fit_logreg(&x, &y, &cfg).unwrap();
            let reference = newton_objective(&x, &y, cfg.l2);
            let got = m.objective(&x, &y);
            assert!(
                got >= reference - 1e-9,
                "seed {seed}: {got} below optimum {reference}"
            );
            assert!(got - reference < 1e-3, "seed {seed}: {got} vs {reference}");
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let (x, y) = noisy_instance(9, 2000, 6);
        let a = fit_logreg(&x, &y, &LogRegConfig::default()).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| fit_logreg(&x, &y, &LogRegConfig::default()).unwrap());
        assert_eq!(a.weights, b.weights);
    }
}
