//! Epsilon-insensitive support vector regression.
//!
//! The dual is solved as a 2n-variable box-constrained QP with a single
//! equality constraint, using second-order working-set selection on
//! maximal violating pairs plus periodic shrinking of bound variables.
//! Variables `t < n` are the alpha side (+1 coefficient), `t >= n` the
//! alpha* side (-1), so the prediction coefficient of sample `i` is
//! `beta[i] - beta[i + n]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernel choice for the slip model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SvrKernel {
    Linear,
    Rbf { gamma: f64 },
}

impl SvrKernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            SvrKernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            SvrKernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let SvrKernel::Rbf { gamma } = self {
            if *gamma <= 0.0 {
                return Err(Error::Config(format!("rbf gamma must be > 0 (got {gamma})")));
            }
        }
        Ok(())
    }
}

/// Hyperparameters of one epsilon-SVR fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub kernel: SvrKernel,
    /// Regularization bound C (> 0).
    pub c: f64,
    /// Tube half-width epsilon (>= 0).
    pub epsilon: f64,
}

impl SvrParams {
    pub fn validate(&self) -> Result<()> {
        if self.c <= 0.0 {
            return Err(Error::Config(format!("svr c must be > 0 (got {})", self.c)));
        }
        if self.epsilon < 0.0 {
            return Err(Error::Config(format!(
                "svr epsilon must be >= 0 (got {})",
                self.epsilon
            )));
        }
        self.kernel.validate()
    }
}

/// Per-dimension standardization fitted on the training split.
///
/// Dimensions with zero variance are dropped: their scale is stored as 0
/// and they map to 0 in the standardized space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl FeatureScaling {
    pub fn fit(features: &[Vec<f64>]) -> FeatureScaling {
        let n = features.len().max(1) as f64;
        let dim = features.first().map(|f| f.len()).unwrap_or(0);
        let mut mean = vec![0.0; dim];
        for f in features {
            for (m, v) in mean.iter_mut().zip(f) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; dim];
        for f in features {
            for ((v, x), m) in var.iter_mut().zip(f).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let mut dropped = 0usize;
        let scale: Vec<f64> = var
            .into_iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd < 1e-12 {
                    dropped += 1;
                    0.0
                } else {
                    sd
                }
            })
            .collect();
        if dropped > 0 {
            log::warn!("feature scaling: {dropped} zero-variance dimension(s) dropped");
        }
        FeatureScaling { mean, scale }
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Dense kernel Gram matrix over a training set.
pub struct Gram {
    n: usize,
    data: Vec<f64>,
}

impl Gram {
    pub fn compute(kernel: &SvrKernel, xs: &[Vec<f64>]) -> Gram {
        let n = xs.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k = kernel.eval(&xs[i], &xs[j]);
                data[i * n + j] = k;
                data[j * n + i] = k;
            }
        }
        Gram { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// Solver stopping parameters.
#[derive(Debug, Clone, Copy)]
pub struct SolverOpts {
    /// KKT violation tolerance (max-violating-pair gap).
    pub tol: f64,
    pub max_iter: usize,
    pub shrink: bool,
}

impl Default for SolverOpts {
    fn default() -> Self {
        SolverOpts {
            tol: 1e-4,
            max_iter: 2_000_000,
            shrink: true,
        }
    }
}

/// Solution of the epsilon-SVR dual.
#[derive(Debug, Clone)]
pub struct DualSolution {
    /// Prediction coefficients `alpha_i - alpha*_i`.
    pub coefs: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

const TAU: f64 = 1e-12;

struct Solver<'a> {
    gram: &'a Gram,
    n: usize,
    c: f64,
    beta: Vec<f64>,
    grad: Vec<f64>,
    active: Vec<usize>,
}

impl<'a> Solver<'a> {
    #[inline]
    fn sign(&self, t: usize) -> f64 {
        if t < self.n {
            1.0
        } else {
            -1.0
        }
    }

    #[inline]
    fn idx(&self, t: usize) -> usize {
        if t < self.n {
            t
        } else {
            t - self.n
        }
    }

    #[inline]
    fn in_up(&self, t: usize) -> bool {
        if t < self.n {
            self.beta[t] < self.c
        } else {
            self.beta[t] > 0.0
        }
    }

    #[inline]
    fn in_low(&self, t: usize) -> bool {
        if t < self.n {
            self.beta[t] > 0.0
        } else {
            self.beta[t] < self.c
        }
    }

    /// `-s_t * G_t`, the violation value ordered so I_up maximizes and
    /// I_low minimizes it.
    #[inline]
    fn neg_sg(&self, t: usize) -> f64 {
        -self.sign(t) * self.grad[t]
    }

    fn max_violating_pair(&self) -> (Option<usize>, f64, f64) {
        let mut m_val = f64::NEG_INFINITY;
        let mut m_t = None;
        let mut low_val = f64::INFINITY;
        for &t in &self.active {
            let v = self.neg_sg(t);
            if self.in_up(t) && v > m_val {
                m_val = v;
                m_t = Some(t);
            }
            if self.in_low(t) && v < low_val {
                low_val = v;
            }
        }
        (m_t, m_val, low_val)
    }

    /// Second-order selection of the partner index for `i`.
    fn select_second(&self, i: usize, m_val: f64) -> Option<usize> {
        let ii = self.idx(i);
        let si = self.sign(i);
        let kii = self.gram.at(ii, ii);
        let row_i = self.gram.row(ii);
        let mut best = None;
        let mut best_gain = 0.0;
        for &t in &self.active {
            if !self.in_low(t) {
                continue;
            }
            let v = self.neg_sg(t);
            if v >= m_val {
                continue;
            }
            let tt = self.idx(t);
            let mut a = kii + self.gram.at(tt, tt) - 2.0 * si * self.sign(t) * row_i[tt];
            if a <= 0.0 {
                a = TAU;
            }
            let b = m_val - v;
            let gain = b * b / a;
            if gain > best_gain {
                best_gain = gain;
                best = Some(t);
            }
        }
        best
    }

    /// Optimize the (i, j) pair with box clipping; returns the deltas.
    fn update_pair(&mut self, i: usize, j: usize) -> (f64, f64) {
        let (si, sj) = (self.sign(i), self.sign(j));
        let (ii, jj) = (self.idx(i), self.idx(j));
        let kij = self.gram.at(ii, jj);
        let mut a = self.gram.at(ii, ii) + self.gram.at(jj, jj) - 2.0 * si * sj * kij;
        if a <= 0.0 {
            a = TAU;
        }
        let (old_i, old_j) = (self.beta[i], self.beta[j]);
        let c = self.c;
        if si != sj {
            let delta = (-self.grad[i] - self.grad[j]) / a;
            let diff = old_i - old_j;
            self.beta[i] += delta;
            self.beta[j] += delta;
            if diff > 0.0 {
                if self.beta[j] < 0.0 {
                    self.beta[j] = 0.0;
                    self.beta[i] = diff;
                }
                if self.beta[i] > c {
                    self.beta[i] = c;
                    self.beta[j] = c - diff;
                }
            } else {
                if self.beta[i] < 0.0 {
                    self.beta[i] = 0.0;
                    self.beta[j] = -diff;
                }
                if self.beta[j] > c {
                    self.beta[j] = c;
                    self.beta[i] = c + diff;
                }
            }
        } else {
            let delta = (self.grad[i] - self.grad[j]) / a;
            let sum = old_i + old_j;
            self.beta[i] -= delta;
            self.beta[j] += delta;
            if sum > c {
                if self.beta[i] > c {
                    self.beta[i] = c;
                    self.beta[j] = sum - c;
                }
                if self.beta[j] > c {
                    self.beta[j] = c;
                    self.beta[i] = sum - c;
                }
            } else {
                if self.beta[j] < 0.0 {
                    self.beta[j] = 0.0;
                    self.beta[i] = sum;
                }
                if self.beta[i] < 0.0 {
                    self.beta[i] = 0.0;
                    self.beta[j] = sum;
                }
            }
        }
        (self.beta[i] - old_i, self.beta[j] - old_j)
    }

    fn update_gradient(&mut self, i: usize, di: f64, j: usize, dj: f64) {
        if di == 0.0 && dj == 0.0 {
            return;
        }
        let (si, sj) = (self.sign(i), self.sign(j));
        let (ii, jj) = (self.idx(i), self.idx(j));
        let n = self.n;
        for a in 0..self.active.len() {
            let t = self.active[a];
            let tt = if t < n { t } else { t - n };
            let st = if t < n { 1.0 } else { -1.0 };
            let q_ti = st * si * self.gram.at(tt, ii);
            let q_tj = st * sj * self.gram.at(tt, jj);
            self.grad[t] += q_ti * di + q_tj * dj;
        }
    }

    /// Rebuild all gradients from scratch and reactivate every variable.
    fn unshrink(&mut self, labels: &[f64], epsilon: f64) {
        let n = self.n;
        let coefs: Vec<f64> = (0..n).map(|i| self.beta[i] - self.beta[i + n]).collect();
        for t in 0..2 * n {
            let tt = self.idx(t);
            let st = self.sign(t);
            let p = if t < n {
                epsilon - labels[t]
            } else {
                epsilon + labels[t - n]
            };
            let dot: f64 = self
                .gram
                .row(tt)
                .iter()
                .zip(&coefs)
                .map(|(k, d)| k * d)
                .sum();
            self.grad[t] = p + st * dot;
        }
        self.active = (0..2 * n).collect();
    }

    /// Drop bound variables that cannot participate in a violating pair.
    fn shrink(&mut self, m_val: f64, low_val: f64) {
        let c = self.c;
        let n = self.n;
        let beta = &self.beta;
        let grad = &self.grad;
        self.active.retain(|&t| {
            let at_lo = beta[t] == 0.0;
            let at_hi = beta[t] == c;
            if !at_lo && !at_hi {
                return true;
            }
            let sign = if t < n { 1.0 } else { -1.0 };
            let v = -sign * grad[t];
            let up_only = (at_lo && t < n) || (at_hi && t >= n);
            if up_only {
                v > low_val
            } else {
                v < m_val
            }
        });
    }
}

/// Solve the epsilon-SVR dual over a precomputed Gram matrix.
pub fn solve_dual(
    gram: &Gram,
    labels: &[f64],
    c: f64,
    epsilon: f64,
    opts: &SolverOpts,
) -> DualSolution {
    let n = gram.n();
    assert_eq!(n, labels.len(), "gram/label size mismatch");
    let grad: Vec<f64> = (0..2 * n)
        .map(|t| {
            if t < n {
                epsilon - labels[t]
            } else {
                epsilon + labels[t - n]
            }
        })
        .collect();
    let mut solver = Solver {
        gram,
        n,
        c,
        beta: vec![0.0; 2 * n],
        grad,
        active: (0..2 * n).collect(),
    };

    let shrink_period = (2 * n).max(1000);
    let mut iterations = 0usize;
    let mut converged = false;
    let mut since_shrink = 0usize;

    loop {
        if iterations >= opts.max_iter {
            log::warn!("svr solver hit max_iter = {}", opts.max_iter);
            solver.unshrink(labels, epsilon);
            break;
        }
        let (m_t, m_val, low_val) = solver.max_violating_pair();
        if m_val - low_val <= opts.tol {
            if solver.active.len() == 2 * n {
                converged = true;
                break;
            }
            // Converged on the shrunk set: restore and re-verify.
            solver.unshrink(labels, epsilon);
            since_shrink = 0;
            continue;
        }
        let i = match m_t {
            Some(i) => i,
            None => {
                converged = true;
                break;
            }
        };
        let j = match solver.select_second(i, m_val) {
            Some(j) => j,
            None => {
                solver.unshrink(labels, epsilon);
                since_shrink = 0;
                continue;
            }
        };
        let (di, dj) = solver.update_pair(i, j);
        solver.update_gradient(i, di, j, dj);
        iterations += 1;
        since_shrink += 1;
        if opts.shrink && since_shrink >= shrink_period {
            solver.shrink(m_val, low_val);
            since_shrink = 0;
        }
    }

    // Bias from the final full-set violation envelope.
    let (_, m_val, low_val) = solver.max_violating_pair();
    let bias = if m_val.is_finite() && low_val.is_finite() {
        (m_val + low_val) / 2.0
    } else if m_val.is_finite() {
        m_val
    } else if low_val.is_finite() {
        low_val
    } else {
        0.0
    };
    let coefs: Vec<f64> = (0..n).map(|i| solver.beta[i] - solver.beta[i + n]).collect();
    DualSolution {
        coefs,
        bias,
        iterations,
        converged,
    }
}

/// Trained slip model: kernel expansion over its support vectors, with the
/// feature standardization fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    /// Support vectors in standardized feature space.
    pub support_vectors: Vec<Vec<f64>>,
    /// Signed dual weights (alpha - alpha*), one per support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub params: SvrParams,
    pub feature_scaling: FeatureScaling,
}

impl SvrModel {
    /// Predict a stick-ratio estimate, clamped to [0, 1].
    pub fn predict(&self, feature: &[f64]) -> Result<f64> {
        Ok(self.predict_raw(feature)?.clamp(0.0, 1.0))
    }

    /// Unclamped kernel-expansion value.
    pub fn predict_raw(&self, feature: &[f64]) -> Result<f64> {
        if feature.len() != self.feature_scaling.dim() {
            return Err(Error::Shape {
                expected: self.feature_scaling.dim(),
                got: feature.len(),
            });
        }
        let x = self.feature_scaling.transform(feature);
        let sum: f64 = self
            .support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, d)| d * self.params.kernel.eval(sv, &x))
            .sum();
        Ok(sum + self.bias)
    }

    pub fn predict_batch(&self, features: &[Vec<f64>]) -> Result<Vec<f64>> {
        features.iter().map(|f| self.predict(f)).collect()
    }
}

/// Assemble a model from a dual solution, keeping only the support vectors.
pub fn assemble_model(
    xs_scaled: &[Vec<f64>],
    solution: &DualSolution,
    params: SvrParams,
    scaling: FeatureScaling,
) -> SvrModel {
    let mut support_vectors = Vec::new();
    let mut dual_coefs = Vec::new();
    for (x, &d) in xs_scaled.iter().zip(&solution.coefs) {
        if d != 0.0 {
            support_vectors.push(x.clone());
            dual_coefs.push(d);
        }
    }
    SvrModel {
        support_vectors,
        dual_coefs,
        bias: solution.bias,
        params,
        feature_scaling: scaling,
    }
}

/// Fit an epsilon-SVR: standardize, build the Gram matrix, solve the dual
/// to the default KKT tolerance. Deterministic given the dataset order.
pub fn train_svr(features: &[Vec<f64>], labels: &[f64], params: SvrParams) -> Result<SvrModel> {
    train_svr_opts(features, labels, params, &SolverOpts::default())
}

/// [`train_svr`] with explicit solver options.
pub fn train_svr_opts(
    features: &[Vec<f64>],
    labels: &[f64],
    params: SvrParams,
    opts: &SolverOpts,
) -> Result<SvrModel> {
    params.validate()?;
    if features.len() < 2 {
        return Err(Error::Config(format!(
            "svr needs at least 2 samples (got {})",
            features.len()
        )));
    }
    if features.len() != labels.len() {
        return Err(Error::Shape {
            expected: features.len(),
            got: labels.len(),
        });
    }
    let scaling = FeatureScaling::fit(features);
    let xs: Vec<Vec<f64>> = features.iter().map(|f| scaling.transform(f)).collect();
    let gram = Gram::compute(&params.kernel, &xs);
    let solution = solve_dual(&gram, labels, params.c, params.epsilon, opts);
    Ok(assemble_model(&xs, &solution, params, scaling))
}
