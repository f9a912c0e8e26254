use rand_distr::{Distribution, StandardNormal};

use super::linalg::{cholesky_inverse, gram_factor};
use crate::sim::RngStream;

/// Smallest diagonal entry of the covariance factor.
const MIN_DIAG: f64 = 1e-2;
/// Off-diagonal entries are `OFF_BOUND · tanh(raw / OFF_BOUND)`; keeps the
/// marginal covariances well conditioned.
const OFF_BOUND: f64 = 2.0;

pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn tri_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Mean and lower-triangular covariance factor (dense row-major `dim × dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub dim: usize,
    pub mu: Vec<f64>,
    pub l: Vec<f64>,
}

impl GaussianPolicy {
    pub fn covariance(&self) -> Vec<f64> {
        let n = self.dim;
        let mut s = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = (0..=j).map(|k| self.l[i * n + k] * self.l[j * n + k]).sum();
                s[i * n + j] = v;
                s[j * n + i] = v;
            }
        }
        s
    }
}

/// Maps raw head outputs `[μ (dim), L entries (dim(dim+1)/2, row-major lower)]`
/// to a policy; diagonal entries go through softplus, off-diagonal ones
/// through a scaled tanh.
pub fn policy_from_raw(raw: &[f64], dim: usize) -> GaussianPolicy {
    assert_eq!(raw.len(), dim + tri_len(dim), "raw head width");
    let mu = raw[..dim].to_vec();
    let mut l = vec![0.0; dim * dim];
    let tri = &raw[dim..];
    for i in 0..dim {
        for j in 0..=i {
            let r = tri[tri_len(i) + j];
            l[i * dim + j] = if i == j { softplus(r).max(MIN_DIAG) } else { OFF_BOUND * (r / OFF_BOUND).tanh() };
        }
    }
    GaussianPolicy { dim, mu, l }
}

/// `μ + L y` with `y` standard normal.
pub fn sample_action(policy: &GaussianPolicy, rng: &mut RngStream) -> Vec<f64> {
    let n = policy.dim;
    let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    (0..n)
        .map(|i| policy.mu[i] + (0..=i).map(|k| policy.l[i * n + k] * y[k]).sum::<f64>())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Squashed {
    pub backoff: f64,
    pub price: f64,
}

/// Raw per-type pair to (backoff in [0,1], price in [0, budget]). The price
/// component is expressed in units of the budget.
pub fn squash(raw_backoff: f64, raw_price: f64, budget: f64) -> Squashed {
    Squashed {
        backoff: sigmoid(raw_backoff),
        price: (raw_price * budget).clamp(0.0, budget),
    }
}

struct Marginal {
    sigma_chol: Vec<f64>,
    resid: Vec<f64>,
}

/// Factor of the marginal covariance over `dims`, or `None` when it is
/// numerically singular.
fn marginal(policy: &GaussianPolicy, x: &[f64], dims: &[usize]) -> Option<Marginal> {
    let n = policy.dim;
    let m = dims.len();
    let rows: Vec<f64> = dims.iter().flat_map(|&i| policy.l[i * n..(i + 1) * n].iter().copied()).collect();
    let sigma_chol = gram_factor(&rows, m, n)?;
    let resid = dims.iter().map(|&i| x[i] - policy.mu[i]).collect();
    Some(Marginal { sigma_chol, resid })
}

/// Log-density of the marginal over `dims` (all components when `dims`
/// lists every index). NaN when the marginal is numerically singular.
pub fn log_density(policy: &GaussianPolicy, x: &[f64], dims: &[usize]) -> f64 {
    let m = dims.len();
    if m == 0 {
        return 0.0;
    }
    let Some(mg) = marginal(policy, x, dims) else { return f64::NAN };
    // Whitened residual z = C⁻¹ r with C the factor of the marginal covariance.
    let mut z = mg.resid.clone();
    for i in 0..m {
        let mut s = z[i];
        for k in 0..i {
            s -= mg.sigma_chol[i * m + k] * z[k];
        }
        z[i] = s / mg.sigma_chol[i * m + i];
    }
    let log_det: f64 = (0..m).map(|i| 2.0 * mg.sigma_chol[i * m + i].ln()).sum();
    -0.5 * z.iter().map(|v| v * v).sum::<f64>()
        - 0.5 * log_det
        - 0.5 * m as f64 * (2.0 * std::f64::consts::PI).ln()
}

/// Log-density and its gradient with respect to the raw head outputs.
///
/// With `r = x − μ` restricted to `dims` and `Σ_S` the marginal covariance:
/// `∂/∂μ_S = Σ_S⁻¹ r`, `∂/∂Σ_S = G = ½(Σ_S⁻¹ r rᵀ Σ_S⁻¹ − Σ_S⁻¹)`, and
/// through `Σ = L Lᵀ`, `∂/∂L = 2 Ĝ L` on the lower triangle, where `Ĝ` is
/// `G` embedded at `dims`.
pub fn log_density_grad_raw(raw: &[f64], dim: usize, x: &[f64], dims: &[usize]) -> (f64, Vec<f64>) {
    let policy = policy_from_raw(raw, dim);
    let mut grad = vec![0.0; raw.len()];
    let m = dims.len();
    if m == 0 {
        return (0.0, grad);
    }
    let logp = log_density(&policy, x, dims);
    let Some(mg) = marginal(&policy, x, dims) else {
        grad.fill(f64::NAN);
        return (f64::NAN, grad);
    };
    let inv = cholesky_inverse(&mg.sigma_chol, m);
    let a: Vec<f64> = (0..m)
        .map(|i| (0..m).map(|j| inv[i * m + j] * mg.resid[j]).sum())
        .collect();
    for (p, &i) in dims.iter().enumerate() {
        grad[i] = a[p];
    }
    let g = |p: usize, q: usize| 0.5 * (a[p] * a[q] - inv[p * m + q]);
    let tri = &mut grad[dim..];
    for (p, &i) in dims.iter().enumerate() {
        for j in 0..=i {
            // (Ĝ L)_{ij} = Σ_{q} G_{pq} L_{dims[q], j}
            let gl: f64 = dims
                .iter()
                .enumerate()
                .filter(|&(_, &kq)| kq >= j)
                .map(|(q, &kq)| g(p, q) * policy.l[kq * dim + j])
                .sum();
            let d_l = 2.0 * gl;
            let idx = tri_len(i) + j;
            tri[idx] = if i == j {
                let r = raw[dim + idx];
                if softplus(r) > MIN_DIAG {
                    d_l * sigmoid(r)
                } else {
                    0.0
                }
            } else {
                let t = (raw[dim + idx] / OFF_BOUND).tanh();
                d_l * (1.0 - t * t)
            };
        }
    }
    (logp, grad)
}
