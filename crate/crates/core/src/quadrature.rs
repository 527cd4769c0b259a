//! Expectations against the Gamma(shape, 1) law by generalized Gauss-Laguerre rules.
//!
//! A rule with `N` nodes integrates `p(x) x^(shape-1) e^(-x) / Γ(shape)` exactly
//! for polynomials `p` of degree below `2N`. Nodes and weights come from the
//! Golub-Welsch construction: the nodes are the eigenvalues of the symmetric
//! tridiagonal Jacobi matrix of the generalized Laguerre polynomials and the
//! weights are the squared first components of its normalized eigenvectors.
//! Weights are normalized to sum to one, so `Γ(shape)` never appears.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Relative agreement required between successive node counts.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
const FIRST_NODES: usize = 16;
const MAX_NODES: usize = 2048;
const TRUSTED_ZERO_NODES: usize = 512;

/// Nodes and probability weights of one Gamma-weighted rule.
#[derive(Debug, Clone)]
pub struct GammaRule {
    shape: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GammaRule {
    /// Builds the `size`-node rule for the Gamma(`shape`, 1) distribution.
    pub fn new(size: usize, shape: f64) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("rule needs at least one node"));
        }
        if !shape.is_finite() || shape <= 0.0 {
            return Err(Error::invalid(format!(
                "shape must be positive, got {shape}"
            )));
        }
        // Jacobi matrix for the weight x^(shape-1) e^(-x):
        // diagonal 2i + shape, off-diagonal sqrt(i (i + shape - 1)).
        let alpha = shape - 1.0;
        let mut diag: Vec<f64> = (0..size).map(|i| 2.0 * i as f64 + alpha + 1.0).collect();
        let mut off: Vec<f64> = (0..size)
            .map(|i| {
                let k = (i + 1) as f64;
                (k * (k + alpha)).sqrt()
            })
            .collect();
        off[size - 1] = 0.0;
        let mut first = vec![0.0; size];
        first[0] = 1.0;
        tridiagonal_ql(&mut diag, &mut off, &mut first)?;

        let mut pairs: Vec<(f64, f64)> = diag
            .into_iter()
            .zip(first.into_iter().map(|z| z * z))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let (nodes, weights) = pairs.into_iter().map(|(x, w)| (x, w / total)).unzip();
        Ok(Self {
            shape,
            nodes,
            weights,
        })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `sum_i w_i f(x_i)`, an approximation of `E f(G)`.
    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let mut sum = 0.0;
        let mut comp = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            // Neumaier summation
            let term = w * f(x);
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
        }
        sum + comp
    }
}

/// Eigenvalues of a symmetric tridiagonal matrix by the implicit QL method,
/// tracking only the first row of the eigenvector matrix.
///
/// `diag` holds the diagonal and `off[i]` the entry between rows `i` and
/// `i + 1` (`off[n-1]` is scratch). On return `diag` holds the eigenvalues and
/// `first` the first components of the matching eigenvectors, provided `first`
/// started as the first row of the identity.
fn tridiagonal_ql(diag: &mut [f64], off: &mut [f64], first: &mut [f64]) -> Result<()> {
    let n = diag.len();
    if n == 1 {
        return Ok(());
    }
    off[n - 1] = 0.0;
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let scale = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * scale {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 60 {
                return Err(Error::Quadrature {
                    nodes: n,
                    change: f64::NAN,
                });
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                let z = first[i + 1];
                first[i + 1] = s * first[i] + c * z;
                first[i] = c * first[i] - s * z;
            }
            if underflow {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

type RuleCache = Mutex<HashMap<(usize, u64), Arc<GammaRule>>>;

fn cached_rule(size: usize, shape: f64) -> Result<Arc<GammaRule>> {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (size, shape.to_bits());
    if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&key) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(GammaRule::new(size, shape)?);
    cache
        .lock()
        .expect("rule cache poisoned")
        .insert(key, Arc::clone(&rule));
    Ok(rule)
}

/// `E f(G)` for `G ~ Gamma(shape, 1)`, doubling the node count from 16 until
/// two successive rules agree to `tolerance` relative.
pub fn gamma_expectation<F: Fn(f64) -> f64>(shape: f64, tolerance: f64, f: F) -> Result<f64> {
    let mut size = FIRST_NODES;
    let mut previous = cached_rule(size, shape)?.expect(&f);
    let mut change = f64::INFINITY;
    while size < MAX_NODES {
        size *= 2;
        let current = cached_rule(size, shape)?.expect(&f);
        let delta = (current - previous).abs();
        // An identically zero result is only trusted once the nodes reach far
        // into the tail of the weight.
        let vanished = current == 0.0 && previous == 0.0;
        if (vanished && size >= TRUSTED_ZERO_NODES)
            || (!vanished && delta <= tolerance * current.abs())
        {
            return Ok(current);
        }
        change = delta / current.abs();
        previous = current;
    }
    Err(Error::Quadrature {
        nodes: size,
        change,
    })
}
