//! Small dense linear algebra: Gaussian elimination and stationary
//! distributions of finite Markov chains.

use alloc::vec;
use alloc::vec::Vec;

/// Row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("matrix is singular")]
pub struct Singular;

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `x^T A`.
    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                out[j] += x[i] * self[(i, j)];
            }
        }
        out
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, Singular> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        for col in 0..n {
            let mut pivot = col;
            let mut best = a[col * n + col].abs();
            for row in col + 1..n {
                let v = a[row * n + col].abs();
                if v > best {
                    best = v;
                    pivot = row;
                }
            }
            if !(best > 1e-300) {
                return Err(Singular);
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                }
                x.swap(col, pivot);
            }
            let d = a[col * n + col];
            for row in col + 1..n {
                let factor = a[row * n + col] / d;
                if factor == 0.0 {
                    continue;
                }
                for k in col..n {
                    a[row * n + k] -= factor * a[col * n + k];
                }
                x[row] -= factor * x[col];
            }
        }
        for col in (0..n).rev() {
            let mut acc = x[col];
            for k in col + 1..n {
                acc -= a[col * n + k] * x[k];
            }
            x[col] = acc / a[col * n + col];
        }
        Ok(x)
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Stationary distribution of an irreducible stochastic matrix `p` by
/// Grassmann-Taksar-Heyman state reduction. Every pivot is formed as a sum of
/// outflow probabilities, never as `1 - p_kk`, so small probabilities keep
/// their relative accuracy.
pub fn stationary(p: &Matrix) -> Result<Vec<f64>, Singular> {
    let n = p.dim();
    if n == 0 {
        return Err(Singular);
    }
    let mut a = p.clone();
    for k in (1..n).rev() {
        let out: f64 = (0..k).map(|j| a[(k, j)]).sum();
        if !(out > 0.0) {
            return Err(Singular);
        }
        for i in 0..k {
            a[(i, k)] /= out;
        }
        for i in 0..k {
            let aik = a[(i, k)];
            if aik == 0.0 {
                continue;
            }
            for j in 0..k {
                a[(i, j)] += aik * a[(k, j)];
            }
        }
    }
    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for k in 1..n {
        pi[k] = (0..k).map(|i| pi[i] * a[(i, k)]).sum();
    }
    let total: f64 = pi.iter().sum();
    for v in pi.iter_mut() {
        *v /= total;
    }
    Ok(pi)
}

/// Transient part of an absorbing chain: `q[(i, j)]` is the probability of
/// moving between transient states and `exits[i][c]` the probability of being
/// absorbed into class `c` from state `i`.
#[derive(Clone, Debug)]
pub struct AbsorbingChain {
    pub q: Matrix,
    pub exits: Vec<Vec<f64>>,
}

/// Expected visits to every transient state and absorption probability of
/// every class, starting from one transient state.
#[derive(Clone, Debug, PartialEq)]
pub struct Absorption {
    pub visits: Vec<f64>,
    pub absorbed: Vec<f64>,
}

impl AbsorbingChain {
    /// Solves `y (I - Q) = e_start` and `(I - Q) u_c = exits_c` with the same
    /// subtraction-free elimination as [`stationary`]: the pivot of state `k`
    /// is its remaining outflow (to later states and to absorption).
    pub fn solve_from(&self, start: usize) -> Result<Absorption, Singular> {
        let n = self.q.dim();
        let classes = self.exits.first().map_or(0, Vec::len);
        let mut q = self.q.clone();
        let mut r = self.exits.clone();
        let mut c = vec![0.0; n];
        c[start] = 1.0;
        let mut d = vec![0.0; n];
        for k in 0..n {
            let out = (k + 1..n).map(|j| q[(k, j)]).sum::<f64>() + r[k].iter().sum::<f64>();
            if !(out > 0.0) {
                return Err(Singular);
            }
            d[k] = out;
            let rk = r[k].clone();
            for i in k + 1..n {
                let w = q[(i, k)] / out;
                if w == 0.0 {
                    continue;
                }
                for j in k + 1..n {
                    let qkj = q[(k, j)];
                    q[(i, j)] += w * qkj;
                }
                for (dst, src) in r[i].iter_mut().zip(&rk) {
                    *dst += w * src;
                }
            }
            let ck = c[k] / out;
            for j in k + 1..n {
                c[j] += ck * q[(k, j)];
            }
        }
        // Back substitution, both systems.
        let mut visits = vec![0.0; n];
        let mut u = vec![vec![0.0; classes]; n];
        for k in (0..n).rev() {
            visits[k] = (c[k] + (k + 1..n).map(|i| visits[i] * q[(i, k)]).sum::<f64>()) / d[k];
            for a in 0..classes {
                u[k][a] = (r[k][a] + (k + 1..n).map(|j| q[(k, j)] * u[j][a]).sum::<f64>()) / d[k];
            }
        }
        Ok(Absorption {
            visits,
            absorbed: u[start].clone(),
        })
    }
}

/// Largest absolute balance residual `|(pi P)_j - pi_j|`.
pub fn balance_residual(p: &Matrix, pi: &[f64]) -> f64 {
    p.left_mul(pi)
        .iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}
