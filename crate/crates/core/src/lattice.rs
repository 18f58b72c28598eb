//! Finite site graphs, their generators and heat kernels.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// A field of scalars indexed by the sites of a graph.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalarField<T>(pub Vec<T>);

impl<T: Real> ScalarField<T> {
    pub fn zeros(n: usize) -> Self {
        ScalarField(vec![T::zero(); n])
    }

    pub fn constant(n: usize, c: T) -> Self {
        ScalarField(vec![c; n])
    }

    pub fn total(&self) -> T {
        self.0.iter().copied().sum()
    }

    pub fn dot(&self, other: &Self) -> T {
        self.0.iter().zip(&other.0).map(|(&a, &b)| a * b).sum()
    }
}

impl<T> From<Vec<T>> for ScalarField<T> {
    fn from(v: Vec<T>) -> Self {
        ScalarField(v)
    }
}

impl<T> Deref for ScalarField<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> DerefMut for ScalarField<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.0
    }
}

/// Generator of a symmetric continuous-time random walk on `n` sites.
///
/// Off-diagonal rates are nonnegative, rows sum to zero and `a(i, j) = a(j, i)`.
#[derive(Clone, Debug)]
pub struct SiteGraph<T> {
    n: usize,
    dense: Vec<T>,
    rows: Vec<Vec<(usize, T)>>,
    max_jump_rate: T,
    beta: Vec<T>,
}

impl<T: Real> SiteGraph<T> {
    /// Builds a graph from a dense `n x n` rate matrix; the diagonal is ignored
    /// and recomputed from the off-diagonal entries.
    pub fn from_rates(n: usize, rates: &[T]) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "graph needs at least one site"));
        }
        if rates.len() != n * n {
            return Err(Error::SizeMismatch { expected: n * n, got: rates.len() });
        }
        let tol = T::lit(1e-12);
        for i in 0..n {
            for j in 0..n {
                let a = rates[i * n + j];
                if i == j {
                    continue;
                }
                if !a.is_finite() || a < T::zero() {
                    return Err(Error::param("rates", format!("a({i},{j}) = {a} must be finite and nonnegative")));
                }
                let b = rates[j * n + i];
                if (a - b).abs() > tol * (T::one() + a.abs()) {
                    return Err(Error::param("rates", format!("asymmetric: a({i},{j}) = {a}, a({j},{i}) = {b}")));
                }
            }
        }
        let mut dense = vec![T::zero(); n * n];
        let mut rows = Vec::with_capacity(n);
        let mut max_jump_rate = T::zero();
        for i in 0..n {
            let mut row = Vec::new();
            let mut out = T::zero();
            for j in 0..n {
                if j != i && rates[i * n + j] > T::zero() {
                    let a = rates[i * n + j];
                    dense[i * n + j] = a;
                    row.push((j, a));
                    out = out + a;
                }
            }
            dense[i * n + i] = -out;
            max_jump_rate = max_jump_rate.max(out);
            rows.push(row);
        }
        Ok(SiteGraph { n, dense, rows, max_jump_rate, beta: vec![T::one(); n] })
    }

    /// Nearest-neighbour walk on the discrete torus `(Z/LZ)^d`, jump rate 1.
    pub fn torus(d: usize, side: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("d", "dimension must be positive"));
        }
        if side < 3 {
            return Err(Error::param("L", format!("side length {side} < 3 makes neighbours coincide")));
        }
        let n = side.checked_pow(d as u32).ok_or_else(|| Error::param("L", "torus too large"))?;
        let w = T::one() / T::lit((2 * d) as f64);
        let mut rates = vec![T::zero(); n * n];
        let mut stride = 1;
        for _ in 0..d {
            for i in 0..n {
                let c = (i / stride) % side;
                let up = i - c * stride + ((c + 1) % side) * stride;
                let down = i - c * stride + ((c + side - 1) % side) * stride;
                rates[i * n + up] = w;
                rates[i * n + down] = w;
            }
            stride *= side;
        }
        Self::from_rates(n, &rates)
    }

    /// Two sites exchanging at rate `rate`.
    pub fn dumbbell(rate: T) -> Result<Self> {
        if !(rate > T::zero()) || !rate.is_finite() {
            return Err(Error::param("rate", "must be positive and finite"));
        }
        Self::from_rates(2, &[T::zero(), rate, rate, T::zero()])
    }

    /// One isolated site; the generator is zero.
    pub fn single_site() -> Self {
        Self::from_rates(1, &[T::zero()]).expect("trivial graph")
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn rate(&self, i: usize, j: usize) -> T {
        self.dense[i * self.n + j]
    }

    /// Off-diagonal rates out of `i` as `(j, a(i, j))`, in increasing `j`.
    #[inline]
    pub fn neighbours(&self, i: usize) -> &[(usize, T)] {
        &self.rows[i]
    }

    /// Total jump rate `-a(i, i)`.
    #[inline]
    pub fn jump_rate(&self, i: usize) -> T {
        -self.dense[i * self.n + i]
    }

    /// Site weights; identically one on finite graphs.
    pub fn beta(&self) -> &[T] {
        &self.beta
    }

    /// Smallest `M` with `sum_i beta(i) |a(i, k)| <= M beta(k)`.
    pub fn m_bound(&self) -> T {
        T::lit(2.0) * self.max_jump_rate
    }

    /// `<f, beta>`.
    pub fn beta_pairing(&self, f: &[T]) -> Result<T> {
        self.check_len(f.len())?;
        Ok(f.iter().zip(&self.beta).map(|(&a, &b)| a * b).sum())
    }

    /// `(A f)(i)` at one site. The off-diagonal sum runs first, in index order.
    #[inline]
    pub fn generator_at(&self, f: &[T], i: usize) -> T {
        let mut s = T::zero();
        for &(j, a) in &self.rows[i] {
            s = s + a * f[j];
        }
        s + self.dense[i * self.n + i] * f[i]
    }

    pub fn apply_generator(&self, f: &[T]) -> Result<ScalarField<T>> {
        self.check_len(f.len())?;
        Ok(ScalarField((0..self.n).map(|i| self.generator_at(f, i)).collect()))
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::SizeMismatch { expected: self.n, got: len });
        }
        Ok(())
    }

    /// Transition kernel `p_t = exp(tA)`.
    ///
    /// Computed by uniformisation with scaling and squaring: every term of
    /// the series is a nonnegative matrix, so the kernel is entrywise
    /// nonnegative and its rows sum to one up to rounding.
    pub fn heat_semigroup(&self, t: T) -> Result<HeatKernel<T>> {
        if !(t >= T::zero()) || !t.is_finite() {
            return Err(Error::param("t", format!("time {t} must be finite and nonnegative")));
        }
        let n = self.n;
        let lambda = self.max_jump_rate;
        if lambda == T::zero() || t == T::zero() {
            return Ok(HeatKernel { n, p: identity(n) });
        }
        let half = T::lit(0.5);
        let mut h = t;
        let mut squarings = 0;
        while lambda * h > half {
            h = h * half;
            squarings += 1;
        }
        // P = I + A / lambda is stochastic.
        let mut step: Vec<T> = identity(n);
        for i in 0..n {
            for j in 0..n {
                step[i * n + j] = step[i * n + j] + self.dense[i * n + j] / lambda;
            }
            step[i * n + i] = step[i * n + i].max(T::zero());
        }
        let x = lambda * h;
        let mut term = identity(n);
        let mut coef = T::one();
        let mut acc = identity(n);
        let mut m = 1;
        loop {
            term = matmul(n, &term, &step);
            coef = coef * x / T::lit(m as f64);
            for (a, &b) in acc.iter_mut().zip(&term) {
                *a = *a + coef * b;
            }
            if coef < T::epsilon() * T::lit(1e-3) || m > 60 {
                break;
            }
            m += 1;
        }
        let scale = (-x).exp();
        for a in acc.iter_mut() {
            *a = *a * scale;
        }
        for _ in 0..squarings {
            acc = matmul(n, &acc, &acc);
        }
        Ok(HeatKernel { n, p: acc })
    }
}

fn identity<T: Real>(n: usize) -> Vec<T> {
    let mut m = vec![T::zero(); n * n];
    for i in 0..n {
        m[i * n + i] = T::one();
    }
    m
}

fn matmul<T: Real>(n: usize, a: &[T], b: &[T]) -> Vec<T> {
    let mut c = vec![T::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == T::zero() {
                continue;
            }
            for j in 0..n {
                c[i * n + j] = c[i * n + j] + aik * b[k * n + j];
            }
        }
    }
    c
}

/// Dense transition kernel `p_t(i, j)`.
#[derive(Clone, Debug)]
pub struct HeatKernel<T> {
    n: usize,
    p: Vec<T>,
}

impl<T: Real> HeatKernel<T> {
    pub fn n_sites(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.p[i * self.n + j]
    }

    /// `(P_t f)(i) = sum_j p_t(i, j) f(j)`.
    pub fn apply(&self, f: &[T]) -> Result<ScalarField<T>> {
        if f.len() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, got: f.len() });
        }
        let mut out = vec![T::zero(); self.n];
        self.apply_into(f, &mut out);
        Ok(ScalarField(out))
    }

    /// Allocation-free variant of [`apply`](Self::apply); lengths are not checked.
    #[inline]
    pub fn apply_into(&self, f: &[T], out: &mut [T]) {
        let n = self.n;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.p[i * n..(i + 1) * n];
            let mut s = T::zero();
            for (&p, &x) in row.iter().zip(f) {
                s = s + p * x;
            }
            *o = s;
        }
    }

    pub fn row_sum(&self, i: usize) -> T {
        self.p[i * self.n..(i + 1) * self.n].iter().copied().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_neighbours_and_bound() {
        let g = SiteGraph::<f64>::torus(2, 4).unwrap();
        assert_eq!(g.n_sites(), 16);
        assert_eq!(g.neighbours(0).len(), 4);
        assert_eq!(g.m_bound(), 2.0);
        assert!(SiteGraph::<f64>::torus(1, 2).is_err());
    }

    #[test]
    fn generator_kills_constants() {
        let g = SiteGraph::<f64>::torus(1, 5).unwrap();
        let af = g.apply_generator(&[3.0; 5]).unwrap();
        assert!(af.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn zero_time_kernel_is_identity() {
        let g = SiteGraph::<f64>::torus(1, 4).unwrap();
        let p = g.heat_semigroup(0.0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(p.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn rejects_negative_time() {
        let g = SiteGraph::<f64>::dumbbell(1.0).unwrap();
        assert!(g.heat_semigroup(-1.0).is_err());
    }
}
