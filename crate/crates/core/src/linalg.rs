//! Symmetric tridiagonal systems, optionally with a symmetric rank-one update.
//!
//! Every linear operator in the discretization is of this form: the
//! pseudo-parabolic operator `I − kΔ_h`, the Sobolev preconditioner `−Δ_h`, and
//! the Jacobians of the Kirchhoff p-Laplacian (tridiagonal plus the rank-one
//! term coming from `M(‖∇u‖_p^p)`).

use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    /// `off[i]` couples unknowns `i` and `i+1`.
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        Self { diag, off }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(vec![1.0; n], vec![0.0; n.saturating_sub(1)])
    }

    /// `−Δ_h`: `(2, −1)/h²`.
    pub fn neg_laplacian(g: &Grid) -> Self {
        let h2 = g.h() * g.h();
        Self::new(vec![2.0 / h2; g.n()], vec![-1.0 / h2; g.n() - 1])
    }

    /// `I − kΔ_h`, the operator acting on `u_t`.
    pub fn pseudo_parabolic(g: &Grid, k: f64) -> Self {
        let mut op = Self::neg_laplacian(g);
        op.scale(k);
        op.add_diag(1.0);
        op
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn scale(&mut self, c: f64) {
        self.diag.iter_mut().for_each(|d| *d *= c);
        self.off.iter_mut().for_each(|o| *o *= c);
    }

    pub fn add_diag(&mut self, c: f64) {
        self.diag.iter_mut().for_each(|d| *d += c);
    }

    /// `self + c·other`.
    pub fn axpy(&mut self, c: f64, other: &SymTridiag) {
        for (d, o) in self.diag.iter_mut().zip(&other.diag) {
            *d += c * o;
        }
        for (d, o) in self.off.iter_mut().zip(&other.off) {
            *d += c * o;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.off[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// `LDLᵀ` factorization without pivoting. `None` if a pivot vanishes.
    pub fn factor(&self) -> Option<LdlFactor> {
        let n = self.len();
        let mut d = Vec::with_capacity(n);
        let mut l = Vec::with_capacity(n.saturating_sub(1));
        let scale = self
            .diag
            .iter()
            .chain(&self.off)
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = scale * 1e-14;
        for i in 0..n {
            let mut di = self.diag[i];
            if i > 0 {
                let li = self.off[i - 1] / d[i - 1];
                di -= li * self.off[i - 1];
                l.push(li);
            }
            if !di.is_finite() || di.abs() <= tiny {
                return None;
            }
            d.push(di);
        }
        Some(LdlFactor { d, l })
    }
}

#[derive(Debug, Clone)]
pub struct LdlFactor {
    d: Vec<f64>,
    l: Vec<f64>,
}

impl LdlFactor {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.d.len();
        for i in 1..n {
            x[i] -= self.l[i - 1] * x[i - 1];
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.l[i] * x[i + 1];
        }
    }

    /// Solves `(T + σ w wᵀ) x = rhs` by Sherman–Morrison. `None` when the
    /// update makes the system singular.
    pub fn solve_rank_one(&self, sigma: f64, w: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
        let y = self.solve(rhs);
        if sigma == 0.0 {
            return Some(y);
        }
        let z = self.solve(w);
        let wy: f64 = w.iter().zip(&y).map(|(a, b)| a * b).sum();
        let wz: f64 = w.iter().zip(&z).map(|(a, b)| a * b).sum();
        let denom = 1.0 + sigma * wz;
        if !denom.is_finite() || denom.abs() < 1e-14 * (1.0 + (sigma * wz).abs()) {
            return None;
        }
        let c = sigma * wy / denom;
        Some(y.iter().zip(&z).map(|(a, b)| a - c * b).collect())
    }
}
