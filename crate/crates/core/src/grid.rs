//! One-dimensional Dirichlet grid, discrete differential operators and
//! quadrature.
//!
//! The domain is `Ω = (0, L)` with `N` interior nodes `x_i = i·h`,
//! `h = L/(N+1)`. Fields store only interior values; both boundary values are
//! zero. Volume integrals use the rectangle rule on nodes (weight `h`), gradient
//! integrals the rectangle rule on the `N+1` cells, including the two boundary
//! cells where the zero extension enters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of `u_t − kΔu_t − (a + b‖∇u‖_p^p)Δ_p u = |u|^{q−1}u log|u|` on `(0, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
    /// Pseudo-parabolic switch, 0 or 1.
    pub k: u8,
    pub p: f64,
    pub q: f64,
    /// Domain length `L`.
    pub length: f64,
}

impl ModelParams {
    /// Spatial dimension; only the 1-D problem is discretized.
    pub const DIM: usize = 1;

    pub fn new(a: f64, b: f64, k: u8, p: f64, q: f64, length: f64) -> Result<Self> {
        let params = Self {
            a,
            b,
            k,
            p,
            q,
            length,
        };
        params.validate()?;
        Ok(params)
    }

    /// The parameter set used throughout the test-suite: `a = b = 1, k = 1, p = 2, q = 5, L = 1`.
    pub fn desk() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            k: 1,
            p: 2.0,
            q: 5.0,
            length: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.b, self.p, self.q, self.length]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Parameter("all coefficients must be finite".into()));
        }
        if self.a <= 0.0 || self.b <= 0.0 {
            return Err(Error::Parameter(format!(
                "Kirchhoff coefficients must be positive (a = {}, b = {})",
                self.a, self.b
            )));
        }
        if self.k > 1 {
            return Err(Error::Parameter(format!("k must be 0 or 1, got {}", self.k)));
        }
        if self.p < 2.0 {
            return Err(Error::Parameter(format!("p must be >= 2, got {}", self.p)));
        }
        if self.length <= 0.0 {
            return Err(Error::Parameter(format!(
                "domain length must be positive, got {}",
                self.length
            )));
        }
        if self.q <= 2.0 * self.p - 1.0 {
            return Err(Error::Parameter(format!(
                "q must exceed 2p - 1 = {} (got q = {}); in one space dimension n <= p, \
                 so the Sobolev conjugate p* is infinite and no upper bound on q applies",
                2.0 * self.p - 1.0,
                self.q
            )));
        }
        Ok(())
    }

    pub fn k_f64(&self) -> f64 {
        f64::from(self.k)
    }

    /// Kirchhoff coefficient `M(s) = a + b s`.
    pub fn kirchhoff(&self, s: f64) -> f64 {
        self.a + self.b * s
    }

    /// `|Ω|`.
    pub fn measure(&self) -> f64 {
        self.length
    }
}

/// Uniform interior grid on `(0, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    h: f64,
    length: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!(
                "grid needs at least 2 interior nodes, got {n}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Parameter(format!(
                "domain length must be positive, got {length}"
            )));
        }
        Ok(Self {
            n,
            h: length / (n as f64 + 1.0),
            length,
        })
    }

    pub fn for_params(n: usize, params: &ModelParams) -> Result<Self> {
        Self::new(n, params.length)
    }

    /// Number of interior nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Coordinate of interior node `i` (0-based), i.e. `(i+1)·h`.
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    /// Smallest eigenvalue of the 3-point Dirichlet operator `−Δ_h`.
    pub fn dirichlet_eigenvalue(&self) -> f64 {
        let s = (std::f64::consts::PI * self.h / (2.0 * self.length)).sin();
        4.0 * s * s / (self.h * self.h)
    }
}

/// Interior nodal values of a function vanishing on `∂Ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    values: Vec<f64>,
}

/// Cell difference quotients, one per cell (`N + 1` entries).
pub type EdgeValues = Vec<f64>;

impl Field {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("field entry {i} is not finite")));
        }
        Ok(Self { values })
    }

    /// Wraps values without the finiteness check; used for blow-up candidates.
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(g: &Grid) -> Self {
        Self {
            values: vec![0.0; g.n()],
        }
    }

    pub fn from_fn(g: &Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(g.nodes().map(f).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn check(&self, g: &Grid) -> Result<()> {
        if self.values.len() != g.n() {
            return Err(Error::Dimension {
                expected: g.n(),
                got: self.values.len(),
            });
        }
        Ok(())
    }
}

/// `|x|^e` with fast paths for the integer exponents that dominate in practice.
#[inline]
pub(crate) fn pow_abs(x: f64, e: f64) -> f64 {
    let ax = x.abs();
    if e == 2.0 {
        ax * ax
    } else if e.fract() == 0.0 && (0.0..=64.0).contains(&e) {
        ax.powi(e as i32)
    } else if ax == 0.0 {
        if e == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        ax.powf(e)
    }
}

/// `φ(s) = |s|^{p−2} s`.
#[inline]
pub(crate) fn phi(s: f64, p: f64) -> f64 {
    if p == 2.0 {
        s
    } else {
        pow_abs(s, p - 2.0) * s
    }
}

/// `φ'(s) = (p−1)|s|^{p−2}`.
#[inline]
pub(crate) fn phi_prime(s: f64, p: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else {
        (p - 1.0) * pow_abs(s, p - 2.0)
    }
}

/// Writes the `n + 1` cell quotients of zero-extended `u` into `out`.
#[inline]
pub(crate) fn cell_diffs_into(u: &[f64], h: f64, out: &mut Vec<f64>) {
    let n = u.len();
    out.clear();
    out.reserve(n + 1);
    let mut prev = 0.0;
    for &v in u {
        out.push((v - prev) / h);
        prev = v;
    }
    out.push(-prev / h);
}

pub(crate) fn cell_diffs(u: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(u.len() + 1);
    cell_diffs_into(u, h, &mut out);
    out
}

/// `h Σ_cells |D_j|^r` for zero-extended `u`.
pub(crate) fn grad_power_sum(u: &[f64], h: f64, r: f64) -> f64 {
    let mut prev = 0.0;
    let mut acc = 0.0;
    for &v in u {
        acc += pow_abs((v - prev) / h, r);
        prev = v;
    }
    acc += pow_abs(prev / h, r);
    h * acc
}

/// `h Σ_nodes |u_i|^r`.
pub(crate) fn power_sum(u: &[f64], h: f64, r: f64) -> f64 {
    h * u.iter().map(|&v| pow_abs(v, r)).sum::<f64>()
}

/// Discrete p-Laplacian on raw values.
pub(crate) fn p_laplacian_into(u: &[f64], h: f64, p: f64, out: &mut [f64]) {
    let n = u.len();
    debug_assert_eq!(out.len(), n);
    let mut prev_flux = phi(u.first().copied().unwrap_or(0.0) / h, p);
    for i in 0..n {
        let right = if i + 1 < n { u[i + 1] } else { 0.0 };
        let next_flux = phi((right - u[i]) / h, p);
        out[i] = (next_flux - prev_flux) / h;
        prev_flux = next_flux;
    }
}

/// Cell difference quotients `(u_j − u_{j−1})/h`, `j = 0..=N`, with zero boundary values.
pub fn gradient_values(u: &Field, g: &Grid) -> Result<EdgeValues> {
    u.check(g)?;
    Ok(cell_diffs(u.values(), g.h()))
}

/// `Δ_p u` at interior nodes: `(φ(D_{i+1/2}) − φ(D_{i−1/2}))/h`.
pub fn p_laplacian(u: &Field, g: &Grid, p: f64) -> Result<Field> {
    u.check(g)?;
    if p < 2.0 {
        return Err(Error::Parameter(format!("p must be >= 2, got {p}")));
    }
    let mut out = vec![0.0; g.n()];
    p_laplacian_into(u.values(), g.h(), p, &mut out);
    Ok(Field::from_vec_unchecked(out))
}

/// Classical 3-point Dirichlet Laplacian.
pub fn laplacian(u: &Field, g: &Grid) -> Result<Field> {
    u.check(g)?;
    let v = u.values();
    let n = v.len();
    let h2 = g.h() * g.h();
    let out = (0..n)
        .map(|i| {
            let l = if i > 0 { v[i - 1] } else { 0.0 };
            let r = if i + 1 < n { v[i + 1] } else { 0.0 };
            (l - 2.0 * v[i] + r) / h2
        })
        .collect();
    Ok(Field::from_vec_unchecked(out))
}

fn check_exponent(r: f64) -> Result<()> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::Parameter(format!(
            "norm exponent must be a finite number >= 1, got {r}"
        )));
    }
    Ok(())
}

/// `‖u‖_r = (h Σ |u_i|^r)^{1/r}`.
pub fn norm_r(u: &Field, g: &Grid, r: f64) -> Result<f64> {
    u.check(g)?;
    check_exponent(r)?;
    Ok(power_sum(u.values(), g.h(), r).powf(1.0 / r))
}

/// `‖∇u‖_r = (h Σ_cells |D_j|^r)^{1/r}`.
pub fn grad_norm_r(u: &Field, g: &Grid, r: f64) -> Result<f64> {
    u.check(g)?;
    check_exponent(r)?;
    Ok(grad_power_sum(u.values(), g.h(), r).powf(1.0 / r))
}

/// Discrete `L²` inner product `h Σ u_i v_i`.
pub fn inner(u: &Field, v: &Field, g: &Grid) -> Result<f64> {
    u.check(g)?;
    v.check(g)?;
    Ok(dot(u.values(), v.values()) * g.h())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `|s|^{q+1} log|s|`, extended by 0 at `s = 0`.
#[inline]
pub(crate) fn log_power(s: f64, q: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        pow_abs(s, q + 1.0) * s.abs().ln()
    }
}

/// `∫ |u|^{q+1} log|u| dx` by the node rule, with `0·log 0 = 0`.
pub fn log_power_integral(u: &Field, g: &Grid, q: f64) -> Result<f64> {
    u.check(g)?;
    if !(q > 0.0) {
        return Err(Error::Parameter(format!("q must be positive, got {q}")));
    }
    Ok(g.h() * u.values().iter().map(|&v| log_power(v, q)).sum::<f64>())
}
