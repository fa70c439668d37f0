//! Dense univariate polynomials over a [`Coeff`] backend.
//!
//! Coefficients are stored in ascending degree order and kept normalized:
//! the leading coefficient is nonzero, and the zero polynomial is the empty
//! list. `degree` returns `None` for the zero polynomial (the "-infinity"
//! marker). GCD-based reduction is only meaningful for the exact backend;
//! float callers get tolerance-based trimming helpers instead.

use std::fmt;

use num_complex::Complex64;

use crate::scalar::{Coeff, Scalar};

#[derive(Clone, PartialEq, Debug)]
pub struct Polynomial<T: Coeff> {
    coeffs: Vec<T>,
}

impl<T: Coeff> Polynomial<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(T::one())
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    /// The monomial c * z^k.
    pub fn monomial(c: T, k: usize) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let mut v = vec![T::zero(); k + 1];
        v[k] = c;
        Self { coeffs: v }
    }

    /// z - r
    pub fn linear_from_root(r: &T) -> Self {
        Self::new(vec![r.neg(), T::one()])
    }

    pub fn from_i64_slice(v: &[i64]) -> Self {
        Self::new(v.iter().map(|&n| T::from_i64(n)).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).cloned().unwrap_or_else(T::zero)
    }

    pub fn leading(&self) -> Option<&T> {
        self.coeffs.last()
    }

    pub fn constant_term(&self) -> T {
        self.coeff(0)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut v = Vec::with_capacity(n);
        for k in 0..n {
            v.push(self.coeff(k).add(&rhs.coeff(k)));
        }
        Self::new(v)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut v = Vec::with_capacity(n);
        for k in 0..n {
            v.push(self.coeff(k).sub(&rhs.coeff(k)));
        }
        Self::new(v)
    }

    pub fn neg(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        let mut v = vec![T::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                v[i + j] = v[i + j].add(&a.mul(b));
            }
        }
        Self::new(v)
    }

    pub fn scale(&self, c: &T) -> Self {
        Self::new(self.coeffs.iter().map(|a| a.mul(c)).collect())
    }

    /// Divides every coefficient; panics if `c` is zero.
    pub fn unscale(&self, c: &T) -> Self {
        let inv = c.inv();
        self.scale(&inv)
    }

    pub fn pow(&self, mut e: usize) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Euclidean division; panics when the divisor is zero.
    pub fn div_rem(&self, rhs: &Self) -> (Self, Self) {
        assert!(!rhs.is_zero(), "division by zero polynomial");
        let dd = match self.degree() {
            None => return (Self::zero(), Self::zero()),
            Some(d) => d,
        };
        let dr = rhs.degree().unwrap();
        if dd < dr {
            return (Self::zero(), self.clone());
        }
        let lead_inv = rhs.leading().unwrap().inv();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![T::zero(); dd - dr + 1];
        for k in (0..=dd - dr).rev() {
            let q = rem[k + dr].mul(&lead_inv);
            if !q.is_zero() {
                for (j, b) in rhs.coeffs.iter().enumerate() {
                    rem[k + j] = rem[k + j].sub(&q.mul(b));
                }
            }
            quot[k] = q;
        }
        rem.truncate(dr);
        (Self::new(quot), Self::new(rem))
    }

    /// Exact quotient; panics when the division leaves a remainder in exact
    /// arithmetic (float remainders are discarded).
    pub fn exact_div(&self, rhs: &Self) -> Self {
        let (q, r) = self.div_rem(rhs);
        if T::EXACT {
            assert!(r.is_zero(), "exact_div with nonzero remainder {r:?}");
        }
        q
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            None => Self::zero(),
            Some(l) if l.is_one() => self.clone(),
            Some(l) => self.unscale(&l.clone()),
        }
    }

    /// Monic greatest common divisor via the Euclidean algorithm with
    /// per-step monic normalization. Exact backend only.
    pub fn gcd(&self, rhs: &Self) -> Self {
        assert!(T::EXACT, "polynomial gcd requires the exact backend");
        let mut a = self.monic();
        let mut b = rhs.monic();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r.monic();
        }
        a
    }

    /// Monic least common multiple. Exact backend only.
    pub fn lcm(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        let g = self.gcd(rhs);
        self.exact_div(&g).mul(rhs).monic()
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        let mut v = Vec::with_capacity(self.coeffs.len() - 1);
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            v.push(c.mul(&T::from_i64(k as i64)));
        }
        Self::new(v)
    }

    pub fn eval(&self, z: &T) -> T {
        let mut acc = T::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(z).add(c);
        }
        acc
    }

    /// Horner evaluation in double precision.
    pub fn eval_c64(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c.to_c64();
        }
        acc
    }

    /// Taylor shift: returns p(z + c).
    pub fn shift(&self, c: &T) -> Self {
        let mut r = Self::zero();
        for a in self.coeffs.iter().rev() {
            // r <- r * (z + c) + a
            let shifted = r.mul_by_linear(c);
            r = shifted.add(&Self::constant(a.clone()));
        }
        r
    }

    /// Multiplies by (z + c).
    fn mul_by_linear(&self, c: &T) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut v = vec![T::zero(); self.coeffs.len() + 1];
        for (k, a) in self.coeffs.iter().enumerate() {
            v[k + 1] = v[k + 1].add(a);
            v[k] = v[k].add(&a.mul(c));
        }
        Self::new(v)
    }

    /// Degree-k reversal: lambda^k * p(1/lambda). Requires k >= deg(p).
    pub fn reverse(&self, k: usize) -> Self {
        let d = self.degree().unwrap_or(0);
        assert!(self.is_zero() || k >= d, "reversal order below degree");
        let mut v = vec![T::zero(); k + 1];
        for (j, c) in self.coeffs.iter().enumerate() {
            v[k - j] = c.clone();
        }
        Self::new(v)
    }

    pub fn from_roots(roots: &[T]) -> Self {
        let mut p = Self::one();
        for r in roots {
            p = p.mul(&Self::linear_from_root(r));
        }
        p
    }

    /// Falling factorial x(x-1)...(x-j+1) as a polynomial; j = 0 gives 1.
    pub fn falling_factorial(j: usize) -> Self {
        let mut p = Self::one();
        for i in 0..j {
            p = p.mul(&Self::new(vec![T::from_i64(-(i as i64)), T::one()]));
        }
        p
    }

    /// Drops trailing coefficients that are negligible relative to the
    /// largest coefficient magnitude; used to clean float cancellation noise.
    pub fn trimmed(&self, rel_eps: f64) -> Self {
        if T::EXACT || self.coeffs.is_empty() {
            return self.clone();
        }
        let scale = self.coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Self::zero();
        }
        let mut v = self.coeffs.clone();
        while v.last().map_or(false, |c| c.abs() <= rel_eps * scale) {
            v.pop();
        }
        Self { coeffs: v }
    }

    pub fn to_c64_poly(&self) -> Polynomial<Complex64> {
        Polynomial::new(self.coeffs.iter().map(|c| c.to_c64()).collect())
    }

    pub fn to_scalars(&self) -> Vec<Scalar> {
        self.coeffs.iter().map(|c| c.to_scalar()).collect()
    }

    pub fn display_with(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let term = match k {
                0 => format!("{c}"),
                1 => format!("({c})*{var}"),
                _ => format!("({c})*{var}^{k}"),
            };
            parts.push(term);
        }
        parts.join(" + ")
    }
}

impl<T: Coeff> fmt::Display for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with("z"))
    }
}

/// Stirling numbers of the second kind S(i, l) for i, l <= n, used to expand
/// powers of the Euler operator into z^l d^l/dz^l terms.
pub fn stirling2_table(n: usize) -> Vec<Vec<i64>> {
    let mut t = vec![vec![0i64; n + 1]; n + 1];
    t[0][0] = 1;
    for i in 1..=n {
        for l in 1..=i {
            t[i][l] = t[i - 1][l - 1] + (l as i64) * t[i - 1][l];
        }
    }
    t
}
