//! Rational functions num/den with a monic denominator.
//!
//! In the exact backend numerator and denominator are kept coprime by
//! polynomial GCD reduction after every operation, which controls coefficient
//! blow-up and makes equality a coefficient comparison. Float rational
//! functions only normalize the denominator to monic; reduction would require
//! unstable float GCDs.

use std::fmt;

use crate::poly::Polynomial;
use crate::scalar::Coeff;

#[derive(Clone, PartialEq, Debug)]
pub struct RationalFunction<T: Coeff> {
    num: Polynomial<T>,
    den: Polynomial<T>,
}

impl<T: Coeff> RationalFunction<T> {
    /// Builds num/den, normalizing to a monic denominator and (exact backend)
    /// reducing by the polynomial GCD. Panics on a zero denominator.
    pub fn new(num: Polynomial<T>, den: Polynomial<T>) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let mut r = Self { num, den };
        r.normalize();
        r
    }

    pub fn from_poly(num: Polynomial<T>) -> Self {
        Self {
            num,
            den: Polynomial::one(),
        }
    }

    pub fn zero() -> Self {
        Self::from_poly(Polynomial::zero())
    }

    pub fn one() -> Self {
        Self::from_poly(Polynomial::one())
    }

    pub fn constant(c: T) -> Self {
        Self::from_poly(Polynomial::constant(c))
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.den = Polynomial::one();
            return;
        }
        if T::EXACT {
            let g = self.num.gcd(&self.den);
            if g.degree().unwrap_or(0) > 0 {
                self.num = self.num.exact_div(&g);
                self.den = self.den.exact_div(&g);
            }
        }
        if let Some(l) = self.den.leading() {
            if !l.is_one() {
                let l = l.clone();
                self.num = self.num.unscale(&l);
                self.den = self.den.unscale(&l);
            }
        }
    }

    pub fn num(&self) -> &Polynomial<T> {
        &self.num
    }

    pub fn den(&self) -> &Polynomial<T> {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.degree() == Some(0)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self::new(
            self.num.mul(&rhs.den).add(&rhs.num.mul(&self.den)),
            self.den.mul(&rhs.den),
        )
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self::new(
            self.num.mul(&rhs.den).sub(&rhs.num.mul(&self.den)),
            self.den.mul(&rhs.den),
        )
    }

    pub fn neg(&self) -> Self {
        Self {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        Self::new(self.num.mul(&rhs.num), self.den.mul(&rhs.den))
    }

    pub fn mul_poly(&self, p: &Polynomial<T>) -> Self {
        Self::new(self.num.mul(p), self.den.clone())
    }

    pub fn scale(&self, c: &T) -> Self {
        Self::new(self.num.scale(c), self.den.clone())
    }

    pub fn div(&self, rhs: &Self) -> Self {
        assert!(!rhs.is_zero(), "division by zero rational function");
        Self::new(self.num.mul(&rhs.den), self.den.mul(&rhs.num))
    }

    pub fn inv(&self) -> Self {
        assert!(!self.is_zero(), "inverse of zero rational function");
        Self::new(self.den.clone(), self.num.clone())
    }

    /// Quotient-rule derivative, reduced in the exact backend.
    pub fn derivative(&self) -> Self {
        let n = self
            .num
            .derivative()
            .mul(&self.den)
            .sub(&self.num.mul(&self.den.derivative()));
        Self::new(n, self.den.mul(&self.den))
    }

    /// Evaluates at a point; `None` when the (reduced) denominator vanishes.
    pub fn eval(&self, z: &T) -> Option<T> {
        let d = self.den.eval(z);
        if d.is_zero() {
            return None;
        }
        Some(self.num.eval(z).div(&d))
    }

    /// Substitutes z -> z + c.
    pub fn shift(&self, c: &T) -> Self {
        Self::new(self.num.shift(c), self.den.shift(c))
    }

    /// Pole order at t: multiplicity of (z - t) in the denominator minus the
    /// multiplicity in the numerator, clamped at zero. For the float backend
    /// multiplicities are counted by synthetic division with a relative
    /// tolerance.
    pub fn pole_order_at(&self, t: &T, rel_eps: f64) -> usize {
        if self.is_zero() {
            return 0;
        }
        let md = poly_root_multiplicity(&self.den, t, rel_eps);
        if md == 0 {
            return 0;
        }
        let mn = poly_root_multiplicity(&self.num, t, rel_eps);
        md.saturating_sub(mn)
    }

    /// deg(num) - deg(den); `None` for the zero function. This is the growth
    /// order at infinity.
    pub fn degree_at_infinity(&self) -> Option<i64> {
        Some(self.num.degree()? as i64 - self.den.degree().unwrap_or(0) as i64)
    }
}

/// Common multiple of the denominators of a coefficient list: the monic LCM
/// in the exact backend, the product of pairwise-distinct denominators for
/// floats (float GCDs are unreliable; duplicate denominators are the common
/// case and deduplicating them keeps degrees down).
pub fn common_denominator<T: Coeff>(q: &[RationalFunction<T>]) -> Polynomial<T> {
    if T::EXACT {
        let mut l = Polynomial::<T>::one();
        for r in q {
            l = l.lcm(r.den());
        }
        l
    } else {
        let mut seen: Vec<&Polynomial<T>> = Vec::new();
        let mut l = Polynomial::<T>::one();
        for r in q {
            if r.den().degree() == Some(0) || seen.iter().any(|d| *d == r.den()) {
                continue;
            }
            seen.push(r.den());
            l = l.mul(r.den());
        }
        l
    }
}

/// Multiplicity of t as a root, by repeated synthetic division. Exact backend
/// divides exactly; float accepts remainders below `rel_eps` times the
/// coefficient scale.
pub fn poly_root_multiplicity<T: Coeff>(p: &Polynomial<T>, t: &T, rel_eps: f64) -> usize {
    let mut m = 0;
    let mut cur = p.clone();
    let lin = Polynomial::linear_from_root(t);
    let scale = p.coeffs().iter().map(|c| c.abs()).fold(0.0, f64::max);
    loop {
        if cur.is_zero() {
            return m;
        }
        let v = cur.eval(t);
        let vanished = if T::EXACT {
            v.is_zero()
        } else {
            v.abs() <= rel_eps * scale.max(1.0)
        };
        if !vanished {
            return m;
        }
        let (q, _r) = cur.div_rem(&lin);
        cur = q;
        m += 1;
    }
}

impl<T: Coeff> fmt::Display for RationalFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_polynomial() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussianRational;

    type R = RationalFunction<GaussianRational>;
    type P = Polynomial<GaussianRational>;

    fn p(v: &[i64]) -> P {
        P::from_i64_slice(v)
    }

    #[test]
    fn reduction_is_automatic() {
        // (z^2 - 1)/(z - 1) reduces to z + 1
        let r = R::new(p(&[-1, 0, 1]), p(&[-1, 1]));
        assert_eq!(r.num(), &p(&[1, 1]));
        assert!(r.is_polynomial());
    }

    #[test]
    fn monic_denominator() {
        let r = R::new(p(&[1]), p(&[0, 2]));
        assert_eq!(r.den(), &p(&[0, 1]));
        assert_eq!(
            r.num(),
            &P::constant(GaussianRational::from_ratio(1, 2))
        );
    }

    #[test]
    fn field_ops() {
        let a = R::new(p(&[1]), p(&[0, 1])); // 1/z
        let b = R::new(p(&[0, 1]), p(&[1, 1])); // z/(z+1)
        let s = a.add(&b);
        // 1/z + z/(z+1) = (z+1+z^2)/(z(z+1))
        assert_eq!(s.num(), &p(&[1, 1, 1]));
        assert_eq!(s.den(), &p(&[0, 1, 1]));
        let prod = a.mul(&b); // 1/(z+1)
        assert_eq!(prod.num(), &p(&[1]));
        assert_eq!(prod.den(), &p(&[1, 1]));
        assert_eq!(a.div(&a), R::one());
    }

    #[test]
    fn derivative_quotient_rule() {
        // d/dz (1/z) = -1/z^2
        let a = R::new(p(&[1]), p(&[0, 1]));
        let d = a.derivative();
        assert_eq!(d.num(), &p(&[-1]));
        assert_eq!(d.den(), &p(&[0, 0, 1]));
    }

    #[test]
    fn pole_orders() {
        // (z+2)/(z^2 (z-1))
        let r = R::new(p(&[2, 1]), p(&[0, 0, 1]).mul(&p(&[-1, 1])));
        let zero = GaussianRational::from_i64(0);
        let one = GaussianRational::from_i64(1);
        let two = GaussianRational::from_i64(2);
        assert_eq!(r.pole_order_at(&zero, 0.0), 2);
        assert_eq!(r.pole_order_at(&one, 0.0), 1);
        assert_eq!(r.pole_order_at(&two, 0.0), 0);
        assert_eq!(r.degree_at_infinity(), Some(-2));
    }

    #[test]
    fn eval_and_shift() {
        let r = R::new(p(&[1]), p(&[-1, 1])); // 1/(z-1)
        let at0 = r.eval(&GaussianRational::from_i64(0)).unwrap();
        assert_eq!(at0, GaussianRational::from_i64(-1));
        assert!(r.eval(&GaussianRational::from_i64(1)).is_none());
        let sh = r.shift(&GaussianRational::from_i64(1)); // 1/z
        assert_eq!(sh.den(), &p(&[0, 1]));
    }
}
