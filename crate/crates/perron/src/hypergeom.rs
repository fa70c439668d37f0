//! Independent Gauss hypergeometric oracle.
//!
//! Everything here is computed straight from the defining series
//! F(a,b,c|z) = sum_n (a)_n (b)_n / ((c)_n n!) z^n, with a provable geometric
//! tail bound inside |z| < 1, and is used to cross-check the chain and
//! continued-fraction machinery. The derivative is available through two
//! independent routes (the contiguous-parameter identity and termwise
//! differentiation) so the oracle can check itself.

use num_complex::Complex64;
use serde::Serialize;

use crate::cf::{evaluate, from_order2_coefficients, CfEvaluation};
use crate::error::{Error, Result};
use crate::operator::DifferentialOperator;
use crate::poly::Polynomial;
use crate::ratfn::RationalFunction;
use crate::scalar::{Coeff, Scalar};

/// Parameters of F(a,b,c|z). None of them may be an integer: integer
/// parameters degenerate or terminate the series and sit outside this
/// oracle's contract.
#[derive(Clone, Debug, PartialEq)]
pub struct HypergeomParams<T: Coeff> {
    a: T,
    b: T,
    c: T,
}

impl<T: Coeff> HypergeomParams<T> {
    pub fn new(a: T, b: T, c: T) -> Result<Self> {
        for (name, v) in [("a", &a), ("b", &b), ("c", &c)] {
            if v.is_integer() {
                return Err(Error::Precondition(format!(
                    "parameter {name} = {v} is an integer; the oracle requires non-integer \
                     parameters"
                )));
            }
        }
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> &T {
        &self.a
    }
    pub fn b(&self) -> &T {
        &self.b
    }
    pub fn c(&self) -> &T {
        &self.c
    }

    /// Parameter switch (a, b, c) -> (a, b, a+b-c+1) for the series in 1-z
    /// around the other singularity.
    pub fn kummer_switch(&self) -> Result<Self> {
        let c_new = self.a.add(&self.b).sub(&self.c).add(&T::one());
        Self::new(self.a.clone(), self.b.clone(), c_new)
    }
}

/// The defining equation as a standard-form operator:
/// q_0 = ab/(z(1-z)), q_1 = ((a+b+1)z - c)/(z(1-z)).
pub fn gauss_operator<T: Coeff>(params: &HypergeomParams<T>) -> DifferentialOperator<T> {
    let z_one_minus_z = Polynomial::new(vec![T::zero(), T::one(), T::from_i64(-1)]);
    let q0 = RationalFunction::new(
        Polynomial::constant(params.a.mul(&params.b)),
        z_one_minus_z.clone(),
    );
    let q1 = RationalFunction::new(
        Polynomial::new(vec![
            params.c.neg(),
            params.a.add(&params.b).add(&T::one()),
        ]),
        z_one_minus_z,
    );
    DifferentialOperator::standard(vec![q0, q1]).expect("two coefficients")
}

fn check_domain<T: Coeff>(z: &T) -> Result<()> {
    let r = z.abs();
    if r >= 1.0 {
        return Err(Error::Precondition(format!(
            "|z| = {r} is outside the series domain |z| < 1"
        )));
    }
    Ok(())
}

const MAX_TERMS: usize = 200_000;

/// Sums the series with iteratively updated Pochhammer factors, stopping when
/// a geometric tail bound falls below `tol`.
pub fn f21<T: Coeff>(params: &HypergeomParams<T>, z: &T, tol: f64) -> Result<T> {
    f21_with_weight(params, z, tol, false)
}

/// Termwise-differentiated series: an oracle for the derivative that is
/// independent of the contiguous-parameter identity.
pub fn f21_derivative_termwise<T: Coeff>(
    params: &HypergeomParams<T>,
    z: &T,
    tol: f64,
) -> Result<T> {
    f21_with_weight(params, z, tol, true)
}

fn f21_with_weight<T: Coeff>(
    params: &HypergeomParams<T>,
    z: &T,
    tol: f64,
    derivative: bool,
) -> Result<T> {
    if tol <= 0.0 {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    check_domain(z)?;
    let zr = z.abs();
    // coefficient ratios tend to |z|; once the observed term ratio stays
    // below rho < 1 the tail is bounded by |term| * rho / (1 - rho)
    let rho = (1.0 + zr) / 2.0;
    let mut term = T::one(); // (a)_n (b)_n / ((c)_n n!) z^n
    let mut sum = if derivative { T::zero() } else { T::one() };
    let mut n: i64 = 0;
    loop {
        let nv = T::from_i64(n);
        let ratio = params
            .a
            .add(&nv)
            .mul(&params.b.add(&nv))
            .div(&params.c.add(&nv).mul(&T::from_i64(n + 1)))
            .mul(z);
        term = term.mul(&ratio);
        n += 1;
        let contrib = if derivative {
            // d/dz of z^n is n z^(n-1)
            term.mul(&T::from_i64(n)).div(z)
        } else {
            term.clone()
        };
        sum = sum.add(&contrib);
        let t = contrib.abs();
        if ratio.abs() <= rho && t * rho / (1.0 - rho) < tol {
            return Ok(sum);
        }
        if n as usize >= MAX_TERMS {
            return Err(Error::NoConvergence(format!(
                "series tail bound not reached after {MAX_TERMS} terms at |z| = {zr}"
            )));
        }
    }
}

/// F'(z)/F(z) via the contiguous-parameter derivative
/// F' = (ab/c) F(a+1, b+1, c+1 | z).
pub fn f21_logderiv<T: Coeff>(params: &HypergeomParams<T>, z: &T, tol: f64) -> Result<T> {
    check_domain(z)?;
    let f = f21(params, z, tol)?;
    if f.abs() <= 1e-12 {
        return Err(Error::Precondition(format!(
            "F(z) is zero within tolerance at z = {z}; the logarithmic derivative blows up"
        )));
    }
    let shifted = HypergeomParams {
        a: params.a.add(&T::one()),
        b: params.b.add(&T::one()),
        c: params.c.add(&T::one()),
    };
    let fprime_over = f21(&shifted, z, tol)?;
    let factor = params.a.mul(&params.b).div(&params.c);
    Ok(factor.mul(&fprime_over).div(&f))
}

/// Closed-form derivative-recurrence coefficients of the defining equation
/// at a point z:
///
/// ```text
/// a_{1,n} = (n+1)(c + n - (a+b+2n+1) z) / ((a+n)(b+n))
/// a_{2,n} = (n+1)(n+2) z (1-z)         / ((a+n)(b+n))
/// ```
///
/// The sign of the a_{2,n} numerator is z(1-z): it is forced by n-fold
/// differentiation of the defining equation and confirmed exactly against
/// derivative sequences of true solutions (see the recurrence tests); with
/// z(z-1) the characteristic roots match no singularity geometry.
#[derive(Clone, Debug)]
pub struct GaussCoefficients<T: Coeff> {
    a: T,
    b: T,
    c: T,
    z: T,
}

pub fn gauss_recurrence_coefficients<T: Coeff>(
    params: &HypergeomParams<T>,
    z: &T,
) -> GaussCoefficients<T> {
    GaussCoefficients {
        a: params.a.clone(),
        b: params.b.clone(),
        c: params.c.clone(),
        z: z.clone(),
    }
}

impl<T: Coeff> GaussCoefficients<T> {
    fn den(&self, n: i64) -> T {
        let nv = T::from_i64(n);
        self.a.add(&nv).mul(&self.b.add(&nv))
    }

    pub fn a1(&self, n: i64) -> T {
        let nv = T::from_i64(n);
        let lin = self
            .c
            .add(&nv)
            .sub(&self.a.add(&self.b).add(&T::from_i64(2 * n + 1)).mul(&self.z));
        T::from_i64(n + 1).mul(&lin).div(&self.den(n))
    }

    pub fn a2(&self, n: i64) -> T {
        let zz = self.z.mul(&T::one().sub(&self.z));
        T::from_i64(n + 1)
            .mul(&T::from_i64(n + 2))
            .mul(&zz)
            .div(&self.den(n))
    }

    /// Limits: a_{1,n} -> 1 - 2z, a_{2,n} -> z(1-z).
    pub fn limits(&self) -> (T, T) {
        let one = T::one();
        let two = T::from_i64(2);
        (
            one.sub(&two.mul(&self.z)),
            self.z.mul(&one.sub(&self.z)),
        )
    }

    /// Roots of z(1-z) t^2 + (1-2z) t - 1: exactly 1/(1-z) and -1/z, the
    /// reciprocal distances to the singularities 1 and 0 (the discriminant
    /// is exactly 1).
    pub fn characteristic_roots(&self) -> (T, T) {
        let one = T::one();
        (one.div(&one.sub(&self.z)), one.div(&self.z).neg())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyReport {
    pub cf: CfEvaluation,
    /// |CF - F'/F| at z, when |z| < 1.
    pub error_direct_branch: Option<f64>,
    /// |CF - (ln F(a,b,a+b-c+1 | 1-z))'| when |1-z| < 1.
    pub error_switched_branch: Option<f64>,
    /// Which branch the half-plane of z selects.
    pub expected_branch: Branch,
    pub distance_to_boundary: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    Direct,
    Switched,
}

/// Evaluates the fraction built from the closed-form coefficients and
/// compares it against the applicable series oracles: F'/F on Re z < 1/2
/// and the switched-parameter series in 1-z on Re z > 1/2. Both errors are
/// reported wherever the lens region makes both oracles applicable.
pub fn region_dichotomy_check<T: Coeff>(
    params: &HypergeomParams<T>,
    z: &T,
    cf_tol: f64,
    n_max: usize,
) -> Result<DichotomyReport> {
    let re = z.to_c64().re;
    let distance_to_boundary = (re - 0.5).abs();
    if distance_to_boundary <= 1e-12 {
        return Err(Error::Precondition(
            "Re z = 1/2 is the boundary between the two convergence regions".into(),
        ));
    }
    let coeffs = gauss_recurrence_coefficients(params, z);
    let c1 = coeffs.clone();
    let c2 = coeffs.clone();
    let cf = from_order2_coefficients(move |n| Ok(c1.a1(n)), move |n| Ok(c2.a2(n)));
    let eval = evaluate(&cf, cf_tol, n_max)?;
    if !eval.converged {
        return Err(Error::NoConvergence(format!(
            "fraction did not converge (distance to the boundary line: {distance_to_boundary:.3e})"
        )));
    }
    let cf_value = eval.value.to_c64();

    let series_tol = (cf_tol * 1e-3).max(1e-15);
    let error_direct_branch = if z.abs() < 1.0 {
        let ld = f21_logderiv(params, z, series_tol)?;
        Some((cf_value - ld.to_c64()).norm())
    } else {
        None
    };
    let one_minus_z = T::one().sub(z);
    let error_switched_branch = if one_minus_z.abs() < 1.0 {
        let switched = params.kummer_switch()?;
        // d/dz ln F(...|1-z) = -(F'/F)(1-z)
        let ld = f21_logderiv(&switched, &one_minus_z, series_tol)?;
        Some((cf_value + ld.to_c64()).norm())
    } else {
        None
    };
    Ok(DichotomyReport {
        cf: eval,
        error_direct_branch,
        error_switched_branch,
        expected_branch: if re < 0.5 {
            Branch::Direct
        } else {
            Branch::Switched
        },
        distance_to_boundary,
    })
}

/// Reference logarithmic derivative of the solution holomorphic at the
/// singularity nearest z, taken from the series oracle on the applicable
/// branch. Used as the comparison target for the chain limit.
pub fn oracle_logderiv<T: Coeff>(params: &HypergeomParams<T>, z: &T, tol: f64) -> Result<Scalar> {
    let re = z.to_c64().re;
    if re < 0.5 {
        Ok(f21_logderiv(params, z, tol)?.to_scalar())
    } else {
        let switched = params.kummer_switch()?;
        let w = T::one().sub(z);
        Ok(f21_logderiv(&switched, &w, tol)?.neg().to_scalar())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Chain;
    use crate::scalar::GaussianRational;

    type G = GaussianRational;

    fn gq(p: i64, q: i64) -> G {
        G::from_ratio(p, q)
    }

    fn params_exact() -> HypergeomParams<G> {
        HypergeomParams::new(gq(1, 2), gq(1, 3), gq(1, 4)).unwrap()
    }

    fn params_f64() -> HypergeomParams<Complex64> {
        HypergeomParams::new(
            Complex64::new(0.5, 0.0),
            Complex64::new(1.0 / 3.0, 0.0),
            Complex64::new(0.25, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn integer_parameters_rejected() {
        assert!(HypergeomParams::new(gq(1, 2), gq(1, 3), G::from_i64(2)).is_err());
        assert!(HypergeomParams::new(G::from_i64(-1), gq(1, 3), gq(1, 4)).is_err());
    }

    #[test]
    fn f21_at_zero_is_one() {
        let f = f21(&params_exact(), &G::zero(), 1e-12).unwrap();
        assert!(f.is_one());
    }

    #[test]
    fn f21_domain_error() {
        let z = Complex64::new(1.2, 0.0);
        assert!(f21(&params_f64(), &z, 1e-10).is_err());
    }

    #[test]
    fn f21_exact_matches_manual_partial_sum() {
        let p = params_exact();
        let z = gq(1, 5);
        let f = f21(&p, &z, 1e-25).unwrap();
        // manual Pochhammer loop, 80 terms
        let mut term = G::one();
        let mut sum = G::one();
        for n in 0..80i64 {
            let nv = G::from_i64(n);
            term = term
                .mul(&p.a().add(&nv))
                .mul(&p.b().add(&nv))
                .div(&p.c().add(&nv))
                .div(&G::from_i64(n + 1))
                .mul(&z);
            sum = sum.add(&term);
        }
        assert!(f.sub(&sum).abs() < 1e-24);
    }

    #[test]
    fn logderiv_at_zero_is_ab_over_c() {
        let p = params_exact();
        let ld = f21_logderiv(&p, &G::zero(), 1e-14).unwrap();
        let expect = p.a().mul(p.b()).div(p.c());
        assert!(ld.sub(&expect).abs() < 1e-13);
    }

    #[test]
    fn derivative_two_routes_agree() {
        let p = params_f64();
        for k in 0..20 {
            let t = -0.8 + 1.6 * (k as f64) / 19.0;
            let z = Complex64::new(t * 0.95, if k % 2 == 0 { 0.1 } else { -0.15 });
            if z.norm() > 0.8 || z.norm() < 1e-3 {
                continue;
            }
            let termwise = f21_derivative_termwise(&p, &z, 1e-16).unwrap();
            let f = f21(&p, &z, 1e-16).unwrap();
            let via_contiguous = f21_logderiv(&p, &z, 1e-16).unwrap() * f;
            let rel = (termwise - via_contiguous).norm() / termwise.norm().max(1e-30);
            assert!(rel < 1e-12, "z = {z}: relative gap {rel:.3e}");
        }
    }

    #[test]
    fn kummer_switch_values() {
        let p = params_exact();
        let s = p.kummer_switch().unwrap();
        assert_eq!(s.c(), &gq(19, 12));
        // involution on c
        let back = s.kummer_switch().unwrap();
        assert_eq!(back.c(), p.c());
        // c = a + b makes the switched parameter the integer 1: rejected
        let p2 = HypergeomParams::new(gq(1, 2), gq(1, 3), gq(5, 6)).unwrap();
        assert!(p2.kummer_switch().is_err());
    }

    #[test]
    fn gauss_coefficient_formulas_at_zero_index() {
        let p = params_exact();
        let z = gq(1, 5);
        let co = gauss_recurrence_coefficients(&p, &z);
        let ab = p.a().mul(p.b());
        // a_{1,0} = (c - (a+b+1) z)/(ab)
        let expect = p
            .c()
            .sub(&p.a().add(p.b()).add(&G::one()).mul(&z))
            .div(&ab);
        assert_eq!(co.a1(0), expect);
        // a_{2,0} = 2 z (1-z)/(ab)
        let expect2 = G::from_i64(2).mul(&z).mul(&G::one().sub(&z)).div(&ab);
        assert_eq!(co.a2(0), expect2);
        // limits and characteristic roots
        let (l1, l2) = co.limits();
        assert_eq!(l1, G::one().sub(&gq(2, 5)));
        assert_eq!(l2, z.mul(&G::one().sub(&z)));
        let (r1, r2) = co.characteristic_roots();
        assert_eq!(r1, gq(5, 4));
        assert_eq!(r2, gq(-5, 1));
    }

    #[test]
    fn closed_form_matches_general_leibniz_machinery() {
        // the closed-form coefficients must agree exactly with the
        // operator-derived backward recurrence
        let p = params_exact();
        let z = gq(1, 5);
        let co = gauss_recurrence_coefficients(&p, &z);
        let op = gauss_operator(&p);
        let chain = Chain::new(&op);
        let rec = chain.derivative_recurrence(&z).unwrap();
        for n in 0..=10i64 {
            assert_eq!(rec.coeff(1, n).unwrap(), co.a1(n), "a_1 at {n}");
            assert_eq!(rec.coeff(2, n).unwrap(), co.a2(n), "a_2 at {n}");
        }
    }

    #[test]
    fn dichotomy_left_branch() {
        let p = params_f64();
        let z = Complex64::new(0.2, 0.0);
        let rep = region_dichotomy_check(&p, &z, 1e-12, 400).unwrap();
        assert_eq!(rep.expected_branch, Branch::Direct);
        let e = rep.error_direct_branch.unwrap();
        assert!(e < 1e-8, "direct-branch error {e:.3e}");
    }

    #[test]
    fn dichotomy_right_branch() {
        let p = params_f64();
        let z = Complex64::new(0.8, 0.0);
        let rep = region_dichotomy_check(&p, &z, 1e-12, 400).unwrap();
        assert_eq!(rep.expected_branch, Branch::Switched);
        let e = rep.error_switched_branch.unwrap();
        assert!(e < 1e-6, "switched-branch error {e:.3e}");
    }

    #[test]
    fn dichotomy_refuses_the_boundary() {
        let p = params_f64();
        let z = Complex64::new(0.5, 0.0);
        assert!(region_dichotomy_check(&p, &z, 1e-10, 200).is_err());
    }
}
