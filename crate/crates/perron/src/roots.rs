//! Polynomial root finding.
//!
//! The workhorse is a simultaneous-iteration Aberth-Ehrlich solver in double
//! precision with residual-based acceptance. On top of it sit two refinement
//! layers: exact recognition of Gaussian-rational roots (candidate from the
//! float solver, verified by exact evaluation, removed by exact deflation)
//! and generic Newton polishing for higher-precision float backends.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::ratfn::poly_root_multiplicity;
use crate::scalar::{Coeff, GaussianRational, Scalar};

/// Maximum denominator attempted when recognizing a float root as a rational.
/// Roots carry roughly 1e-15 relative error, so denominators much larger than
/// 2^26 cannot be reconstructed reliably; every candidate is verified exactly
/// before acceptance, so this bound only causes false negatives.
const MAX_RECOGNIZED_DEN: u64 = 1 << 26;

#[derive(Clone, Debug)]
pub struct RootReport {
    /// Roots with multiplicities (clustered within `cluster_tol`).
    pub roots: Vec<(Complex64, usize)>,
    /// Backward-error residuals |p(x)| / bound(x), one per distinct root.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// All complex roots of a double-precision polynomial.
///
/// Returns an error for the zero polynomial; a nonzero constant has no roots.
pub fn aberth_roots(
    p: &Polynomial<Complex64>,
    max_iter: usize,
    cluster_tol: f64,
) -> Result<RootReport> {
    if p.is_zero() {
        return Err(Error::RootFinding("zero polynomial".into()));
    }
    let deg = p.degree().unwrap();
    if deg == 0 {
        return Ok(RootReport {
            roots: vec![],
            residuals: vec![],
            iterations: 0,
            converged: true,
        });
    }

    // factor out exact zero roots first
    let mut zero_mult = 0usize;
    let mut coeffs = p.coeffs().to_vec();
    while coeffs.first().map_or(false, |c| c.re == 0.0 && c.im == 0.0) {
        coeffs.remove(0);
        zero_mult += 1;
    }
    let reduced = Polynomial::new(coeffs);
    let d = reduced.degree().unwrap();
    let mut xs: Vec<Complex64> = Vec::with_capacity(d);
    if d > 0 {
        let lead = reduced.leading().unwrap();
        let radius = 1.0
            + reduced
                .coeffs()
                .iter()
                .take(d)
                .map(|c| (c / lead).norm())
                .fold(0.0, f64::max);
        for k in 0..d {
            let theta = 2.0 * std::f64::consts::PI * (k as f64) / (d as f64) + 0.4;
            xs.push(Complex64::from_polar(radius.min(1e6), theta));
        }
    }

    let dp = reduced.derivative();
    let mut iterations = 0;
    let mut converged = d == 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let mut max_step = 0.0f64;
        let snapshot = xs.clone();
        for i in 0..d {
            let x = snapshot[i];
            let pv = reduced.eval_c64(x);
            let dv = dp.eval_c64(x);
            if pv.norm() == 0.0 {
                continue;
            }
            let w = if dv.norm() == 0.0 {
                Complex64::new(1e-3, 1e-3)
            } else {
                pv / dv
            };
            let mut s = Complex64::new(0.0, 0.0);
            for (j, xj) in snapshot.iter().enumerate() {
                if j != i {
                    let diff = x - xj;
                    if diff.norm() > 1e-300 {
                        s += Complex64::new(1.0, 0.0) / diff;
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - w * s;
            let step = if denom.norm() < 1e-300 { w } else { w / denom };
            xs[i] = x - step;
            max_step = max_step.max(step.norm() / (1.0 + xs[i].norm()));
        }
        if max_step < 1e-14 {
            converged = true;
            break;
        }
    }

    // backward-error residuals
    let bound = |x: Complex64| -> f64 {
        let mut b = 0.0;
        let mut xp = 1.0;
        for c in reduced.coeffs() {
            b += c.norm() * xp;
            xp *= x.norm();
        }
        (d as f64 + 1.0) * f64::EPSILON * b.max(f64::MIN_POSITIVE)
    };
    let mut ok = true;
    for &x in &xs {
        let r = reduced.eval_c64(x).norm();
        if r > 1e6 * bound(x) {
            ok = false;
        }
    }
    converged = converged && ok;

    // cluster into multiplicities
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    if zero_mult > 0 {
        clusters.push((Complex64::new(0.0, 0.0), zero_mult));
    }
    let mut remaining = xs;
    remaining.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for x in remaining {
        match clusters
            .iter_mut()
            .find(|(c, m)| (*c - x).norm() <= cluster_tol * (1.0 + x.norm()) * (*m as f64))
        {
            Some((c, m)) => {
                *c = (*c * (*m as f64) + x) / (*m as f64 + 1.0);
                *m += 1;
            }
            None => clusters.push((x, 1)),
        }
    }
    let residuals = clusters
        .iter()
        .map(|(x, _)| reduced.eval_c64(*x).norm() / bound(*x).max(f64::MIN_POSITIVE))
        .collect();

    Ok(RootReport {
        roots: clusters,
        residuals,
        iterations,
        converged,
    })
}

/// Reconstructs a real number as p/q with q bounded, via the continued
/// fraction expansion. Returns `None` when no convergent with a bounded
/// denominator matches `x` to near round-off.
pub fn rationalize(x: f64, max_den: u64) -> Option<BigRational> {
    rationalize_within(x, max_den, 4.0 * f64::EPSILON * x.abs().max(1.0))
}

/// Like [`rationalize`] but accepts the first (smallest-denominator)
/// convergent within `tol`; used when the input carries known blur, e.g.
/// float approximations of multiple roots.
pub fn rationalize_within(x: f64, max_den: u64, tol: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    if x == 0.0 {
        return Some(BigRational::zero());
    }
    let (mut p0, mut q0) = (BigInt::from(1), BigInt::from(0));
    let (mut p1, mut q1) = (BigInt::from(x.floor() as i64), BigInt::from(1));
    let mut frac = x - x.floor();
    for _ in 0..64 {
        let approx = ratio_f64(&p1, &q1);
        if (approx - x).abs() <= tol {
            return Some(BigRational::new(p1, q1));
        }
        if frac.abs() < 1e-18 {
            break;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        if !a.is_finite() || a >= 1e18 {
            break;
        }
        let ai = BigInt::from(a as i64);
        let p2 = &ai * &p1 + &p0;
        let q2 = &ai * &q1 + &q0;
        if q2 > BigInt::from(max_den) {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        frac = inv - a;
    }
    let approx = ratio_f64(&p1, &q1);
    if (approx - x).abs() <= tol {
        Some(BigRational::new(p1, q1))
    } else {
        None
    }
}

fn ratio_f64(p: &BigInt, q: &BigInt) -> f64 {
    if q.is_zero() {
        return f64::INFINITY;
    }
    crate::scalar::ratio_to_f64(&BigRational::new(p.clone(), q.clone()))
}

/// Splits an exact polynomial into exactly-verified Gaussian-rational roots
/// (with multiplicity) and the deflated cofactor whose roots are not
/// recognizable rationals.
pub fn exact_rational_roots(
    p: &Polynomial<GaussianRational>,
) -> (Vec<(GaussianRational, usize)>, Polynomial<GaussianRational>) {
    let mut found: Vec<(GaussianRational, usize)> = Vec::new();
    let mut rest = p.clone();
    if rest.is_zero() || rest.degree() == Some(0) {
        return (found, rest);
    }
    let report = match aberth_roots(&rest.to_c64_poly(), 200, 1e-9) {
        Ok(r) => r,
        Err(_) => return (found, rest),
    };
    for (x, _) in report.roots {
        // multiple roots blur like eps^(1/m) in double precision, so accept a
        // loose convergent here; the exact evaluation below is the real gate
        let tol = 1e-4 * (1.0 + x.norm());
        let (re, im) = match (
            rationalize_within(x.re, MAX_RECOGNIZED_DEN, tol),
            rationalize_within(x.im, MAX_RECOGNIZED_DEN, tol),
        ) {
            (Some(a), Some(b)) => (a, b),
            _ => continue,
        };
        let cand = GaussianRational::new(re, im);
        let mult = poly_root_multiplicity(&rest, &cand, 0.0);
        if mult > 0 {
            let lin = Polynomial::linear_from_root(&cand);
            for _ in 0..mult {
                rest = rest.exact_div(&lin);
            }
            found.push((cand, mult));
        }
    }
    (found, rest)
}

/// One Newton step repeated `iters` times; used to polish float roots at the
/// working precision of `T`.
pub fn newton_polish<T: Coeff>(p: &Polynomial<T>, seed: T, iters: usize) -> T {
    let dp = p.derivative();
    let mut x = seed;
    for _ in 0..iters {
        let d = dp.eval(&x);
        if d.is_zero() {
            break;
        }
        let step = p.eval(&x).div(&d);
        x = x.sub(&step);
    }
    x
}

/// Backend-aware root extraction for reports: exact polynomials yield exact
/// scalars where recognition succeeds (float scalars otherwise); float
/// polynomials yield double-precision roots, Newton-polished at the native
/// precision for the arbitrary-precision backend.
pub fn roots_as_scalars<T: Coeff>(
    p: &Polynomial<T>,
    cluster_tol: f64,
) -> Result<Vec<(Scalar, usize, f64)>> {
    if p.is_zero() {
        return Err(Error::RootFinding(
            "zero polynomial has every point as a root".into(),
        ));
    }
    let mut out = Vec::new();
    if let Some(first) = p.coeffs().first() {
        let _ = first;
    }
    // exact path: recognize rationals, fall back to floats for the cofactor
    if T::EXACT {
        let pe = Polynomial::new(
            p.coeffs()
                .iter()
                .map(|c| c.as_gaussian_rational().expect("exact coeff").clone())
                .collect(),
        );
        let (exact, rest) = exact_rational_roots(&pe);
        for (r, m) in exact {
            out.push((Scalar::Exact(r), m, 0.0));
        }
        if rest.degree().unwrap_or(0) > 0 {
            let rep = aberth_roots(&rest.to_c64_poly(), 200, cluster_tol)?;
            if !rep.converged {
                return Err(Error::RootFinding(format!(
                    "Aberth iteration stalled; residuals {:?}",
                    rep.residuals
                )));
            }
            for ((x, m), res) in rep.roots.into_iter().zip(rep.residuals) {
                out.push((Scalar::F64(x), m, res));
            }
        }
        return Ok(out);
    }
    let rep = aberth_roots(&p.to_c64_poly(), 400, cluster_tol)?;
    if !rep.converged {
        return Err(Error::RootFinding(format!(
            "Aberth iteration stalled; residuals {:?}",
            rep.residuals
        )));
    }
    for ((x, m), res) in rep.roots.into_iter().zip(rep.residuals) {
        let seed = T::from_scalar(&Scalar::F64(x))
            .ok()
            .or_else(|| T::from_scalar(&Scalar::Big(crate::scalar::BigComplex::from_c64(x, 64))).ok());
        match seed {
            Some(s) => {
                let polished = newton_polish(p, s, 4);
                out.push((polished.to_scalar(), m, res));
            }
            None => out.push((Scalar::F64(x), m, res)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    type PF = Polynomial<Complex64>;
    type PE = Polynomial<GaussianRational>;

    #[test]
    fn aberth_finds_simple_roots() {
        // (z-1)(z+2)(z-3i) = expanded
        let roots = [
            Complex64::new(1.0, 0.0),
            Complex64::new(-2.0, 0.0),
            Complex64::new(0.0, 3.0),
        ];
        let p = PF::from_roots(&roots);
        let rep = aberth_roots(&p, 200, 1e-9).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.roots.len(), 3);
        for want in roots {
            assert!(
                rep.roots.iter().any(|(x, m)| *m == 1 && (x - want).norm() < 1e-10),
                "missing root {want}"
            );
        }
    }

    #[test]
    fn aberth_zero_roots_and_multiplicity() {
        // z^2 (z-1)^2
        let p = PF::from_roots(&[
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]);
        let rep = aberth_roots(&p, 500, 1e-5).unwrap();
        let mut mults: Vec<usize> = rep.roots.iter().map(|(_, m)| *m).collect();
        mults.sort();
        assert_eq!(mults, vec![2, 2]);
    }

    #[test]
    fn rationalize_simple() {
        assert_eq!(rationalize(0.5, 1 << 20).unwrap(), BigRational::new(1.into(), 2.into()));
        assert_eq!(
            rationalize(-2.0 / 3.0, 1 << 20).unwrap(),
            BigRational::new((-2).into(), 3.into())
        );
        assert_eq!(rationalize(7.0, 10).unwrap(), BigRational::from_integer(7.into()));
        // sqrt(2) is not rational with a small denominator
        assert!(rationalize(std::f64::consts::SQRT_2, 1 << 20).is_none());
    }

    #[test]
    fn exact_recognition_and_deflation() {
        // (z - 1/2)^2 (z + 3) (z^2 - 2); the last factor is irrational
        let half = GaussianRational::from_ratio(1, 2);
        let m3 = GaussianRational::from_i64(-3);
        let lin1 = PE::linear_from_root(&half);
        let lin2 = PE::linear_from_root(&m3);
        let irr = PE::from_i64_slice(&[-2, 0, 1]);
        let p = lin1.mul(&lin1).mul(&lin2).mul(&irr);
        let (found, rest) = exact_rational_roots(&p);
        let mut mult_of_half = 0;
        let mut saw_m3 = false;
        for (r, m) in &found {
            if *r == half {
                mult_of_half = *m;
            }
            if *r == m3 {
                saw_m3 = *m == 1;
            }
        }
        assert_eq!(mult_of_half, 2);
        assert!(saw_m3);
        assert_eq!(rest.monic(), irr.monic());
    }

    #[test]
    fn scalar_roots_mixed_output() {
        let half = GaussianRational::from_ratio(1, 2);
        let p = PE::linear_from_root(&half).mul(&PE::from_i64_slice(&[-2, 0, 1]));
        let roots = roots_as_scalars(&p, 1e-9).unwrap();
        assert_eq!(roots.len(), 3);
        let exact: Vec<_> = roots
            .iter()
            .filter(|(s, _, _)| matches!(s, Scalar::Exact(_)))
            .collect();
        assert_eq!(exact.len(), 1);
        let irrational: Vec<_> = roots
            .iter()
            .filter(|(s, _, _)| matches!(s, Scalar::F64(_)))
            .collect();
        assert_eq!(irrational.len(), 2);
        for (s, _, _) in irrational {
            assert!((s.to_c64().re.abs() - std::f64::consts::SQRT_2).abs() < 1e-9);
        }
    }

    #[test]
    fn newton_polish_improves() {
        let p = PF::from_roots(&[Complex64::new(2.0, 0.0)]);
        let x = newton_polish(&p, Complex64::new(2.1, 0.0), 6);
        assert!((x - Complex64::new(2.0, 0.0)).norm() < 1e-14);
    }
}
