//! Taylor-coefficient recurrences and ratio-limit estimation.
//!
//! From the theta form P_0(d) + z P_1(d) + ... + z^k P_k(d), comparing the
//! coefficient of z^{n+k} in L(f) = 0 yields the order-k recurrence
//!
//! ```text
//! f_{n+k} + a_{k-1,n} f_{n+k-1} + ... + a_{0,n} f_n = 0,
//! a_{j,n} = P_{k-j}(n+j) / P_0(n+k)
//! ```
//!
//! with the shared pivot P_0(n+k). The coefficient limits a_j produce the
//! characteristic polynomial whose roots govern the asymptotics of f_{n+1}/f_n.
//! The ratio limit is matched against the singularity geometry through the
//! reciprocal interpretation: a ratio limit L corresponds to convergence
//! radius 1/|L| = |t_j - z_0| for the singularity t_j that blocks the series.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::DifferentialOperator;
use crate::poly::Polynomial;
use crate::roots::roots_as_scalars;
use crate::scalar::{Coeff, Scalar};

/// Order-k linear recurrence with coefficients rational in the index.
#[derive(Clone, Debug)]
pub struct RecurrenceSystem<T: Coeff> {
    /// Recurrence order k.
    pub order: usize,
    /// Numerators N_j(n) of a_{j,n} = N_j(n)/pivot(n), already shifted so
    /// they evaluate directly at n (N_j(n) = P_{k-j}(n+j)).
    pub coeff_nums: Vec<Polynomial<T>>,
    /// Shared pivot denominator, already shifted: pivot(n) = P_0(n+k).
    pub pivot: Polynomial<T>,
    /// Coefficient limits a_j = lim a_{j,n}; `None` when the numerator degree
    /// exceeds the pivot degree and the limit diverges.
    pub limits: Vec<Option<T>>,
    /// Indices n >= 0 where the pivot vanishes and the recurrence cannot be
    /// solved forward.
    pub blocked_indices: Vec<i64>,
}

impl<T: Coeff> RecurrenceSystem<T> {
    /// a_{j,n}; `None` at blocked indices.
    pub fn coeff(&self, j: usize, n: i64) -> Option<T> {
        let nv = T::from_i64(n);
        let den = self.pivot.eval(&nv);
        if den.is_zero() {
            return None;
        }
        Some(self.coeff_nums[j].eval(&nv).div(&den))
    }

    pub fn all_limits_finite(&self) -> bool {
        self.limits.iter().all(|l| l.is_some())
    }
}

/// Taylor recurrence of a theta-form operator.
pub fn build_recurrence<T: Coeff>(op: &DifferentialOperator<T>) -> Result<RecurrenceSystem<T>> {
    let ps = op
        .theta_parts()
        .ok_or_else(|| Error::Precondition("build_recurrence requires the theta form".into()))?;
    if ps[0].is_zero() {
        return Err(Error::InvalidOperator(
            "P_0 is identically zero; the operator has no pivot".into(),
        ));
    }
    let k = ps.len() - 1;
    let pivot = ps[0].shift(&T::from_i64(k as i64));
    let dp = pivot.degree().unwrap();
    let lead_pivot = pivot.leading().unwrap().clone();
    let mut coeff_nums = Vec::with_capacity(k);
    let mut limits = Vec::with_capacity(k);
    for j in 0..k {
        let num = ps[k - j].shift(&T::from_i64(j as i64));
        let limit = match num.degree() {
            None => Some(T::zero()),
            Some(d) if d < dp => Some(T::zero()),
            Some(d) if d == dp => Some(num.leading().unwrap().div(&lead_pivot)),
            Some(_) => None,
        };
        coeff_nums.push(num);
        limits.push(limit);
    }
    let blocked_indices = nonnegative_integer_roots(&pivot);
    Ok(RecurrenceSystem {
        order: k,
        coeff_nums,
        pivot,
        limits,
        blocked_indices,
    })
}

/// Nonnegative integer roots of a polynomial, found by screening float roots
/// for near-integers and verifying against the polynomial itself.
fn nonnegative_integer_roots<T: Coeff>(p: &Polynomial<T>) -> Vec<i64> {
    let mut out = Vec::new();
    let Ok(roots) = roots_as_scalars(p, 1e-7) else {
        return out;
    };
    let scale = p.coeffs().iter().map(|c| c.abs()).fold(0.0, f64::max).max(1.0);
    for (s, _, _) in roots {
        let c = s.to_c64();
        if c.im.abs() > 1e-6 || c.re < -0.5 {
            continue;
        }
        let n = c.re.round() as i64;
        if n < 0 || out.contains(&n) {
            continue;
        }
        let v = p.eval(&T::from_i64(n));
        let ok = if T::EXACT {
            v.is_zero()
        } else {
            v.abs() <= 1e-7 * scale * (n.max(1) as f64).powi(p.degree().unwrap_or(0) as i32)
        };
        if ok {
            out.push(n);
        }
    }
    out.sort();
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SeriesSource {
    FromRecurrence,
    FromOracle,
}

/// Truncated power-series solution around a center.
#[derive(Clone, Debug)]
pub struct SeriesSolution<T: Coeff> {
    pub center: T,
    /// f_n = y^(n)(center) / n!, ascending.
    pub coeffs: Vec<T>,
    pub source: SeriesSource,
}

/// Power-series solution at an ordinary point by forward recursion on the
/// theta-form recurrence; initial values follow the Taylor convention
/// f_j = y^(j)(z0)/j!.
pub fn solve_series<T: Coeff>(
    op: &DifferentialOperator<T>,
    z0: &T,
    initial: &[T],
    n_terms: usize,
) -> Result<SeriesSolution<T>> {
    let m = op.order();
    if initial.len() != m {
        return Err(Error::Precondition(format!(
            "need exactly {m} initial Taylor coefficients, got {}",
            initial.len()
        )));
    }
    if n_terms < m {
        return Err(Error::Precondition(format!(
            "series length {n_terms} below the operator order {m}"
        )));
    }
    if !op.is_ordinary_point(z0) {
        return Err(Error::Precondition(format!(
            "{z0} is a singular point; series solving requires an ordinary center"
        )));
    }
    let theta = op.recenter(z0).to_theta_form()?;
    let ps = theta.theta_parts().unwrap();
    let k = ps.len() - 1;
    let mut f: Vec<T> = initial.to_vec();
    for n in m..=n_terms {
        let mut rhs = T::zero();
        for i in 1..=k.min(n) {
            let c = ps[i].eval(&T::from_i64((n - i) as i64));
            if !c.is_zero() {
                rhs = rhs.add(&c.mul(&f[n - i]));
            }
        }
        let pivot = ps[0].eval(&T::from_i64(n as i64));
        assert!(
            !pivot.is_zero(),
            "pivot vanished at an ordinary point (n = {n}); operator data inconsistent"
        );
        f.push(rhs.neg().div(&pivot));
    }
    Ok(SeriesSolution {
        center: z0.clone(),
        coeffs: f,
        source: SeriesSource::FromRecurrence,
    })
}

/// Independent residual oracle: substitutes the truncated series into the
/// cleared-denominator standard form of the operator (recentered at the
/// series center) and returns the residual series in the local coordinate.
/// For a true solution all coefficients of degree <= N - m vanish.
pub fn series_residual<T: Coeff>(
    op: &DifferentialOperator<T>,
    series: &SeriesSolution<T>,
) -> Polynomial<T> {
    let local = op.recenter(&series.center);
    let q = local.standard_coeffs();
    let m = local.order();
    let lambda = crate::ratfn::common_denominator(&q);
    let f = Polynomial::new(series.coeffs.clone());
    let deriv_i = |i: usize| {
        let mut d = f.clone();
        for _ in 0..i {
            d = d.derivative();
        }
        d
    };
    // residual = Lambda f^(m) - sum_i (Lambda q_i) f^(i)
    let mut res = lambda.mul(&deriv_i(m));
    for (i, r) in q.iter().enumerate() {
        if r.is_zero() {
            continue;
        }
        let lam_qi = if T::EXACT {
            r.num().mul(&lambda.exact_div(r.den()))
        } else {
            let (quot, _) = lambda.mul(r.num()).div_rem(r.den());
            quot
        };
        res = res.sub(&lam_qi.mul(&deriv_i(i)));
    }
    res
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Acceleration {
    None,
    Richardson,
}

#[derive(Clone, Debug)]
pub struct RatioOptions {
    pub acceleration: Acceleration,
    /// Number of trailing (accelerated) ratios that must agree within `tol`.
    pub window: usize,
    pub tol: f64,
    /// Singularities to match the estimated radius against, together with
    /// the matching tolerance.
    pub singular_points: Vec<Complex64>,
    pub match_tol: f64,
}

impl Default for RatioOptions {
    fn default() -> Self {
        Self {
            acceleration: Acceleration::Richardson,
            window: 8,
            tol: 1e-9,
            singular_points: vec![],
            match_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioEstimate {
    pub limit: Scalar,
    /// 1/|limit|; infinite when the limit is zero (entire-looking series).
    pub radius: f64,
    pub matched_singularity: Option<usize>,
    /// (n, f_{n+1}/f_n) pairs actually used.
    pub history: Vec<(usize, (f64, f64))>,
    pub accelerated: bool,
    pub converged: bool,
    pub diagnostic: Option<String>,
}

/// Estimates lim f_{n+1}/f_n of a series solution. In exact arithmetic a
/// constant ratio is detected exactly and returned as an exact scalar;
/// otherwise ratios are extracted in double precision with optional
/// first-order Richardson extrapolation in 1/n (the coefficient drift of
/// theta-form recurrences is O(1/n)).
pub fn ratio_limit<T: Coeff>(
    series: &SeriesSolution<T>,
    options: &RatioOptions,
) -> Result<RatioEstimate> {
    let n = series.coeffs.len();
    if n < options.window + 2 {
        return Err(Error::Precondition(format!(
            "series has {n} coefficients, need at least window + 2 = {}",
            options.window + 2
        )));
    }
    // eventually-zero tail: polynomial solution, no ratio limit
    let tail_zeros = series
        .coeffs
        .iter()
        .rev()
        .take_while(|c| c.is_zero())
        .count();
    if tail_zeros >= (n / 4).max(4) {
        return Err(Error::Precondition(format!(
            "series is eventually zero ({tail_zeros} trailing zero coefficients): \
             polynomial solution, no ratio limit"
        )));
    }

    // exact fast path: detect an exactly constant ratio
    if T::EXACT {
        let mut constant: Option<T> = None;
        let mut all_equal = true;
        for w in series.coeffs.windows(2) {
            if w[0].is_zero() {
                all_equal = false;
                break;
            }
            let r = w[1].div(&w[0]);
            match &constant {
                None => constant = Some(r),
                Some(c) if *c == r => {}
                _ => {
                    all_equal = false;
                    break;
                }
            }
        }
        if all_equal {
            if let Some(c) = constant {
                let limit_c64 = c.to_c64();
                let radius = if c.is_zero() {
                    f64::INFINITY
                } else {
                    1.0 / limit_c64.norm()
                };
                let matched = match_radius(
                    radius,
                    series.center.to_c64(),
                    &options.singular_points,
                    options.match_tol,
                );
                let history = (0..n - 1)
                    .map(|i| (i, (limit_c64.re, limit_c64.im)))
                    .collect();
                return Ok(RatioEstimate {
                    limit: c.to_scalar(),
                    radius,
                    matched_singularity: matched,
                    history,
                    accelerated: false,
                    converged: true,
                    diagnostic: None,
                });
            }
        }
    }

    let coeffs: Vec<Complex64> = series.coeffs.iter().map(|c| c.to_c64()).collect();
    let mut history: Vec<(usize, Complex64)> = Vec::new();
    let mut skipped = 0usize;
    for i in 0..n - 1 {
        // exact coefficients can exceed the double range long before the
        // ratio does, so divide before projecting
        let r = if T::EXACT {
            if series.coeffs[i].is_zero() {
                skipped += 1;
                continue;
            }
            series.coeffs[i + 1].div(&series.coeffs[i]).to_c64()
        } else {
            if coeffs[i].norm() == 0.0 || !coeffs[i].is_finite() || !coeffs[i + 1].is_finite() {
                skipped += 1;
                continue;
            }
            smith_div(coeffs[i + 1], coeffs[i])
        };
        if !r.is_finite() {
            skipped += 1;
            continue;
        }
        history.push((i, r));
    }
    ratio_limit_from_history(history, skipped, n, series.center.to_c64(), options)
}

/// Numeric core of the ratio estimator, also usable with histories produced
/// by normalized forward propagation (see [`float_ratio_history`]).
pub fn ratio_limit_from_history(
    history: Vec<(usize, Complex64)>,
    skipped: usize,
    total_len: usize,
    center: Complex64,
    options: &RatioOptions,
) -> Result<RatioEstimate> {
    if history.len() < options.window + 2 {
        return Err(Error::Precondition(
            "too few usable ratios (zero or non-finite coefficients)".into(),
        ));
    }
    let accelerated = options.acceleration == Acceleration::Richardson;
    let track: Vec<(usize, Complex64)> = if accelerated {
        history
            .windows(2)
            .map(|w| {
                let (n0, r0) = w[0];
                let (n1, r1) = w[1];
                // first-order Richardson in 1/n, with exact weights for
                // non-consecutive indices
                let x0 = 1.0 / (n0 as f64 + 1.0);
                let x1 = 1.0 / (n1 as f64 + 1.0);
                (n1, (r1 * x0 - r0 * x1) / (x0 - x1))
            })
            .collect()
    } else {
        history.clone()
    };

    let tail = &track[track.len() - options.window..];
    let last = tail.last().unwrap().1;
    let spread = tail
        .iter()
        .map(|(_, r)| (r - last).norm())
        .fold(0.0, f64::max);
    let converged = spread <= options.tol * (1.0 + last.norm());

    let radius = if last.norm() == 0.0 {
        f64::INFINITY
    } else {
        1.0 / last.norm()
    };
    let matched = match_radius(radius, center, &options.singular_points, options.match_tol);
    let mut diagnostic = None;
    if !converged {
        diagnostic = Some(format!(
            "ratio history did not settle: spread {spread:.3e} over the last {} entries",
            options.window
        ));
    } else if skipped > total_len / 5 {
        diagnostic = Some(format!("{skipped} zero coefficients skipped"));
    } else if !options.singular_points.is_empty() && matched.is_none() {
        diagnostic = Some(
            "no singularity lies at the estimated radius: entire solution or insufficient N"
                .into(),
        );
    }
    Ok(RatioEstimate {
        limit: Scalar::F64(last),
        radius,
        matched_singularity: matched,
        history: history.iter().map(|(i, r)| (*i, (r.re, r.im))).collect(),
        accelerated,
        converged,
        diagnostic,
    })
}

/// Forward propagation of the recurrence in normalized double precision:
/// coefficients a_{j,n} are evaluated from their exact rational-in-n form and
/// projected per index, while the f-window is jointly rescaled so that ratios
/// stay in range for any n. Returns the (n, f_{n+1}/f_n) history.
pub fn float_ratio_history<T: Coeff>(
    rec: &RecurrenceSystem<T>,
    initial: &[Complex64],
    n_max: usize,
) -> Result<Vec<(usize, Complex64)>> {
    let k = rec.order;
    if initial.len() != k {
        return Err(Error::Precondition(format!(
            "need exactly {k} initial values, got {}",
            initial.len()
        )));
    }
    if k == 0 {
        return Err(Error::Precondition(
            "order-0 recurrence has no ratio asymptotics".into(),
        ));
    }
    let mut window: Vec<Complex64> = initial.to_vec();
    let mut history = Vec::with_capacity(n_max);
    for n in 0..n_max as i64 {
        if rec.blocked_indices.contains(&n) {
            return Err(Error::Precondition(format!(
                "recurrence pivot vanishes at n = {n}; forward propagation blocked"
            )));
        }
        // f_{n+k} = -sum_j a_{j,n} f_{n+j}
        let mut next = Complex64::new(0.0, 0.0);
        for j in 0..k {
            let a = rec
                .coeff(j, n)
                .expect("pivot checked above")
                .to_c64();
            next -= a * window[j];
        }
        let prev = window[k - 1];
        if prev.norm() > 0.0 && next.is_finite() {
            history.push((n as usize + k - 1, smith_div(next, prev)));
        }
        window.remove(0);
        window.push(next);
        let scale = window.iter().map(|w| w.norm()).fold(0.0, f64::max);
        if scale > 1e100 || (scale > 0.0 && scale < 1e-100) {
            let f = scale;
            for w in window.iter_mut() {
                *w /= f;
            }
        }
    }
    Ok(history)
}

/// Smith's complex division: avoids the overflow of the naive formula when
/// component magnitudes approach the double-precision range.
pub(crate) fn smith_div(a: Complex64, b: Complex64) -> Complex64 {
    let (ar, ai, br, bi) = (a.re, a.im, b.re, b.im);
    if br.abs() >= bi.abs() {
        let t = bi / br;
        let d = br + bi * t;
        Complex64::new((ar + ai * t) / d, (ai - ar * t) / d)
    } else {
        let t = br / bi;
        let d = br * t + bi;
        Complex64::new((ar * t + ai) / d, (ai * t - ar) / d)
    }
}

fn match_radius(
    radius: f64,
    center: Complex64,
    singular_points: &[Complex64],
    match_tol: f64,
) -> Option<usize> {
    if !radius.is_finite() {
        return None;
    }
    let mut best: Option<(usize, f64)> = None;
    for (j, t) in singular_points.iter().enumerate() {
        let err = ((t - center).norm() - radius).abs();
        if best.map_or(true, |(_, b)| err < b) {
            best = Some((j, err));
        }
    }
    best.filter(|(_, err)| *err <= match_tol * (1.0 + radius)).map(|(j, _)| j)
}

/// lambda^k + a_{k-1} lambda^{k-1} + ... + a_0 from the coefficient limits.
pub fn characteristic_polynomial<T: Coeff>(rec: &RecurrenceSystem<T>) -> Result<Polynomial<T>> {
    let mut coeffs = Vec::with_capacity(rec.order + 1);
    for l in &rec.limits {
        match l {
            Some(a) => coeffs.push(a.clone()),
            None => {
                return Err(Error::Precondition(
                    "a coefficient limit diverges (numerator degree exceeds the pivot); \
                     no characteristic polynomial"
                        .into(),
                ))
            }
        }
    }
    coeffs.push(T::one());
    Ok(Polynomial::new(coeffs))
}

#[derive(Clone, Debug, Serialize)]
pub struct CharpolyReport {
    pub char_roots: Vec<Scalar>,
    pub q0_reciprocal_roots: Vec<Scalar>,
    /// Greatest distance between paired roots.
    pub max_mismatch: f64,
    /// Exact backend: whether the monic polynomials agree coefficient-wise.
    pub identical: Option<bool>,
    pub degenerate_q0: bool,
}

/// Verifies that the characteristic polynomial of the Taylor recurrence is
/// the (normalized) degree-k reversal of Q_0, i.e. that the characteristic
/// roots are the reciprocals of the roots of Q_0, padded with zeros when
/// deg Q_0 < k.
pub fn charpoly_vs_q0<T: Coeff>(op: &DifferentialOperator<T>) -> Result<CharpolyReport> {
    let theta = op.to_theta_form()?;
    let rec = build_recurrence(&theta)?;
    let charpoly = characteristic_polynomial(&rec)?;
    let delta = theta.to_delta_poly()?;
    let q0 = delta.delta_parts().unwrap()[0].clone();
    let q00 = q0.constant_term();
    if q00.is_zero() {
        return Ok(CharpolyReport {
            char_roots: vec![],
            q0_reciprocal_roots: vec![],
            max_mismatch: f64::INFINITY,
            identical: Some(false),
            degenerate_q0: true,
        });
    }
    let k = rec.order;
    // degenerate k = 0 (no recurrence coefficients): charpoly is the constant 1
    if k == 0 {
        return Ok(CharpolyReport {
            char_roots: vec![],
            q0_reciprocal_roots: vec![],
            max_mismatch: 0.0,
            identical: Some(q0.degree() == Some(0)),
            degenerate_q0: false,
        });
    }
    let reversal = q0.reverse(k).unscale(&q00);
    let identical = if T::EXACT {
        Some(charpoly == reversal)
    } else {
        None
    };
    let char_roots = roots_as_scalars(&charpoly, 1e-9)?;
    let rev_roots = roots_as_scalars(&reversal, 1e-9)?;
    let expand = |v: Vec<(Scalar, usize, f64)>| {
        let mut out = Vec::new();
        for (s, m, _) in v {
            for _ in 0..m {
                out.push(s.clone());
            }
        }
        out
    };
    let a = expand(char_roots);
    let b = expand(rev_roots);
    let mut used = vec![false; b.len()];
    let mut max_mismatch = 0.0f64;
    for ra in &a {
        let ca = ra.to_c64();
        let mut best: Option<(usize, f64)> = None;
        for (j, rb) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (ca - rb.to_c64()).norm();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        if let Some((j, d)) = best {
            used[j] = true;
            max_mismatch = max_mismatch.max(d);
        } else {
            max_mismatch = f64::INFINITY;
        }
    }
    if a.len() != b.len() {
        max_mismatch = f64::INFINITY;
    }
    Ok(CharpolyReport {
        char_roots: a,
        q0_reciprocal_roots: b,
        max_mismatch,
        identical,
        degenerate_q0: false,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ModulusCheck {
    pub distinct: bool,
    pub sorted_moduli: Vec<f64>,
}

/// Tests the hypothesis that all characteristic roots have pairwise distinct
/// absolute values; estimators downgrade confidence when it fails.
pub fn poincare_distinct_modulus_check<T: Coeff>(
    charpoly: &Polynomial<T>,
    rel_tol: f64,
) -> Result<ModulusCheck> {
    if charpoly.degree().unwrap_or(0) == 0 {
        return Ok(ModulusCheck {
            distinct: true,
            sorted_moduli: vec![],
        });
    }
    let roots = roots_as_scalars(charpoly, 1e-9)?;
    let mut moduli = Vec::new();
    for (s, m, _) in roots {
        for _ in 0..m {
            moduli.push(s.to_c64().norm());
        }
    }
    moduli.sort_by(f64::total_cmp);
    let distinct = moduli
        .windows(2)
        .all(|w| (w[1] - w[0]).abs() > rel_tol * (1.0 + w[1]));
    Ok(ModulusCheck {
        distinct,
        sorted_moduli: moduli,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;
    use crate::ratfn::RationalFunction;
    use crate::scalar::GaussianRational;

    type G = GaussianRational;
    type P = Polynomial<G>;
    type R = RationalFunction<G>;
    type Op = DifferentialOperator<G>;

    fn gq(p: i64, q: i64) -> G {
        G::from_ratio(p, q)
    }

    fn gauss(a: G, b: G, c: G) -> Op {
        let z1z = P::new(vec![G::zero(), G::one(), G::from_i64(-1)]);
        let q0 = R::new(P::constant(a.mul(&b)), z1z.clone());
        let q1 = R::new(
            P::new(vec![c.neg(), a.add(&b).add(&G::one())]),
            z1z,
        );
        Op::standard(vec![q0, q1]).unwrap()
    }

    fn gauss_default() -> Op {
        gauss(gq(1, 2), gq(1, 3), gq(1, 4))
    }

    #[test]
    fn gauss_taylor_recurrence_is_the_classical_ratio() {
        // f_{n+1}/f_n = (a+n)(b+n) / ((c+n)(1+n))
        let theta = gauss_default().to_theta_form().unwrap();
        let rec = build_recurrence(&theta).unwrap();
        assert_eq!(rec.order, 1);
        let (a, b, c) = (gq(1, 2), gq(1, 3), gq(1, 4));
        for n in 0..8i64 {
            let nv = G::from_i64(n);
            let a0 = rec.coeff(0, n).unwrap();
            // recurrence: f_{n+1} + a_{0,n} f_n = 0 so f_{n+1}/f_n = -a_{0,n}
            let expected = a
                .add(&nv)
                .mul(&b.add(&nv))
                .div(&c.add(&nv).mul(&G::one().add(&nv)));
            assert_eq!(a0.neg(), expected, "n = {n}");
        }
        assert!(rec.blocked_indices.is_empty());
        assert!(rec.all_limits_finite());
    }

    #[test]
    fn blocked_pivot_for_integer_c() {
        // c = -3 makes the pivot (n+1)(n+c) vanish at n = 3
        let theta = gauss(gq(1, 2), gq(1, 3), G::from_i64(-3))
            .to_theta_form()
            .unwrap();
        let rec = build_recurrence(&theta).unwrap();
        assert_eq!(rec.blocked_indices, vec![3]);
        assert!(rec.coeff(0, 3).is_none());
    }

    #[test]
    fn ypp_zero_recurrence_is_trivial() {
        let ypp = Op::standard(vec![R::zero(), R::zero()]).unwrap();
        let theta = ypp.to_theta_form().unwrap();
        let rec = build_recurrence(&theta).unwrap();
        assert_eq!(rec.order, 0);
        // the indicial polynomial d(d-1) leaves f_0, f_1 free and forces the
        // rest to zero
        assert_eq!(rec.blocked_indices, vec![0, 1]);
    }

    #[test]
    fn solve_series_linear_solution() {
        let ypp = Op::standard(vec![R::zero(), R::zero()]).unwrap();
        let sol = solve_series(&ypp, &gq(1, 3), &[G::one(), G::one()], 8).unwrap();
        assert_eq!(sol.coeffs[0], G::one());
        assert_eq!(sol.coeffs[1], G::one());
        for c in &sol.coeffs[2..] {
            assert!(c.is_zero());
        }
    }

    #[test]
    fn solve_series_rejects_singular_center() {
        let op = gauss_default();
        assert!(solve_series(&op, &G::zero(), &[G::one(), G::zero()], 10).is_err());
    }

    #[test]
    fn gauss_series_residual_vanishes() {
        let op = gauss_default();
        let n = 50;
        let sol = solve_series(&op, &gq(1, 5), &[G::one(), G::zero()], n).unwrap();
        let res = series_residual(&op, &sol);
        for d in 0..=n - 2 {
            assert!(res.coeff(d).is_zero(), "residual at degree {d} nonzero");
        }
    }

    #[test]
    fn series_satisfies_recurrence_identically() {
        let op = gauss_default();
        let z0 = gq(1, 5);
        let sol = solve_series(&op, &z0, &[G::from_i64(2), gq(-1, 3)], 30).unwrap();
        let theta = op.recenter(&z0).to_theta_form().unwrap();
        let rec = build_recurrence(&theta).unwrap();
        let k = rec.order;
        for n in 0..=(30 - k as usize) {
            if rec.blocked_indices.contains(&(n as i64)) {
                continue;
            }
            // f_{n+k} + sum_j a_{j,n} f_{n+j} = 0
            let mut acc = sol.coeffs[n + k].clone();
            for j in 0..k {
                let a = rec.coeff(j, n as i64).unwrap();
                acc = acc.add(&a.mul(&sol.coeffs[n + j]));
            }
            assert!(acc.is_zero(), "recurrence violated at n = {n}");
        }
    }

    #[test]
    fn ratio_limit_geometric_exact() {
        // f_n = 1/(1 - z0)^(n+1): the series of 1/(1-z) at z0; ratio is
        // exactly 1/(1 - z0), constant history
        let z0 = G::zero();
        let mut coeffs = Vec::new();
        let mut c = G::one();
        for _ in 0..30 {
            coeffs.push(c.clone());
            c = c.mul(&G::one()); // 1/(1-0) = 1
        }
        let sol = SeriesSolution {
            center: z0,
            coeffs,
            source: SeriesSource::FromOracle,
        };
        let opts = RatioOptions {
            singular_points: vec![Complex64::new(1.0, 0.0)],
            ..Default::default()
        };
        let est = ratio_limit(&sol, &opts).unwrap();
        assert!(est.converged);
        assert_eq!(est.limit, Scalar::Exact(G::one()));
        assert_eq!(est.radius, 1.0);
        assert_eq!(est.matched_singularity, Some(0));
    }

    #[test]
    fn ratio_limit_geometric_recentered() {
        // same function at z0 = 1/2: ratio exactly 2, radius 1/2
        let z0 = gq(1, 2);
        let ratio = gq(2, 1);
        let mut coeffs = vec![gq(2, 1)];
        for _ in 0..30 {
            let last = coeffs.last().unwrap().clone();
            coeffs.push(last.mul(&ratio));
        }
        let sol = SeriesSolution {
            center: z0,
            coeffs,
            source: SeriesSource::FromOracle,
        };
        let opts = RatioOptions {
            singular_points: vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            ..Default::default()
        };
        let est = ratio_limit(&sol, &opts).unwrap();
        assert_eq!(est.limit, Scalar::Exact(gq(2, 1)));
        assert_eq!(est.radius, 0.5);
        assert_eq!(est.matched_singularity, Some(0));
    }

    #[test]
    fn ratio_limit_rejects_polynomials() {
        let sol = SeriesSolution {
            center: G::zero(),
            coeffs: vec![G::one(), G::one(), G::zero(), G::zero(), G::zero(), G::zero(),
                         G::zero(), G::zero(), G::zero(), G::zero(), G::zero(), G::zero()],
            source: SeriesSource::FromOracle,
        };
        assert!(ratio_limit(&sol, &RatioOptions::default()).is_err());
    }

    #[test]
    fn gauss_ratio_limit_matches_nearest_singularity() {
        // centered at 1/5: the nearest singularity 0 sits at distance 0.2 and
        // the generic ratio limit is 1/(0 - 1/5) = -5
        let op = gauss_default();
        let z0 = gq(1, 5);
        let sol = solve_series(&op, &z0, &[G::one(), G::zero()], 500).unwrap();
        let opts = RatioOptions {
            singular_points: vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            tol: 1e-7,
            match_tol: 1e-4,
            ..Default::default()
        };
        let est = ratio_limit(&sol, &opts).unwrap();
        assert!(est.converged, "{:?}", est.diagnostic);
        let l = est.limit.to_c64();
        assert!((l - Complex64::new(-5.0, 0.0)).norm() < 1e-2, "limit {l}");
        assert_eq!(est.matched_singularity, Some(0));
        assert!((est.radius - 0.2).abs() < 1e-4);
    }

    #[test]
    fn charpoly_reversal_identity_gauss() {
        let theta = gauss_default().to_theta_form().unwrap();
        let rep = charpoly_vs_q0(&theta).unwrap();
        assert_eq!(rep.identical, Some(true));
        assert!(rep.max_mismatch < 1e-12);
        assert!(!rep.degenerate_q0);
        // Q_0 = 1 - z has root 1; characteristic root is its reciprocal 1
        assert_eq!(rep.char_roots.len(), 1);
        assert!((rep.char_roots[0].to_c64() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn charpoly_recentred_reciprocal_roots() {
        // recentered at 1/5 the characteristic roots are 1/(t - 1/5):
        // {-5, 5/4}
        let op = gauss_default().recenter(&gq(1, 5));
        let theta = op.to_theta_form().unwrap();
        let rec = build_recurrence(&theta).unwrap();
        let cp = characteristic_polynomial(&rec).unwrap();
        let roots = roots_as_scalars(&cp, 1e-9).unwrap();
        let mut vals: Vec<f64> = roots.iter().map(|(s, _, _)| s.to_c64().re).collect();
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] + 5.0).abs() < 1e-9, "{vals:?}");
        assert!((vals[1] - 1.25).abs() < 1e-9, "{vals:?}");
        let rep = charpoly_vs_q0(&op).unwrap();
        assert_eq!(rep.identical, Some(true));

        let check = poincare_distinct_modulus_check(&cp, 1e-9).unwrap();
        assert!(check.distinct);
        assert_eq!(check.sorted_moduli.len(), 2);
    }

    #[test]
    fn distinct_modulus_fails_on_bisector() {
        // centered on the bisector of {0, 1} the reciprocal distances tie
        let op = gauss_default().recenter(&gq(1, 2));
        let theta = op.to_theta_form().unwrap();
        let rec = build_recurrence(&theta).unwrap();
        let cp = characteristic_polynomial(&rec).unwrap();
        let check = poincare_distinct_modulus_check(&cp, 1e-9).unwrap();
        assert!(!check.distinct);
    }

    #[test]
    fn charpoly_on_all_zero_limits() {
        // y'' = 0 gives k = 0: the characteristic polynomial degenerates to 1
        let ypp = Op::standard(vec![R::zero(), R::zero()]).unwrap();
        let theta = ypp.to_theta_form().unwrap();
        let rec = build_recurrence(&theta).unwrap();
        let cp = characteristic_polynomial(&rec).unwrap();
        assert_eq!(cp.degree(), Some(0));
        let rep = charpoly_vs_q0(&theta).unwrap();
        assert_eq!(rep.identical, Some(true));
    }
}
