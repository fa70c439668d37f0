//! Linear differential operators and their three interchangeable shapes.
//!
//! * Standard form: y^(m) = q_0 y + q_1 y' + ... + q_{m-1} y^(m-1) with
//!   rational-function coefficients.
//! * Delta-polynomial form: Q_0(z) d^m + Q_1(z) d^{m-1} + ... + Q_m(z),
//!   where d = z d/dz is the Euler operator.
//! * Theta form: P_0(d) + z P_1(d) + ... + z^k P_k(d), the shape that yields
//!   Taylor-coefficient recurrences at 0.
//!
//! Conversions are exact in the exact backend. The delta/theta forms are
//! anchored at the expansion point 0; `recenter` moves any other point there.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{stirling2_table, Polynomial};
use crate::ratfn::RationalFunction;
use crate::roots::roots_as_scalars;
use crate::scalar::{Backend, Coeff, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub enum OperatorForm<T: Coeff> {
    /// Coefficients q_0..q_{m-1} of y^(m) = sum q_i y^(i).
    Standard(Vec<RationalFunction<T>>),
    /// Q_0..Q_m acting as sum_j Q_j(z) d^{m-j}.
    DeltaPoly(Vec<Polynomial<T>>),
    /// P_0..P_k acting as sum_i z^i P_i(d); entries are polynomials in d.
    Theta(Vec<Polynomial<T>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DifferentialOperator<T: Coeff> {
    order: usize,
    form: OperatorForm<T>,
}

/// Set of finite singular points, deduplicated. `all_exact` records whether
/// every root of the leading coefficient was recognized exactly (always true
/// in reports produced from float backends, where the question is moot).
#[derive(Clone, Debug, Serialize)]
pub struct SingularSet {
    pub points: Vec<Scalar>,
    pub all_exact: bool,
    pub dedup_tolerance: f64,
}

impl SingularSet {
    pub fn from_scalars(mut points: Vec<Scalar>, dedup_tolerance: f64) -> Self {
        let mut dedup: Vec<Scalar> = Vec::new();
        points.sort_by(|a, b| {
            let (x, y) = (a.to_c64(), b.to_c64());
            (x.re, x.im)
                .partial_cmp(&(y.re, y.im))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for p in points {
            if !dedup
                .iter()
                .any(|q| (q.to_c64() - p.to_c64()).norm() <= dedup_tolerance)
            {
                dedup.push(p);
            }
        }
        let all_exact = dedup.iter().all(|p| matches!(p, Scalar::Exact(_)));
        Self {
            points: dedup,
            all_exact,
            dedup_tolerance,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_c64_points(&self) -> Vec<Complex64> {
        self.points.iter().map(|p| p.to_c64()).collect()
    }
}

/// Verdict of the holomorphic-basis probe at a singular point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GenericityVerdict {
    Generic,
    NotGeneric,
    Undetermined,
}

#[derive(Clone, Debug, Serialize)]
pub struct GenericityReport {
    pub verdict: GenericityVerdict,
    pub explanation: String,
    /// Local exponents at the probed point, with multiplicity.
    pub exponents: Vec<Scalar>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SingularityReport {
    pub point: Scalar,
    /// Indicial polynomial at the point, ascending coefficients in d.
    pub indicial_polynomial: Vec<Scalar>,
    /// Roots of the indicial polynomial, with multiplicity.
    pub exponents: Vec<Scalar>,
    pub fuchsian_at_point: bool,
    pub generic_probe: GenericityVerdict,
    pub explanation: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct FuchsianReport {
    pub per_point: Vec<(Scalar, bool)>,
    /// True when every finite singular point passes the pole-order bound.
    /// The point at infinity is never part of this verdict.
    pub fuchsian: bool,
    /// Informational only: growth-order test at infinity.
    pub regular_at_infinity: bool,
}

/// Companion system matrix of the first-order reformulation X' = A X.
#[derive(Clone, Debug, PartialEq)]
pub struct CompanionMatrix<T: Coeff> {
    entries: Vec<Vec<RationalFunction<T>>>,
}

impl<T: Coeff> CompanionMatrix<T> {
    pub fn entries(&self) -> &[Vec<RationalFunction<T>>] {
        &self.entries
    }

    /// The adjoint system matrix -A^T.
    pub fn adjoint(&self) -> Self {
        let m = self.entries.len();
        let mut out = vec![vec![RationalFunction::zero(); m]; m];
        for (i, row) in self.entries.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                out[j][i] = e.neg();
            }
        }
        Self { entries: out }
    }
}

/// Dedup tolerance for singular points: 1e-9 at double precision, tightened
/// with the mantissa length but kept above what root extraction can resolve.
pub fn scaled_dedup_tolerance(backend: Backend) -> f64 {
    match backend {
        Backend::Exact => 1e-9,
        Backend::Float { precision_bits } => {
            let extra = (precision_bits as i32 - 53).max(0).min(40);
            (1e-9 * 2f64.powi(-extra)).max(1e-13)
        }
    }
}

impl<T: Coeff> DifferentialOperator<T> {
    /// Standard form y^(m) = sum q_i y^(i); the order is the coefficient count.
    pub fn standard(q: Vec<RationalFunction<T>>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidOperator(
                "standard form needs at least one coefficient".into(),
            ));
        }
        Ok(Self {
            order: q.len(),
            form: OperatorForm::Standard(q),
        })
    }

    /// Delta-polynomial form from Q_0..Q_m; Q_0 must be nonzero or the order
    /// is ambiguous.
    pub fn delta_poly(qs: Vec<Polynomial<T>>) -> Result<Self> {
        if qs.len() < 2 {
            return Err(Error::InvalidOperator(
                "delta form needs Q_0..Q_m with m >= 1".into(),
            ));
        }
        if qs[0].is_zero() {
            return Err(Error::InvalidOperator(
                "leading coefficient Q_0 is zero; order undefined".into(),
            ));
        }
        Ok(Self {
            order: qs.len() - 1,
            form: OperatorForm::DeltaPoly(qs),
        })
    }

    /// Theta form from P_0..P_k (polynomials in the Euler operator). The
    /// order is the largest d-degree; when some deg P_i exceeds deg P_0 the
    /// point 0 is irregular and [`Self::irregular_at_zero`] reports it.
    pub fn theta(ps: Vec<Polynomial<T>>) -> Result<Self> {
        let order = ps
            .iter()
            .filter_map(|p| p.degree())
            .max()
            .ok_or_else(|| Error::InvalidOperator("theta form with all P_i zero".into()))?;
        if order == 0 {
            return Err(Error::InvalidOperator(
                "theta form of differential order zero".into(),
            ));
        }
        Ok(Self {
            order,
            form: OperatorForm::Theta(ps),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn form(&self) -> &OperatorForm<T> {
        &self.form
    }

    pub fn backend(&self) -> Backend {
        let probe = match &self.form {
            OperatorForm::Standard(q) => q[0].num().coeffs().first().cloned(),
            OperatorForm::DeltaPoly(qs) | OperatorForm::Theta(qs) => qs
                .iter()
                .find_map(|p| p.coeffs().first().cloned()),
        };
        probe.map_or(
            if T::EXACT {
                Backend::Exact
            } else {
                Backend::Float { precision_bits: 53 }
            },
            |c| c.backend(),
        )
    }

    /// True for theta forms where some deg P_i > deg P_0, the degree pattern
    /// of an irregular singularity at 0.
    pub fn irregular_at_zero(&self) -> bool {
        match &self.form {
            OperatorForm::Theta(ps) => {
                let d0 = ps[0].degree().map_or(-1, |d| d as i64);
                ps.iter()
                    .skip(1)
                    .any(|p| p.degree().map_or(-1, |d| d as i64) > d0)
            }
            _ => false,
        }
    }

    pub fn theta_parts(&self) -> Option<&[Polynomial<T>]> {
        match &self.form {
            OperatorForm::Theta(ps) => Some(ps),
            _ => None,
        }
    }

    pub fn delta_parts(&self) -> Option<&[Polynomial<T>]> {
        match &self.form {
            OperatorForm::DeltaPoly(qs) => Some(qs),
            _ => None,
        }
    }

    /// Standard-form coefficients q_0..q_{m-1}, converting if needed.
    pub fn standard_coeffs(&self) -> Vec<RationalFunction<T>> {
        match &self.form {
            OperatorForm::Standard(q) => q.clone(),
            OperatorForm::DeltaPoly(qs) => delta_to_standard(qs, self.order),
            OperatorForm::Theta(ps) => {
                let qs = theta_to_delta(ps, self.order);
                delta_to_standard(&qs, self.order)
            }
        }
    }

    pub fn to_standard(&self) -> Self {
        Self {
            order: self.order,
            form: OperatorForm::Standard(self.standard_coeffs()),
        }
    }

    /// Rewrites into the delta-polynomial form by clearing denominators and
    /// replacing z^j (d/dz)^j with the falling factorial of the Euler
    /// operator. In the exact backend the result is normalized so the common
    /// polynomial GCD of the Q_j is 1 and Q_0 is monic.
    pub fn to_delta_poly(&self) -> Result<Self> {
        let qs = match &self.form {
            OperatorForm::DeltaPoly(qs) => qs.clone(),
            OperatorForm::Theta(ps) => theta_to_delta(ps, self.order),
            OperatorForm::Standard(q) => standard_to_delta(q),
        };
        Self::delta_poly(qs)
    }

    /// Regroups the delta form by powers of z into theta form. Fails when
    /// Q_0(0) = 0 after normalization: the expansion point 0 is then outside
    /// the format's assumption and must be reported, not silently accepted.
    pub fn to_theta_form(&self) -> Result<Self> {
        if let OperatorForm::Theta(_) = self.form {
            return Ok(self.clone());
        }
        let with_delta = self.to_delta_poly()?;
        let qs = with_delta.delta_parts().unwrap();
        let q00 = qs[0].constant_term();
        let scale = qs
            .iter()
            .flat_map(|p| p.coeffs())
            .map(|c| c.abs())
            .fold(0.0, f64::max);
        let degenerate = if T::EXACT {
            q00.is_zero()
        } else {
            q00.abs() <= 1e-12 * scale.max(1.0)
        };
        if degenerate {
            return Err(Error::InvalidOperator(
                "Q_0(0) = 0: the expansion point 0 is an irregular or degenerate point; \
                 recenter at a regular point first"
                    .into(),
            ));
        }
        let m = with_delta.order;
        let k = qs.iter().filter_map(|q| q.degree()).max().unwrap_or(0);
        let mut ps = vec![Polynomial::zero(); k + 1];
        for (j, q) in qs.iter().enumerate() {
            for (i, c) in q.coeffs().iter().enumerate() {
                if !c.is_zero() {
                    ps[i] = ps[i].add(&Polynomial::monomial(c.clone(), m - j));
                }
            }
        }
        Self::theta(ps)
    }

    /// Substitutes z -> z + z0 in every standard-form coefficient, moving the
    /// point z0 to the origin; singular points translate by -z0. The result
    /// is in standard form (the delta and theta shapes are anchored at 0).
    pub fn recenter(&self, z0: &T) -> Self {
        let q = self
            .standard_coeffs()
            .iter()
            .map(|r| r.shift(z0))
            .collect();
        Self {
            order: self.order,
            form: OperatorForm::Standard(q),
        }
    }

    /// Finite singular points: roots of the leading polynomial coefficient of
    /// the cleared-denominator standard form. In the exact backend the
    /// leading coefficient is the monic LCM of the reduced denominators, and
    /// roots are recognized exactly where possible.
    pub fn singular_points(&self) -> Result<SingularSet> {
        let tol = scaled_dedup_tolerance(self.backend());
        let q = self.standard_coeffs();
        if T::EXACT {
            let lambda = crate::ratfn::common_denominator(&q);
            if lambda.degree().unwrap_or(0) == 0 {
                return Ok(SingularSet::from_scalars(vec![], tol));
            }
            let roots = roots_as_scalars(&lambda, tol)?;
            let points = roots
                .into_iter()
                .flat_map(|(s, m, _)| std::iter::repeat(s).take(m.min(1)))
                .collect();
            return Ok(SingularSet::from_scalars(points, tol));
        }
        // float backends: poles of each coefficient, filtered by a
        // tolerance-based pole-order test (denominators are unreduced)
        let mut points: Vec<Scalar> = Vec::new();
        for r in &q {
            if r.is_zero() || r.is_polynomial() {
                continue;
            }
            let roots = roots_as_scalars(r.den(), tol)?;
            for (s, _, _) in roots {
                let is_pole = match T::from_scalar(&s) {
                    Ok(t) => r.pole_order_at(&t, 1e-9) > 0,
                    Err(_) => {
                        pole_order_c64(r, s.to_c64()) > 0
                    }
                };
                if is_pole {
                    points.push(s);
                }
            }
        }
        Ok(SingularSet::from_scalars(points, tol))
    }

    /// True when no coefficient has a pole at t.
    pub fn is_ordinary_point(&self, t: &T) -> bool {
        let rel = if T::EXACT { 0.0 } else { 1e-9 };
        self.standard_coeffs()
            .iter()
            .all(|r| r.pole_order_at(t, rel) == 0)
    }

    /// Indicial data at an arbitrary point: recenters, extracts P_0 from the
    /// theta form and returns its roots as local exponents. At an ordinary
    /// point the exponents are exactly 0..m-1.
    pub fn indicial_data(&self, t: &T) -> Result<SingularityReport> {
        let recentered = self.recenter(t);
        let theta = recentered.to_theta_form()?;
        let p0 = theta.theta_parts().unwrap()[0].clone();
        let tol = scaled_dedup_tolerance(self.backend());
        let roots = roots_as_scalars(&p0, tol)?;
        let mut exponents = Vec::new();
        for (s, m, _) in roots {
            for _ in 0..m {
                exponents.push(s.clone());
            }
        }
        let fuchsian_at_point = fuchsian_at(&self.standard_coeffs(), t, self.order);
        let singular = !self.is_ordinary_point(t);
        let (generic_probe, explanation) = if singular {
            match self.genericity_probe(t) {
                Ok(rep) => (rep.verdict, rep.explanation),
                Err(e) => (GenericityVerdict::Undetermined, format!("probe failed: {e}")),
            }
        } else {
            (
                GenericityVerdict::Undetermined,
                "ordinary point: exponents are 0..m-1 and the probe does not apply".into(),
            )
        };
        Ok(SingularityReport {
            point: t.to_scalar(),
            indicial_polynomial: p0.to_scalars(),
            exponents,
            fuchsian_at_point,
            generic_probe,
            explanation,
        })
    }

    /// Pole-order test at every finite singular point; infinity is reported
    /// separately and never affects the verdict.
    pub fn is_fuchsian(&self) -> Result<FuchsianReport> {
        let q = self.standard_coeffs();
        let m = self.order;
        let sing = self.singular_points()?;
        let mut per_point = Vec::new();
        let mut all = true;
        for s in &sing.points {
            let ok = match T::from_scalar(s) {
                Ok(t) => fuchsian_at(&q, &t, m),
                Err(_) => fuchsian_at_c64(&q, s.to_c64(), m),
            };
            all &= ok;
            per_point.push((s.clone(), ok));
        }
        // infinity is regular (ordinary or regular singular) iff
        // deg num - deg den <= i - m for every coefficient q_i
        let regular_at_infinity = q.iter().enumerate().all(|(i, r)| {
            r.degree_at_infinity()
                .map_or(true, |d| d <= i as i64 - m as i64)
        });
        Ok(FuchsianReport {
            per_point,
            fuchsian: all,
            regular_at_infinity,
        })
    }

    /// Frobenius-style probe: how many independent solutions extend
    /// holomorphically to the singular point t? `Generic` means exactly a
    /// one-codimensional space extends (m-1 series succeed) while one
    /// exponent direction does not.
    pub fn genericity_probe(&self, t: &T) -> Result<GenericityReport> {
        if self.is_ordinary_point(t) {
            return Err(Error::Precondition(format!(
                "genericity probe requires a singular point; {t} is ordinary"
            )));
        }
        let m = self.order;
        let recentered = self.recenter(t);
        let theta = match recentered.to_theta_form() {
            Ok(th) => th,
            Err(e) => {
                return Ok(GenericityReport {
                    verdict: GenericityVerdict::Undetermined,
                    explanation: format!(
                        "no theta form at the point (irregular singularity?): {e}"
                    ),
                    exponents: vec![],
                })
            }
        };
        let ps = theta.theta_parts().unwrap();
        let p0 = &ps[0];
        let tol = scaled_dedup_tolerance(self.backend());
        let roots = roots_as_scalars(p0, tol)?;
        let mut exponents = Vec::new();
        for (s, mult, _) in &roots {
            for _ in 0..*mult {
                exponents.push(s.clone());
            }
        }

        // nonnegative integer exponents are the only candidates for
        // holomorphic directions
        let mut int_exps: Vec<(i64, usize)> = Vec::new(); // (exponent, multiplicity)
        let mut nonint = 0usize;
        for (s, mult, _) in &roots {
            let as_int = match s {
                Scalar::Exact(g) => g.as_i64(),
                Scalar::F64(c) => c.as_i64(),
                Scalar::Big(b) => b.as_i64(),
            };
            match as_int {
                Some(n) if n >= 0 => int_exps.push((n, *mult)),
                _ => nonint += *mult,
            }
        }
        int_exps.sort();
        let candidates: usize = int_exps.iter().map(|(_, m)| *m.min(&1)).sum::<usize>();
        let _ = nonint;

        let max_int = int_exps.last().map(|(n, _)| *n).unwrap_or(0);
        let mut holomorphic = 0usize;
        let mut notes: Vec<String> = Vec::new();
        for &(rho, mult) in &int_exps {
            if mult > 1 {
                // repeated exponent: one series direction, the rest carry logs
                notes.push(format!(
                    "exponent {rho} has multiplicity {mult}; only one series direction"
                ));
            }
            match frobenius_trial(ps, rho, max_int + 2) {
                TrialOutcome::Success { resonances } => {
                    holomorphic += 1;
                    if !resonances.is_empty() {
                        notes.push(format!(
                            "trial at exponent {rho}: pivot vanished at n in {resonances:?}, \
                             compatibility held, no logarithm needed"
                        ));
                    }
                }
                TrialOutcome::LogObstruction { at } => notes.push(format!(
                    "trial at exponent {rho}: pivot vanished at n = {at} with nonzero \
                     right-hand side; a logarithmic term is forced"
                )),
                TrialOutcome::Ambiguous { at } => {
                    return Ok(GenericityReport {
                        verdict: GenericityVerdict::Undetermined,
                        explanation: format!(
                            "trial at exponent {rho}: pivot at n = {at} is numerically \
                             ambiguous; {}",
                            notes.join("; ")
                        ),
                        exponents,
                    });
                }
            }
        }

        let (verdict, summary) = if m == 2 {
            match holomorphic {
                1 => (
                    GenericityVerdict::Generic,
                    "exactly one holomorphic direction at the point".to_string(),
                ),
                0 => (
                    GenericityVerdict::NotGeneric,
                    "no solution extends holomorphically to the point".to_string(),
                ),
                _ => (
                    GenericityVerdict::NotGeneric,
                    "every solution extends holomorphically (apparent singularity)".to_string(),
                ),
            }
        } else {
            // m > 2: only clear-cut exponent arithmetic is decided
            if holomorphic == m - 1 {
                (
                    GenericityVerdict::Generic,
                    format!("{holomorphic} of {m} directions extend holomorphically"),
                )
            } else if candidates < m - 1 {
                (
                    GenericityVerdict::NotGeneric,
                    format!(
                        "only {candidates} nonnegative integer exponents; fewer than m-1 = {} \
                         holomorphic directions are possible",
                        m - 1
                    ),
                )
            } else {
                (
                    GenericityVerdict::Undetermined,
                    format!(
                        "{holomorphic} series directions succeeded out of {candidates} \
                         candidates; no decision procedure applies"
                    ),
                )
            }
        };
        let explanation = if notes.is_empty() {
            summary
        } else {
            format!("{summary}; {}", notes.join("; "))
        };
        Ok(GenericityReport {
            verdict,
            explanation,
            exponents,
        })
    }

    /// Companion matrix of X' = A X for X = (y, y', ..., y^(m-1)).
    pub fn companion_matrix(&self) -> CompanionMatrix<T> {
        let q = self.standard_coeffs();
        let m = self.order;
        let mut entries = vec![vec![RationalFunction::zero(); m]; m];
        for i in 0..m.saturating_sub(1) {
            entries[i][i + 1] = RationalFunction::one();
        }
        for (j, qi) in q.iter().enumerate() {
            entries[m - 1][j] = qi.clone();
        }
        CompanionMatrix { entries }
    }
}

fn fuchsian_at<T: Coeff>(q: &[RationalFunction<T>], t: &T, m: usize) -> bool {
    let rel = if T::EXACT { 0.0 } else { 1e-9 };
    q.iter()
        .enumerate()
        .all(|(i, r)| r.pole_order_at(t, rel) <= m - i)
}

fn fuchsian_at_c64<T: Coeff>(q: &[RationalFunction<T>], t: Complex64, m: usize) -> bool {
    q.iter()
        .enumerate()
        .all(|(i, r)| pole_order_c64(r, t) <= m - i)
}

fn pole_order_c64<T: Coeff>(r: &RationalFunction<T>, t: Complex64) -> usize {
    let rf = RationalFunction::new(r.num().to_c64_poly(), r.den().to_c64_poly());
    rf.pole_order_at(&t, 1e-9)
}

enum TrialOutcome {
    Success { resonances: Vec<i64> },
    LogObstruction { at: i64 },
    Ambiguous { at: i64 },
}

/// Attempts a power-series solution sum_{n >= rho} f_n z^n with f_rho = 1
/// from the theta-form recurrence, running through every resonant index up
/// to `upto`. The pivot is P_0(n); a vanishing pivot with nonzero right-hand
/// side forces a logarithmic term and fails the trial.
fn frobenius_trial<T: Coeff>(ps: &[Polynomial<T>], rho: i64, upto: i64) -> TrialOutcome {
    let k = ps.len() - 1;
    let scale = ps
        .iter()
        .flat_map(|p| p.coeffs())
        .map(|c| c.abs())
        .fold(0.0, f64::max)
        .max(1.0);
    let mut f: Vec<T> = vec![T::one()]; // f[j] = coefficient of z^(rho + j)
    let mut resonances = Vec::new();
    for n in rho + 1..=upto {
        let j = (n - rho) as usize;
        let mut rhs = T::zero();
        for i in 1..=k.min(j) {
            let pi = &ps[i];
            let arg = T::from_i64(n - i as i64);
            rhs = rhs.add(&pi.eval(&arg).mul(&f[j - i]));
        }
        rhs = rhs.neg();
        let pivot = ps[0].eval(&T::from_i64(n));
        let pivot_zero = if T::EXACT {
            pivot.is_zero()
        } else {
            pivot.abs() <= 1e-10 * scale * (n.max(1) as f64).powi(ps[0].degree().unwrap_or(0) as i32)
        };
        if pivot_zero {
            resonances.push(n);
            let rhs_zero = if T::EXACT {
                rhs.is_zero()
            } else {
                let fscale = f.iter().map(|c| c.abs()).fold(0.0, f64::max).max(1.0);
                rhs.abs() <= 1e-10 * scale * fscale
            };
            if rhs_zero {
                f.push(T::zero());
            } else if T::EXACT {
                return TrialOutcome::LogObstruction { at: n };
            } else {
                let fscale = f.iter().map(|c| c.abs()).fold(0.0, f64::max).max(1.0);
                if rhs.abs() > 1e-6 * scale * fscale {
                    return TrialOutcome::LogObstruction { at: n };
                }
                return TrialOutcome::Ambiguous { at: n };
            }
        } else {
            f.push(rhs.div(&pivot));
        }
    }
    TrialOutcome::Success { resonances }
}

/// Standard -> delta conversion: clear denominators with their (monic) least
/// common multiple and expand z^j (d/dz)^j as the falling factorial of the
/// Euler operator.
fn standard_to_delta<T: Coeff>(q: &[RationalFunction<T>]) -> Vec<Polynomial<T>> {
    let m = q.len();
    let lambda = crate::ratfn::common_denominator(q);

    let mut c: Vec<Polynomial<T>> = vec![Polynomial::zero(); m + 1];
    let ffm = Polynomial::<T>::falling_factorial(m);
    for (l, coef) in ffm.coeffs().iter().enumerate() {
        if !coef.is_zero() {
            c[l] = c[l].add(&lambda.scale(coef));
        }
    }
    for (i, r) in q.iter().enumerate() {
        if r.is_zero() {
            continue;
        }
        let cofactor = if T::EXACT {
            lambda.exact_div(r.den())
        } else {
            let (quot, _) = lambda.div_rem(r.den());
            quot
        };
        let w = r.num().mul(&cofactor).mul(&Polynomial::monomial(T::one(), m - i));
        let ffi = Polynomial::<T>::falling_factorial(i);
        for (l, coef) in ffi.coeffs().iter().enumerate() {
            if !coef.is_zero() {
                c[l] = c[l].sub(&w.scale(coef));
            }
        }
    }
    // Q_j = coefficient of d^(m-j)
    let mut qs: Vec<Polynomial<T>> = (0..=m).map(|j| c[m - j].clone()).collect();
    if T::EXACT {
        let mut g = Polynomial::<T>::zero();
        for qp in &qs {
            g = if g.is_zero() { qp.monic() } else { g.gcd(qp) };
        }
        if g.degree().unwrap_or(0) > 0 {
            for qp in qs.iter_mut() {
                *qp = qp.exact_div(&g);
            }
        }
        if let Some(l) = qs[0].leading().cloned() {
            if !l.is_one() {
                for qp in qs.iter_mut() {
                    *qp = qp.unscale(&l);
                }
            }
        }
    }
    qs
}

/// Delta -> standard conversion via d^i = sum_l S(i,l) z^l (d/dz)^l.
fn delta_to_standard<T: Coeff>(qs: &[Polynomial<T>], m: usize) -> Vec<RationalFunction<T>> {
    let s2 = stirling2_table(m);
    // E_l(z) = z^l sum_{i >= l} S(i, l) Q_{m-i}(z)
    let mut e: Vec<Polynomial<T>> = Vec::with_capacity(m + 1);
    for l in 0..=m {
        let mut inner = Polynomial::<T>::zero();
        for i in l..=m {
            let s = s2[i][l];
            if s != 0 {
                inner = inner.add(&qs[m - i].scale(&T::from_i64(s)));
            }
        }
        e.push(inner.mul(&Polynomial::monomial(T::one(), l)));
    }
    let lead = e[m].clone();
    (0..m)
        .map(|i| {
            if e[i].is_zero() {
                RationalFunction::zero()
            } else {
                RationalFunction::new(e[i].neg(), lead.clone())
            }
        })
        .collect()
}

/// Theta -> delta regrouping: Q_j(z) = sum_i [d^(m-j)-coefficient of P_i] z^i.
fn theta_to_delta<T: Coeff>(ps: &[Polynomial<T>], m: usize) -> Vec<Polynomial<T>> {
    let mut qs = vec![Polynomial::zero(); m + 1];
    for (i, p) in ps.iter().enumerate() {
        for (l, coef) in p.coeffs().iter().enumerate() {
            if !coef.is_zero() {
                // contributes to Q_{m-l} the term coef * z^i
                qs[m - l] = qs[m - l].add(&Polynomial::monomial(coef.clone(), i));
            }
        }
    }
    qs
}
