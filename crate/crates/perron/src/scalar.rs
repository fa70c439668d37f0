//! Scalar arithmetic backends.
//!
//! Two backends are supported: exact Gaussian rationals (complex numbers with
//! rational real and imaginary parts, closed under field operations) and
//! binary floating point with a recorded precision. Double precision (53 bits)
//! is served by `num_complex::Complex64`; higher precisions by [`BigComplex`],
//! a complex wrapper around software floats.
//!
//! Mixing backends inside one computation is an error, never a silent
//! coercion: the [`Coeff::from_scalar`] boundary rejects cross-backend data,
//! and the dynamic [`Scalar`] type only combines values of one backend.

use std::fmt;

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::{BigInt, Sign as IntSign};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

const RM: RoundingMode = RoundingMode::ToEven;

/// Default mantissa length for big-float constants; real data promotes the
/// precision of any operation it participates in.
pub const DEFAULT_BIG_PREC: usize = 64;

thread_local! {
    static CONSTS: std::cell::RefCell<Consts> =
        std::cell::RefCell::new(Consts::new().expect("constants cache"));
}

/// Identifies the arithmetic backend of a scalar or an operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Backend {
    Exact,
    Float { precision_bits: u32 },
}

impl Backend {
    /// Machine epsilon of the backend; zero for exact arithmetic.
    pub fn eps(&self) -> f64 {
        match self {
            Backend::Exact => 0.0,
            Backend::Float { precision_bits } => {
                let p = (*precision_bits).min(1070) as i32;
                2f64.powi(1 - p)
            }
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Exact => write!(f, "exact"),
            Backend::Float { precision_bits } => write!(f, "float({precision_bits})"),
        }
    }
}

/// Complex field element used as the coefficient type of every algebraic
/// structure in this crate. Implementations must form a field; division by
/// zero panics, use [`Coeff::checked_div`] where a zero divisor is a
/// legitimate runtime condition.
pub trait Coeff: Clone + PartialEq + fmt::Debug + fmt::Display + Send + Sync + 'static {
    /// Whether arithmetic is exact (no rounding). Drives normalization
    /// strategy: GCD reduction and exact zero tests only make sense when true.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(n: i64) -> Self;

    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Multiplicative inverse; panics on zero.
    fn inv(&self) -> Self;
    fn div(&self, rhs: &Self) -> Self {
        self.mul(&rhs.inv())
    }
    fn checked_div(&self, rhs: &Self) -> Option<Self> {
        if rhs.is_zero() {
            None
        } else {
            Some(self.div(rhs))
        }
    }
    fn conj(&self) -> Self;

    fn is_zero(&self) -> bool;
    fn is_one(&self) -> bool {
        *self == Self::one()
    }

    /// Lossy projection to double precision, for tolerance comparisons,
    /// reports and root finding.
    fn to_c64(&self) -> Complex64;
    fn abs(&self) -> f64 {
        self.to_c64().norm()
    }

    /// True when the value is (within backend tolerance) a rational integer.
    fn is_integer(&self) -> bool;
    /// The integer value when [`Coeff::is_integer`] holds and it fits in i64.
    fn as_i64(&self) -> Option<i64>;

    /// Exact-backend introspection; `None` for float backends.
    fn as_gaussian_rational(&self) -> Option<&GaussianRational> {
        None
    }

    fn backend(&self) -> Backend;
    fn to_scalar(&self) -> Scalar;
    /// Strict conversion from a dynamic scalar: the scalar must already be in
    /// this backend (same precision class), otherwise `Error::BackendMismatch`.
    fn from_scalar(s: &Scalar) -> Result<Self, Error>;
}

// ---------------------------------------------------------------------------
// Exact backend: Gaussian rationals
// ---------------------------------------------------------------------------

/// Complex number with rational real and imaginary parts.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct GaussianRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussianRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn from_i64s(re: i64, im: i64) -> Self {
        Self::new(
            BigRational::from_integer(re.into()),
            BigRational::from_integer(im.into()),
        )
    }

    /// Real rational re = p/q.
    pub fn from_ratio(p: i64, q: i64) -> Self {
        assert!(q != 0, "zero denominator");
        Self::new(
            BigRational::new(p.into(), q.into()),
            BigRational::zero(),
        )
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    /// Squared modulus, an exact nonnegative rational.
    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    // Ratio::to_f64 yields None or NaN when a component overflows f64; shift
    // both parts down together and divide in range instead
    match r.to_f64() {
        Some(v) if !v.is_nan() => v,
        _ => {
            let shift = (r.numer().bits().max(r.denom().bits()) as i64 - 900).max(0) as u64;
            let n = r.numer() >> shift;
            let d = r.denom() >> shift;
            n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN)
        }
    }
}

/// Canonical text form of a rational component: `p` or `p/q`.
pub fn ratio_to_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses a rational component: integer (`-3`), fraction (`3/4`), or decimal
/// with optional exponent (`0.25`, `1.2e-3`), all read exactly.
pub fn parse_rational(s: &str) -> Result<BigRational, Error> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid rational literal {s:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(p, q));
    }
    // decimal form, possibly with exponent
    let (mant, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int_part, frac_part) = match mant.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mant, ""),
    };
    if frac_part.contains(['+', '-']) {
        return Err(bad());
    }
    let digits: String = format!("{int_part}{frac_part}");
    let n: BigInt = digits.parse().map_err(|_| bad())?;
    let scale = frac_part.len() as i64 - exp;
    let ten = BigInt::from(10);
    let r = if scale >= 0 {
        BigRational::new(n, ten.pow(scale as u32))
    } else {
        BigRational::from_integer(n * ten.pow((-scale) as u32))
    };
    Ok(r)
}

impl Coeff for GaussianRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Self::new(BigRational::zero(), BigRational::zero())
    }
    fn one() -> Self {
        Self::new(BigRational::one(), BigRational::zero())
    }
    fn from_i64(n: i64) -> Self {
        Self::from_i64s(n, 0)
    }

    fn add(&self, rhs: &Self) -> Self {
        Self::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
    fn sub(&self, rhs: &Self) -> Self {
        Self::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
    fn mul(&self, rhs: &Self) -> Self {
        Self::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
    fn neg(&self) -> Self {
        Self::new(-self.re.clone(), -self.im.clone())
    }
    fn inv(&self) -> Self {
        let n = self.norm_sqr();
        assert!(!n.is_zero(), "inverse of zero Gaussian rational");
        Self::new(&self.re / &n, -(&self.im / &n))
    }
    fn conj(&self) -> Self {
        Self::new(self.re.clone(), -self.im.clone())
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(ratio_to_f64(&self.re), ratio_to_f64(&self.im))
    }

    fn is_integer(&self) -> bool {
        self.im.is_zero() && self.re.denom().is_one()
    }
    fn as_i64(&self) -> Option<i64> {
        if self.is_integer() {
            self.re.numer().to_i64()
        } else {
            None
        }
    }

    fn as_gaussian_rational(&self) -> Option<&GaussianRational> {
        Some(self)
    }

    fn backend(&self) -> Backend {
        Backend::Exact
    }
    fn to_scalar(&self) -> Scalar {
        Scalar::Exact(self.clone())
    }
    fn from_scalar(s: &Scalar) -> Result<Self, Error> {
        match s {
            Scalar::Exact(g) => Ok(g.clone()),
            other => Err(Error::BackendMismatch {
                expected: Backend::Exact,
                found: other.backend(),
            }),
        }
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", ratio_to_string(&self.re))
        } else if self.re.is_zero() {
            write!(f, "{}i", ratio_to_string(&self.im))
        } else if self.im.is_negative() {
            write!(
                f,
                "{}{}i",
                ratio_to_string(&self.re),
                ratio_to_string(&self.im)
            )
        } else {
            write!(
                f,
                "{}+{}i",
                ratio_to_string(&self.re),
                ratio_to_string(&self.im)
            )
        }
    }
}

// ---------------------------------------------------------------------------
// Double precision backend
// ---------------------------------------------------------------------------

const F64_INT_TOL: f64 = 1e-9;

impl Coeff for Complex64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_i64(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv(&self) -> Self {
        assert!(
            !(self.re == 0.0 && self.im == 0.0),
            "inverse of zero complex scalar"
        );
        Complex64::new(1.0, 0.0) / self
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    fn to_c64(&self) -> Complex64 {
        *self
    }

    fn is_integer(&self) -> bool {
        self.im.abs() <= F64_INT_TOL && (self.re - self.re.round()).abs() <= F64_INT_TOL
    }
    fn as_i64(&self) -> Option<i64> {
        if self.is_integer() && self.re.abs() < 9e15 {
            Some(self.re.round() as i64)
        } else {
            None
        }
    }

    fn backend(&self) -> Backend {
        Backend::Float { precision_bits: 53 }
    }
    fn to_scalar(&self) -> Scalar {
        Scalar::F64(*self)
    }
    fn from_scalar(s: &Scalar) -> Result<Self, Error> {
        match s {
            Scalar::F64(c) => Ok(*c),
            other => Err(Error::BackendMismatch {
                expected: Backend::Float { precision_bits: 53 },
                found: other.backend(),
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// Arbitrary precision backend
// ---------------------------------------------------------------------------

/// Complex number over software binary floats with a recorded mantissa
/// precision in bits. Binary operations return results at the larger of the
/// two operand precisions, so exact constants never downgrade data.
#[derive(Clone, Debug)]
pub struct BigComplex {
    re: BigFloat,
    im: BigFloat,
    prec: usize,
}

fn bigfloat_from_bigint(n: &BigInt, prec: usize) -> BigFloat {
    let (sign, digits) = n.to_u64_digits();
    if digits.is_empty() {
        return BigFloat::from_f64(0.0, prec);
    }
    let s = match sign {
        IntSign::Minus => Sign::Neg,
        _ => Sign::Pos,
    };
    // from_words reads the mantissa as an integer scaled by 2^(e - 64*len)
    let e = (64 * digits.len()) as astro_float::Exponent;
    let mut v = BigFloat::from_words(&digits, s, e);
    v.set_precision(prec.max(DEFAULT_BIG_PREC), RM)
        .expect("set precision");
    v
}

fn bigfloat_to_f64(x: &BigFloat) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    if x.is_zero() {
        return 0.0;
    }
    let (words, _n, sign, e, _) = x.as_raw_parts().expect("finite raw parts");
    // mantissa is little-endian with the most significant word last; the
    // value is 0.mantissa * 2^e, accumulated least significant word first
    let mut frac = 0f64;
    for w in words {
        frac = (frac + *w as f64) / 18446744073709551616.0;
    }
    let v = frac * 2f64.powi(e);
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}

impl BigComplex {
    pub fn new(re: BigFloat, im: BigFloat, prec: usize) -> Self {
        Self { re, im, prec }
    }

    pub fn from_f64s(re: f64, im: f64, prec: usize) -> Self {
        Self::new(BigFloat::from_f64(re, prec), BigFloat::from_f64(im, prec), prec)
    }

    pub fn from_c64(c: Complex64, prec: usize) -> Self {
        Self::from_f64s(c.re, c.im, prec)
    }

    /// Converts exact rational components at the requested precision.
    pub fn from_gaussian_rational(g: &GaussianRational, prec: usize) -> Self {
        let conv = |r: &BigRational| {
            let n = bigfloat_from_bigint(r.numer(), prec + 32);
            let d = bigfloat_from_bigint(r.denom(), prec + 32);
            n.div(&d, prec, RM)
        };
        Self::new(conv(&g.re), conv(&g.im), prec)
    }

    pub fn precision_bits(&self) -> usize {
        self.prec
    }

    pub fn re(&self) -> &BigFloat {
        &self.re
    }
    pub fn im(&self) -> &BigFloat {
        &self.im
    }

    fn p(&self, rhs: &Self) -> usize {
        self.prec.max(rhs.prec)
    }

    /// Decimal rendering with enough digits to be read back at full precision.
    pub fn component_strings(&self) -> (String, String) {
        let fmtf = |x: &BigFloat| {
            CONSTS.with(|cc| {
                x.format(astro_float::Radix::Dec, RM, &mut cc.borrow_mut())
                    .unwrap_or_else(|_| "NaN".into())
            })
        };
        (fmtf(&self.re), fmtf(&self.im))
    }

    pub fn parse_component(s: &str, prec: usize) -> Result<BigFloat, Error> {
        // exact rational literals (p/q) are accepted and rounded once
        if s.contains('/') {
            let r = parse_rational(s)?;
            let n = bigfloat_from_bigint(r.numer(), prec + 32);
            let d = bigfloat_from_bigint(r.denom(), prec + 32);
            return Ok(n.div(&d, prec, RM));
        }
        let v = CONSTS.with(|cc| {
            BigFloat::parse(s, astro_float::Radix::Dec, prec, RM, &mut cc.borrow_mut())
        });
        if v.is_nan() && s.trim() != "NaN" {
            return Err(Error::Parse(format!("invalid float literal {s:?}")));
        }
        Ok(v)
    }
}

impl PartialEq for BigComplex {
    fn eq(&self, other: &Self) -> bool {
        self.re == other.re && self.im == other.im
    }
}

impl Coeff for BigComplex {
    const EXACT: bool = false;

    fn zero() -> Self {
        Self::from_f64s(0.0, 0.0, DEFAULT_BIG_PREC)
    }
    fn one() -> Self {
        Self::from_f64s(1.0, 0.0, DEFAULT_BIG_PREC)
    }
    fn from_i64(n: i64) -> Self {
        Self::new(
            BigFloat::from_i64(n, DEFAULT_BIG_PREC),
            BigFloat::from_f64(0.0, DEFAULT_BIG_PREC),
            DEFAULT_BIG_PREC,
        )
    }

    fn add(&self, rhs: &Self) -> Self {
        let p = self.p(rhs);
        Self::new(self.re.add(&rhs.re, p, RM), self.im.add(&rhs.im, p, RM), p)
    }
    fn sub(&self, rhs: &Self) -> Self {
        let p = self.p(rhs);
        Self::new(self.re.sub(&rhs.re, p, RM), self.im.sub(&rhs.im, p, RM), p)
    }
    fn mul(&self, rhs: &Self) -> Self {
        let p = self.p(rhs);
        let re = self.re.mul(&rhs.re, p, RM).sub(&self.im.mul(&rhs.im, p, RM), p, RM);
        let im = self.re.mul(&rhs.im, p, RM).add(&self.im.mul(&rhs.re, p, RM), p, RM);
        Self::new(re, im, p)
    }
    fn neg(&self) -> Self {
        Self::new(self.re.neg(), self.im.neg(), self.prec)
    }
    fn inv(&self) -> Self {
        assert!(!self.is_zero(), "inverse of zero big-float scalar");
        let p = self.prec;
        let n = self.re.mul(&self.re, p, RM).add(&self.im.mul(&self.im, p, RM), p, RM);
        Self::new(self.re.div(&n, p, RM), self.im.neg().div(&n, p, RM), p)
    }
    fn conj(&self) -> Self {
        Self::new(self.re.clone(), self.im.neg(), self.prec)
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(bigfloat_to_f64(&self.re), bigfloat_to_f64(&self.im))
    }

    fn is_integer(&self) -> bool {
        let c = self.to_c64();
        c.im.abs() <= F64_INT_TOL && (c.re - c.re.round()).abs() <= F64_INT_TOL
    }
    fn as_i64(&self) -> Option<i64> {
        let c = self.to_c64();
        if self.is_integer() && c.re.abs() < 9e15 {
            Some(c.re.round() as i64)
        } else {
            None
        }
    }

    fn backend(&self) -> Backend {
        Backend::Float {
            precision_bits: self.prec as u32,
        }
    }
    fn to_scalar(&self) -> Scalar {
        Scalar::Big(self.clone())
    }
    fn from_scalar(s: &Scalar) -> Result<Self, Error> {
        match s {
            Scalar::Big(b) => Ok(b.clone()),
            other => Err(Error::BackendMismatch {
                expected: Backend::Float {
                    precision_bits: DEFAULT_BIG_PREC as u32,
                },
                found: other.backend(),
            }),
        }
    }
}

impl fmt::Display for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (re, im) = self.component_strings();
        if self.im.is_zero() {
            write!(f, "{re}")
        } else {
            write!(f, "{re}+({im})i")
        }
    }
}

// ---------------------------------------------------------------------------
// Dynamic scalar for I/O boundaries and reports
// ---------------------------------------------------------------------------

/// Backend-tagged scalar used at serialization boundaries and in reports.
/// Arithmetic lives on the [`Coeff`] implementations; `Scalar` only carries
/// values across the dynamic/static boundary.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(GaussianRational),
    F64(Complex64),
    Big(BigComplex),
}

impl Scalar {
    pub fn backend(&self) -> Backend {
        match self {
            Scalar::Exact(_) => Backend::Exact,
            Scalar::F64(_) => Backend::Float { precision_bits: 53 },
            Scalar::Big(b) => Backend::Float {
                precision_bits: b.precision_bits() as u32,
            },
        }
    }

    pub fn to_c64(&self) -> Complex64 {
        match self {
            Scalar::Exact(g) => g.to_c64(),
            Scalar::F64(c) => *c,
            Scalar::Big(b) => b.to_c64(),
        }
    }

    pub fn exact_from_ratio(p: i64, q: i64) -> Self {
        Scalar::Exact(GaussianRational::from_ratio(p, q))
    }

    pub fn f64(re: f64, im: f64) -> Self {
        Scalar::F64(Complex64::new(re, im))
    }

    /// Converts into the given backend. Exact-to-float conversion is allowed
    /// here because this is the declared parsing boundary; float-to-exact is
    /// refused (it would silently invent rationals).
    pub fn into_backend(self, backend: Backend) -> Result<Scalar, Error> {
        match (self, backend) {
            (s @ Scalar::Exact(_), Backend::Exact) => Ok(s),
            (Scalar::F64(_) | Scalar::Big(_), Backend::Exact) => Err(Error::Parse(
                "exact backend requires rational literals (strings or integers)".into(),
            )),
            (Scalar::Exact(g), Backend::Float { precision_bits: 53 }) => Ok(Scalar::F64(g.to_c64())),
            (Scalar::F64(c), Backend::Float { precision_bits: 53 }) => Ok(Scalar::F64(c)),
            (Scalar::Big(b), Backend::Float { precision_bits: 53 }) => Ok(Scalar::F64(b.to_c64())),
            (Scalar::Exact(g), Backend::Float { precision_bits: p }) => Ok(Scalar::Big(
                BigComplex::from_gaussian_rational(&g, p as usize),
            )),
            (Scalar::F64(c), Backend::Float { precision_bits: p }) => {
                Ok(Scalar::Big(BigComplex::from_c64(c, p as usize)))
            }
            (Scalar::Big(b), Backend::Float { precision_bits: p }) => {
                if b.precision_bits() == p as usize {
                    Ok(Scalar::Big(b))
                } else {
                    let mut re = b.re().clone();
                    let mut im = b.im().clone();
                    re.set_precision(p as usize, RM).map_err(|e| {
                        Error::Parse(format!("precision change failed: {e:?}"))
                    })?;
                    im.set_precision(p as usize, RM).map_err(|e| {
                        Error::Parse(format!("precision change failed: {e:?}"))
                    })?;
                    Ok(Scalar::Big(BigComplex::new(re, im, p as usize)))
                }
            }
        }
    }

    /// Parses one component from a JSON value: numbers become doubles,
    /// strings are exact rational literals.
    pub fn component_from_json(v: &serde_json::Value) -> Result<ScalarComponent, Error> {
        match v {
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(ScalarComponent::Rational(BigRational::from_integer(i.into())))
                } else {
                    Ok(ScalarComponent::Double(n.as_f64().ok_or_else(|| {
                        Error::Parse(format!("bad number {n}"))
                    })?))
                }
            }
            serde_json::Value::String(s) => Ok(ScalarComponent::Rational(parse_rational(s)?)),
            other => Err(Error::Parse(format!(
                "scalar component must be a number or string, got {other}"
            ))),
        }
    }

    /// Parses a `[re, im]` pair in the declared backend.
    pub fn pair_from_json(v: &serde_json::Value, backend: Backend) -> Result<Scalar, Error> {
        let arr = v
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| Error::Parse(format!("scalar must be a [re, im] pair, got {v}")))?;
        let re = Self::component_from_json(&arr[0])?;
        let im = Self::component_from_json(&arr[1])?;
        match backend {
            Backend::Exact => {
                let as_rat = |c: ScalarComponent| match c {
                    ScalarComponent::Rational(r) => Ok(r),
                    ScalarComponent::Double(_) => Err(Error::Parse(
                        "exact backend requires rational literals (strings or integers)".into(),
                    )),
                };
                Ok(Scalar::Exact(GaussianRational::new(as_rat(re)?, as_rat(im)?)))
            }
            Backend::Float { precision_bits: 53 } => {
                Ok(Scalar::F64(Complex64::new(re.to_f64(), im.to_f64())))
            }
            Backend::Float { precision_bits: p } => {
                let conv = |c: ScalarComponent| match c {
                    ScalarComponent::Rational(r) => {
                        let g = GaussianRational::new(r, BigRational::zero());
                        BigComplex::from_gaussian_rational(&g, p as usize).re().clone()
                    }
                    ScalarComponent::Double(d) => BigFloat::from_f64(d, p as usize),
                };
                Ok(Scalar::Big(BigComplex::new(conv(re), conv(im), p as usize)))
            }
        }
    }

    /// JSON `[re, im]` pair; exact components as `p/q` strings, doubles as
    /// numbers, big floats as decimal strings.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Scalar::Exact(g) => serde_json::json!([
                ratio_to_string(&g.re),
                ratio_to_string(&g.im)
            ]),
            Scalar::F64(c) => serde_json::json!([c.re, c.im]),
            Scalar::Big(b) => {
                let (re, im) = b.component_strings();
                serde_json::json!([re, im])
            }
        }
    }
}

/// One parsed component before backend assembly.
pub enum ScalarComponent {
    Rational(BigRational),
    Double(f64),
}

impl ScalarComponent {
    fn to_f64(&self) -> f64 {
        match self {
            ScalarComponent::Rational(r) => ratio_to_f64(r),
            ScalarComponent::Double(d) => *d,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(g) => write!(f, "{g}"),
            Scalar::F64(c) => write!(f, "{c}"),
            Scalar::Big(b) => write!(f, "{b}"),
        }
    }
}

impl serde::Serialize for Scalar {
    fn serialize<S>(&self, serializer: S) -> Result<S::Ok, S::Error>
    where
        S: serde::Serializer,
    {
        self.to_json().serialize(serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gr(p: i64, q: i64) -> GaussianRational {
        GaussianRational::from_ratio(p, q)
    }

    #[test]
    fn gaussian_rational_field_ops() {
        let a = GaussianRational::new(
            BigRational::new(1.into(), 2.into()),
            BigRational::new(1.into(), 3.into()),
        );
        let b = GaussianRational::new(
            BigRational::new((-2).into(), 5.into()),
            BigRational::new(7.into(), 4.into()),
        );
        let prod = a.mul(&b);
        let back = prod.div(&b);
        assert_eq!(back, a);
        let s = a.add(&b).sub(&b);
        assert_eq!(s, a);
        assert!(a.mul(&a.inv()).is_one());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("3/4").unwrap(), BigRational::new(3.into(), 4.into()));
        assert_eq!(parse_rational("-5").unwrap(), BigRational::from_integer((-5).into()));
        assert_eq!(parse_rational("0.25").unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(
            parse_rational("1.2e-3").unwrap(),
            BigRational::new(3.into(), 2500.into())
        );
        assert_eq!(parse_rational("12e2").unwrap(), BigRational::from_integer(1200.into()));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn display_round_trip() {
        let x = gr(-7, 3);
        assert_eq!(ratio_to_string(&x.re), "-7/3");
        assert_eq!(parse_rational("-7/3").unwrap(), x.re);
    }

    #[test]
    fn big_complex_ops_and_f64_round_trip() {
        let a = BigComplex::from_f64s(0.125, -3.5, 128);
        let c = a.to_c64();
        assert_eq!(c, Complex64::new(0.125, -3.5));
        let b = BigComplex::from_f64s(2.0, 1.0, 128);
        let q = a.div(&b).mul(&b);
        let d = q.sub(&a).to_c64().norm();
        assert!(d < 1e-30, "residual {d}");
        // precision promotion: constant + data keeps the data precision
        let one = BigComplex::one();
        assert_eq!(one.add(&a).precision_bits(), 128);
    }

    #[test]
    fn big_complex_from_rational() {
        let g = gr(1, 3);
        let b = BigComplex::from_gaussian_rational(&g, 192);
        let err = (b.to_c64().re - 1.0 / 3.0).abs();
        assert!(err < 1e-15, "err {err}");
        // 1/3 at 192 bits is closer to 1/3 than f64 can represent: check via
        // 3*x - 1 in big arithmetic
        let three = BigComplex::from_i64(3);
        let resid = three.mul(&b).sub(&BigComplex::one());
        assert!(resid.to_c64().norm() < 1e-55);
    }

    #[test]
    fn backend_mismatch_is_an_error() {
        let s = Scalar::F64(Complex64::new(1.0, 0.0));
        assert!(GaussianRational::from_scalar(&s).is_err());
        let e = Scalar::Exact(gr(1, 2));
        assert!(<Complex64 as Coeff>::from_scalar(&e).is_err());
    }

    #[test]
    fn scalar_json_round_trip() {
        let s = Scalar::Exact(GaussianRational::new(
            BigRational::new(3.into(), 7.into()),
            BigRational::from_integer((-2).into()),
        ));
        let j = s.to_json();
        let back = Scalar::pair_from_json(&j, Backend::Exact).unwrap();
        assert_eq!(back, s);

        let f = Scalar::f64(0.5, -1.25);
        let jf = f.to_json();
        let backf = Scalar::pair_from_json(&jf, Backend::Float { precision_bits: 53 }).unwrap();
        assert_eq!(backf, f);
    }

    #[test]
    fn scalar_backend_conversion_rules() {
        let e = Scalar::Exact(gr(1, 4));
        let as_f = e.clone().into_backend(Backend::Float { precision_bits: 53 }).unwrap();
        assert_eq!(as_f.to_c64().re, 0.25);
        let as_big = e.clone().into_backend(Backend::Float { precision_bits: 256 }).unwrap();
        assert_eq!(as_big.to_c64().re, 0.25);
        // floats never silently become exact
        assert!(Scalar::f64(0.25, 0.0).into_backend(Backend::Exact).is_err());
    }

    #[test]
    fn big_parse_and_format() {
        let x = BigComplex::parse_component("1.5", 128).unwrap();
        assert_eq!(bigfloat_to_f64(&x), 1.5);
        let y = BigComplex::parse_component("1/3", 128).unwrap();
        assert!((bigfloat_to_f64(&y) - 1.0 / 3.0).abs() < 1e-15);
        let b = BigComplex::new(x, y, 128);
        let (rs, is) = b.component_strings();
        let xr = BigComplex::parse_component(&rs, 128).unwrap();
        let yr = BigComplex::parse_component(&is, 128).unwrap();
        assert_eq!(bigfloat_to_f64(&xr), 1.5);
        assert!((bigfloat_to_f64(&yr) - 1.0 / 3.0).abs() < 1e-15);
    }
}
