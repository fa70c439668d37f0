//! Argument parsing helpers and output shaping.

use num_complex::Complex64;
use perron::scalar::{parse_rational, Backend, BigComplex, GaussianRational, Scalar};
use perron::Error;

/// Parses a complex argument: `re` or `re,im`, each component an exact
/// rational literal (integer, p/q, or decimal). The scalar lands in the
/// requested backend.
pub fn parse_complex(s: &str, backend: Backend) -> Result<Scalar, Error> {
    let (re, im) = match s.split_once(',') {
        Some((r, i)) => (r.trim(), i.trim()),
        None => (s.trim(), "0"),
    };
    let re = parse_rational(re)?;
    let im = parse_rational(im)?;
    let exact = Scalar::Exact(GaussianRational::new(re, im));
    exact.into_backend(backend)
}

/// Parses a semicolon-separated list of complex arguments.
pub fn parse_complex_list(s: &str, backend: Backend) -> Result<Vec<Scalar>, Error> {
    s.split(';')
        .map(|part| parse_complex(part, backend))
        .collect()
}

pub fn parse_backend(name: &str, precision_bits: u32) -> Result<Backend, Error> {
    match name {
        "exact" => Ok(Backend::Exact),
        "float" => {
            if precision_bits < 53 {
                return Err(Error::Parse(format!(
                    "precision_bits = {precision_bits} below the 53-bit minimum"
                )));
            }
            Ok(Backend::Float { precision_bits })
        }
        other => Err(Error::Parse(format!(
            "unknown backend {other:?}; expected \"exact\" or \"float\""
        ))),
    }
}

/// Converts a parsed operator into another backend. Exact data projects to
/// floats; float data never silently becomes exact.
pub fn coerce_operator(
    any: perron::AnyOperator,
    target: Backend,
) -> Result<perron::AnyOperator, Error> {
    use perron::json::AnyOperator as A;
    use perron::operator::{DifferentialOperator, OperatorForm};
    use perron::scalar::Coeff;
    use perron::{Polynomial, RationalFunction};

    fn map_op<T: Coeff, U: Coeff>(
        op: &DifferentialOperator<T>,
        f: &impl Fn(&T) -> U,
    ) -> DifferentialOperator<U> {
        let poly = |p: &Polynomial<T>| Polynomial::new(p.coeffs().iter().map(f).collect());
        match op.form() {
            OperatorForm::Standard(q) => DifferentialOperator::standard(
                q.iter()
                    .map(|r| RationalFunction::new(poly(r.num()), poly(r.den())))
                    .collect(),
            )
            .expect("shape preserved"),
            OperatorForm::DeltaPoly(qs) => {
                DifferentialOperator::delta_poly(qs.iter().map(poly).collect())
                    .expect("shape preserved")
            }
            OperatorForm::Theta(ps) => {
                DifferentialOperator::theta(ps.iter().map(poly).collect())
                    .expect("shape preserved")
            }
        }
    }

    if any.backend() == target {
        return Ok(any);
    }
    match (&any, target) {
        (A::Exact(op), Backend::Float { precision_bits: 53 }) => {
            Ok(A::F64(map_op(op, &|c| c.to_c64())))
        }
        (A::Exact(op), Backend::Float { precision_bits: p }) => Ok(A::Big(map_op(op, &|c| {
            BigComplex::from_gaussian_rational(c, p as usize)
        }))),
        (A::F64(op), Backend::Float { precision_bits: p }) => Ok(A::Big(map_op(op, &|c| {
            BigComplex::from_c64(*c, p as usize)
        }))),
        (A::Big(op), Backend::Float { precision_bits: 53 }) => {
            Ok(A::F64(map_op(op, &|c| c.to_c64())))
        }
        (_, Backend::Exact) => Err(Error::BackendMismatch {
            expected: Backend::Exact,
            found: any.backend(),
        }),
        (A::Big(op), Backend::Float { precision_bits: p }) => Ok(A::Big(map_op(op, &|c| {
            BigComplex::from_c64(c.to_c64(), p as usize)
        }))),
        _ => unreachable!("remaining combinations are identities"),
    }
}

/// Writes rows as CSV with a header line.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.17e}")
    } else {
        format!("{x}")
    }
}
