//! Operator file format.
//!
//! ```json
//! {
//!   "backend": "exact" | "float",
//!   "precision_bits": 53,
//!   "form": "standard" | "delta_poly" | "theta",
//!   "order": 2,
//!   "coeffs": [ ... ]
//! }
//! ```
//!
//! A polynomial is a list of `[re, im]` pairs in ascending degree; exact
//! components are strings (`"p/q"`, integers, or exact decimals), float
//! components are numbers or strings. Standard-form coefficients are either
//! `{"num": POLY, "den": POLY}` objects or bare polynomials (denominator 1);
//! delta and theta forms list their polynomials directly. `precision_bits`
//! applies to the float backend only: 53 selects hardware doubles, larger
//! values select software floats. `order` is optional and validated against
//! the coefficient data when present.

use num_complex::Complex64;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::operator::{DifferentialOperator, OperatorForm};
use crate::poly::Polynomial;
use crate::ratfn::RationalFunction;
use crate::scalar::{Backend, BigComplex, Coeff, GaussianRational, Scalar};

/// A differential operator in whichever backend its file declared.
#[derive(Clone, Debug)]
pub enum AnyOperator {
    Exact(DifferentialOperator<GaussianRational>),
    F64(DifferentialOperator<Complex64>),
    Big(DifferentialOperator<BigComplex>),
}

impl AnyOperator {
    pub fn backend(&self) -> Backend {
        match self {
            AnyOperator::Exact(_) => Backend::Exact,
            AnyOperator::F64(_) => Backend::Float { precision_bits: 53 },
            AnyOperator::Big(op) => op.backend(),
        }
    }

    pub fn order(&self) -> usize {
        match self {
            AnyOperator::Exact(op) => op.order(),
            AnyOperator::F64(op) => op.order(),
            AnyOperator::Big(op) => op.order(),
        }
    }
}

/// Dispatches a generic closure body over the backend of an [`AnyOperator`].
#[macro_export]
macro_rules! with_operator {
    ($any:expr, |$op:ident| $body:expr) => {
        match $any {
            $crate::json::AnyOperator::Exact($op) => $body,
            $crate::json::AnyOperator::F64($op) => $body,
            $crate::json::AnyOperator::Big($op) => $body,
        }
    };
}

pub fn operator_from_json_str(s: &str) -> Result<AnyOperator> {
    let v: Value = serde_json::from_str(s).map_err(|e| {
        Error::Parse(format!(
            "malformed JSON at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    operator_from_json(&v)
}

pub fn operator_from_json(v: &Value) -> Result<AnyOperator> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Parse("operator file must be a JSON object".into()))?;
    let backend_str = obj
        .get("backend")
        .and_then(|b| b.as_str())
        .ok_or_else(|| Error::Parse("missing \"backend\" field (\"exact\" or \"float\")".into()))?;
    let backend = match backend_str {
        "exact" => Backend::Exact,
        "float" => {
            let bits = match obj.get("precision_bits") {
                None => 53,
                Some(Value::Number(n)) => n
                    .as_u64()
                    .ok_or_else(|| Error::Parse("precision_bits must be a positive integer".into()))?,
                Some(other) => {
                    return Err(Error::Parse(format!(
                        "precision_bits must be a number, got {other}"
                    )))
                }
            };
            if bits < 53 {
                return Err(Error::Parse(format!(
                    "precision_bits = {bits} below the 53-bit minimum (hardware doubles)"
                )));
            }
            if bits > 65536 {
                return Err(Error::Parse(format!("precision_bits = {bits} is unreasonably large")));
            }
            Backend::Float {
                precision_bits: bits as u32,
            }
        }
        other => {
            return Err(Error::Parse(format!(
                "unknown backend {other:?}; expected \"exact\" or \"float\""
            )))
        }
    };
    let form = obj
        .get("form")
        .and_then(|f| f.as_str())
        .ok_or_else(|| Error::Parse("missing \"form\" field".into()))?;
    let coeffs = obj
        .get("coeffs")
        .and_then(|c| c.as_array())
        .ok_or_else(|| Error::Parse("missing or non-array \"coeffs\" field".into()))?;
    if coeffs.is_empty() {
        return Err(Error::InvalidOperator("empty coefficient list".into()));
    }

    let any = match backend {
        Backend::Exact => AnyOperator::Exact(build_operator::<GaussianRational>(
            form, coeffs, backend,
        )?),
        Backend::Float { precision_bits: 53 } => {
            AnyOperator::F64(build_operator::<Complex64>(form, coeffs, backend)?)
        }
        Backend::Float { .. } => {
            AnyOperator::Big(build_operator::<BigComplex>(form, coeffs, backend)?)
        }
    };

    if let Some(declared) = obj.get("order") {
        let declared = declared
            .as_u64()
            .ok_or_else(|| Error::Parse("order must be a positive integer".into()))?
            as usize;
        if declared != any.order() {
            return Err(Error::InvalidOperator(format!(
                "declared order {declared} does not match the coefficient data (inferred {})",
                any.order()
            )));
        }
    }
    Ok(any)
}

fn build_operator<T: Coeff>(
    form: &str,
    coeffs: &[Value],
    backend: Backend,
) -> Result<DifferentialOperator<T>> {
    match form {
        "standard" => {
            let q: Result<Vec<RationalFunction<T>>> = coeffs
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    parse_ratfn(v, backend)
                        .map_err(|e| Error::Parse(format!("coeffs[{i}]: {e}")))
                })
                .collect();
            DifferentialOperator::standard(q?)
        }
        "delta_poly" => {
            let qs: Result<Vec<Polynomial<T>>> = coeffs
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    parse_poly(v, backend).map_err(|e| Error::Parse(format!("coeffs[{i}]: {e}")))
                })
                .collect();
            DifferentialOperator::delta_poly(qs?)
        }
        "theta" => {
            let ps: Result<Vec<Polynomial<T>>> = coeffs
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    parse_poly(v, backend).map_err(|e| Error::Parse(format!("coeffs[{i}]: {e}")))
                })
                .collect();
            DifferentialOperator::theta(ps?)
        }
        other => Err(Error::Parse(format!(
            "unknown form {other:?}; expected \"standard\", \"delta_poly\" or \"theta\""
        ))),
    }
}

fn parse_poly<T: Coeff>(v: &Value, backend: Backend) -> Result<Polynomial<T>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Parse(format!("polynomial must be an array of [re, im] pairs, got {v}")))?;
    let mut out = Vec::with_capacity(arr.len());
    for (k, pair) in arr.iter().enumerate() {
        let s = Scalar::pair_from_json(pair, backend)
            .map_err(|e| Error::Parse(format!("degree {k}: {e}")))?;
        out.push(T::from_scalar(&s)?);
    }
    Ok(Polynomial::new(out))
}

fn parse_ratfn<T: Coeff>(v: &Value, backend: Backend) -> Result<RationalFunction<T>> {
    if let Some(obj) = v.as_object() {
        let num = obj
            .get("num")
            .ok_or_else(|| Error::Parse("rational function object needs \"num\"".into()))?;
        let den = obj
            .get("den")
            .ok_or_else(|| Error::Parse("rational function object needs \"den\"".into()))?;
        let num = parse_poly::<T>(num, backend)?;
        let den = parse_poly::<T>(den, backend)?;
        if den.is_zero() {
            return Err(Error::InvalidOperator("zero denominator polynomial".into()));
        }
        return Ok(RationalFunction::new(num, den));
    }
    // bare polynomial: denominator 1
    Ok(RationalFunction::from_poly(parse_poly::<T>(v, backend)?))
}

pub fn operator_to_json(any: &AnyOperator) -> Value {
    fn poly_json<T: Coeff>(p: &Polynomial<T>) -> Value {
        Value::Array(p.coeffs().iter().map(|c| c.to_scalar().to_json()).collect())
    }
    fn body<T: Coeff>(op: &DifferentialOperator<T>) -> (String, Value) {
        match op.form() {
            OperatorForm::Standard(q) => (
                "standard".into(),
                Value::Array(
                    q.iter()
                        .map(|r| {
                            serde_json::json!({
                                "num": poly_json(r.num()),
                                "den": poly_json(r.den()),
                            })
                        })
                        .collect(),
                ),
            ),
            OperatorForm::DeltaPoly(qs) => (
                "delta_poly".into(),
                Value::Array(qs.iter().map(poly_json).collect()),
            ),
            OperatorForm::Theta(ps) => (
                "theta".into(),
                Value::Array(ps.iter().map(poly_json).collect()),
            ),
        }
    }
    let (form, coeffs) = match any {
        AnyOperator::Exact(op) => body(op),
        AnyOperator::F64(op) => body(op),
        AnyOperator::Big(op) => body(op),
    };
    let mut obj = serde_json::Map::new();
    match any.backend() {
        Backend::Exact => {
            obj.insert("backend".into(), Value::String("exact".into()));
        }
        Backend::Float { precision_bits } => {
            obj.insert("backend".into(), Value::String("float".into()));
            obj.insert("precision_bits".into(), Value::Number(precision_bits.into()));
        }
    }
    obj.insert("form".into(), Value::String(form));
    obj.insert("order".into(), Value::Number((any.order() as u64).into()));
    obj.insert("coeffs".into(), coeffs);
    Value::Object(obj)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAUSS_EXACT: &str = r#"{
        "backend": "exact",
        "form": "standard",
        "order": 2,
        "coeffs": [
            {"num": [["1/6", "0"]], "den": [["0","0"], ["1","0"], ["-1","0"]]},
            {"num": [["-1/4", "0"], ["11/6", "0"]], "den": [["0","0"], ["1","0"], ["-1","0"]]}
        ]
    }"#;

    #[test]
    fn parse_gauss_exact() {
        let any = operator_from_json_str(GAUSS_EXACT).unwrap();
        assert_eq!(any.order(), 2);
        assert_eq!(any.backend(), Backend::Exact);
        let AnyOperator::Exact(op) = &any else {
            panic!("expected exact backend")
        };
        let sing = op.singular_points().unwrap();
        assert_eq!(sing.len(), 2);
    }

    #[test]
    fn round_trip_preserves_operator() {
        let any = operator_from_json_str(GAUSS_EXACT).unwrap();
        let j = operator_to_json(&any);
        let back = operator_from_json(&j).unwrap();
        let (AnyOperator::Exact(a), AnyOperator::Exact(b)) = (&any, &back) else {
            panic!()
        };
        assert_eq!(a.standard_coeffs(), b.standard_coeffs());
    }

    #[test]
    fn float_backend_with_numbers() {
        let s = r#"{
            "backend": "float",
            "form": "delta_poly",
            "coeffs": [ [[1, 0]], [[0.5, -0.25]] ]
        }"#;
        let any = operator_from_json_str(s).unwrap();
        assert_eq!(any.backend(), Backend::Float { precision_bits: 53 });
        assert_eq!(any.order(), 1);
    }

    #[test]
    fn big_float_backend() {
        let s = r#"{
            "backend": "float",
            "precision_bits": 128,
            "form": "delta_poly",
            "coeffs": [ [[1, 0]], [["1/3", 0]] ]
        }"#;
        let any = operator_from_json_str(s).unwrap();
        assert_eq!(
            any.backend(),
            Backend::Float { precision_bits: 128 }
        );
        let AnyOperator::Big(_) = any else {
            panic!("expected software floats")
        };
    }

    #[test]
    fn exact_backend_rejects_bare_floats() {
        let s = r#"{
            "backend": "exact",
            "form": "delta_poly",
            "coeffs": [ [[1, 0]], [[0.5, 0]] ]
        }"#;
        let err = operator_from_json_str(s).unwrap_err();
        assert!(err.to_string().contains("rational literals"), "{err}");
    }

    #[test]
    fn rejects_zero_leading_delta() {
        let s = r#"{
            "backend": "exact",
            "form": "delta_poly",
            "coeffs": [ [], [["1", "0"]] ]
        }"#;
        let err = operator_from_json_str(s).unwrap_err();
        assert!(err.to_string().contains("Q_0"), "{err}");
    }

    #[test]
    fn rejects_order_mismatch_and_malformed() {
        let s = r#"{
            "backend": "exact",
            "form": "delta_poly",
            "order": 3,
            "coeffs": [ [["1","0"]], [["1","0"]] ]
        }"#;
        assert!(operator_from_json_str(s).is_err());
        let e = operator_from_json_str("{ not json").unwrap_err();
        assert!(e.to_string().contains("line"), "{e}");
    }
}
