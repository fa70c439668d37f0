//! Subcommand implementations. Each handler returns the JSON report, an
//! optional CSV rendering, and the process exit code (0 ok, 2 parse error,
//! 3 precondition refused, 4 no convergence).

use num_complex::Complex64;
use serde_json::{json, Value};

use perron::cf::{evaluate, monster_ratio_eval, operator_fraction};
use perron::chain::{logderiv_limit, verify_chain, Chain, LogDerivOptions};
use perron::geometry::{bisector_lines, classify_point, region_guard};
use perron::hypergeom::{region_dichotomy_check, HypergeomParams};
use perron::json::AnyOperator;
use perron::scalar::{Backend, Coeff, Scalar};
use perron::series::{
    build_recurrence, ratio_limit, solve_series, Acceleration, RatioOptions, SeriesSolution,
};
use perron::{with_operator, Error};

use crate::util::{fmt_f64, to_csv};

pub struct CommandOutput {
    pub json: Value,
    pub csv: Option<String>,
    pub exit: i32,
}

pub struct Failure {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn to_json(&self) -> Value {
        json!({
            "error": { "kind": self.kind, "reason": self.message, "exit_code": self.code }
        })
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Parse(_) | Error::InvalidOperator(_) => (2, "parse"),
            Error::Precondition(_)
            | Error::BackendMismatch { .. }
            | Error::Unsupported(_)
            | Error::DivisionByZero(_) => (3, "precondition"),
            Error::NoConvergence(_) | Error::RootFinding(_) => (4, "no_convergence"),
        };
        Failure {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<CommandOutput, Failure>;

fn backend_json(b: Backend) -> Value {
    match b {
        Backend::Exact => json!({"backend": "exact"}),
        Backend::Float { precision_bits } => {
            json!({"backend": "float", "precision_bits": precision_bits})
        }
    }
}

pub fn cmd_singular(any: &AnyOperator) -> CmdResult {
    let (points, reports, fuchsian, regular_at_infinity, all_exact, tol) =
        with_operator!(any, |op| {
            let sing = op.singular_points()?;
            let fu = op.is_fuchsian()?;
            let mut reports = Vec::new();
            for s in &sing.points {
                match <_ as Coeff>::from_scalar(s) {
                    Ok(t) => {
                        let rep = op.indicial_data(&t)?;
                        reports.push(json!({
                            "point": rep.point,
                            "indicial_polynomial": rep.indicial_polynomial,
                            "exponents": rep.exponents,
                            "fuchsian_at_point": rep.fuchsian_at_point,
                            "generic_probe": rep.generic_probe,
                            "explanation": rep.explanation,
                        }));
                    }
                    Err(_) => {
                        // irrational singularity of an exact operator: report
                        // the point with the pole-order verdict only
                        let ok = fu
                            .per_point
                            .iter()
                            .find(|(p, _)| p == s)
                            .map(|(_, ok)| *ok)
                            .unwrap_or(false);
                        reports.push(json!({
                            "point": s,
                            "indicial_polynomial": Value::Null,
                            "exponents": Value::Null,
                            "fuchsian_at_point": ok,
                            "generic_probe": "Undetermined",
                            "explanation": "point is not representable in the operator backend",
                        }));
                    }
                }
            }
            Result::<_, Error>::Ok((
                sing.points.clone(),
                reports,
                fu.fuchsian,
                fu.regular_at_infinity,
                sing.all_exact,
                sing.dedup_tolerance,
            ))
        })?;
    let mut json = json!({
        "command": "singular",
        "order": any.order(),
        "singular_points": reports,
        "all_exact": all_exact,
        "dedup_tolerance": tol,
        "fuchsian": fuchsian,
        "regular_at_infinity": regular_at_infinity,
    });
    merge(&mut json, backend_json(any.backend()));
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            let c = p.to_c64();
            vec![fmt_f64(c.re), fmt_f64(c.im), format!("{}", matches!(p, Scalar::Exact(_)))]
        })
        .collect();
    Ok(CommandOutput {
        json,
        csv: Some(to_csv(&["re", "im", "exact"], &rows)),
        exit: 0,
    })
}

pub struct GridSpec {
    pub re: (f64, f64, usize),
    pub im: (f64, f64, usize),
}

pub fn cmd_regions(any: &AnyOperator, grid: Option<GridSpec>, tie_tol: f64) -> CmdResult {
    let sing = with_operator!(any, |op| op.singular_points())?;
    let lines = bisector_lines(&sing);
    let lines_json: Vec<Value> = lines
        .iter()
        .map(|l| {
            json!({
                "midpoint": l.midpoint,
                "direction": [l.direction.0, l.direction.1],
                "pair": [l.site_pair.0, l.site_pair.1],
            })
        })
        .collect();
    let mut grid_json = Vec::new();
    let mut rows = Vec::new();
    if let Some(g) = grid {
        let points: Vec<(f64, f64)> = (0..g.re.2)
            .flat_map(|i| {
                let x = if g.re.2 > 1 {
                    g.re.0 + (g.re.1 - g.re.0) * (i as f64) / (g.re.2 as f64 - 1.0)
                } else {
                    g.re.0
                };
                (0..g.im.2).map(move |j| {
                    let y = if g.im.2 > 1 {
                        g.im.0 + (g.im.1 - g.im.0) * (j as f64) / (g.im.2 as f64 - 1.0)
                    } else {
                        g.im.0
                    };
                    (x, y)
                })
            })
            .collect();
        use rayon::prelude::*;
        // work items run in parallel; output assembly keeps input order
        let results: Vec<_> = points
            .par_iter()
            .map(|(x, y)| classify_point(&sing, &Scalar::f64(*x, *y), tie_tol))
            .collect();
        for ((x, y), r) in points.iter().zip(results) {
            match r {
                Ok(r) => {
                    grid_json.push(json!({
                        "z": [x, y],
                        "nearest_index": r.nearest_index,
                        "distance": r.distance,
                        "is_tie": r.is_tie,
                        "distance_to_al": r.distance_to_al,
                    }));
                    rows.push(vec![
                        fmt_f64(*x),
                        fmt_f64(*y),
                        r.nearest_index.map_or("tie".into(), |i| i.to_string()),
                        fmt_f64(r.distance),
                        r.distance_to_al.map_or("inf".into(), fmt_f64),
                    ]);
                }
                Err(e) => {
                    grid_json.push(json!({"z": [x, y], "error": e.to_string()}));
                    rows.push(vec![
                        fmt_f64(*x),
                        fmt_f64(*y),
                        "site".into(),
                        "0".into(),
                        "".into(),
                    ]);
                }
            }
        }
    }
    let mut json = json!({
        "command": "regions",
        "sites": sing.points,
        "lines": lines_json,
        "grid": grid_json,
    });
    merge(&mut json, backend_json(any.backend()));
    Ok(CommandOutput {
        json,
        csv: Some(to_csv(
            &["re", "im", "nearest_index", "distance", "distance_to_al"],
            &rows,
        )),
        exit: 0,
    })
}

pub struct SeriesRatioArgs {
    pub z0: Scalar,
    pub initial: Vec<Scalar>,
    pub terms: usize,
    pub acceleration: Acceleration,
    pub tol: f64,
    pub window: usize,
    pub match_tol: f64,
}

pub fn cmd_series_ratio(any: &AnyOperator, args: &SeriesRatioArgs) -> CmdResult {
    let (est, z0) = with_operator!(any, |op| {
        let z0 = <_ as Coeff>::from_scalar(&args.z0)?;
        let initial: Result<Vec<_>, _> = args
            .initial
            .iter()
            .map(|s| <_ as Coeff>::from_scalar(s))
            .collect();
        let sol: SeriesSolution<_> = solve_series(op, &z0, &initial?, args.terms)?;
        let sing = op.singular_points()?;
        let opts = RatioOptions {
            acceleration: args.acceleration,
            window: args.window,
            tol: args.tol,
            singular_points: sing.to_c64_points(),
            match_tol: args.match_tol,
        };
        Result::<_, Error>::Ok((ratio_limit(&sol, &opts)?, z0.to_scalar()))
    })?;
    let rows: Vec<Vec<String>> = est
        .history
        .iter()
        .map(|(n, (re, im))| vec![n.to_string(), fmt_f64(*re), fmt_f64(*im)])
        .collect();
    let exit = if est.converged { 0 } else { 4 };
    let mut json = json!({
        "command": "series-ratio",
        "z0": z0,
        "estimate": est,
    });
    merge(&mut json, backend_json(any.backend()));
    Ok(CommandOutput {
        json,
        csv: Some(to_csv(&["n", "ratio_re", "ratio_im"], &rows)),
        exit,
    })
}

pub fn cmd_logderiv(
    any: &AnyOperator,
    z: &Scalar,
    opts: &LogDerivOptions,
) -> CmdResult {
    let res = with_operator!(any, |op| {
        let zt = <_ as Coeff>::from_scalar(z)?;
        logderiv_limit(op, &zt, opts)
    })?;
    let rows: Vec<Vec<String>> = res
        .history
        .iter()
        .map(|(n, (re, im))| vec![n.to_string(), fmt_f64(*re), fmt_f64(*im)])
        .collect();
    let exit = if res.converged { 0 } else { 4 };
    let mut json = json!({
        "command": "logderiv",
        "z": z,
        "result": res,
    });
    merge(&mut json, backend_json(any.backend()));
    Ok(CommandOutput {
        json,
        csv: Some(to_csv(&["n", "value_re", "value_im"], &rows)),
        exit,
    })
}

pub struct CfArgs {
    pub z: Scalar,
    pub tol: f64,
    pub n_max: usize,
    pub depth: Option<usize>,
    pub tail: Scalar,
    pub emit_convergents: Option<usize>,
}

pub fn cmd_cf(any: &AnyOperator, args: &CfArgs) -> CmdResult {
    let (body, csv, exit) = with_operator!(any, |op| {
        let zt = <_ as Coeff>::from_scalar(&args.z)?;
        // refuse points on the bisector set up front: the limit theorems do
        // not apply there
        let sing = op.singular_points()?;
        if !region_guard(&sing, &args.z, 1e-12) {
            return Err(Failure {
                code: 3,
                kind: "precondition",
                message: format!(
                    "z = {} lies on the bisector set of the singularities; \
                     the fraction's limit statements do not apply",
                    args.z
                ),
            });
        }
        let mut csv = None;
        let value: Value;
        let mut exit = 0;
        if let Some(depth) = args.depth {
            let chain = Chain::new(op);
            let rec = chain.derivative_recurrence(&zt).map_err(Failure::from)?;
            let tail = <_ as Coeff>::from_scalar(&args.tail).map_err(Failure::from)?;
            let mv = monster_ratio_eval(&rec, depth, tail).map_err(Failure::from)?;
            value = json!({
                "mode": "depth_truncated",
                "depth": mv.depth,
                "recurrence_order": rec.order,
                "value": mv.value,
                "diagnostics": mv.diagnostics,
            });
        } else {
            let cf = operator_fraction(op, &zt).map_err(Failure::from)?;
            let ev = evaluate(&cf, args.tol, args.n_max).map_err(Failure::from)?;
            if !ev.converged {
                exit = 4;
            }
            if let Some(k) = args.emit_convergents {
                let pairs = cf.convergents(k).map_err(Failure::from)?;
                let rows: Vec<Vec<String>> = pairs
                    .iter()
                    .map(|p| {
                        let a = p.num.to_c64();
                        let b = p.den.to_c64();
                        let v = if b.norm() > 0.0 {
                            a / b
                        } else {
                            Complex64::new(f64::NAN, 0.0)
                        };
                        vec![
                            p.n.to_string(),
                            fmt_f64(a.re),
                            fmt_f64(a.im),
                            fmt_f64(b.re),
                            fmt_f64(b.im),
                            fmt_f64(v.re),
                            fmt_f64(v.im),
                        ]
                    })
                    .collect();
                csv = Some(to_csv(
                    &["n", "A_re", "A_im", "B_re", "B_im", "value_re", "value_im"],
                    &rows,
                ));
            }
            value = json!({
                "mode": "evaluate",
                "evaluation": ev,
            });
        }
        Result::<_, Failure>::Ok((value, csv, exit))
    })?;
    let mut json = json!({
        "command": "cf",
        "z": args.z,
    });
    merge(&mut json, body);
    merge(&mut json, backend_json(any.backend()));
    Ok(CommandOutput { json, csv, exit })
}

pub struct HypergeomArgs {
    pub a: Scalar,
    pub b: Scalar,
    pub c: Scalar,
    pub z: Scalar,
    pub cf_tol: f64,
    pub n_max: usize,
}

pub fn cmd_hypergeom_check(args: &HypergeomArgs, backend: Backend) -> CmdResult {
    fn run<T: Coeff>(args: &HypergeomArgs) -> Result<Value, Failure> {
        let a = T::from_scalar(&args.a).map_err(Failure::from)?;
        let b = T::from_scalar(&args.b).map_err(Failure::from)?;
        let c = T::from_scalar(&args.c).map_err(Failure::from)?;
        let z = T::from_scalar(&args.z).map_err(Failure::from)?;
        let params = HypergeomParams::new(a, b, c).map_err(Failure::from)?;
        let rep = region_dichotomy_check(&params, &z, args.cf_tol, args.n_max)
            .map_err(Failure::from)?;
        Ok(json!({
            "params": {"a": args.a, "b": args.b, "c": args.c},
            "z": args.z,
            "report": rep,
        }))
    }
    let body = match backend {
        Backend::Exact => run::<perron::GaussianRational>(args)?,
        Backend::Float { precision_bits: 53 } => run::<Complex64>(args)?,
        Backend::Float { .. } => run::<perron::BigComplex>(args)?,
    };
    let mut json = json!({"command": "hypergeom-check"});
    merge(&mut json, body);
    merge(&mut json, backend_json(backend));
    Ok(CommandOutput {
        json,
        csv: None,
        exit: 0,
    })
}

pub struct ChainVerifyArgs {
    pub z: Scalar,
    pub initial: Vec<Scalar>,
    pub n_max: usize,
}

pub fn cmd_chain_verify(any: &AnyOperator, args: &ChainVerifyArgs) -> CmdResult {
    let residuals = with_operator!(any, |op| {
        let z = <_ as Coeff>::from_scalar(&args.z)?;
        let initial: Result<Vec<_>, _> = args
            .initial
            .iter()
            .map(|s| <_ as Coeff>::from_scalar(s))
            .collect();
        let sol = solve_series(op, &z, &initial?, args.n_max + 2)?;
        let mut out = Vec::new();
        for n in op.order()..=args.n_max {
            let r = verify_chain(op, &sol, &z, n)?;
            out.push((n, r.to_scalar(), r.abs()));
        }
        Result::<_, Error>::Ok(out)
    })?;
    let rows: Vec<Vec<String>> = residuals
        .iter()
        .map(|(n, r, abs)| {
            let c = r.to_c64();
            vec![n.to_string(), fmt_f64(c.re), fmt_f64(c.im), fmt_f64(*abs)]
        })
        .collect();
    let table: Vec<Value> = residuals
        .iter()
        .map(|(n, r, abs)| json!({"n": n, "residual": r, "abs": abs}))
        .collect();
    let max_abs = residuals.iter().map(|(_, _, a)| *a).fold(0.0, f64::max);
    let mut json = json!({
        "command": "chain-verify",
        "z": args.z,
        "residuals": table,
        "max_abs_residual": max_abs,
    });
    merge(&mut json, backend_json(any.backend()));
    Ok(CommandOutput {
        json,
        csv: Some(to_csv(&["n", "residual_re", "residual_im", "abs"], &rows)),
        exit: 0,
    })
}

pub fn cmd_series_recurrence_info(any: &AnyOperator) -> CmdResult {
    // companion data exposed alongside the recurrence: used by `singular`
    // consumers that want the Taylor recurrence facts
    let body = with_operator!(any, |op| {
        let theta = op.to_theta_form()?;
        let rec = build_recurrence(&theta)?;
        let limits: Vec<Value> = rec
            .limits
            .iter()
            .map(|l| match l {
                Some(v) => json!(v.to_scalar()),
                None => Value::Null,
            })
            .collect();
        let charpoly = perron::series::characteristic_polynomial(&rec)
            .ok()
            .map(|p| p.to_scalars());
        let vs_q0 = perron::series::charpoly_vs_q0(op).ok();
        Result::<_, Error>::Ok(json!({
            "recurrence_order": rec.order,
            "blocked_indices": rec.blocked_indices,
            "limits": limits,
            "characteristic_polynomial": charpoly,
            "charpoly_vs_q0": vs_q0,
        }))
    })?;
    let mut json = json!({"command": "recurrence"});
    merge(&mut json, body);
    merge(&mut json, backend_json(any.backend()));
    Ok(CommandOutput {
        json,
        csv: None,
        exit: 0,
    })
}

fn merge(base: &mut Value, add: Value) {
    if let (Value::Object(b), Value::Object(a)) = (base, add) {
        for (k, v) in a {
            b.insert(k, v);
        }
    }
}
