//! Nearest-singularity geometry.
//!
//! The singular set S partitions the plane into open cells U_i of points
//! strictly nearest one singularity; the cell boundaries form the union A_L
//! of perpendicular bisectors of singularity pairs. Every limit theorem in
//! this crate requires its evaluation point to stay off A_L, so the guard
//! here is the shared precondition check.
//!
//! The cell decomposition is implemented by pairwise distance comparison
//! rather than an explicit diagram: singularity counts are small, and every
//! consumer only needs the nearest-site and on-bisector predicates. With
//! exact sites and an exact query point the comparisons run on exact squared
//! distances, so ties are decided exactly; reported distances are doubles.

use num_complex::Complex64;
use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::SingularSet;
use crate::scalar::{ratio_to_f64, Coeff, GaussianRational, Scalar};

/// Default tie tolerance: below this the limit theorems are numerically
/// meaningless anyway.
pub const DEFAULT_TIE_TOL: f64 = 1e-12;

/// Perpendicular bisector of one pair of sites, in the middle of the segment
/// connecting them. The direction has unit modulus.
#[derive(Clone, Debug, Serialize)]
pub struct BisectorLine {
    pub midpoint: Scalar,
    pub direction: (f64, f64),
    pub site_pair: (usize, usize),
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionQueryResult {
    /// Index into the singular set of the strictly nearest site; `None` on a
    /// tie.
    pub nearest_index: Option<usize>,
    /// Distance to the nearest site.
    pub distance: f64,
    pub is_tie: bool,
    /// Distance to the bisector set; `None` means +infinity (fewer than two
    /// sites).
    pub distance_to_al: Option<f64>,
}

/// One bisector line per unordered pair of distinct sites: r(r-1)/2 lines.
pub fn bisector_lines(s: &SingularSet) -> Vec<BisectorLine> {
    let pts = s.to_c64_points();
    let mut out = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let midpoint = exact_midpoint(&s.points[i], &s.points[j]);
            let seg = pts[j] - pts[i];
            let dir = Complex64::new(0.0, 1.0) * seg / seg.norm();
            out.push(BisectorLine {
                midpoint,
                direction: (dir.re, dir.im),
                site_pair: (i, j),
            });
        }
    }
    out
}

fn exact_midpoint(a: &Scalar, b: &Scalar) -> Scalar {
    match (a, b) {
        (Scalar::Exact(x), Scalar::Exact(y)) => {
            let two = GaussianRational::from_i64(2);
            Scalar::Exact(x.add(y).div(&two))
        }
        _ => {
            let m = (a.to_c64() + b.to_c64()) / 2.0;
            Scalar::F64(m)
        }
    }
}

/// Strict nearest-site classification of z, plus the distance to the
/// bisector set. Errors when z coincides with a site within `tol`.
pub fn classify_point(s: &SingularSet, z: &Scalar, tol: f64) -> Result<RegionQueryResult> {
    if s.is_empty() {
        return Ok(RegionQueryResult {
            nearest_index: None,
            distance: f64::INFINITY,
            is_tie: false,
            distance_to_al: None,
        });
    }
    let exact_inputs = matches!(z, Scalar::Exact(_)) && s.all_exact;
    if exact_inputs {
        classify_exact(s, z, tol)
    } else {
        classify_f64(s, z, tol)
    }
}

fn classify_exact(s: &SingularSet, z: &Scalar, tol: f64) -> Result<RegionQueryResult> {
    let zg = match z {
        Scalar::Exact(g) => g,
        _ => unreachable!(),
    };
    let sites: Vec<&GaussianRational> = s
        .points
        .iter()
        .map(|p| match p {
            Scalar::Exact(g) => g,
            _ => unreachable!(),
        })
        .collect();
    let d2: Vec<BigRational> = sites.iter().map(|t| zg.sub(t).norm_sqr()).collect();
    let mut order: Vec<usize> = (0..d2.len()).collect();
    order.sort_by(|&a, &b| d2[a].cmp(&d2[b]));
    let best = order[0];
    let dist = ratio_to_f64(&d2[best]).sqrt();
    if dist <= tol {
        return Err(Error::Precondition(format!(
            "query point {z} coincides with singularity index {best} within tolerance {tol}"
        )));
    }
    let is_tie = order.len() > 1 && d2[order[1]] == d2[best];
    let distance_to_al = bisector_distance_exact(&sites, zg, &d2);
    Ok(RegionQueryResult {
        nearest_index: if is_tie { None } else { Some(best) },
        distance: dist,
        is_tie,
        distance_to_al,
    })
}

fn bisector_distance_exact(
    sites: &[&GaussianRational],
    _z: &GaussianRational,
    d2: &[BigRational],
) -> Option<f64> {
    if sites.len() < 2 {
        return None;
    }
    let mut best: Option<f64> = None;
    for i in 0..sites.len() {
        for j in i + 1..sites.len() {
            // distance to the bisector of (i, j):
            // | |z - t_i|^2 - |z - t_j|^2 | / (2 |t_i - t_j|)
            let num = ratio_to_f64(&(&d2[i] - &d2[j])).abs();
            let sep = ratio_to_f64(&sites[i].sub(sites[j]).norm_sqr()).sqrt();
            let d = num / (2.0 * sep);
            best = Some(best.map_or(d, |b: f64| b.min(d)));
        }
    }
    best
}

fn classify_f64(s: &SingularSet, z: &Scalar, tol: f64) -> Result<RegionQueryResult> {
    let zc = z.to_c64();
    let sites = s.to_c64_points();
    let d: Vec<f64> = sites.iter().map(|t| (zc - t).norm()).collect();
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let best = order[0];
    if d[best] <= tol {
        return Err(Error::Precondition(format!(
            "query point {z} coincides with singularity index {best} within tolerance {tol}"
        )));
    }
    let is_tie = order.len() > 1 && (d[order[1]] - d[best]).abs() <= tol;
    let mut dal: Option<f64> = None;
    for i in 0..sites.len() {
        for j in i + 1..sites.len() {
            let num = (d[i] * d[i] - d[j] * d[j]).abs();
            let sep = (sites[i] - sites[j]).norm();
            let v = num / (2.0 * sep);
            dal = Some(dal.map_or(v, |b: f64| b.min(v)));
        }
    }
    Ok(RegionQueryResult {
        nearest_index: if is_tie { None } else { Some(best) },
        distance: d[best],
        is_tie,
        distance_to_al: dal,
    })
}

/// True iff z keeps a distance greater than `tol` from every bisector line;
/// the shared precondition of the ratio and chain limit theorems. With fewer
/// than two sites the bisector set is empty and the guard always passes.
pub fn region_guard(s: &SingularSet, z: &Scalar, tol: f64) -> bool {
    if s.len() < 2 {
        return true;
    }
    match classify_point(s, z, 0.0) {
        Ok(r) => r.distance_to_al.map_or(true, |d| d > tol),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Coeff;

    fn set(points: Vec<Scalar>) -> SingularSet {
        SingularSet::from_scalars(points, 1e-9)
    }

    fn zero_one() -> SingularSet {
        set(vec![
            Scalar::exact_from_ratio(0, 1),
            Scalar::exact_from_ratio(1, 1),
        ])
    }

    #[test]
    fn bisector_of_zero_one_is_re_half() {
        let lines = bisector_lines(&zero_one());
        assert_eq!(lines.len(), 1);
        let l = &lines[0];
        assert_eq!(l.midpoint.to_c64().re, 0.5);
        assert_eq!(l.midpoint.to_c64().im, 0.0);
        // direction is vertical, unit modulus
        assert!(l.direction.0.abs() < 1e-15);
        assert!((l.direction.1.abs() - 1.0).abs() < 1e-15);
        assert_eq!(l.site_pair, (0, 1));
    }

    #[test]
    fn line_counts() {
        assert!(bisector_lines(&set(vec![Scalar::exact_from_ratio(2, 1)])).is_empty());
        let three = set(vec![
            Scalar::exact_from_ratio(0, 1),
            Scalar::exact_from_ratio(1, 1),
            Scalar::Exact(GaussianRational::from_i64s(0, 1)),
        ]);
        assert_eq!(bisector_lines(&three).len(), 3);
    }

    #[test]
    fn classify_basic_points() {
        let s = zero_one();
        let r = classify_point(&s, &Scalar::exact_from_ratio(1, 5), 1e-12).unwrap();
        assert_eq!(r.nearest_index, Some(0));
        assert!(!r.is_tie);
        assert!((r.distance - 0.2).abs() < 1e-15);
        assert!((r.distance_to_al.unwrap() - 0.3).abs() < 1e-15);

        let r = classify_point(&s, &Scalar::exact_from_ratio(4, 5), 1e-12).unwrap();
        assert_eq!(r.nearest_index, Some(1));

        // on the bisector, far up the imaginary axis: exact tie
        let z = Scalar::Exact(GaussianRational::new(
            BigRational::new(1.into(), 2.into()),
            BigRational::from_integer(3.into()),
        ));
        let r = classify_point(&s, &z, 1e-12).unwrap();
        assert!(r.is_tie);
        assert_eq!(r.nearest_index, None);
        assert_eq!(r.distance_to_al, Some(0.0));
    }

    #[test]
    fn classify_rejects_site_collision() {
        let s = zero_one();
        assert!(classify_point(&s, &Scalar::exact_from_ratio(0, 1), 1e-12).is_err());
    }

    #[test]
    fn guard_logic() {
        let s = zero_one();
        assert!(!region_guard(&s, &Scalar::exact_from_ratio(1, 2), 1e-12));
        assert!(region_guard(&s, &Scalar::exact_from_ratio(1, 5), 0.1));
        // empty and singleton sets always pass
        assert!(region_guard(&set(vec![]), &Scalar::f64(3.0, 4.0), 1e-12));
        assert!(region_guard(
            &set(vec![Scalar::exact_from_ratio(0, 1)]),
            &Scalar::f64(3.0, 4.0),
            1e-12
        ));
    }

    #[test]
    fn float_path_matches_exact_path() {
        let s_exact = zero_one();
        let s_float = set(vec![Scalar::f64(0.0, 0.0), Scalar::f64(1.0, 0.0)]);
        let ze = Scalar::exact_from_ratio(3, 10);
        let zf = Scalar::f64(0.3, 0.0);
        let re = classify_point(&s_exact, &ze, 1e-12).unwrap();
        let rf = classify_point(&s_float, &zf, 1e-12).unwrap();
        assert_eq!(re.nearest_index, rf.nearest_index);
        assert!((re.distance - rf.distance).abs() < 1e-15);
        assert!((re.distance_to_al.unwrap() - rf.distance_to_al.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn translation_equivariance_bit_exact() {
        let c = GaussianRational::from_ratio(7, 11);
        let t0 = GaussianRational::from_i64(0);
        let t1 = GaussianRational::new(
            BigRational::new(1.into(), 3.into()),
            BigRational::new((-2).into(), 5.into()),
        );
        let z = GaussianRational::new(
            BigRational::new(1.into(), 7.into()),
            BigRational::new(1.into(), 9.into()),
        );
        let s = set(vec![Scalar::Exact(t0.clone()), Scalar::Exact(t1.clone())]);
        let st = set(vec![
            Scalar::Exact(t0.add(&c)),
            Scalar::Exact(t1.add(&c)),
        ]);
        let r1 = classify_point(&s, &Scalar::Exact(z.clone()), 1e-12).unwrap();
        let r2 = classify_point(&st, &Scalar::Exact(z.add(&c)), 1e-12).unwrap();
        assert_eq!(r1.nearest_index, r2.nearest_index);
        assert_eq!(r1.distance, r2.distance);
        assert_eq!(r1.distance_to_al, r2.distance_to_al);
    }
}
