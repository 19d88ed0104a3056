//! Least-absolute-deviation fitting of the peer curve families.
//!
//! The discretised L1 problem is a small linear program. For a model linear
//! in its p coefficients an optimum interpolates p of the eleven points, so
//! polynomials are fitted exactly by enumerating all p-point interpolants.
//! The exponential family is linear in (a, c) for fixed b: b is scanned on a
//! grid and refined by golden-section search, with (a, c) solved exactly at
//! every probe.

use super::peer::{l1_objective, PeerCurvePoints, PeerFamily, PeerLeadershipModel, N_BINS};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Search settings for the exponential rate `b`.
#[derive(Clone, Copy, Debug)]
pub struct ExpSearch {
    pub b_max: f64,
    pub grid_step: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ExpSearch {
    fn default() -> Self {
        ExpSearch {
            b_max: 20.0,
            grid_step: 0.01,
            max_iter: 200,
            tol: 1e-10,
        }
    }
}

pub fn fit_peer_function<T: Scalar>(
    points: &PeerCurvePoints<T>,
    family: PeerFamily,
) -> Result<PeerLeadershipModel<T>> {
    fit_peer_function_with(points, family, &ExpSearch::default())
}

pub fn fit_peer_function_with<T: Scalar>(
    points: &PeerCurvePoints<T>,
    family: PeerFamily,
    search: &ExpSearch,
) -> Result<PeerLeadershipModel<T>> {
    let omega = match family {
        PeerFamily::Exponential => fit_exponential(points, search)?,
        _ => {
            let p = family.n_coefficients();
            let rows: Vec<Vec<T>> = points
                .points()
                .map(|(x, _)| (0..p).map(|i| x.powi((p - 1 - i) as i32)).collect())
                .collect();
            l1_interpolant_fit(&rows, points.ys())
                .expect("distinct abscissae give a nonsingular Vandermonde")
                .0
        }
    };
    PeerLeadershipModel::new(family, omega)
}

/// Best interpolant over all p-subsets of the rows. Returns `None` if every
/// subset is singular.
fn l1_interpolant_fit<T: Scalar>(rows: &[Vec<T>], ys: &[T]) -> Option<(Vec<T>, T)> {
    let p = rows[0].len();
    let mut best: Option<(Vec<T>, T)> = None;
    for_each_combination(rows.len(), p, |idx| {
        let a: Vec<Vec<T>> = idx.iter().map(|&i| rows[i].clone()).collect();
        let b: Vec<T> = idx.iter().map(|&i| ys[i]).collect();
        let Some(w) = solve(a, b) else { return };
        let obj: T = rows
            .iter()
            .zip(ys)
            .map(|(r, &y)| (r.iter().zip(&w).map(|(&ri, &wi)| ri * wi).sum::<T>() - y).abs())
            .sum();
        if obj.is_finite() && best.as_ref().is_none_or(|(_, o)| obj < *o) {
            best = Some((w, obj));
        }
    });
    best
}

fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Gaussian elimination with partial pivoting.
fn solve<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    let eps = T::lit(1e-12);
    for col in 0..n {
        let piv =
            (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < eps {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                let v = a[col][c];
                a[r][c] = a[r][c] - f * v;
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let s: T = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn median<T: Scalar>(ys: &[T]) -> T {
    let mut v = ys.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::lit(2.0)
    }
}

/// Exact (a, c) for a fixed rate b, with its objective.
fn exp_inner<T: Scalar>(points: &PeerCurvePoints<T>, b: T) -> (Vec<T>, T) {
    let constant = |ys: &[T]| {
        let w = vec![T::zero(), b, median(ys)];
        let o = l1_objective(PeerFamily::Exponential, &w, points);
        (w, o)
    };
    if b.abs() < T::lit(1e-9) {
        return constant(points.ys());
    }
    let rows: Vec<Vec<T>> = points
        .points()
        .map(|(x, _)| vec![(-b * x).exp(), T::one()])
        .collect();
    match l1_interpolant_fit(&rows, points.ys()) {
        Some((w, o)) => (vec![w[0], b, w[1]], o),
        None => constant(points.ys()),
    }
}

fn fit_exponential<T: Scalar>(points: &PeerCurvePoints<T>, s: &ExpSearch) -> Result<Vec<T>> {
    debug_assert_eq!(points.ys().len(), N_BINS);
    let steps = (s.b_max / s.grid_step).round() as i64;
    let mut best_b = T::zero();
    let (mut best_w, mut best_o) = exp_inner(points, T::zero());
    for i in -steps..=steps {
        let b = T::lit(i as f64 * s.grid_step);
        let (w, o) = exp_inner(points, b);
        if o < best_o {
            best_b = b;
            best_w = w;
            best_o = o;
        }
    }

    // Golden-section refinement inside the neighbouring grid cells.
    let phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let step = T::lit(s.grid_step);
    let (mut lo, mut hi) = (best_b - step, best_b + step);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = exp_inner(points, x1);
    let mut f2 = exp_inner(points, x2);
    let mut iters = 0;
    while hi - lo > T::lit(s.tol) {
        if iters == s.max_iter {
            let (w, o) = if f1.1 < best_o { f1 } else { (best_w, best_o) };
            return Err(Error::FitNotConverged {
                family: PeerFamily::Exponential.name().into(),
                iterations: iters,
                objective: o.as_f64(),
                omega: w.iter().map(|v| v.as_f64()).collect(),
            });
        }
        iters += 1;
        if f1.1 <= f2.1 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = exp_inner(points, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = exp_inner(points, x2);
        }
    }
    for cand in [f1, f2] {
        if cand.1 < best_o {
            best_w = cand.0;
            best_o = cand.1;
        }
    }
    Ok(best_w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pts(f: impl Fn(f64) -> f64) -> PeerCurvePoints<f64> {
        PeerCurvePoints::from_values((0..N_BINS).map(|k| f(k as f64 / 10.0)).collect()).unwrap()
    }

    /// U-shaped share of achievements by peer ratio: most mass near zero,
    /// an uptick when every peer already holds the badge.
    pub(crate) fn u_curve() -> PeerCurvePoints<f64> {
        PeerCurvePoints::from_values(vec![
            0.45, 0.12, 0.07, 0.05, 0.04, 0.03, 0.03, 0.03, 0.04, 0.05, 0.09,
        ])
        .unwrap()
    }

    #[test]
    fn exact_line() {
        let m = fit_peer_function(&pts(|x| 0.5 * x + 0.1), PeerFamily::Linear).unwrap();
        assert_abs_diff_eq!(m.omega[0], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(m.omega[1], 0.1, epsilon = 1e-9);
    }

    #[test]
    fn exact_square() {
        let m = fit_peer_function(&pts(|x| x * x), PeerFamily::Quadratic).unwrap();
        for (w, e) in m.omega.iter().zip([1.0, 0.0, 0.0]) {
            assert_abs_diff_eq!(*w, e, epsilon = 1e-9);
        }
    }

    #[test]
    fn exact_cubic_and_exponential() {
        let m = fit_peer_function(&pts(|x| 2.0 * x.powi(3) - x + 0.3), PeerFamily::Cubic).unwrap();
        assert_abs_diff_eq!(
            m.objective(&pts(|x| 2.0 * x.powi(3) - x + 0.3)),
            0.0,
            epsilon = 1e-9
        );
        let target = pts(|x| 0.4 * (-3.0 * x).exp() + 0.05);
        let m = fit_peer_function(&target, PeerFamily::Exponential).unwrap();
        assert!(m.objective(&target) < 1e-8, "{:?}", m);
        assert_abs_diff_eq!(m.omega[1], 3.0, epsilon = 1e-5);
    }

    #[test]
    fn u_curve_prefers_quadratic() {
        let p = u_curve();
        let lin = fit_peer_function(&p, PeerFamily::Linear).unwrap();
        let quad = fit_peer_function(&p, PeerFamily::Quadratic).unwrap();
        assert!(quad.objective(&p) <= lin.objective(&p));
        assert!(quad.value(0.0) > quad.value(0.5));
    }

    #[test]
    fn iteration_cap_reports_best_so_far() {
        let s = ExpSearch {
            max_iter: 1,
            ..ExpSearch::default()
        };
        match fit_peer_function_with(&u_curve(), PeerFamily::Exponential, &s) {
            Err(Error::FitNotConverged {
                omega, objective, ..
            }) => {
                assert_eq!(omega.len(), 3);
                assert!(objective.is_finite());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn works_in_f32() {
        let p = PeerCurvePoints::<f32>::from_values(
            (0..N_BINS).map(|k| 0.2 + 0.1 * k as f32).collect(),
        )
        .unwrap();
        let m = fit_peer_function(&p, PeerFamily::Linear).unwrap();
        assert!((m.omega[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn combinations_count() {
        let mut n = 0;
        for_each_combination(11, 4, |_| n += 1);
        assert_eq!(n, 330);
    }
}
