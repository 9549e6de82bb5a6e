//! Small numeric helpers shared across modules.

use nalgebra::{DMatrix, DVector};

use crate::model::Temperature;

/// Argument beyond which coth(x) is indistinguishable from 1 in f64.
/// coth(40) - 1 ≈ 3.6e-35, far below machine epsilon relative to 1.
pub(crate) const COTH_CLAMP_ARG: f64 = 40.0;

/// Thermal weight coth(ω / 2kT) of a bath mode, with the zero-temperature
/// limit handled exactly and the large-argument regime clamped to 1 so that
/// tanh underflow can never contaminate the result.
pub(crate) fn coth_weight(omega: f64, temperature: Temperature) -> f64 {
    if temperature.is_zero() {
        return 1.0;
    }
    let x = omega / (2.0 * temperature.kt);
    if x > COTH_CLAMP_ARG {
        1.0
    } else {
        1.0 / x.tanh()
    }
}

/// 1 - cos(x), computed as 2·sin²(x/2).
///
/// The direct difference loses all significance near x = 2πk; the half-angle
/// form keeps full relative accuracy there, which the recurrence-residual
/// checks rely on. Exact at x = 0.
pub(crate) fn one_minus_cos(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    2.0 * s * s
}

/// ln(sinh(x) / x) for x ≥ 0 without overflow or cancellation.
///
/// * tiny x: series x²/6 - x⁴/180 (next term x⁶/2835 is below f64 noise
///   for x < 1e-2);
/// * moderate x: direct evaluation;
/// * large x: sinh(x) ≈ eˣ/2, so ln(sinh x / x) = x - ln(2x) + ln(1 - e⁻²ˣ),
///   which stays finite long after sinh(x) overflows.
pub(crate) fn ln_sinhc(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        0.0
    } else if x < 1e-2 {
        let x2 = x * x;
        x2 / 6.0 - x2 * x2 / 180.0
    } else if x <= 30.0 {
        (x.sinh() / x).ln()
    } else {
        x - (2.0 * x).ln() + (-(-2.0 * x).exp()).ln_1p()
    }
}

/// Eigendecomposition of a real symmetric matrix by cyclic Jacobi sweeps.
///
/// Returns `(eigenvalues, eigenvectors)` with `a = V · diag(λ) · Vᵀ`,
/// eigenvalues ascending, eigenvector k in column k. Jacobi is slower than
/// tridiagonal QL but converges unconditionally and keeps V orthogonal to
/// machine precision regardless of spectrum clustering — callers re-certify
/// the factorization, so reliability beats speed here.
pub(crate) fn jacobi_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    assert_eq!(a.nrows(), a.ncols(), "matrix must be square");
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let target = f64::EPSILON * a.norm();

    if target > 0.0 {
        // rotating away anything below this can no longer affect convergence
        let skip = target / (2.0 * n as f64);
        for _sweep in 0..50 {
            let off: f64 = (0..n)
                .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
                .map(|(p, q)| 2.0 * m[(p, q)] * m[(p, q)])
                .sum::<f64>()
                .sqrt();
            if off <= target {
                break;
            }
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    let apq = m[(p, q)];
                    if apq.abs() <= skip {
                        continue;
                    }
                    // symmetric Schur rotation annihilating (p, q)
                    let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                    let t = {
                        let s = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                        if theta < 0.0 {
                            -s
                        } else {
                            s
                        }
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let app = m[(p, p)];
                    let aqq = m[(q, q)];
                    m[(p, p)] = app - t * apq;
                    m[(q, q)] = aqq + t * apq;
                    m[(p, q)] = 0.0;
                    m[(q, p)] = 0.0;
                    for i in 0..n {
                        if i != p && i != q {
                            let aip = m[(i, p)];
                            let aiq = m[(i, q)];
                            m[(i, p)] = c * aip - s * aiq;
                            m[(p, i)] = m[(i, p)];
                            m[(i, q)] = s * aip + c * aiq;
                            m[(q, i)] = m[(i, q)];
                        }
                    }
                    for i in 0..n {
                        let vip = v[(i, p)];
                        let viq = v[(i, q)];
                        v[(i, p)] = c * vip - s * viq;
                        v[(i, q)] = s * vip + c * viq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let eigenvalues = DVector::from_fn(n, |k, _| m[(order[k], order[k])]);
    let mut eigenvectors = DMatrix::<f64>::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        eigenvectors.column_mut(k).copy_from(&v.column(src));
    }
    (eigenvalues, eigenvectors)
}

/// Compensated (Kahan) summation; the order of `terms` is the order summed.
pub(crate) fn kahan_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in terms {
        let y = x - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}
