//! Internal dense linear algebra helpers on top of the LAPACK bindings.

use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::{JobSvd, LeastSquaresSvd, SVDDC, QR};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest absolute entry; zero for empty arrays.
pub fn max_abs<S: Real>(a: &Array2<S>) -> S {
    a.iter().fold(S::zero(), |m, &x| {
        let ax = x.abs();
        if ax > m {
            ax
        } else {
            m
        }
    })
}

pub fn max_abs_vec<S: Real>(v: &Array1<S>) -> S {
    v.iter().fold(S::zero(), |m, &x| {
        let ax = x.abs();
        if ax > m {
            ax
        } else {
            m
        }
    })
}

pub fn norm2<S: Real>(v: &Array1<S>) -> S {
    v.iter().map(|&x| x * x).sum::<S>().sqrt()
}

/// Orthonormal basis of the right null space of `a` (n columns in, n×k out).
///
/// Singular values at or below `rtol · σ_max` count as zero. A matrix with no
/// rows (or numerically zero) has the full space as null space.
pub fn null_space<S: Real>(a: &Array2<S>, rtol: S) -> Result<Array2<S>> {
    let (m, n) = a.dim();
    if m == 0 || n == 0 {
        return Ok(Array2::eye(n));
    }
    let (_, s, vt) = a.svddc(JobSvd::All)?;
    let vt = vt.ok_or_else(|| Error::Linalg("svd did not return v^t".into()))?;
    let smax = if s.is_empty() { S::zero() } else { s[0] };
    if smax == S::zero() {
        return Ok(Array2::eye(n));
    }
    let rank = s.iter().take_while(|&&x| x > rtol * smax).count();
    Ok(vt.slice(ndarray::s![rank.., ..]).t().to_owned())
}

/// Orthonormal basis of the column space of `a` (n×k out, k = rank).
pub fn range_space<S: Real>(a: &Array2<S>, rtol: S) -> Result<Array2<S>> {
    let (m, n) = a.dim();
    if m == 0 || n == 0 {
        return Ok(Array2::zeros((m, 0)));
    }
    let (u, s, _) = a.svddc(JobSvd::Some)?;
    let u = u.ok_or_else(|| Error::Linalg("svd did not return u".into()))?;
    let smax = if s.is_empty() { S::zero() } else { s[0] };
    if smax == S::zero() {
        return Ok(Array2::zeros((m, 0)));
    }
    let rank = s.iter().take_while(|&&x| x > rtol * smax).count();
    Ok(u.slice(ndarray::s![.., ..rank]).to_owned())
}

/// Numerical rank under the same threshold rule as [`null_space`].
pub fn rank<S: Real>(a: &Array2<S>, rtol: S) -> Result<usize> {
    let (m, n) = a.dim();
    if m == 0 || n == 0 {
        return Ok(0);
    }
    let (_, s, _) = a.svddc(JobSvd::None)?;
    let smax = if s.is_empty() { S::zero() } else { s[0] };
    if smax == S::zero() {
        return Ok(0);
    }
    Ok(s.iter().take_while(|&&x| x > rtol * smax).count())
}

/// Singular values, descending.
pub fn singular_values<S: Real>(a: &Array2<S>) -> Result<Array1<S>> {
    let (_, s, _) = a.svddc(JobSvd::None)?;
    Ok(s)
}

/// Exact identity test (used to skip products against trivial bases).
pub fn is_identity<S: Real>(a: &Array2<S>) -> bool {
    let (m, n) = a.dim();
    if m != n {
        return false;
    }
    for ((i, j), &v) in a.indexed_iter() {
        let want = if i == j { S::one() } else { S::zero() };
        if v != want {
            return false;
        }
    }
    true
}

/// Re-orthonormalize columns.
///
/// The input must have full column rank (products of orthonormal bases do);
/// only roundoff is being cleaned up here. Near-orthonormal inputs take one
/// Newton-Schulz step, B ← B(3I − BᵀB)/2, which squares the deviation;
/// anything worse falls back to a thin QR.
pub fn orthonormalize<S: Real>(a: &Array2<S>) -> Result<Array2<S>> {
    if a.ncols() == 0 {
        return Ok(a.clone());
    }
    let gram = a.t().dot(a);
    let dev = max_abs(&(&gram - &Array2::eye(a.ncols())));
    if dev < S::of(64.0) * S::eps() {
        return Ok(a.clone());
    }
    if dev < S::tol(1e-8, 1e6) {
        let correction = Array2::eye(a.ncols()) * S::of(3.0) - &gram;
        return Ok(a.dot(&correction) * S::of(0.5));
    }
    let (q, _r) = a.qr()?;
    Ok(q)
}

/// Minimum-norm least squares solution of `a x = b` together with the
/// residual max-norm.
pub fn lstsq<S: Real>(a: &Array2<S>, b: &Array1<S>) -> Result<(Array1<S>, S)> {
    let (m, n) = a.dim();
    if m == 0 {
        return Ok((Array1::zeros(n), S::zero()));
    }
    let sol = a.least_squares(b)?.solution;
    let resid = {
        let r = a.dot(&sol) - b;
        max_abs_vec(&r)
    };
    Ok((sol, resid))
}

/// One-SVD solve of the affine system `a x = b`: returns the minimum-norm
/// particular solution, an orthonormal null-space basis of `a`, and the
/// residual max-norm of the particular solution.
pub fn affine_kernel_solve<S: Real>(
    a: &Array2<S>,
    b: &Array1<S>,
    rtol: S,
) -> Result<(Array1<S>, Array2<S>, S)> {
    let (m, n) = a.dim();
    if m == 0 {
        return Ok((Array1::zeros(n), Array2::eye(n), S::zero()));
    }
    // Full factorization: the null space needs all n right singular vectors.
    let (u, s, vt) = a.svddc(JobSvd::All)?;
    let u = u.ok_or_else(|| Error::Linalg("svd did not return u".into()))?;
    let vt = vt.ok_or_else(|| Error::Linalg("svd did not return v^t".into()))?;
    let smax = if s.is_empty() { S::zero() } else { s[0] };
    let rank = if smax == S::zero() {
        0
    } else {
        s.iter().take_while(|&&x| x > rtol * smax).count()
    };
    // x = V Σ⁺ Uᵀ b over the numerical range.
    let utb = u.t().dot(b);
    let mut coeffs = Array1::zeros(rank);
    for i in 0..rank {
        coeffs[i] = utb[i] / s[i];
    }
    let x = vt.slice(ndarray::s![..rank, ..]).t().dot(&coeffs);
    let null = vt.slice(ndarray::s![rank.., ..]).t().to_owned();
    let resid = max_abs_vec(&(a.dot(&x) - b));
    Ok((x, null, resid))
}

/// Moore-Penrose pseudo-inverse with relative rank cutoff.
pub fn pinv<S: Real>(a: &Array2<S>, rtol: S) -> Result<Array2<S>> {
    let (m, n) = a.dim();
    if m == 0 || n == 0 {
        return Ok(Array2::zeros((n, m)));
    }
    let (u, s, vt) = a.svddc(JobSvd::Some)?;
    let u = u.ok_or_else(|| Error::Linalg("svd did not return u".into()))?;
    let vt = vt.ok_or_else(|| Error::Linalg("svd did not return v^t".into()))?;
    let smax = if s.is_empty() { S::zero() } else { s[0] };
    let mut v_scaled = vt.t().to_owned();
    for (j, mut col) in v_scaled.axis_iter_mut(Axis(1)).enumerate() {
        let inv = if smax > S::zero() && s[j] > rtol * smax {
            S::one() / s[j]
        } else {
            S::zero()
        };
        col.mapv_inplace(|x| x * inv);
    }
    Ok(v_scaled.dot(&u.t()))
}
