//! First-order Bessel ratio series used by the triangular kernels.
//!
//! The kernels need I1(sqrt(s))/sqrt(s) and J1(sqrt(s))/sqrt(s) where
//! s = (a+c)(x^2 - y^2). Both are evaluated as power series in s directly,
//! so the value stays real for negative s (no square root of a negative
//! number is ever formed): `i1_ratio(-s) == j1_ratio(s)`.

use crate::num::{r64, rus, Real};

const MAX_TERMS: usize = 40;

/// I1(sqrt(s))/sqrt(s) = Σ_{m≥0} (s/4)^m / (2 m! (m+1)!), entire in s.
///
/// Terms are accumulated until the next term falls below 1e-15 of the
/// running sum or 40 terms, whichever comes first.
pub fn i1_ratio<T: Real>(s: T) -> T {
    let quarter = s / r64(4.0);
    let mut term = r64::<T>(0.5);
    let mut sum = term;
    for m in 0..MAX_TERMS {
        term = term * quarter / (rus::<T>(m + 1) * rus::<T>(m + 2));
        sum += term;
        if term.abs() < r64::<T>(1e-15) * sum.abs().max(T::one()) {
            break;
        }
    }
    sum
}

/// d/ds of `i1_ratio`: (1/8) Σ_{j≥0} (s/4)^j / (j! (j+2)!).
pub fn i1_ratio_deriv<T: Real>(s: T) -> T {
    let quarter = s / r64(4.0);
    let mut term = r64::<T>(0.0625); // j = 0: 1/(8 * 0! * 2!)
    let mut sum = term;
    for j in 0..MAX_TERMS {
        term = term * quarter / (rus::<T>(j + 1) * rus::<T>(j + 3));
        sum += term;
        if term.abs() < r64::<T>(1e-15) * sum.abs().max(T::one()) {
            break;
        }
    }
    sum
}

/// J1(sqrt(s))/sqrt(s), the alternating counterpart.
#[inline]
pub fn j1_ratio<T: Real>(s: T) -> T {
    i1_ratio(-s)
}

/// d/ds of `j1_ratio`.
#[inline]
pub fn j1_ratio_deriv<T: Real>(s: T) -> T {
    -i1_ratio_deriv(-s)
}
