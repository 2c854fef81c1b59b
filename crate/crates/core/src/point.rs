//! Fixed-capacity points of `ℝ^n` for `3 ≤ n ≤ 6`.
//!
//! All fields in this crate live in low dimension, so points are plain
//! stack arrays padded with zeros beyond the active dimension. Every
//! operation takes the active dimension `n` explicitly.

/// Largest supported space dimension.
pub const MAX_DIM: usize = 6;

/// A point of `ℝ^n`, padded with zeros above index `n-1`.
pub type Pt = [f64; MAX_DIM];

/// Zero point.
#[inline]
pub const fn origin() -> Pt {
    [0.0; MAX_DIM]
}

/// Builds a point from the first `slice.len()` coordinates.
#[inline]
pub fn pt(slice: &[f64]) -> Pt {
    let mut p = origin();
    p[..slice.len()].copy_from_slice(slice);
    p
}

#[inline]
pub fn dot(a: &Pt, b: &Pt, n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn norm2(a: &Pt, n: usize) -> f64 {
    dot(a, a, n)
}

#[inline]
pub fn norm(a: &Pt, n: usize) -> f64 {
    norm2(a, n).sqrt()
}

#[inline]
pub fn dist2(a: &Pt, b: &Pt, n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

#[inline]
pub fn sub(a: &Pt, b: &Pt, n: usize) -> Pt {
    let mut p = origin();
    for i in 0..n {
        p[i] = a[i] - b[i];
    }
    p
}

#[inline]
pub fn add(a: &Pt, b: &Pt, n: usize) -> Pt {
    let mut p = origin();
    for i in 0..n {
        p[i] = a[i] + b[i];
    }
    p
}

#[inline]
pub fn scale(a: &Pt, c: f64, n: usize) -> Pt {
    let mut p = origin();
    for i in 0..n {
        p[i] = c * a[i];
    }
    p
}

/// `a + c·b`.
#[inline]
pub fn axpy(a: &Pt, c: f64, b: &Pt, n: usize) -> Pt {
    let mut p = origin();
    for i in 0..n {
        p[i] = a[i] + c * b[i];
    }
    p
}

/// Kelvin image `y / |y|²`. Caller guarantees `y ≠ 0`.
#[inline]
pub fn kelvin_image(y: &Pt, n: usize) -> Pt {
    let r2 = norm2(y, n);
    scale(y, 1.0 / r2, n)
}

/// `x^(m/2)` for a non-negative integer `m` and `x > 0`.
///
/// The half-integer powers of this construction (`m = n-2`, `n`, …) are the
/// hot path of every field evaluation, so the square root route is taken
/// instead of `powf`.
#[inline]
pub fn half_pow(x: f64, m: u32) -> f64 {
    match m {
        0 => 1.0,
        1 => x.sqrt(),
        2 => x,
        3 => x * x.sqrt(),
        4 => x * x,
        5 => x * x * x.sqrt(),
        6 => x * x * x,
        _ => {
            let sq = x.sqrt();
            sq.powi(m as i32)
        }
    }
}

/// `|u|^(num/den)` with small positive integers `num`, `den`.
#[inline]
pub fn abs_pow_frac(u: f64, num: u32, den: u32) -> f64 {
    let a = u.abs();
    if num % den == 0 {
        return a.powi((num / den) as i32);
    }
    if den == 2 {
        return half_pow(a * a, num);
    }
    a.powf(num as f64 / den as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_pow_matches_powf() {
        for m in 0..9u32 {
            for &x in &[0.3, 1.0, 2.7, 145.2] {
                let got = half_pow(x, m);
                let want = (x as f64).powf(m as f64 / 2.0);
                assert!((got - want).abs() <= 1e-14 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn abs_pow_frac_matches_powf() {
        for &(num, den) in &[(4u32, 1u32), (4, 2), (4, 3), (7, 3), (5, 1)] {
            for &u in &[-2.3, -0.4, 0.9, 3.3] {
                let got = abs_pow_frac(u, num, den);
                let want = (u as f64).abs().powf(num as f64 / den as f64);
                assert!((got - want).abs() <= 1e-13 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn kelvin_image_is_involutive() {
        let y = pt(&[0.3, -1.2, 0.7]);
        let z = kelvin_image(&kelvin_image(&y, 3), 3);
        for i in 0..3 {
            assert!((z[i] - y[i]).abs() < 1e-15);
        }
    }
}
