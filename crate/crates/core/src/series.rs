//! Truncated power series in a local coordinate `t`, stored lowest order first.
//!
//! Derivative data `f^{(k)}(z)/k!` is exactly a truncated Taylor series, so every
//! change of variable or change of value on interpolation data reduces to the
//! operations here.

use num_complex::Complex64;

pub type Series = Vec<Complex64>;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Pads or truncates to `len` terms.
pub fn resize(a: &[Complex64], len: usize) -> Series {
    let mut out = a.to_vec();
    out.resize(len, zero());
    out
}

pub fn mul(a: &[Complex64], b: &[Complex64], len: usize) -> Series {
    let mut out = vec![zero(); len];
    for (i, &ai) in a.iter().enumerate().take(len) {
        if ai == zero() {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(len - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Reciprocal series; `None` when the constant term vanishes.
pub fn recip(a: &[Complex64], len: usize) -> Option<Series> {
    let a0 = *a.first()?;
    if a0.norm() == 0.0 {
        return None;
    }
    let mut out = vec![zero(); len];
    if len == 0 {
        return Some(out);
    }
    out[0] = a0.inv();
    for k in 1..len {
        let mut acc = zero();
        for j in 1..=k.min(a.len().saturating_sub(1)) {
            acc += a[j] * out[k - j];
        }
        out[k] = -acc / a0;
    }
    Some(out)
}

pub fn div(a: &[Complex64], b: &[Complex64], len: usize) -> Option<Series> {
    Some(mul(a, &recip(b, len)?, len))
}

/// `outer(inner(t))` for an inner series with vanishing constant term.
pub fn compose(outer: &[Complex64], inner: &[Complex64], len: usize) -> Series {
    debug_assert!(inner.first().map_or(true, |c| c.norm() == 0.0));
    let mut out = vec![zero(); len];
    let mut power = resize(&[Complex64::new(1.0, 0.0)], len);
    for (k, &c) in outer.iter().enumerate().take(len) {
        if k > 0 {
            power = mul(&power, inner, len);
        }
        for (o, p) in out.iter_mut().zip(&power) {
            *o += c * p;
        }
    }
    out
}

/// Compositional inverse of a series with `s(0) = 0`, `s'(0) != 0`.
pub fn reversion(s: &[Complex64], len: usize) -> Option<Series> {
    let s1 = *s.get(1)?;
    if s1.norm() == 0.0 {
        return None;
    }
    // Newton-free fixed point: r = (t - (s(r) - s1 r)) / s1, one order per pass.
    let mut r = vec![zero(); len];
    if len > 1 {
        r[1] = s1.inv();
    }
    for _ in 2..len {
        let sr = compose(s, &r, len);
        for k in 2..len {
            r[k] -= sr[k] / s1;
        }
    }
    Some(r)
}
