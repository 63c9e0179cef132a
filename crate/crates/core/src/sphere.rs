//! Points of the extended complex plane and fractional-linear maps between them.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::series::{self, Series};

const POLE_TOL: f64 = 1e-12;

/// A point of the Riemann sphere. The point at infinity is a tag, never a large float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    Infinity,
    Finite(Complex64),
}

impl Point {
    pub fn real(x: f64) -> Self {
        Point::Finite(Complex64::new(x, 0.0))
    }

    pub fn finite(self) -> Option<Complex64> {
        match self {
            Point::Finite(z) => Some(z),
            Point::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Point::Infinity)
    }

    pub fn conj(self) -> Self {
        match self {
            Point::Finite(z) => Point::Finite(z.conj()),
            Point::Infinity => Point::Infinity,
        }
    }

    /// Chordal-style closeness test; two infinities coincide.
    pub fn approx_eq(self, other: Point, tol: f64) -> bool {
        match (self, other) {
            (Point::Infinity, Point::Infinity) => true,
            (Point::Finite(a), Point::Finite(b)) => (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm())),
            _ => false,
        }
    }

    /// Reflection in the unit circle, z -> 1/conj(z).
    pub fn reflect(self) -> Self {
        match self {
            Point::Infinity => Point::real(0.0),
            Point::Finite(z) if z.norm() == 0.0 => Point::Infinity,
            Point::Finite(z) => Point::Finite(z.conj().inv()),
        }
    }

    pub fn modulus(self) -> f64 {
        match self {
            Point::Infinity => f64::INFINITY,
            Point::Finite(z) => z.norm(),
        }
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Point::Infinity => s.serialize_str("inf"),
            Point::Finite(z) => [z.re, z.im].serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Tag(String),
            Pair([f64; 2]),
            Real(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Tag(t) if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") => {
                Ok(Point::Infinity)
            }
            Raw::Tag(t) => Err(serde::de::Error::custom(format!("unknown point tag {t:?}, expected \"inf\""))),
            Raw::Pair([re, im]) => Ok(Point::Finite(Complex64::new(re, im))),
            Raw::Real(re) => Ok(Point::real(re)),
        }
    }
}

/// z -> (a z + b) / (c z + d)
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Mobius {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mobius { a, b, c, d }
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Mobius::new(one, zero, zero, one)
    }

    /// z -> 1/z
    pub fn inversion() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Mobius::new(zero, one, one, zero)
    }

    pub fn is_identity(&self) -> bool {
        *self == Mobius::identity()
    }

    pub fn inverse(&self) -> Self {
        Mobius::new(self.d, -self.b, -self.c, self.a)
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &Mobius) -> Self {
        Mobius::new(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )
    }

    pub fn apply(&self, p: Point) -> Point {
        let (num, den) = match p {
            Point::Finite(z) => (self.a * z + self.b, self.c * z + self.d),
            Point::Infinity => (self.a, self.c),
        };
        let scale = match p {
            Point::Finite(z) => (self.c * z).norm() + self.d.norm(),
            Point::Infinity => self.c.norm() + self.a.norm(),
        };
        if den.norm() <= POLE_TOL * scale.max(f64::MIN_POSITIVE) {
            Point::Infinity
        } else {
            Point::Finite(num / den)
        }
    }

    /// Image point and the expansion of the map in local coordinates: `t = z - p`
    /// (or `1/z` at infinity) on the source side and likewise on the target side.
    pub fn local_series(&self, p: Point, len: usize) -> (Point, Series) {
        let (num, den) = match p {
            Point::Finite(z) => (vec![self.a * z + self.b, self.a], vec![self.c * z + self.d, self.c]),
            Point::Infinity => (vec![self.a, self.b], vec![self.c, self.d]),
        };
        let q = self.apply(p);
        let tau = match q {
            Point::Finite(w) => {
                let mut s = series::div(&num, &den, len).expect("finite image has nonzero denominator");
                s[0] -= w;
                s[0] = Complex64::new(0.0, 0.0);
                s
            }
            Point::Infinity => {
                let mut s = series::div(&den, &num, len).expect("pole of a Mobius map has nonzero numerator");
                s[0] = Complex64::new(0.0, 0.0);
                s
            }
        };
        (q, tau)
    }

    /// Disc automorphism of the exterior of the unit circle sending `pivot` to infinity:
    /// z -> (z - conj(alpha)) / (1 - alpha z), alpha = 1/pivot.
    pub fn exterior_to_infinity(pivot: Complex64) -> Self {
        let alpha = pivot.inv();
        let one = Complex64::new(1.0, 0.0);
        Mobius::new(one, -alpha.conj(), -alpha, one)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exterior_automorphism_sends_pivot_to_infinity_and_keeps_circle() {
        let m = Mobius::exterior_to_infinity(Complex64::new(2.0, 0.0));
        assert_eq!(m.apply(Point::real(2.0)), Point::Infinity);
        for k in 0..12 {
            let z = Complex64::from_polar(1.0, k as f64 * 0.5);
            let w = m.apply(Point::Finite(z)).finite().unwrap();
            assert!((w.norm() - 1.0).abs() < 1e-12);
        }
        let out = m.apply(Point::Finite(Complex64::new(0.0, 3.0))).modulus();
        assert!(out > 1.0);
    }

    #[test]
    fn local_series_matches_difference_quotient() {
        let m = Mobius::new(
            Complex64::new(1.0, 0.2),
            Complex64::new(-0.3, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(2.0, -1.0),
        );
        let p = Complex64::new(0.3, 0.4);
        let (q, s) = m.local_series(Point::Finite(p), 3);
        let h = 1e-6;
        let fd = (m.apply(Point::Finite(p + h)).finite().unwrap() - m.apply(Point::Finite(p - h)).finite().unwrap()) / (2.0 * h);
        assert!((s[1] - fd).norm() < 1e-8);
        assert!(q.finite().is_some());
    }

    #[test]
    fn point_json_forms() {
        let p: Vec<Point> = serde_json::from_str(r#"["inf", [1.0, -2.0], 0.5]"#).unwrap();
        assert_eq!(p[0], Point::Infinity);
        assert_eq!(p[1], Point::Finite(Complex64::new(1.0, -2.0)));
        assert_eq!(p[2], Point::real(0.5));
        assert_eq!(serde_json::to_string(&p[0]).unwrap(), "\"inf\"");
    }
}
