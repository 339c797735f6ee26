//! Exact Gaussian-rational scalars and their floating twins.
//!
//! `GaussianRational` is a complex number with arbitrary-precision rational
//! real and imaginary parts. `Scalar` wraps either an exact value or a
//! `Complex64`; arithmetic between two exact scalars stays exact, anything
//! involving a float scalar is carried out in floats.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// a + b·i with a, b arbitrary-precision rationals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GaussianRational {
    re: Rational,
    im: Rational,
}

impl GaussianRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        GaussianRational { re, im }
    }

    pub fn zero() -> Self {
        Self::new(Rational::zero(), Rational::zero())
    }

    pub fn one() -> Self {
        Self::new(Rational::one(), Rational::zero())
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Self::new(Rational::zero(), Rational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Self::new(Rational::from_integer(BigInt::from(n)), Rational::zero())
    }

    /// re + im·i from integer parts.
    pub fn from_ints(re: i64, im: i64) -> Self {
        Self::new(
            Rational::from_integer(BigInt::from(re)),
            Rational::from_integer(BigInt::from(im)),
        )
    }

    /// Real rational p/q. Panics if q = 0.
    pub fn from_ratio(p: i64, q: i64) -> Self {
        Self::new(
            Rational::new(BigInt::from(p), BigInt::from(q)),
            Rational::zero(),
        )
    }

    /// (p/q) · i. Panics if q = 0.
    pub fn from_imag_ratio(p: i64, q: i64) -> Self {
        Self::new(
            Rational::zero(),
            Rational::new(BigInt::from(p), BigInt::from(q)),
        )
    }

    pub fn re(&self) -> &Rational {
        &self.re
    }

    pub fn im(&self) -> &Rational {
        &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -self.im.clone())
    }

    /// |z|² = a² + b², an exact rational.
    pub fn norm_sqr(&self) -> Rational {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Multiplicative inverse; errors on zero.
    pub fn inv(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n.is_zero() {
            return Err(Error::Singular);
        }
        Ok(Self::new(&self.re / &n, -(&self.im / &n)))
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    /// Exact principal square root, when it exists in ℚ(i).
    ///
    /// Branch: for z = r·e^{iθ} with θ ∈ (−π, π], the root is √r·e^{iθ/2};
    /// in particular √(−r) = i·√r for r > 0.
    pub fn sqrt_exact(&self) -> Option<Self> {
        if self.is_zero() {
            return Some(Self::zero());
        }
        if self.im.is_zero() {
            return if self.re.is_positive() {
                sqrt_rational(&self.re).map(|s| Self::new(s, Rational::zero()))
            } else {
                sqrt_rational(&(-self.re.clone())).map(|s| Self::new(Rational::zero(), s))
            };
        }
        // |z| must be rational, and Re(√z) = √((a + |z|)/2) must be too.
        let modulus = sqrt_rational(&self.norm_sqr())?;
        let half = Rational::new(BigInt::from(1), BigInt::from(2));
        let x = sqrt_rational(&((&self.re + &modulus) * &half))?;
        if x.is_zero() {
            return None;
        }
        let y = &self.im / (&x + &x);
        let root = Self::new(x, y);
        debug_assert_eq!(&root * &root, *self);
        Some(root)
    }
}

/// Exact square root of a nonnegative rational, if rational.
pub fn sqrt_rational(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    if q.is_zero() {
        return Some(Rational::zero());
    }
    let num = q.numer();
    let den = q.denom();
    let sn = num.sqrt();
    let sd = den.sqrt();
    if &(&sn * &sn) == num && &(&sd * &sd) == den {
        Some(Rational::new(sn, sd))
    } else {
        None
    }
}

fn rational_str(q: &Rational) -> String {
    q.to_string()
}

impl fmt::Display for GaussianRational {
    /// Canonical form: "p/q", "p/q+r/si", "r/si", with "i"/"-i" for unit
    /// imaginary parts. Round-trips through `parse_scalar` bit-exactly.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            return write!(f, "{}", rational_str(&self.re));
        }
        let im_abs = self.im.abs();
        let im_part = if im_abs.is_one() {
            "i".to_string()
        } else {
            format!("{}i", rational_str(&im_abs))
        };
        if self.re.is_zero() {
            if self.im.is_negative() {
                write!(f, "-{im_part}")
            } else {
                write!(f, "{im_part}")
            }
        } else {
            let sign = if self.im.is_negative() { '-' } else { '+' };
            write!(f, "{}{}{}", rational_str(&self.re), sign, im_part)
        }
    }
}

impl fmt::Debug for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

macro_rules! gr_binop {
    ($trait:ident, $method:ident, |$a:ident, $b:ident| $body:expr) => {
        impl<'a, 'b> $trait<&'b GaussianRational> for &'a GaussianRational {
            type Output = GaussianRational;
            fn $method(self, rhs: &'b GaussianRational) -> GaussianRational {
                let $a = self;
                let $b = rhs;
                $body
            }
        }
        impl $trait<GaussianRational> for GaussianRational {
            type Output = GaussianRational;
            fn $method(self, rhs: GaussianRational) -> GaussianRational {
                $trait::$method(&self, &rhs)
            }
        }
        impl<'b> $trait<&'b GaussianRational> for GaussianRational {
            type Output = GaussianRational;
            fn $method(self, rhs: &'b GaussianRational) -> GaussianRational {
                $trait::$method(&self, rhs)
            }
        }
    };
}

gr_binop!(Add, add, |a, b| GaussianRational::new(
    &a.re + &b.re,
    &a.im + &b.im
));
gr_binop!(Sub, sub, |a, b| GaussianRational::new(
    &a.re - &b.re,
    &a.im - &b.im
));
gr_binop!(Mul, mul, |a, b| GaussianRational::new(
    &a.re * &b.re - &a.im * &b.im,
    &a.re * &b.im + &a.im * &b.re
));

impl Div<&GaussianRational> for &GaussianRational {
    type Output = GaussianRational;
    fn div(self, rhs: &GaussianRational) -> GaussianRational {
        self * &rhs.inv().expect("division by zero Gaussian rational")
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational::new(-self.re.clone(), -self.im.clone())
    }
}

impl Neg for GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        -&self
    }
}

/// A complex scalar: exact Gaussian rational or double-precision float.
#[derive(Clone, PartialEq)]
pub enum Scalar {
    Exact(GaussianRational),
    Float(Complex64),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(GaussianRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(GaussianRational::one())
    }

    pub fn i() -> Self {
        Scalar::Exact(GaussianRational::i())
    }

    pub fn from_int(n: i64) -> Self {
        Scalar::Exact(GaussianRational::from_int(n))
    }

    pub fn from_ints(re: i64, im: i64) -> Self {
        Scalar::Exact(GaussianRational::from_ints(re, im))
    }

    pub fn from_ratio(p: i64, q: i64) -> Self {
        Scalar::Exact(GaussianRational::from_ratio(p, q))
    }

    pub fn exact(g: GaussianRational) -> Self {
        Scalar::Exact(g)
    }

    pub fn float(z: Complex64) -> Self {
        Scalar::Float(z)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(g) => g.is_zero(),
            Scalar::Float(z) => z.re == 0.0 && z.im == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Exact(g) => g.is_one(),
            Scalar::Float(z) => z.re == 1.0 && z.im == 0.0,
        }
    }

    pub fn as_exact(&self) -> Result<&GaussianRational> {
        match self {
            Scalar::Exact(g) => Ok(g),
            Scalar::Float(_) => Err(Error::NotExact),
        }
    }

    pub fn to_c64(&self) -> Complex64 {
        match self {
            Scalar::Exact(g) => g.to_c64(),
            Scalar::Float(z) => *z,
        }
    }

    pub fn conj(&self) -> Self {
        match self {
            Scalar::Exact(g) => Scalar::Exact(g.conj()),
            Scalar::Float(z) => Scalar::Float(z.conj()),
        }
    }

    pub fn inv(&self) -> Result<Self> {
        match self {
            Scalar::Exact(g) => Ok(Scalar::Exact(g.inv()?)),
            Scalar::Float(z) => {
                if z.norm_sqr() == 0.0 {
                    Err(Error::Singular)
                } else {
                    Ok(Scalar::Float(z.inv()))
                }
            }
        }
    }

    /// Magnitude as f64 (used only for reporting and float pivoting).
    pub fn abs_f64(&self) -> f64 {
        self.to_c64().norm()
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident) => {
        impl<'a, 'b> $trait<&'b Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'b Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact($trait::$method(a, b)),
                    (a, b) => Scalar::Float($trait::$method(a.to_c64(), b.to_c64())),
                }
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                $trait::$method(&self, &rhs)
            }
        }
        impl<'b> $trait<&'b Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'b Scalar) -> Scalar {
                $trait::$method(&self, rhs)
            }
        }
    };
}

scalar_binop!(Add, add);
scalar_binop!(Sub, sub);
scalar_binop!(Mul, mul);

impl Div<&Scalar> for &Scalar {
    type Output = Scalar;
    fn div(self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a / b),
            (a, b) => Scalar::Float(a.to_c64() / b.to_c64()),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(g) => Scalar::Exact(-g),
            Scalar::Float(z) => Scalar::Float(-z),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(g) => write!(f, "{g}"),
            Scalar::Float(z) => {
                if z.im == 0.0 {
                    write!(f, "{:?}", z.re)
                } else if z.re == 0.0 {
                    write!(f, "{:?}i", z.im)
                } else if z.im < 0.0 {
                    write!(f, "{:?}-{:?}i", z.re, -z.im)
                } else {
                    write!(f, "{:?}+{:?}i", z.re, z.im)
                }
            }
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Parse a scalar in the entry grammar: signed rational, optional
/// '±rational i' part, bare '±i', or decimal floats for either component.
pub fn parse_scalar(text: &str) -> Result<Scalar> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::parse(0, "empty scalar"));
    }
    let bytes = s.as_bytes();
    let mut pos = 0usize;

    let (first, first_imag) = parse_component(s, &mut pos)?;
    if pos == s.len() {
        return Ok(assemble(first, first_imag, None));
    }
    // A second component must start with an explicit sign.
    if bytes[pos] != b'+' && bytes[pos] != b'-' {
        return Err(Error::parse(pos, format!("unexpected character '{}'", &s[pos..pos + 1])));
    }
    let (second, second_imag) = parse_component(s, &mut pos)?;
    if pos != s.len() {
        return Err(Error::parse(pos, "trailing characters after scalar"));
    }
    if first_imag || !second_imag {
        return Err(Error::parse(
            0,
            "expected 'real±imaginary·i' ordering of components",
        ));
    }
    Ok(assemble(first, false, Some(second)))
}

enum Component {
    Exact(Rational),
    Float(f64),
}

fn assemble(re: Component, re_is_imag: bool, im: Option<Component>) -> Scalar {
    let (re, im) = if re_is_imag {
        (Component::Exact(Rational::zero()), Some(re))
    } else {
        (re, im)
    };
    let im = im.unwrap_or(Component::Exact(Rational::zero()));
    match (re, im) {
        (Component::Exact(a), Component::Exact(b)) => Scalar::Exact(GaussianRational::new(a, b)),
        (a, b) => {
            let fa = match a {
                Component::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
                Component::Float(x) => x,
            };
            let fb = match b {
                Component::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
                Component::Float(x) => x,
            };
            Scalar::Float(Complex64::new(fa, fb))
        }
    }
}

/// Parses one signed component starting at `*pos`; advances `*pos`.
/// Returns the value and whether it carried the trailing 'i'.
fn parse_component(s: &str, pos: &mut usize) -> Result<(Component, bool)> {
    let bytes = s.as_bytes();
    let start = *pos;
    let mut p = *pos;
    let mut negative = false;
    if p < bytes.len() && (bytes[p] == b'+' || bytes[p] == b'-') {
        negative = bytes[p] == b'-';
        p += 1;
    }
    // Bare imaginary unit.
    if p < bytes.len() && bytes[p] == b'i' {
        *pos = p + 1;
        let one = if negative {
            -Rational::one()
        } else {
            Rational::one()
        };
        return Ok((Component::Exact(one), true));
    }
    let num_start = p;
    let mut saw_digit = false;
    let mut is_float = false;
    let mut saw_slash = false;
    while p < bytes.len() {
        match bytes[p] {
            b'0'..=b'9' => {
                saw_digit = true;
                p += 1;
            }
            b'.' => {
                is_float = true;
                p += 1;
            }
            b'e' | b'E' if is_float || saw_digit => {
                // Exponent: may be followed by a sign.
                is_float = true;
                p += 1;
                if p < bytes.len() && (bytes[p] == b'+' || bytes[p] == b'-') {
                    p += 1;
                }
            }
            b'/' if !is_float && !saw_slash => {
                saw_slash = true;
                p += 1;
            }
            _ => break,
        }
    }
    if !saw_digit {
        return Err(Error::parse(start, "expected a number"));
    }
    let token = &s[num_start..p];
    let imag = p < bytes.len() && bytes[p] == b'i';
    if imag {
        p += 1;
    }
    *pos = p;
    if is_float {
        let v: f64 = token
            .parse()
            .map_err(|e| Error::parse(num_start, format!("bad float '{token}': {e}")))?;
        Ok((Component::Float(if negative { -v } else { v }), imag))
    } else if saw_slash {
        let mut halves = token.splitn(2, '/');
        let ns = halves.next().unwrap();
        let ds = halves.next().unwrap();
        let n: BigInt = ns
            .parse()
            .map_err(|_| Error::parse(num_start, format!("bad numerator '{ns}'")))?;
        let d: BigInt = ds
            .parse()
            .map_err(|_| Error::parse(num_start, format!("bad denominator '{ds}'")))?;
        if d.is_zero() {
            return Err(Error::parse(num_start, "zero denominator"));
        }
        let q = Rational::new(n, d);
        Ok((Component::Exact(if negative { -q } else { q }), imag))
    } else {
        let n: BigInt = token
            .parse()
            .map_err(|_| Error::parse(num_start, format!("bad integer '{token}'")))?;
        let q = Rational::from_integer(n);
        Ok((Component::Exact(if negative { -q } else { q }), imag))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gr(re: i64, im: i64) -> GaussianRational {
        GaussianRational::from_ints(re, im)
    }

    #[test]
    fn arithmetic_closure() {
        let a = gr(1, 2);
        let b = gr(3, -1);
        assert_eq!(&a * &b, gr(5, 5));
        assert_eq!(&a + &b, gr(4, 1));
        let q = &a / &b;
        assert_eq!(&q * &b, a);
    }

    #[test]
    fn inverse_of_i() {
        // 1/i = -i
        let inv = GaussianRational::i().inv().unwrap();
        assert_eq!(inv, gr(0, -1));
    }

    #[test]
    fn sqrt_branch_rule() {
        // √(-1) = i, √(-4) = 2i
        assert_eq!(gr(-1, 0).sqrt_exact().unwrap(), gr(0, 1));
        assert_eq!(gr(-4, 0).sqrt_exact().unwrap(), gr(0, 2));
        // √(2i) = 1+i
        assert_eq!(gr(0, 2).sqrt_exact().unwrap(), gr(1, 1));
        // √(-2i) = 1-i
        assert_eq!(gr(0, -2).sqrt_exact().unwrap(), gr(1, -1));
        // 2 is not a square in ℚ(i)
        assert!(gr(2, 0).sqrt_exact().is_none());
        assert!(gr(0, 1).sqrt_exact().is_none());
        // (3+4i) = (2+i)²
        assert_eq!(gr(3, 4).sqrt_exact().unwrap(), gr(2, 1));
    }

    #[test]
    fn mixing_exact_and_float() {
        let e = Scalar::from_int(2);
        let f = Scalar::float(Complex64::new(0.5, 0.0));
        assert!(matches!(&e * &e, Scalar::Exact(_)));
        assert!(matches!(&e * &f, Scalar::Float(_)));
        assert_eq!((&e * &f).to_c64(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn display_roundtrip() {
        for s in [
            "0", "1", "-3", "1/2", "-2/5", "i", "-i", "2i", "-1/2i", "1/2+i", "1/2-3/4i",
            "-7+2i",
        ] {
            let v = parse_scalar(s).unwrap();
            assert_eq!(v.to_string(), s, "canonical form of {s}");
            let reparsed = parse_scalar(&v.to_string()).unwrap();
            assert_eq!(reparsed, v);
        }
    }

    #[test]
    fn parse_variants() {
        assert_eq!(parse_scalar("1/2+3/4i").unwrap(), Scalar::Exact(GaussianRational::new(
            Rational::new(BigInt::from(1), BigInt::from(2)),
            Rational::new(BigInt::from(3), BigInt::from(4)),
        )));
        assert_eq!(parse_scalar("+i").unwrap(), Scalar::i());
        assert!(parse_scalar("1+").is_err());
        assert!(parse_scalar("i+1").is_err());
        assert!(parse_scalar("1/0").is_err());
        assert!(matches!(parse_scalar("1.5").unwrap(), Scalar::Float(_)));
        assert!(matches!(parse_scalar("1e-3+2.5i").unwrap(), Scalar::Float(_)));
    }
}
