use std::cell::Cell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Ground field: a prime field `F_p` or the rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Prime(u64),
    Rational,
}

/// Largest supported prime modulus.
pub const MAX_PRIME: u64 = 1 << 31;

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl Field {
    pub fn prime(p: u64) -> Result<Field> {
        if p > MAX_PRIME || !is_prime(p) {
            return Err(Error::Malformed(format!("{p} is not a supported prime")));
        }
        Ok(Field::Prime(p))
    }

    pub fn characteristic(&self) -> u64 {
        match self {
            Field::Prime(p) => *p,
            Field::Rational => 0,
        }
    }

    pub fn zero(&self) -> Scalar {
        match self {
            Field::Prime(p) => Scalar::Mod { v: 0, p: *p },
            Field::Rational => Scalar::Rat(BigRational::zero()),
        }
    }

    pub fn one(&self) -> Scalar {
        self.from_i64(1)
    }

    pub fn from_i64(&self, n: i64) -> Scalar {
        match self {
            Field::Prime(p) => Scalar::Mod { v: n.rem_euclid(*p as i64) as u64, p: *p },
            Field::Rational => Scalar::Rat(BigRational::from_integer(BigInt::from(n))),
        }
    }

    fn from_bigint(&self, n: &BigInt) -> Scalar {
        match self {
            Field::Prime(p) => {
                let m = n.mod_floor(&BigInt::from(*p));
                Scalar::Mod { v: m.to_u64().unwrap_or(0), p: *p }
            }
            Field::Rational => Scalar::Rat(BigRational::from_integer(n.clone())),
        }
    }

    pub fn from_ratio(&self, num: i64, den: i64) -> Result<Scalar> {
        self.from_i64(num).div(&self.from_i64(den))
    }

    /// Parses an integer or `n/d` literal into this field.
    pub fn parse(&self, s: &str) -> Result<Scalar> {
        let s = s.trim();
        let bad = || Error::Malformed(format!("bad scalar literal '{s}'"));
        match s.split_once('/') {
            Some((n, d)) => {
                let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
                let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
                self.from_bigint(&n).div(&self.from_bigint(&d))
            }
            None => {
                let n = BigInt::from_str(s).map_err(|_| bad())?;
                Ok(self.from_bigint(&n))
            }
        }
    }

    /// All elements in canonical order; only defined for prime fields.
    pub fn elements(&self) -> Option<impl Iterator<Item = Scalar>> {
        match *self {
            Field::Prime(p) => Some((0..p).map(move |v| Scalar::Mod { v, p })),
            Field::Rational => None,
        }
    }

    pub fn tag(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Prime(p) => write!(f, "F{p}"),
            Field::Rational => write!(f, "Q"),
        }
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Field> {
        let s = s.trim();
        if s == "Q" {
            return Ok(Field::Rational);
        }
        let digits = s
            .strip_prefix('F')
            .ok_or_else(|| Error::Malformed(format!("bad field tag '{s}'")))?;
        let p: u64 = digits
            .parse()
            .map_err(|_| Error::Malformed(format!("bad field tag '{s}'")))?;
        Field::prime(p)
    }
}

impl serde::Serialize for Field {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Field {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Field, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An exact field element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Scalar {
    Mod { v: u64, p: u64 },
    Rat(BigRational),
}

impl Scalar {
    pub fn field(&self) -> Field {
        match self {
            Scalar::Mod { p, .. } => Field::Prime(*p),
            Scalar::Rat(_) => Field::Rational,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Mod { v, .. } => *v == 0,
            Scalar::Rat(r) => r.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Mod { v, .. } => *v == 1,
            Scalar::Rat(r) => r.is_one(),
        }
    }

    /// Canonical representative for prime fields.
    pub fn residue(&self) -> Option<u64> {
        match self {
            Scalar::Mod { v, .. } => Some(*v),
            Scalar::Rat(_) => None,
        }
    }

    pub fn inv(&self) -> Result<Scalar> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(match self {
            Scalar::Mod { v, p } => Scalar::Mod { v: pow_mod(*v, *p - 2, *p), p: *p },
            Scalar::Rat(r) => Scalar::Rat(r.recip()),
        })
    }

    pub fn div(&self, other: &Scalar) -> Result<Scalar> {
        Ok(self * &other.inv()?)
    }

    pub fn pow(&self, e: i64) -> Result<Scalar> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = self.field().one();
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &b;
            }
            b = &b * &b;
            e >>= 1;
        }
        Ok(acc)
    }

    /// Ascending order: canonical residue for `F_p`, numeric value for `Q`.
    pub fn canonical_cmp(&self, other: &Scalar) -> Ordering {
        match (self, other) {
            (Scalar::Mod { v: a, .. }, Scalar::Mod { v: b, .. }) => a.cmp(b),
            (Scalar::Rat(a), Scalar::Rat(b)) => a.cmp(b),
            _ => panic!("canonical_cmp across fields"),
        }
    }

    /// Exact square root when one exists in the field.
    pub fn sqrt(&self) -> Option<Scalar> {
        match self {
            Scalar::Mod { v, p } => sqrt_mod(*v, *p).map(|r| Scalar::Mod { v: r, p: *p }),
            Scalar::Rat(r) => {
                if r.is_negative() {
                    return None;
                }
                let n = r.numer().sqrt();
                let d = r.denom().sqrt();
                if &(&n * &n) == r.numer() && &(&d * &d) == r.denom() {
                    Some(Scalar::Rat(BigRational::new(n, d)))
                } else {
                    None
                }
            }
        }
    }

    fn check(&self, other: &Scalar) {
        if let (Scalar::Mod { p: a, .. }, Scalar::Mod { p: b, .. }) = (self, other) {
            assert_eq!(a, b, "arithmetic across different prime fields");
        } else {
            assert_eq!(
                std::mem::discriminant(self),
                std::mem::discriminant(other),
                "arithmetic across different fields"
            );
        }
    }
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

fn sqrt_mod(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 || p == 2 {
        return Some(a);
    }
    if p < (1 << 16) {
        return (0..p).find(|x| x * x % p == a);
    }
    if pow_mod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    // Tonelli-Shanks
    let mut q = p - 1;
    let mut s = 0;
    while q.is_multiple_of(2) {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while pow_mod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = tt * tt % p;
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = b * b % p;
        t = t * c % p;
        r = r * b % p;
    }
    Some(r.min(p - r))
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Mod { v, .. } => write!(f, "{v}"),
            Scalar::Rat(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
        }
    }
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, o: &Scalar) -> Scalar {
        self.check(o);
        match (self, o) {
            (Scalar::Mod { v: a, p }, Scalar::Mod { v: b, .. }) => Scalar::Mod { v: (a + b) % p, p: *p },
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a + b),
            _ => unreachable!(),
        }
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, o: &Scalar) -> Scalar {
        self.check(o);
        match (self, o) {
            (Scalar::Mod { v: a, p }, Scalar::Mod { v: b, .. }) => Scalar::Mod { v: (a + p - b) % p, p: *p },
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a - b),
            _ => unreachable!(),
        }
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, o: &Scalar) -> Scalar {
        self.check(o);
        match (self, o) {
            (Scalar::Mod { v: a, p }, Scalar::Mod { v: b, .. }) => Scalar::Mod { v: a * b % p, p: *p },
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a * b),
            _ => unreachable!(),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Mod { v, p } => Scalar::Mod { v: (p - v) % p, p: *p },
            Scalar::Rat(r) => Scalar::Rat(-r),
        }
    }
}

macro_rules! owned_binop {
    ($tr:ident, $m:ident) => {
        impl $tr for Scalar {
            type Output = Scalar;
            fn $m(self, o: Scalar) -> Scalar {
                (&self).$m(&o)
            }
        }
        impl $tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: &Scalar) -> Scalar {
                (&self).$m(o)
            }
        }
    };
}
owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

thread_local! {
    static FIELD_CONTEXT: Cell<Option<Field>> = const { Cell::new(None) };
}

/// Runs `f` with `field` installed as the context for deserializing scalars.
///
/// Scalars serialize as bare literals; the enclosing document carries the field tag.
pub fn with_field<T>(field: Field, f: impl FnOnce() -> T) -> T {
    let prev = FIELD_CONTEXT.with(|c| c.replace(Some(field)));
    let out = f();
    FIELD_CONTEXT.with(|c| c.set(prev));
    out
}

pub fn context_field() -> Option<Field> {
    FIELD_CONTEXT.with(|c| c.get())
}

impl serde::Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Scalar {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Scalar, D::Error> {
        let s = String::deserialize(d)?;
        let field = context_field()
            .ok_or_else(|| serde::de::Error::custom("scalar outside of a field context"))?;
        field.parse(&s).map_err(serde::de::Error::custom)
    }
}
