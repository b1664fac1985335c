use std::fmt;

use crate::algebra::field::{context_field, Field, Scalar};
use crate::error::{Error, Result};

/// `leading·t² + c1·t + c0` with `leading ≠ 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadPoly {
    leading: Scalar,
    c1: Scalar,
    c0: Scalar,
}

impl QuadPoly {
    pub fn new(leading: Scalar, c1: Scalar, c0: Scalar) -> Result<QuadPoly> {
        let f = leading.field();
        if c1.field() != f || c0.field() != f {
            return Err(Error::FieldMismatch(f.tag(), c1.field().tag()));
        }
        if leading.is_zero() {
            return Err(Error::Malformed("leading coefficient is zero".into()));
        }
        Ok(QuadPoly { leading, c1, c0 })
    }

    pub fn from_i64(field: Field, leading: i64, c1: i64, c0: i64) -> Result<QuadPoly> {
        QuadPoly::new(field.from_i64(leading), field.from_i64(c1), field.from_i64(c0))
    }

    /// `(t - x)(t - y)`.
    pub fn from_roots(x: &Scalar, y: &Scalar) -> QuadPoly {
        let f = x.field();
        QuadPoly { leading: f.one(), c1: -(x + y), c0: x * y }
    }

    pub fn field(&self) -> Field {
        self.leading.field()
    }

    pub fn leading(&self) -> &Scalar {
        &self.leading
    }

    pub fn c1(&self) -> &Scalar {
        &self.c1
    }

    pub fn c0(&self) -> &Scalar {
        &self.c0
    }

    pub fn monic(&self) -> QuadPoly {
        let inv = self.leading.inv().expect("leading coefficient is nonzero");
        QuadPoly { leading: self.field().one(), c1: &self.c1 * &inv, c0: &self.c0 * &inv }
    }

    pub fn is_non_derogatory(&self) -> bool {
        !self.c0.is_zero()
    }

    pub fn norm(&self) -> Scalar {
        self.c0.div(&self.leading).expect("leading coefficient is nonzero")
    }

    pub fn trace(&self) -> Scalar {
        (-&self.c1).div(&self.leading).expect("leading coefficient is nonzero")
    }

    pub fn norm_trace(&self) -> (Scalar, Scalar) {
        (self.norm(), self.trace())
    }

    pub fn eval(&self, x: &Scalar) -> Scalar {
        &(&(&self.leading * x) + &self.c1) * x + &self.c0
    }

    /// `t²·p(1/t)`: coefficient reversal.
    pub fn reciprocal(&self) -> Result<QuadPoly> {
        if !self.is_non_derogatory() {
            return Err(Error::DerogatoryInput);
        }
        Ok(QuadPoly { leading: self.c0.clone(), c1: self.c1.clone(), c0: self.leading.clone() })
    }

    /// Roots in ascending canonical order, or `None` when `p` does not split.
    pub fn roots(&self) -> Option<(Scalar, Scalar)> {
        let m = self.monic();
        let f = self.field();
        let (x, y) = match f {
            Field::Prime(p) if p < (1 << 16) => {
                let mut found = Vec::new();
                for r in f.elements().expect("prime field") {
                    if m.eval(&r).is_zero() {
                        found.push(r);
                    }
                }
                match found.len() {
                    0 => return None,
                    1 => (found[0].clone(), found[0].clone()),
                    _ => (found[0].clone(), found[1].clone()),
                }
            }
            _ => {
                // monic t² + b t + c: roots (-b ± sqrt(b² - 4c)) / 2
                let two = f.from_i64(2);
                let disc = &(&m.c1 * &m.c1) - &(&f.from_i64(4) * &m.c0);
                let s = disc.sqrt()?;
                let x = (&-&m.c1 - &s).div(&two).ok()?;
                let y = (&-&m.c1 + &s).div(&two).ok()?;
                (x, y)
            }
        };
        if x.canonical_cmp(&y).is_gt() {
            Some((y, x))
        } else {
            Some((x, y))
        }
    }

    pub fn is_split(&self) -> bool {
        self.roots().is_some()
    }

    /// Parses `a*t^2+b*t+c` (rational literals allowed) or a product `(t-x)(t-y)` / `(t-x)^2`.
    pub fn parse(s: &str, field: Field) -> Result<QuadPoly> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.starts_with('(') {
            return parse_factored(&compact, field);
        }
        let mut coeffs = [field.zero(), field.zero(), field.zero()];
        let bad = || Error::Malformed(format!("bad polynomial '{s}'"));
        let bytes: Vec<char> = compact.chars().collect();
        let mut terms = Vec::new();
        let mut start = 0;
        for i in 1..bytes.len() {
            if (bytes[i] == '+' || bytes[i] == '-') && bytes[i - 1] != '/' && bytes[i - 1] != '^' {
                terms.push(bytes[start..i].iter().collect::<String>());
                start = i;
            }
        }
        terms.push(bytes[start..].iter().collect::<String>());
        for term in terms {
            let (neg, body) = match term.strip_prefix('-') {
                Some(b) => (true, b),
                None => (false, term.strip_prefix('+').unwrap_or(&term)),
            };
            if body.is_empty() {
                return Err(bad());
            }
            let (coef, deg) = match body.find('t') {
                Some(pos) => {
                    let c = body[..pos].trim_end_matches('*');
                    let rest = &body[pos + 1..];
                    let deg = match rest {
                        "" => 1,
                        "^2" => 2,
                        "^1" => 1,
                        "^0" => 0,
                        _ => return Err(bad()),
                    };
                    let c = if c.is_empty() { field.one() } else { field.parse(c)? };
                    (c, deg)
                }
                None => (field.parse(body)?, 0),
            };
            let coef = if neg { -coef } else { coef };
            coeffs[deg] = &coeffs[deg] + &coef;
        }
        let [c0, c1, c2] = coeffs;
        if c2.is_zero() {
            return Err(Error::Malformed(format!("'{s}' is not of degree 2")));
        }
        QuadPoly::new(c2, c1, c0)
    }
}

fn parse_factored(s: &str, field: Field) -> Result<QuadPoly> {
    let bad = || Error::Malformed(format!("bad factored polynomial '{s}'"));
    let mut roots = Vec::new();
    let mut rest = s;
    while !rest.is_empty() {
        let inner_end = rest.find(')').ok_or_else(bad)?;
        let inner = rest.get(1..inner_end).ok_or_else(bad)?;
        let body = inner.strip_prefix('t').ok_or_else(bad)?;
        let root = if body.is_empty() {
            field.zero()
        } else if let Some(r) = body.strip_prefix('-') {
            field.parse(r)?
        } else if let Some(r) = body.strip_prefix('+') {
            -field.parse(r)?
        } else {
            return Err(bad());
        };
        rest = &rest[inner_end + 1..];
        if let Some(r) = rest.strip_prefix("^2") {
            roots.push(root.clone());
            rest = r;
        }
        roots.push(root);
    }
    if roots.len() != 2 {
        return Err(bad());
    }
    Ok(QuadPoly::from_roots(&roots[0], &roots[1]))
}

impl fmt::Display for QuadPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn term(f: &mut fmt::Formatter<'_>, c: &Scalar, mono: &str, first: bool) -> fmt::Result {
            let s = c.to_string();
            let (neg, body) = match s.strip_prefix('-') {
                Some(b) => (true, b.to_string()),
                None => (false, s),
            };
            if neg {
                write!(f, "-")?;
            } else if !first {
                write!(f, "+")?;
            }
            if mono.is_empty() {
                write!(f, "{body}")
            } else if body == "1" {
                write!(f, "{mono}")
            } else {
                write!(f, "{body}*{mono}")
            }
        }
        term(f, &self.leading, "t^2", true)?;
        if !self.c1.is_zero() {
            term(f, &self.c1, "t", false)?;
        }
        if !self.c0.is_zero() {
            term(f, &self.c0, "", false)?;
        }
        Ok(())
    }
}

impl serde::Serialize for QuadPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for QuadPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<QuadPoly, D::Error> {
        let s = String::deserialize(d)?;
        let field = context_field()
            .ok_or_else(|| serde::de::Error::custom("polynomial outside of a field context"))?;
        QuadPoly::parse(&s, field).map_err(serde::de::Error::custom)
    }
}

/// Dense univariate polynomial, lowest degree first, no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniPoly {
    field: Field,
    coeffs: Vec<Scalar>,
}

impl UniPoly {
    pub fn new(field: Field, mut coeffs: Vec<Scalar>) -> UniPoly {
        while coeffs.last().is_some_and(Scalar::is_zero) {
            coeffs.pop();
        }
        UniPoly { field, coeffs }
    }

    pub fn one(field: Field) -> UniPoly {
        UniPoly::new(field, vec![field.one()])
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn monic(&self) -> UniPoly {
        match self.coeffs.last() {
            None => self.clone(),
            Some(lc) => {
                let inv = lc.inv().expect("nonzero leading coefficient");
                UniPoly::new(self.field, self.coeffs.iter().map(|c| c * &inv).collect())
            }
        }
    }

    pub fn mul(&self, o: &UniPoly) -> UniPoly {
        if self.is_zero() || o.is_zero() {
            return UniPoly::new(self.field, vec![]);
        }
        let mut out = vec![self.field.zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        UniPoly::new(self.field, out)
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, d: &UniPoly) -> (UniPoly, UniPoly) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lc_inv = d.coeffs[dd].inv().expect("nonzero leading coefficient");
        let mut rem = self.coeffs.clone();
        let mut quot = vec![self.field.zero(); rem.len().saturating_sub(dd).max(1)];
        while rem.len() > dd && !rem.is_empty() {
            let k = rem.len() - 1 - dd;
            let c = &rem[rem.len() - 1] * &lc_inv;
            for (j, dc) in d.coeffs.iter().enumerate() {
                rem[k + j] = &rem[k + j] - &(&c * dc);
            }
            quot[k] = c;
            while rem.last().is_some_and(Scalar::is_zero) {
                rem.pop();
            }
        }
        (UniPoly::new(self.field, quot), UniPoly::new(self.field, rem))
    }

    pub fn gcd(&self, o: &UniPoly) -> UniPoly {
        let mut a = self.clone();
        let mut b = o.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn divides(&self, o: &UniPoly) -> bool {
        o.div_rem(self).1.is_zero()
    }
}
