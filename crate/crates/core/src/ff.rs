//! Finite fields `F_{p^d}` with table-driven arithmetic.
//!
//! Elements are packed as base-`p` digit strings in a `u32` ([`Fe`]); all
//! operations go through a shared [`Field`] context. The residue field
//! `F_{q^2}` of the local field and the coefficient field of the
//! representations are both instances of this type.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest field order for which full addition/multiplication tables are kept.
const TABLE_LIMIT: u32 = 1024;
/// Largest supported field order.
const ORDER_LIMIT: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("p = {0} is not an odd prime")]
    BadCharacteristic(u32),
    #[error("field order {0}^{1} is too large")]
    TooLarge(u32, u32),
    #[error("modulus {0:?} is not irreducible over F_p")]
    Reducible(Vec<u32>),
    #[error("field degree {0} is odd: no conjugation of order two")]
    DegreeMismatch(u32),
    #[error("no embedding of a degree {src} field into a degree {dst} field")]
    NoEmbedding { src: u32, dst: u32 },
}

/// Parameters of `F_p[x]/(modulus)`. The modulus is monic, stored low degree first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u32,
    pub degree: u32,
    pub modulus: Vec<u32>,
}

impl FieldSpec {
    /// The lexicographically least monic irreducible polynomial of the given degree.
    pub fn new(p: u32, degree: u32) -> Result<Self, FieldError> {
        check_prime(p)?;
        if degree == 0 || (p as u64).checked_pow(degree).map_or(true, |n| n > ORDER_LIMIT) {
            return Err(FieldError::TooLarge(p, degree));
        }
        let count = (p as u64).pow(degree);
        for code in 0..count {
            let mut modulus = digits(code, p, degree as usize);
            modulus.push(1);
            if is_irreducible(&modulus, p) {
                return Ok(FieldSpec { p, degree, modulus });
            }
        }
        unreachable!("irreducible polynomials exist in every degree")
    }

    pub fn with_modulus(p: u32, modulus: Vec<u32>) -> Result<Self, FieldError> {
        check_prime(p)?;
        let degree = modulus.len().saturating_sub(1) as u32;
        if degree == 0 || *modulus.last().unwrap() != 1 || modulus.iter().any(|&c| c >= p) {
            return Err(FieldError::Reducible(modulus));
        }
        if !is_irreducible(&modulus, p) {
            return Err(FieldError::Reducible(modulus));
        }
        Ok(FieldSpec { p, degree, modulus })
    }

    pub fn order(&self) -> u32 {
        self.p.pow(self.degree)
    }
}

fn check_prime(p: u32) -> Result<(), FieldError> {
    if p < 3 || p % 2 == 0 || (3..).step_by(2).take_while(|d| d * d <= p).any(|d| p % d == 0) {
        return Err(FieldError::BadCharacteristic(p));
    }
    Ok(())
}

fn digits(mut code: u64, p: u32, len: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push((code % p as u64) as u32);
        code /= p as u64;
    }
    out
}

/// Remainder of `a` modulo the monic `b` over `F_p`.
fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - db;
        if lead != 0 {
            for (i, &c) in b.iter().enumerate() {
                r[shift + i] = (r[shift + i] + p - (lead * c) % p) % p;
            }
        }
        r.pop();
    }
    while r.last() == Some(&0) {
        r.pop();
    }
    r
}

/// Trial division by every monic polynomial of degree at most half the degree.
fn is_irreducible(f: &[u32], p: u32) -> bool {
    let d = f.len() - 1;
    for k in 1..=d / 2 {
        for code in 0..(p as u64).pow(k as u32) {
            let mut g = digits(code, p, k);
            g.push(1);
            if poly_rem(f, &g, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// A field element: base-`p` digits of its coordinates in the power basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Fe(pub u32);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

struct Tables {
    spec: FieldSpec,
    order: u32,
    exp: Vec<u32>,
    log: Vec<u32>,
    add: Option<Vec<u32>>,
    mul: Option<Vec<u32>>,
    neg: Vec<u32>,
    conj: Option<Vec<u32>>,
}

/// Shared arithmetic context for one finite field.
#[derive(Clone)]
pub struct Field(Arc<Tables>);

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{}", self.0.spec.p, self.0.spec.degree)
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.0.spec == other.0.spec
    }
}
impl Eq for Field {}

impl Field {
    pub fn new(spec: FieldSpec) -> Self {
        let p = spec.p;
        let order = spec.order();
        let d = spec.degree as usize;
        // Multiplication by x in the power basis, as a map on packed digits.
        let mul_x = |a: u32| -> u32 {
            let mut c = digits(a as u64, p, d);
            let top = c[d - 1];
            for i in (1..d).rev() {
                c[i] = c[i - 1];
            }
            c[0] = 0;
            for i in 0..d {
                c[i] = (c[i] + p - (top * spec.modulus[i]) % p) % p;
            }
            pack(&c, p)
        };
        let add_slow = |a: u32, b: u32| -> u32 {
            let (x, y) = (digits(a as u64, p, d), digits(b as u64, p, d));
            pack(&x.iter().zip(&y).map(|(u, v)| (u + v) % p).collect::<Vec<_>>(), p)
        };
        let scal = |s: u32, a: u32| -> u32 {
            pack(&digits(a as u64, p, d).iter().map(|u| (u * s) % p).collect::<Vec<_>>(), p)
        };
        let mul_slow = |a: u32, b: u32| -> u32 {
            // Horner in the digits of a.
            let da = digits(a as u64, p, d);
            let mut acc = 0u32;
            for i in (0..d).rev() {
                acc = mul_x(acc);
                acc = add_slow(acc, scal(da[i], b));
            }
            acc
        };
        // Least primitive element.
        let n1 = order - 1;
        let prime_factors = factor(n1);
        let mut gen = 0;
        'search: for cand in 2..order.max(3) {
            if order == 3 && cand == 2 {
                gen = 2;
                break;
            }
            for &r in &prime_factors {
                let mut e = 1u32;
                let mut base = cand;
                let mut k = n1 / r;
                while k > 0 {
                    if k & 1 == 1 {
                        e = mul_slow(e, base);
                    }
                    base = mul_slow(base, base);
                    k >>= 1;
                }
                if e == 1 {
                    continue 'search;
                }
            }
            gen = cand;
            break;
        }
        let mut exp = vec![0u32; n1 as usize];
        let mut log = vec![0u32; order as usize];
        let mut cur = 1u32;
        for i in 0..n1 {
            exp[i as usize] = cur;
            log[cur as usize] = i;
            cur = mul_slow(cur, gen);
        }
        let neg = (0..order).map(|a| scal(p - 1, a)).collect();
        let (add, mul) = if order <= TABLE_LIMIT {
            let mut add = vec![0u32; (order * order) as usize];
            let mut mul = vec![0u32; (order * order) as usize];
            for a in 0..order {
                for b in 0..order {
                    let i = (a * order + b) as usize;
                    add[i] = add_slow(a, b);
                    mul[i] = if a == 0 || b == 0 {
                        0
                    } else {
                        exp[((log[a as usize] + log[b as usize]) % n1) as usize]
                    };
                }
            }
            (Some(add), Some(mul))
        } else {
            (None, None)
        };
        let mut tables = Tables { spec, order, exp, log, add, mul, neg, conj: None };
        if tables.spec.degree % 2 == 0 {
            let q = p.pow(tables.spec.degree / 2);
            let f = Field(Arc::new(Tables { conj: None, ..clone_tables(&tables) }));
            tables.conj = Some((0..order).map(|a| f.pow(Fe(a), q as u64).0).collect());
        }
        Field(Arc::new(tables))
    }

    /// `F_{p^degree}` with the default modulus.
    pub fn with_degree(p: u32, degree: u32) -> Result<Self, FieldError> {
        Ok(Field::new(FieldSpec::new(p, degree)?))
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.0.spec
    }
    pub fn p(&self) -> u32 {
        self.0.spec.p
    }
    pub fn degree(&self) -> u32 {
        self.0.spec.degree
    }
    pub fn order(&self) -> u32 {
        self.0.order
    }

    pub fn elements(&self) -> impl Iterator<Item = Fe> {
        (0..self.0.order).map(Fe)
    }

    /// Image of the integer `n` under `Z -> F_p -> F`.
    pub fn from_int(&self, n: i64) -> Fe {
        Fe(n.rem_euclid(self.p() as i64) as u32)
    }

    /// The element with the given power-basis coordinates.
    pub fn from_coeffs(&self, coeffs: &[u32]) -> Fe {
        let p = self.p();
        let mut c: Vec<u32> = coeffs.iter().map(|&x| x % p).collect();
        c.resize(self.degree() as usize, 0);
        Fe(pack(&c, p))
    }

    pub fn coeffs(&self, a: Fe) -> Vec<u32> {
        digits(a.0 as u64, self.p(), self.degree() as usize)
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        match &self.0.add {
            Some(t) => Fe(t[(a.0 * self.0.order + b.0) as usize]),
            None => {
                let p = self.p();
                let (mut x, mut y, mut out, mut place) = (a.0, b.0, 0u32, 1u32);
                while x > 0 || y > 0 {
                    out += ((x % p + y % p) % p) * place;
                    x /= p;
                    y /= p;
                    place *= p;
                }
                Fe(out)
            }
        }
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        Fe(self.0.neg[a.0 as usize])
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        match &self.0.mul {
            Some(t) => Fe(t[(a.0 * self.0.order + b.0) as usize]),
            None => {
                if a.0 == 0 || b.0 == 0 {
                    return Fe::ZERO;
                }
                let n1 = self.0.order - 1;
                let l = self.0.log[a.0 as usize] + self.0.log[b.0 as usize];
                Fe(self.0.exp[(l % n1) as usize])
            }
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: Fe) -> Option<Fe> {
        if a.is_zero() {
            return None;
        }
        let n1 = self.0.order - 1;
        let l = self.0.log[a.0 as usize];
        Some(Fe(self.0.exp[((n1 - l) % n1) as usize]))
    }

    pub fn div(&self, a: Fe, b: Fe) -> Option<Fe> {
        self.inv(b).map(|bi| self.mul(a, bi))
    }

    pub fn pow(&self, a: Fe, e: u64) -> Fe {
        if e == 0 {
            return Fe::ONE;
        }
        if a.is_zero() {
            return Fe::ZERO;
        }
        let n1 = (self.0.order - 1) as u64;
        let l = (self.0.log[a.0 as usize] as u64 * (e % n1)) % n1;
        Fe(self.0.exp[l as usize])
    }

    /// The fixed primitive element.
    pub fn generator(&self) -> Fe {
        Fe(self.0.exp[1 % self.0.exp.len()])
    }

    /// Discrete log to the base [`Field::generator`].
    pub fn log(&self, a: Fe) -> Option<u32> {
        (!a.is_zero()).then(|| self.0.log[a.0 as usize])
    }

    pub fn exp(&self, k: u64) -> Fe {
        let n1 = (self.0.order - 1) as u64;
        Fe(self.0.exp[(k % n1) as usize])
    }

    pub fn mult_order(&self, a: Fe) -> Option<u64> {
        let n1 = (self.0.order - 1) as u64;
        let l = self.log(a)? as u64;
        Some(n1 / gcd(n1, l))
    }

    /// The involution `x -> x^{p^{d/2}}` of an even-degree field.
    pub fn conjugate(&self, a: Fe) -> Result<Fe, FieldError> {
        match &self.0.conj {
            Some(t) => Ok(Fe(t[a.0 as usize])),
            None => Err(FieldError::DegreeMismatch(self.degree())),
        }
    }

    /// Conjugation without the degree check; panics on odd degree.
    #[inline]
    pub fn conj(&self, a: Fe) -> Fe {
        Fe(self.0.conj.as_ref().expect("conjugation needs even degree")[a.0 as usize])
    }

    pub fn norm(&self, a: Fe) -> Fe {
        self.mul(a, self.conj(a))
    }

    /// Whether `a` lies in the subfield fixed by conjugation.
    pub fn is_real(&self, a: Fe) -> bool {
        self.conj(a) == a
    }

    pub fn half(&self) -> Fe {
        self.inv(self.from_int(2)).expect("odd characteristic")
    }

    /// Splits `y = a + z` with `a` conjugation-fixed and `z` of trace zero.
    pub fn decompose_trace(&self, y: Fe) -> (Fe, Fe) {
        let a = self.mul(self.half(), self.add(y, self.conj(y)));
        (a, self.sub(y, a))
    }

    /// Elements with `conj(z) = -z`, in increasing order.
    pub fn trace_zero_elements(&self) -> Vec<Fe> {
        self.elements().filter(|&z| self.conj(z) == self.neg(z)).collect()
    }

    /// Elements fixed by conjugation, in increasing order.
    pub fn real_elements(&self) -> Vec<Fe> {
        self.elements().filter(|&z| self.is_real(z)).collect()
    }

    /// The ring embedding into `target` sending `x` to the least root of this field's modulus.
    pub fn embedding_into(&self, target: &Field) -> Result<Embedding, FieldError> {
        let (src, dst) = (self.degree(), target.degree());
        if self.p() != target.p() || dst % src != 0 {
            return Err(FieldError::NoEmbedding { src, dst });
        }
        let modulus = &self.spec().modulus;
        let root = target
            .elements()
            .find(|&r| {
                let mut acc = Fe::ZERO;
                for &c in modulus.iter().rev() {
                    acc = target.add(target.mul(acc, r), target.from_int(c as i64));
                }
                acc.is_zero()
            })
            .ok_or(FieldError::NoEmbedding { src, dst })?;
        let image = self
            .elements()
            .map(|a| {
                let mut acc = Fe::ZERO;
                for &c in self.coeffs(a).iter().rev() {
                    acc = target.add(target.mul(acc, root), target.from_int(c as i64));
                }
                acc
            })
            .collect();
        Ok(Embedding { image })
    }

    pub fn embed(&self, a: Fe, target: &Field) -> Result<Fe, FieldError> {
        Ok(self.embedding_into(target)?.apply(a))
    }

    pub fn format(&self, a: Fe) -> String {
        if self.degree() == 1 {
            return a.0.to_string();
        }
        let c = self.coeffs(a);
        let terms: Vec<String> = c
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0)
            .map(|(i, &x)| match (i, x) {
                (0, x) => x.to_string(),
                (1, 1) => "a".to_string(),
                (1, x) => format!("{x}a"),
                (i, 1) => format!("a^{i}"),
                (i, x) => format!("{x}a^{i}"),
            })
            .collect();
        if terms.is_empty() {
            "0".into()
        } else if terms.len() == 1 {
            terms[0].clone()
        } else {
            format!("({})", terms.join("+"))
        }
    }
}

fn clone_tables(t: &Tables) -> Tables {
    Tables {
        spec: t.spec.clone(),
        order: t.order,
        exp: t.exp.clone(),
        log: t.log.clone(),
        add: t.add.clone(),
        mul: t.mul.clone(),
        neg: t.neg.clone(),
        conj: t.conj.clone(),
    }
}

/// A fixed field embedding, tabulated.
#[derive(Debug, Clone)]
pub struct Embedding {
    image: Vec<Fe>,
}

impl Embedding {
    pub fn apply(&self, a: Fe) -> Fe {
        self.image[a.0 as usize]
    }
}

fn pack(c: &[u32], p: u32) -> u32 {
    c.iter().rev().fold(0, |acc, &x| acc * p + x)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn factor(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f9() -> Field {
        Field::with_degree(3, 2).unwrap()
    }

    #[test]
    fn default_modulus_is_least_irreducible() {
        assert_eq!(FieldSpec::new(3, 2).unwrap().modulus, vec![1, 0, 1]);
        assert_eq!(FieldSpec::new(3, 1).unwrap().modulus, vec![0, 1]);
        assert!(FieldSpec::with_modulus(3, vec![2, 0, 1]).is_err()); // x^2 - 1
        assert!(FieldSpec::new(2, 2).is_err());
    }

    #[test]
    fn conjugate_of_i_is_minus_i() {
        let f = f9();
        let i = f.from_coeffs(&[0, 1]);
        assert_eq!(f.mul(i, i), f.from_int(-1));
        assert_eq!(f.conjugate(i).unwrap(), f.neg(i));
        assert_eq!(f.conjugate(Fe::ONE).unwrap(), Fe::ONE);
        let f3 = Field::with_degree(3, 1).unwrap();
        assert_eq!(f3.conjugate(Fe::ONE), Err(FieldError::DegreeMismatch(1)));
    }

    #[test]
    fn conjugation_is_involution_with_q_fixed_points() {
        let f = f9();
        for x in f.elements() {
            assert_eq!(f.conj(f.conj(x)), x);
            assert!(f.is_real(f.norm(x)));
        }
        assert_eq!(f.real_elements().len(), 3);
        let norms: std::collections::BTreeSet<_> =
            f.elements().filter(|x| !x.is_zero()).map(|x| f.norm(x)).collect();
        assert_eq!(norms.len(), 2);
    }

    #[test]
    fn decompose_trace_is_bijective() {
        let f = f9();
        let tz = f.trace_zero_elements();
        assert_eq!(tz.len(), 3);
        let i = f.from_coeffs(&[0, 1]);
        assert_eq!(f.decompose_trace(Fe::ONE), (Fe::ONE, Fe::ZERO));
        assert_eq!(f.decompose_trace(i), (Fe::ZERO, i));
        let mut seen = std::collections::HashSet::new();
        for y in f.elements() {
            let (a, z) = f.decompose_trace(y);
            assert_eq!(f.add(a, z), y);
            assert!(f.is_real(a));
            assert_eq!(f.add(f.conj(z), z), Fe::ZERO);
            assert!(seen.insert((a, z)));
        }
    }

    #[test]
    fn embeddings_are_homomorphisms() {
        let f9 = f9();
        let big = Field::with_degree(3, 8).unwrap();
        let e = f9.embedding_into(&big).unwrap();
        assert_eq!(e.apply(Fe::ZERO), Fe::ZERO);
        assert_eq!(e.apply(Fe::ONE), Fe::ONE);
        for a in f9.elements() {
            for b in f9.elements() {
                assert_eq!(e.apply(f9.mul(a, b)), big.mul(e.apply(a), e.apply(b)));
                assert_eq!(e.apply(f9.add(a, b)), big.add(e.apply(a), e.apply(b)));
            }
        }
        // The image of a generator of F_9^x has order 8.
        assert_eq!(big.mult_order(e.apply(f9.generator())), Some(8));
        let f27 = Field::with_degree(3, 3).unwrap();
        assert!(f27.embedding_into(&f9).is_err());
    }

    #[test]
    fn large_field_uses_log_arithmetic() {
        let f = Field::with_degree(3, 8).unwrap();
        assert_eq!(f.order(), 6561);
        let g = f.generator();
        assert_eq!(f.mult_order(g), Some(6560));
        let a = f.from_coeffs(&[1, 2, 0, 1, 0, 0, 2, 1]);
        let b = f.from_coeffs(&[2, 2, 1, 0, 0, 1, 0, 1]);
        assert_eq!(f.sub(f.add(a, b), b), a);
        assert_eq!(f.mul(a, f.inv(a).unwrap()), Fe::ONE);
        for x in [a, b, g] {
            assert_eq!(f.conj(f.conj(x)), x);
        }
    }
}
