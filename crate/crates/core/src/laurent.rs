//! Truncated Laurent series over `F_{q^2}`: the local field `E = F_{q^2}((t))`.
//!
//! An element is either exact (a Laurent polynomial) or known modulo `t^N`.
//! Precision is propagated through every operation and running out of it is
//! a hard error.

use std::cmp::{max, min};

use thiserror::Error;

use crate::ff::{Fe, Field};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LaurentError {
    #[error("element is zero to known precision")]
    NotInvertible,
    #[error("insufficient precision: need t^{needed}, known to t^{known}")]
    InsufficientPrecision { needed: i32, known: i32 },
    #[error("negative valuation {0} where an integral element was required")]
    NegativeValuation(i32),
}

/// `Σ coeffs[i] t^{val+i} + O(t^prec)`; `prec = None` means exact.
///
/// Normalized: the first stored coefficient is nonzero, exact elements carry
/// no trailing zeros, truncated ones store nothing at or beyond `prec`. The
/// zero element has no coefficients and `val = 0`, so derived equality is
/// equality of representations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LaurentElem {
    val: i32,
    coeffs: Vec<Fe>,
    prec: Option<i32>,
}

impl LaurentElem {
    pub fn zero() -> Self {
        LaurentElem { val: 0, coeffs: Vec::new(), prec: None }
    }

    pub fn one() -> Self {
        Self::constant(Fe::ONE)
    }

    pub fn constant(c: Fe) -> Self {
        Self::monomial(c, 0)
    }

    /// `c·t^e`, exact.
    pub fn monomial(c: Fe, e: i32) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            LaurentElem { val: e, coeffs: vec![c], prec: None }
        }
    }

    /// The uniformizer power `t^e`.
    pub fn t_pow(e: i32) -> Self {
        Self::monomial(Fe::ONE, e)
    }

    /// Exact Laurent polynomial `Σ coeffs[i] t^{start+i}`.
    pub fn exact(start: i32, coeffs: Vec<Fe>) -> Self {
        Self::build(start, coeffs, None)
    }

    /// `Σ coeffs[i] t^{start+i} + O(t^prec)`.
    pub fn truncated(start: i32, coeffs: Vec<Fe>, prec: i32) -> Self {
        Self::build(start, coeffs, Some(prec))
    }

    /// Zero known modulo `t^prec`.
    pub fn zero_to(prec: i32) -> Self {
        LaurentElem { val: 0, coeffs: Vec::new(), prec: Some(prec) }
    }

    fn build(start: i32, mut coeffs: Vec<Fe>, prec: Option<i32>) -> Self {
        if let Some(n) = prec {
            let keep = (n - start).clamp(0, coeffs.len() as i32) as usize;
            coeffs.truncate(keep);
        }
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        let lead = coeffs.iter().position(|c| !c.is_zero());
        match lead {
            None => LaurentElem { val: 0, coeffs: Vec::new(), prec },
            Some(k) => {
                coeffs.drain(..k);
                LaurentElem { val: start + k as i32, coeffs, prec }
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        self.prec.is_none()
    }

    /// Absolute precision `N` (known modulo `t^N`); `None` when exact.
    pub fn precision(&self) -> Option<i32> {
        self.prec
    }

    /// Valuation of the leading known term; `None` when zero to known precision.
    pub fn valuation(&self) -> Option<i32> {
        (!self.coeffs.is_empty()).then_some(self.val)
    }

    /// A lower bound for the true valuation: the valuation, or the precision for zero.
    pub fn val_lower(&self) -> Option<i32> {
        match (self.valuation(), self.prec) {
            (Some(v), _) => Some(v),
            (None, p) => p,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of `t^i`.
    pub fn coeff(&self, i: i32) -> Result<Fe, LaurentError> {
        if let Some(n) = self.prec {
            if i >= n {
                return Err(LaurentError::InsufficientPrecision { needed: i + 1, known: n });
            }
        }
        Ok(self.coeff_unchecked(i))
    }

    #[inline]
    fn coeff_unchecked(&self, i: i32) -> Fe {
        let k = i - self.val;
        if k < 0 || k as usize >= self.coeffs.len() {
            Fe::ZERO
        } else {
            self.coeffs[k as usize]
        }
    }

    /// Stored terms as `(exponent, coefficient)` pairs with nonzero coefficient.
    pub fn terms(&self) -> impl Iterator<Item = (i32, Fe)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, &c)| (self.val + i as i32, c))
    }

    /// One past the highest stored exponent.
    pub fn end(&self) -> i32 {
        self.val + self.coeffs.len() as i32
    }

    /// Whether every coefficient of index below `c` vanishes.
    pub fn valuation_at_least(&self, c: i32) -> Result<bool, LaurentError> {
        if let Some(n) = self.prec {
            if n <= c {
                return Err(LaurentError::InsufficientPrecision { needed: c + 1, known: n });
            }
        }
        Ok(self.is_zero() || self.val >= c)
    }

    /// Coefficients of `t^0 .. t^{level-1}` of an integral element.
    pub fn residue(&self, level: i32) -> Result<Vec<Fe>, LaurentError> {
        if let Some(n) = self.prec {
            if n < level {
                return Err(LaurentError::InsufficientPrecision { needed: level, known: n });
            }
        }
        if let Some(v) = self.valuation() {
            if v < 0 {
                return Err(LaurentError::NegativeValuation(v));
            }
        }
        Ok((0..level).map(|i| self.coeff_unchecked(i)).collect())
    }

    /// The element known only modulo `t^n`.
    pub fn truncate(&self, n: i32) -> Self {
        let p = self.prec.map_or(n, |q| min(q, n));
        Self::build(self.val, self.coeffs.clone(), Some(p))
    }

    /// Exact representative of the class modulo `t^n`: drop every term of exponent `>= n`.
    pub fn reduce_mod(&self, n: i32) -> Result<Self, LaurentError> {
        if let Some(q) = self.prec {
            if q < n {
                return Err(LaurentError::InsufficientPrecision { needed: n, known: q });
            }
        }
        Ok(Self::build(self.val, self.coeffs.clone(), Some(n)).into_exact())
    }

    /// Keeps only the terms of exponent `>= n`.
    pub fn high_part(&self, n: i32) -> Self {
        let coeffs: Vec<Fe> = (max(n, self.val)..self.end()).map(|i| self.coeff_unchecked(i)).collect();
        Self::build(max(n, self.val), coeffs, self.prec)
    }

    fn into_exact(mut self) -> Self {
        self.prec = None;
        self
    }

    /// Multiplication by `t^k`.
    pub fn shift(&self, k: i32) -> Self {
        if self.is_zero() {
            return LaurentElem { val: 0, coeffs: Vec::new(), prec: self.prec.map(|p| p + k) };
        }
        LaurentElem { val: self.val + k, coeffs: self.coeffs.clone(), prec: self.prec.map(|p| p + k) }
    }

    /// Agreement of the two elements modulo the smaller of their precisions.
    pub fn eq_known(&self, other: &Self, f: &Field) -> bool {
        f_sub(f, self, other).is_zero()
    }
}

fn min_prec(a: Option<i32>, b: Option<i32>) -> Option<i32> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(min(x, y)),
    }
}

fn f_add(f: &Field, a: &LaurentElem, b: &LaurentElem) -> LaurentElem {
    let prec = min_prec(a.prec, b.prec);
    if a.is_zero() && b.is_zero() {
        return LaurentElem { val: 0, coeffs: Vec::new(), prec };
    }
    let lo = match (a.valuation(), b.valuation()) {
        (Some(x), Some(y)) => min(x, y),
        (Some(x), None) | (None, Some(x)) => x,
        (None, None) => unreachable!(),
    };
    let mut hi = max(a.end(), b.end());
    if let Some(n) = prec {
        hi = min(hi, n);
    }
    if hi <= lo {
        return LaurentElem { val: 0, coeffs: Vec::new(), prec };
    }
    let coeffs = (lo..hi).map(|i| f.add(a.coeff_unchecked(i), b.coeff_unchecked(i))).collect();
    LaurentElem::build(lo, coeffs, prec)
}

fn f_neg(f: &Field, a: &LaurentElem) -> LaurentElem {
    LaurentElem { val: a.val, coeffs: a.coeffs.iter().map(|&c| f.neg(c)).collect(), prec: a.prec }
}

fn f_sub(f: &Field, a: &LaurentElem, b: &LaurentElem) -> LaurentElem {
    f_add(f, a, &f_neg(f, b))
}

fn f_mul(f: &Field, a: &LaurentElem, b: &LaurentElem) -> LaurentElem {
    let prec = match (a.prec, b.prec) {
        (None, None) => None,
        (Some(pa), None) => b.val_lower().map(|vb| pa + vb),
        (None, Some(pb)) => a.val_lower().map(|va| pb + va),
        (Some(pa), Some(pb)) => Some(min(pa + b.val_lower().unwrap(), pb + a.val_lower().unwrap())),
    };
    // An exact zero factor makes the product exactly zero.
    if (a.is_zero() && a.is_exact()) || (b.is_zero() && b.is_exact()) {
        return LaurentElem::zero();
    }
    if a.is_zero() || b.is_zero() {
        return LaurentElem { val: 0, coeffs: Vec::new(), prec };
    }
    let start = a.val + b.val;
    let mut len = a.coeffs.len() + b.coeffs.len() - 1;
    if let Some(n) = prec {
        len = min(len as i32, max(n - start, 0)) as usize;
    }
    let mut out = vec![Fe::ZERO; len];
    for (i, &x) in a.coeffs.iter().enumerate() {
        if i >= len || x.is_zero() {
            continue;
        }
        for (j, &y) in b.coeffs.iter().enumerate().take(len - i) {
            out[i + j] = f.add(out[i + j], f.mul(x, y));
        }
    }
    LaurentElem::build(start, out, prec)
}

/// Arithmetic context for `E = F_{q^2}((t))` with a default working precision.
#[derive(Debug, Clone)]
pub struct LocalField {
    res: Field,
    work_prec: i32,
}

impl LocalField {
    /// `res` must have even degree (it plays the role of `F_{q^2}`).
    pub fn new(res: Field, work_prec: i32) -> Self {
        assert!(res.degree() % 2 == 0, "residue field of E must have even degree");
        LocalField { res, work_prec }
    }

    pub fn residue_field(&self) -> &Field {
        &self.res
    }

    /// Relative precision given to inverses of exact elements.
    pub fn working_precision(&self) -> i32 {
        self.work_prec
    }

    pub fn add(&self, a: &LaurentElem, b: &LaurentElem) -> LaurentElem {
        f_add(&self.res, a, b)
    }
    pub fn sub(&self, a: &LaurentElem, b: &LaurentElem) -> LaurentElem {
        f_sub(&self.res, a, b)
    }
    pub fn neg(&self, a: &LaurentElem) -> LaurentElem {
        f_neg(&self.res, a)
    }
    pub fn mul(&self, a: &LaurentElem, b: &LaurentElem) -> LaurentElem {
        f_mul(&self.res, a, b)
    }

    pub fn scale(&self, c: Fe, a: &LaurentElem) -> LaurentElem {
        if c.is_zero() {
            return match a.prec {
                None => LaurentElem::zero(),
                Some(_) => LaurentElem { val: 0, coeffs: Vec::new(), prec: a.prec },
            };
        }
        LaurentElem { val: a.val, coeffs: a.coeffs.iter().map(|&x| self.res.mul(c, x)).collect(), prec: a.prec }
    }

    /// Coefficientwise Galois conjugation; fixes `F_q((t))`.
    pub fn conj_series(&self, a: &LaurentElem) -> LaurentElem {
        LaurentElem { val: a.val, coeffs: a.coeffs.iter().map(|&x| self.res.conj(x)).collect(), prec: a.prec }
    }

    /// `a / 2`.
    pub fn halve(&self, a: &LaurentElem) -> LaurentElem {
        self.scale(self.res.half(), a)
    }

    /// Multiplicative inverse. Exact inputs are inverted to the working
    /// relative precision; truncated inputs keep their relative precision.
    pub fn invert(&self, a: &LaurentElem) -> Result<LaurentElem, LaurentError> {
        let v = a.valuation().ok_or(LaurentError::NotInvertible)?;
        let rel = match a.prec {
            None => {
                if a.coeffs.len() == 1 {
                    let c = self.res.inv(a.coeffs[0]).unwrap();
                    return Ok(LaurentElem::monomial(c, -v));
                }
                self.work_prec
            }
            Some(n) => n - v,
        };
        if rel <= 0 {
            return Err(LaurentError::InsufficientPrecision { needed: v + 1, known: v + rel });
        }
        let f = &self.res;
        let rel_u = rel as usize;
        let u: Vec<Fe> = (0..rel_u).map(|i| a.coeff_unchecked(v + i as i32)).collect();
        let u0inv = f.inv(u[0]).unwrap();
        let mut w = vec![Fe::ZERO; rel_u];
        w[0] = u0inv;
        for k in 1..rel_u {
            let mut s = Fe::ZERO;
            for i in 1..=k {
                if !u[i].is_zero() {
                    s = f.add(s, f.mul(u[i], w[k - i]));
                }
            }
            w[k] = f.neg(f.mul(s, u0inv));
        }
        Ok(LaurentElem::truncated(-v, w, -v + rel))
    }

    /// Inverse of a unit of `o_E` modulo `t^n`, as an exact polynomial.
    pub fn unit_inverse_mod(&self, a: &LaurentElem, n: i32) -> Result<LaurentElem, LaurentError> {
        if a.valuation() != Some(0) {
            return Err(LaurentError::NotInvertible);
        }
        let x = a.reduce_mod(n)?;
        let inv = self.invert(&x.truncate(n))?;
        inv.reduce_mod(n)
    }

    /// `c_v·t^v + … + O(t^N)`.
    pub fn format(&self, a: &LaurentElem) -> String {
        let mut parts: Vec<String> = a
            .terms()
            .map(|(e, c)| match e {
                0 => self.res.format(c),
                _ => format!("{}·t^{}", self.res.format(c), e),
            })
            .collect();
        if let Some(n) = a.prec {
            parts.push(format!("O(t^{n})"));
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lf() -> LocalField {
        LocalField::new(Field::with_degree(3, 2).unwrap(), 20)
    }

    fn random_elem(rng: &mut ChaCha8Rng, f: &Field, start: i32, len: usize, prec: Option<i32>) -> LaurentElem {
        let c: Vec<Fe> = (0..len).map(|_| Fe(rng.gen_range(0..f.order()))).collect();
        LaurentElem::build(start, c, prec)
    }

    /// Schoolbook product of the full stored truncations, no precision logic.
    fn oracle_mul(f: &Field, a: &LaurentElem, b: &LaurentElem, lo: i32, hi: i32) -> Vec<Fe> {
        (lo..hi)
            .map(|k| {
                let mut s = Fe::ZERO;
                for (i, x) in a.terms() {
                    for (j, y) in b.terms() {
                        if i + j == k {
                            s = f.add(s, f.mul(x, y));
                        }
                    }
                }
                s
            })
            .collect()
    }

    #[test]
    fn invert_monomials_and_geometric_series() {
        let l = lf();
        assert_eq!(l.invert(&LaurentElem::t_pow(1)).unwrap(), LaurentElem::t_pow(-1));
        let x = l.add(&LaurentElem::t_pow(-1), &LaurentElem::one());
        let y = l.invert(&x).unwrap();
        assert_eq!(y.valuation(), Some(1));
        let f = l.residue_field();
        for k in 1..10 {
            let expect = if k % 2 == 1 { Fe::ONE } else { f.from_int(-1) };
            assert_eq!(y.coeff(k).unwrap(), expect);
        }
        assert_eq!(l.invert(&LaurentElem::zero()), Err(LaurentError::NotInvertible));
        assert_eq!(l.invert(&LaurentElem::zero_to(5)), Err(LaurentError::NotInvertible));
    }

    #[test]
    fn unit_times_inverse_is_one_to_precision() {
        let l = lf();
        let f = l.residue_field().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut u = random_elem(&mut rng, &f, 0, 20, Some(20));
            while u.valuation() != Some(0) {
                u = random_elem(&mut rng, &f, 0, 20, Some(20));
            }
            let w = l.invert(&u).unwrap();
            let e = l.sub(&l.mul(&u, &w), &LaurentElem::one());
            assert!(e.is_zero());
            assert!(e.precision().unwrap() >= 16);
            assert_eq!(l.invert(&w).unwrap(), u);
        }
    }

    #[test]
    fn multiplication_precision_matches_oracle() {
        let l = lf();
        let f = l.residue_field().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let (va, vb) = (rng.gen_range(-4..4), rng.gen_range(-4..4));
            let (pa, pb) = (va + rng.gen_range(1..10), vb + rng.gen_range(1..10));
            let a = random_elem(&mut rng, &f, va, (pa - va) as usize, Some(pa));
            let b = random_elem(&mut rng, &f, vb, (pb - vb) as usize, Some(pb));
            let c = l.mul(&a, &b);
            if let (Some(xa), Some(xb)) = (a.valuation(), b.valuation()) {
                assert_eq!(c.precision(), Some(min(pa + xb, pb + xa)));
                let lo = xa + xb;
                let hi = c.precision().unwrap();
                let want = oracle_mul(&f, &a, &b, lo, hi);
                for (k, w) in (lo..hi).zip(want) {
                    assert_eq!(c.coeff(k).unwrap(), w);
                }
            }
            let s = l.add(&a, &b);
            assert_eq!(s.precision(), Some(min(pa, pb)));
        }
    }

    #[test]
    fn valuation_queries_respect_precision() {
        let t2 = LaurentElem::t_pow(2);
        assert_eq!(t2.valuation_at_least(1), Ok(true));
        assert_eq!(LaurentElem::t_pow(-1).valuation_at_least(0), Ok(false));
        let z = LaurentElem::zero_to(6);
        assert_eq!(z.valuation_at_least(5), Ok(true));
        assert!(matches!(z.valuation_at_least(6), Err(LaurentError::InsufficientPrecision { .. })));
    }

    #[test]
    fn residues() {
        let l = lf();
        let x = l.add(&LaurentElem::one(), &LaurentElem::t_pow(2));
        assert_eq!(x.residue(1).unwrap(), vec![Fe::ONE]);
        assert_eq!(LaurentElem::t_pow(1).residue(2).unwrap(), vec![Fe::ZERO, Fe::ONE]);
        assert_eq!(LaurentElem::t_pow(-1).residue(1), Err(LaurentError::NegativeValuation(-1)));
        let f = l.residue_field().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = random_elem(&mut rng, &f, 0, 6, Some(6));
            let b = random_elem(&mut rng, &f, 0, 6, Some(6));
            let r = l.mul(&a, &b).residue(1).unwrap()[0];
            assert_eq!(r, f.mul(a.residue(1).unwrap()[0], b.residue(1).unwrap()[0]));
        }
    }

    #[test]
    fn conjugation_is_a_ring_involution() {
        let l = lf();
        let f = l.residue_field().clone();
        let i = f.from_coeffs(&[0, 1]);
        assert_eq!(l.conj_series(&LaurentElem::t_pow(1)), LaurentElem::t_pow(1));
        assert_eq!(l.conj_series(&LaurentElem::monomial(i, -1)), LaurentElem::monomial(f.neg(i), -1));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let a = random_elem(&mut rng, &f, -3, 8, Some(5));
            let b = random_elem(&mut rng, &f, -2, 8, None);
            assert_eq!(l.conj_series(&l.mul(&a, &b)), l.mul(&l.conj_series(&a), &l.conj_series(&b)));
            assert_eq!(l.conj_series(&l.conj_series(&a)), a);
        }
    }

    #[test]
    fn format_renders_precision() {
        let l = lf();
        let x = LaurentElem::truncated(-1, vec![Fe::ONE, Fe::ZERO, Fe(2)], 4);
        assert_eq!(l.format(&x), "1·t^-1 + 2·t^1 + O(t^4)");
    }
}
