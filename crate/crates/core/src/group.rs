//! The unitary group `G = U(2,1)(E/F)` for the antidiagonal form, its standard
//! elements and the filtration subgroups of the two maximal compacts.

use std::array;
use std::fmt;

use thiserror::Error;

use crate::ff::{Fe, Field};
use crate::laurent::{LaurentElem, LaurentError, LocalField};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("constraint x·x̄ + y + ȳ = 0 violated")]
    ConstraintViolated,
    #[error("matrix does not preserve the hermitian form")]
    NotUnitary,
    #[error("element is not in {0}")]
    NotInK(Vertex),
    #[error("no level in [-3, 3] satisfies the filtration scan")]
    ScanExhausted,
    #[error(transparent)]
    Laurent(#[from] LaurentError),
}

/// The two conjugacy classes of maximal compact subgroups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    K0,
    K1,
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::K0 => write!(f, "K0"),
            Vertex::K1 => write!(f, "K1"),
        }
    }
}

impl Vertex {
    pub const ALL: [Vertex; 2] = [Vertex::K0, Vertex::K1];

    /// Exponent `c_v` with `q^{c_v} + 1` neighbours.
    pub fn c(self) -> u32 {
        match self {
            Vertex::K0 => 3,
            Vertex::K1 => 1,
        }
    }

    /// `K` stabilizes `diag(1, 1, t^e)·o³`.
    pub fn scale_exp(self) -> i32 {
        match self {
            Vertex::K0 => 0,
            Vertex::K1 => 1,
        }
    }

    /// Lowest allowed valuation of entry `(i, j)` for membership in `K`.
    pub fn entry_bound(self, i: usize, j: usize) -> i32 {
        let e = [0, 0, self.scale_exp()];
        e[i] - e[j]
    }
}

/// A 3×3 matrix over `F_{q^2}`: images in the finite reductive quotients.
pub type ResMat = [[Fe; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubgroupTag {
    K(Vertex),
    ProP(Vertex),
    IwahoriUpper(Vertex),
    IwahoriLower(Vertex),
    ProPIwahoriUpper(Vertex),
    ProPIwahoriLower(Vertex),
    NLevel(i32),
    NprimeLevel(i32),
    HTorus,
    BUpper,
    BprimeLower,
}

/// A matrix in `G`; entries are Laurent series with tracked precision.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupElem {
    m: [[LaurentElem; 3]; 3],
}

impl GroupElem {
    pub fn identity() -> Self {
        Self::diag(LaurentElem::one(), LaurentElem::one(), LaurentElem::one())
    }

    pub fn diag(a: LaurentElem, b: LaurentElem, c: LaurentElem) -> Self {
        let d = [a, b, c];
        GroupElem { m: array::from_fn(|i| array::from_fn(|j| if i == j { d[i].clone() } else { LaurentElem::zero() })) }
    }

    /// Wraps a matrix after checking `gᵀ β ḡ = β`.
    pub fn new(lf: &LocalField, m: [[LaurentElem; 3]; 3]) -> Result<Self, GroupError> {
        let g = GroupElem { m };
        if lf.is_unitary(&g) {
            Ok(g)
        } else {
            Err(GroupError::NotUnitary)
        }
    }

    pub fn from_entries_unchecked(m: [[LaurentElem; 3]; 3]) -> Self {
        GroupElem { m }
    }

    pub fn entry(&self, i: usize, j: usize) -> &LaurentElem {
        &self.m[i][j]
    }

    pub fn entries(&self) -> &[[LaurentElem; 3]; 3] {
        &self.m
    }

    /// The antidiagonal matrix β.
    pub fn beta() -> Self {
        let o = LaurentElem::one;
        let z = LaurentElem::zero;
        GroupElem { m: [[z(), z(), o()], [z(), o(), z()], [o(), z(), z()]] }
    }

    /// `α = diag(t^{-1}, 1, t)`.
    pub fn alpha() -> Self {
        Self::alpha_pow(1)
    }

    /// `α^k`.
    pub fn alpha_pow(k: i32) -> Self {
        Self::diag(LaurentElem::t_pow(-k), LaurentElem::one(), LaurentElem::t_pow(k))
    }

    /// `β′ = β α^{-1}`.
    pub fn beta_prime() -> Self {
        let z = LaurentElem::zero;
        GroupElem {
            m: [[z(), z(), LaurentElem::t_pow(-1)], [z(), LaurentElem::one(), z()], [LaurentElem::t_pow(1), z(), z()]],
        }
    }

    /// The Weyl element of `K`: β for `K0`, β′ for `K1`.
    pub fn beta_k(v: Vertex) -> Self {
        match v {
            Vertex::K0 => Self::beta(),
            Vertex::K1 => Self::beta_prime(),
        }
    }

    /// Whether the matrix is upper unipotent with exactly known zeros below the diagonal.
    fn is_upper_unipotent(&self) -> bool {
        (0..3).all(|i| {
            (0..i).all(|j| self.m[i][j].is_zero() && self.m[i][j].is_exact())
                && self.m[i][i] == LaurentElem::one()
        })
    }

    fn is_lower_unipotent(&self) -> bool {
        (0..3).all(|i| {
            (i + 1..3).all(|j| self.m[i][j].is_zero() && self.m[i][j].is_exact())
                && self.m[i][i] == LaurentElem::one()
        })
    }
}

/// Group operations are methods of the local field context.
impl LocalField {
    pub fn mat_mul(&self, a: &GroupElem, b: &GroupElem) -> GroupElem {
        GroupElem {
            m: array::from_fn(|i| {
                array::from_fn(|j| {
                    let mut s = self.mul(&a.m[i][0], &b.m[0][j]);
                    for k in 1..3 {
                        s = self.add(&s, &self.mul(&a.m[i][k], &b.m[k][j]));
                    }
                    s
                })
            }),
        }
    }

    /// Product of a sequence of elements, left to right.
    pub fn prod(&self, gs: &[&GroupElem]) -> GroupElem {
        let mut acc = GroupElem::identity();
        for g in gs {
            acc = self.mat_mul(&acc, g);
        }
        acc
    }

    /// `g^{-1} = β ḡᵀ β`, exact.
    pub fn inverse(&self, g: &GroupElem) -> GroupElem {
        GroupElem { m: array::from_fn(|i| array::from_fn(|j| self.conj_series(&g.m[2 - j][2 - i]))) }
    }

    pub fn conj_mat(&self, g: &GroupElem) -> GroupElem {
        GroupElem { m: array::from_fn(|i| array::from_fn(|j| self.conj_series(&g.m[i][j]))) }
    }

    /// `gᵀ β ḡ = β` to known precision.
    pub fn is_unitary(&self, g: &GroupElem) -> bool {
        // (gᵀ β ḡ)_{ij} = Σ_k g_{k i} conj(g_{2-k, j}).
        for i in 0..3 {
            for j in 0..3 {
                let mut s = LaurentElem::zero();
                for k in 0..3 {
                    s = self.add(&s, &self.mul(&g.m[k][i], &self.conj_series(&g.m[2 - k][j])));
                }
                if i + j == 2 {
                    s = self.sub(&s, &LaurentElem::one());
                }
                if !s.is_zero() {
                    return false;
                }
            }
        }
        true
    }

    /// Whether two elements agree to known precision.
    pub fn eq_known(&self, a: &GroupElem, b: &GroupElem) -> bool {
        (0..3).all(|i| (0..3).all(|j| self.sub(&a.m[i][j], &b.m[i][j]).is_zero()))
    }

    /// `x x̄ + y + ȳ`.
    fn n_constraint(&self, x: &LaurentElem, y: &LaurentElem) -> LaurentElem {
        let xx = self.mul(x, &self.conj_series(x));
        self.add(&xx, &self.add(y, &self.conj_series(y)))
    }

    /// `n(x, y)`: upper unipotent with entries `x, y, -x̄`.
    pub fn make_n(&self, x: &LaurentElem, y: &LaurentElem) -> Result<GroupElem, GroupError> {
        if !self.n_constraint(x, y).is_zero() {
            return Err(GroupError::ConstraintViolated);
        }
        Ok(self.make_n_unchecked(x, y))
    }

    fn make_n_unchecked(&self, x: &LaurentElem, y: &LaurentElem) -> GroupElem {
        let o = LaurentElem::one;
        let z = LaurentElem::zero;
        GroupElem { m: [[o(), x.clone(), y.clone()], [z(), o(), self.neg(&self.conj_series(x))], [z(), z(), o()]] }
    }

    /// `n′(x, y) = β n(-x̄, y) β`: lower unipotent.
    pub fn make_nprime(&self, x: &LaurentElem, y: &LaurentElem) -> Result<GroupElem, GroupError> {
        if !self.n_constraint(x, y).is_zero() {
            return Err(GroupError::ConstraintViolated);
        }
        Ok(self.make_nprime_unchecked(x, y))
    }

    fn make_nprime_unchecked(&self, x: &LaurentElem, y: &LaurentElem) -> GroupElem {
        let o = LaurentElem::one;
        let z = LaurentElem::zero;
        GroupElem { m: [[o(), z(), z()], [x.clone(), o(), z()], [y.clone(), self.neg(&self.conj_series(x)), o()]] }
    }

    /// `n(x, -x x̄/2 + z)`.
    pub fn n_from_xz(&self, x: &LaurentElem, z: &LaurentElem) -> GroupElem {
        let y = self.add(&self.neg(&self.halve(&self.mul(x, &self.conj_series(x)))), z);
        self.make_n_unchecked(x, &y)
    }

    /// `n′(x, -x x̄/2 + z)`.
    pub fn nprime_from_xz(&self, x: &LaurentElem, z: &LaurentElem) -> GroupElem {
        let y = self.add(&self.neg(&self.halve(&self.mul(x, &self.conj_series(x)))), z);
        self.make_nprime_unchecked(x, &y)
    }

    /// `h(x) = diag(x, -x̄/x, x̄^{-1})`.
    pub fn make_h(&self, x: &LaurentElem) -> Result<GroupElem, GroupError> {
        let xb = self.conj_series(x);
        let xinv = self.invert(x)?;
        let xbinv = self.invert(&xb)?;
        Ok(GroupElem::diag(x.clone(), self.neg(&self.mul(&xb, &xinv)), xbinv))
    }

    /// Both sides of `β n(x,y) = n(ȳ⁻¹x, y⁻¹) h(ȳ⁻¹) n′(-ȳ⁻¹x̄, y⁻¹)`.
    pub fn identity_2_1_sides(&self, x: &LaurentElem, y: &LaurentElem) -> Result<(GroupElem, GroupElem), GroupError> {
        let n = self.make_n(x, y)?;
        let lhs = self.mat_mul(&GroupElem::beta(), &n);
        let yinv = self.invert(y)?;
        let ybinv = self.conj_series(&yinv);
        let a = self.mul(&ybinv, x);
        let b = self.neg(&self.mul(&ybinv, &self.conj_series(x)));
        let rhs = self.prod(&[&self.make_n_unchecked(&a, &yinv), &self.make_h(&ybinv)?, &self.make_nprime_unchecked(&b, &yinv)]);
        Ok((lhs, rhs))
    }

    /// A random pair `(x, y)` with `y + ȳ = −x x̄` and `y ≠ 0`, known to precision `prec`.
    pub fn random_valid_xy<R: rand::Rng>(&self, rng: &mut R, prec: i32) -> (LaurentElem, LaurentElem) {
        let f = self.residue_field().clone();
        let tz = f.trace_zero_elements();
        loop {
            let xv = rng.gen_range(-3..4);
            let x = LaurentElem::exact(xv, (0..6).map(|_| Fe(rng.gen_range(0..f.order()))).collect());
            let z = LaurentElem::exact(2 * xv - 1, (0..8).map(|_| tz[rng.gen_range(0..tz.len())]).collect());
            let y = self.add(&self.neg(&self.halve(&self.mul(&x, &self.conj_series(&x)))), &z);
            if !y.is_zero() {
                return (x.truncate(prec), y.truncate(prec));
            }
        }
    }

    /// Checks identity (2.1) for one pair.
    pub fn verify_identity_2_1(&self, x: &LaurentElem, y: &LaurentElem) -> Result<bool, GroupError> {
        let (l, r) = self.identity_2_1_sides(x, y)?;
        Ok(self.eq_known(&l, &r))
    }

    /// Reduction `K → Γ_K`. For `K0` the entries mod t; for `K1` the
    /// `U(1,1) × U(1)` block read off from the outer corners and the centre.
    pub fn reduce(&self, g: &GroupElem, v: Vertex) -> Result<ResMat, GroupError> {
        if !self.in_k(g, v)? {
            return Err(GroupError::NotInK(v));
        }
        Ok(self.reduce_unchecked(g, v))
    }

    pub(crate) fn reduce_unchecked(&self, g: &GroupElem, v: Vertex) -> ResMat {
        let c = |i: usize, j: usize, e: i32| g.m[i][j].coeff(e).expect("precision checked by membership");
        match v {
            Vertex::K0 => array::from_fn(|i| array::from_fn(|j| c(i, j, 0))),
            Vertex::K1 => {
                let z = Fe::ZERO;
                [[c(0, 0, 0), z, c(0, 2, -1)], [z, c(1, 1, 0), z], [c(2, 0, 1), z, c(2, 2, 0)]]
            }
        }
    }

    /// Membership in `K_v` by entrywise valuation bounds.
    pub fn in_k(&self, g: &GroupElem, v: Vertex) -> Result<bool, GroupError> {
        for i in 0..3 {
            for j in 0..3 {
                let b = v.entry_bound(i, j);
                // Need the residue coefficient at b as well for the reduction.
                if !g.m[i][j].valuation_at_least(b)? {
                    return Ok(false);
                }
                g.m[i][j].coeff(b)?;
            }
        }
        Ok(true)
    }

    pub fn is_member(&self, g: &GroupElem, tag: SubgroupTag) -> Result<bool, GroupError> {
        use SubgroupTag::*;
        let res = |v: Vertex| -> Result<Option<ResMat>, GroupError> {
            Ok(if self.in_k(g, v)? { Some(self.reduce_unchecked(g, v)) } else { None })
        };
        Ok(match tag {
            K(v) => self.in_k(g, v)?,
            ProP(v) => res(v)?.is_some_and(|r| r == res_identity()),
            IwahoriUpper(v) => res(v)?.is_some_and(|r| is_res_upper(&r, false)),
            IwahoriLower(v) => res(v)?.is_some_and(|r| is_res_upper(&res_transpose(&r), false)),
            ProPIwahoriUpper(v) => res(v)?.is_some_and(|r| is_res_upper(&r, true)),
            ProPIwahoriLower(v) => res(v)?.is_some_and(|r| is_res_upper(&res_transpose(&r), true)),
            NLevel(k) => g.is_upper_unipotent() && g.m[0][2].valuation_at_least(k)?,
            NprimeLevel(k) => g.is_lower_unipotent() && g.m[2][0].valuation_at_least(k)?,
            HTorus => (0..3).all(|i| (0..3).all(|j| i == j || (g.m[i][j].is_zero() && g.m[i][j].is_exact()))),
            BUpper => (0..3).all(|i| (0..i).all(|j| g.m[i][j].is_zero() && g.m[i][j].is_exact())),
            BprimeLower => (0..3).all(|i| (i + 1..3).all(|j| g.m[i][j].is_zero() && g.m[i][j].is_exact())),
        })
    }

    /// Coset representatives `n(x, -x x̄/2 + z)` of `N_a / N_b`.
    pub fn enumerate_n_quotient(&self, a: i32, b: i32) -> Vec<GroupElem> {
        self.quotient_params(a, b).iter().map(|(x, z)| self.n_from_xz(x, z)).collect()
    }

    /// Coset representatives of `N′_a / N′_b`.
    pub fn enumerate_nprime_quotient(&self, a: i32, b: i32) -> Vec<GroupElem> {
        self.quotient_params(a, b).iter().map(|(x, z)| self.nprime_from_xz(x, z)).collect()
    }

    /// The `(x, z)` parameters: `x` with exponents in `[⌈a/2⌉, ⌈b/2⌉)`,
    /// `z` trace-zero with exponents in `[a, b)`. Ordered by `x` then `z`,
    /// coefficients counted in the field's element order.
    pub fn quotient_params(&self, a: i32, b: i32) -> Vec<(LaurentElem, LaurentElem)> {
        assert!(a <= b);
        let f = self.residue_field();
        let (xa, xb) = (ceil_half(a), ceil_half(b));
        let xs = series_product(&f.elements().collect::<Vec<_>>(), xa, (xb - xa) as usize);
        let zs = series_product(&f.trace_zero_elements(), a, (b - a) as usize);
        let mut out = Vec::with_capacity(xs.len() * zs.len());
        for x in &xs {
            for z in &zs {
                out.push((x.clone(), z.clone()));
            }
        }
        out
    }

    /// `(n_K, m_K)` with `N ∩ I_{1,K} = N_{n_K}` and `N′ ∩ I_{1,K} = N′_{m_K}`,
    /// by scanning levels in `[-3, 3]`.
    pub fn compute_nk_mk(&self, v: Vertex) -> Result<(i32, i32), GroupError> {
        let scan = |upper: bool| -> Result<i32, GroupError> {
            let tag = SubgroupTag::ProPIwahoriUpper(v);
            let gens = |a: i32, b: i32| {
                if upper {
                    self.enumerate_n_quotient(a, b)
                } else {
                    self.enumerate_nprime_quotient(a, b)
                }
            };
            for k in -3..=3 {
                let mut inside = true;
                for g in gens(k, k + 3) {
                    if !self.is_member(&g, tag)? {
                        inside = false;
                        break;
                    }
                }
                if !inside {
                    continue;
                }
                let mut below_outside = false;
                for g in gens(k - 1, k) {
                    if !self.is_member(&g, tag)? {
                        below_outside = true;
                        break;
                    }
                }
                if below_outside {
                    return Ok(k);
                }
            }
            Err(GroupError::ScanExhausted)
        };
        Ok((scan(true)?, scan(false)?))
    }

    /// Renders a matrix with one row per line.
    pub fn format_elem(&self, g: &GroupElem) -> String {
        g.m.iter()
            .map(|r| r.iter().map(|e| self.format(e)).collect::<Vec<_>>().join(", "))
            .map(|r| format!("[{r}]"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// `⌈a/2⌉` for any sign of `a`.
pub fn ceil_half(a: i32) -> i32 {
    (a + 1).div_euclid(2)
}

/// Every exact polynomial `Σ_{i<len} c_i t^{start+i}` with `c_i` drawn from `digits`.
fn series_product(digits: &[Fe], start: i32, len: usize) -> Vec<LaurentElem> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * digits.len());
        for prefix in &out {
            for &d in digits {
                let mut v: Vec<Fe> = prefix.clone();
                v.push(d);
                next.push(v);
            }
        }
        out = next;
    }
    out.into_iter().map(|c| LaurentElem::exact(start, c)).collect()
}

pub fn res_identity() -> ResMat {
    array::from_fn(|i| array::from_fn(|j| if i == j { Fe::ONE } else { Fe::ZERO }))
}

pub fn res_transpose(a: &ResMat) -> ResMat {
    array::from_fn(|i| array::from_fn(|j| a[j][i]))
}

fn is_res_upper(r: &ResMat, unipotent: bool) -> bool {
    (0..3).all(|i| (0..i).all(|j| r[i][j].is_zero()) && (!unipotent || r[i][i] == Fe::ONE))
}

pub fn res_mul(f: &Field, a: &ResMat, b: &ResMat) -> ResMat {
    array::from_fn(|i| {
        array::from_fn(|j| {
            let mut s = Fe::ZERO;
            for k in 0..3 {
                s = f.add(s, f.mul(a[i][k], b[k][j]));
            }
            s
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lf() -> LocalField {
        LocalField::new(Field::with_degree(3, 2).unwrap(), 24)
    }

    #[test]
    fn identity_2_1_random_samples() {
        let l = lf();
        let f = l.residue_field().clone();
        let i = f.from_coeffs(&[0, 1]);
        assert!(l.verify_identity_2_1(&LaurentElem::zero(), &LaurentElem::constant(i)).unwrap());
        assert!(l.verify_identity_2_1(&LaurentElem::zero(), &LaurentElem::monomial(i, 2)).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let (x, y) = l.random_valid_xy(&mut rng, 20);
            assert!(l.verify_identity_2_1(&x, &y).unwrap());
        }
    }

    #[test]
    fn standard_elements() {
        let l = lf();
        let (a, b, bp) = (GroupElem::alpha(), GroupElem::beta(), GroupElem::beta_prime());
        for g in [&a, &b, &bp] {
            assert!(l.is_unitary(g));
        }
        assert_eq!(l.mat_mul(&b, &b), GroupElem::identity());
        assert_eq!(l.mat_mul(&bp, &bp), GroupElem::identity());
        assert_eq!(l.prod(&[&b, &a, &b]), GroupElem::alpha_pow(-1));
        assert_eq!(l.prod(&[&bp, &a, &bp]), GroupElem::alpha_pow(-1));
        assert_eq!(l.mat_mul(&b, &GroupElem::alpha_pow(-1)), bp);
        assert!(l.is_member(&b, SubgroupTag::K(Vertex::K0)).unwrap());
        assert!(l.is_member(&bp, SubgroupTag::K(Vertex::K1)).unwrap());
        assert!(!l.is_member(&a, SubgroupTag::K(Vertex::K0)).unwrap());
        assert!(!l.is_member(&bp, SubgroupTag::K(Vertex::K0)).unwrap());
    }

    #[test]
    fn n_group_law_and_alpha_conjugation() {
        let l = lf();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let (x, y) = l.random_valid_xy(&mut rng, 40);
            let (x2, y2) = l.random_valid_xy(&mut rng, 40);
            let n = l.make_n(&x, &y).unwrap();
            let n2 = l.make_n(&x2, &y2).unwrap();
            let prod = l.mat_mul(&n, &n2);
            let yy = l.sub(&l.add(&y, &y2), &l.mul(&x, &l.conj_series(&x2)));
            assert!(l.eq_known(&prod, &l.make_n(&l.add(&x, &x2), &yy).unwrap()));
            let ninv = l.make_n(&l.neg(&x), &l.conj_series(&y)).unwrap();
            assert!(l.eq_known(&l.inverse(&n), &ninv));
            let conj = l.prod(&[&GroupElem::alpha(), &n, &GroupElem::alpha_pow(-1)]);
            let want = l.make_n(&x.shift(-1), &y.shift(-2)).unwrap();
            assert!(l.eq_known(&conj, &want));
            let bnb = l.prod(&[&GroupElem::beta(), &n, &GroupElem::beta()]);
            assert!(l.eq_known(&bnb, &l.make_nprime(&l.neg(&l.conj_series(&x)), &y).unwrap()));
            let np = l.make_nprime(&x, &y).unwrap();
            let conj = l.prod(&[&GroupElem::alpha_pow(-1), &np, &GroupElem::alpha()]);
            assert!(l.eq_known(&conj, &l.make_nprime(&x.shift(-1), &y.shift(-2)).unwrap()));
        }
    }

    #[test]
    fn make_n_constraint() {
        let l = lf();
        let f = l.residue_field().clone();
        assert_eq!(l.make_n(&LaurentElem::zero(), &LaurentElem::zero()).unwrap(), GroupElem::identity());
        for z in f.trace_zero_elements() {
            assert!(l.make_n(&LaurentElem::zero(), &LaurentElem::constant(z)).is_ok());
        }
        // y + ȳ = -1 forces y = 1 + z at p = 3.
        let mut sols = Vec::new();
        for y in f.elements() {
            if l.make_n(&LaurentElem::one(), &LaurentElem::constant(y)).is_ok() {
                sols.push(y);
            }
        }
        let mut want: Vec<Fe> = f.trace_zero_elements().iter().map(|&z| f.add(Fe::ONE, z)).collect();
        want.sort();
        sols.sort();
        assert_eq!(sols, want);
        assert_eq!(
            l.make_n(&LaurentElem::one(), &LaurentElem::zero()),
            Err(GroupError::ConstraintViolated)
        );
    }

    #[test]
    fn quotient_counts() {
        let l = lf();
        assert_eq!(l.enumerate_n_quotient(3, 3), vec![GroupElem::identity()]);
        assert_eq!(l.enumerate_n_quotient(0, 1).len(), 27);
        assert_eq!(l.enumerate_n_quotient(1, 2).len(), 3);
        assert_eq!(l.enumerate_n_quotient(0, 2).len(), 81);
        assert_eq!(l.enumerate_n_quotient(-1, 1).len(), 81);
        assert_eq!(l.enumerate_nprime_quotient(2, 3).len(), 27);
    }

    #[test]
    fn nk_mk_scan() {
        let l = lf();
        assert_eq!(l.compute_nk_mk(Vertex::K0).unwrap(), (0, 1));
        assert_eq!(l.compute_nk_mk(Vertex::K1).unwrap(), (-1, 2));
    }

    #[test]
    fn reduction_is_multiplicative() {
        let l = lf();
        let f = l.residue_field().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for v in Vertex::ALL {
            let (nk, mk) = l.compute_nk_mk(v).unwrap();
            let mut gens = l.enumerate_n_quotient(nk - 1, nk + 2);
            gens.extend(l.enumerate_nprime_quotient(mk - 1, mk + 2));
            gens.push(GroupElem::beta_k(v));
            let w = l.make_h(&LaurentElem::constant(f.generator())).unwrap();
            gens.push(w);
            gens.retain(|g| l.in_k(g, v).unwrap());
            for _ in 0..200 {
                let a = &gens[rng.gen_range(0..gens.len())];
                let b = &gens[rng.gen_range(0..gens.len())];
                let c = &gens[rng.gen_range(0..gens.len())];
                let g = l.mat_mul(a, b);
                let h = l.mat_mul(b, c);
                let gh = l.mat_mul(&g, &h);
                let lhs = l.reduce(&gh, v).unwrap();
                let rhs = res_mul(&f, &l.reduce(&g, v).unwrap(), &l.reduce(&h, v).unwrap());
                assert_eq!(lhs, rhs);
            }
        }
    }
}
