//! The Bruhat–Tits tree of `G`: vertices as lattices in Hermite normal form,
//! canonical representatives of `G/K` and the reduction `g = r·k`.

use std::array;
use std::collections::{HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::ff::Fe;
use crate::group::{ceil_half, GroupElem, GroupError, Vertex};
use crate::laurent::{LaurentElem, LaurentError, LocalField};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Laurent(#[from] LaurentError),
    #[error("coset of radius {radius} lies outside the ball of radius {limit}")]
    OutOfBall { radius: u32, limit: u32 },
    #[error("r⁻¹g is not in K for representative {0}")]
    MembershipFailed(String),
    #[error("two canonical representatives share a lattice: {0} and {1}")]
    CollisionDetected(String, String),
    #[error("hermite normal form failed: {0}")]
    HnfFailed(String),
}

type Mat3 = [[LaurentElem; 3]; 3];

/// An `o_E`-lattice given by its upper triangular Hermite normal form:
/// pivots `t^{a_i}` on the diagonal, entry `(i, j)` reduced modulo `t^{a_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lattice {
    piv: [i32; 3],
    /// Entries `(0,1)`, `(0,2)`, `(1,2)`.
    off: [LaurentElem; 3],
}

impl Lattice {
    pub fn pivots(&self) -> [i32; 3] {
        self.piv
    }

    pub fn entry(&self, i: usize, j: usize) -> LaurentElem {
        match (i, j) {
            _ if i == j => LaurentElem::t_pow(self.piv[i]),
            (0, 1) => self.off[0].clone(),
            (0, 2) => self.off[1].clone(),
            (1, 2) => self.off[2].clone(),
            _ => LaurentElem::zero(),
        }
    }

    pub fn matrix(&self) -> Mat3 {
        array::from_fn(|i| array::from_fn(|j| self.entry(i, j)))
    }

    /// Sum of the pivots: the valuation of the determinant.
    pub fn signature(&self) -> i32 {
        self.piv.iter().sum()
    }

    /// Stable textual key.
    pub fn key(&self, lf: &LocalField) -> String {
        format!(
            "[{},{},{}|{};{};{}]",
            self.piv[0],
            self.piv[1],
            self.piv[2],
            lf.format(&self.off[0]),
            lf.format(&self.off[1]),
            lf.format(&self.off[2])
        )
    }
}

fn mat_mul(lf: &LocalField, a: &Mat3, b: &Mat3) -> Mat3 {
    lf.mat_mul(&GroupElem::from_entries_unchecked(a.clone()), &GroupElem::from_entries_unchecked(b.clone()))
        .entries()
        .clone()
}

fn min_val(m: &Mat3) -> Option<i32> {
    m.iter().flatten().filter_map(|e| e.valuation()).min()
}

/// Exact inverse of an upper triangular matrix with monomial pivots.
fn triangular_inverse(lf: &LocalField, l: &Lattice) -> Mat3 {
    let mut inv: Mat3 = array::from_fn(|_| array::from_fn(|_| LaurentElem::zero()));
    for j in 0..3 {
        inv[j][j] = LaurentElem::t_pow(-l.piv[j]);
        for i in (0..j).rev() {
            let mut s = LaurentElem::zero();
            for k in i + 1..=j {
                s = lf.add(&s, &lf.mul(&l.entry(i, k), &inv[k][j]));
            }
            inv[i][j] = lf.neg(&s.shift(-l.piv[i]));
        }
    }
    inv
}

/// Column Hermite normal form of the lattice spanned by the columns of `a`,
/// given `a⁻¹` to bound the computation modulus.
fn hnf(lf: &LocalField, a: &Mat3, a_inv: &Mat3, det_val: i32) -> Result<Lattice, TreeError> {
    let neg = min_val(a_inv).ok_or_else(|| TreeError::HnfFailed("singular generator matrix".into()))?;
    // t^q o³ is inside the lattice; one extra power keeps pivots below the modulus.
    let q = -neg + 1;
    let mut cols: Vec<[LaurentElem; 3]> = Vec::with_capacity(6);
    for j in 0..3 {
        let mut c: [LaurentElem; 3] = array::from_fn(|_| LaurentElem::zero());
        for i in 0..3 {
            c[i] = a[i][j].reduce_mod(q)?;
        }
        cols.push(c);
    }
    for i in 0..3 {
        cols.push(array::from_fn(|r| if r == i { LaurentElem::t_pow(q - 1) } else { LaurentElem::zero() }));
    }
    let low = cols.iter().flatten().filter_map(|e| e.valuation()).min().unwrap_or(0).min(0);
    let unit_prec = q - low;
    let mut active = vec![true; cols.len()];
    let mut pcols: Vec<[LaurentElem; 3]> = vec![array::from_fn(|_| LaurentElem::zero()); 3];
    let mut piv = [0i32; 3];
    for i in (0..3).rev() {
        let mut best: Option<(i32, usize)> = None;
        for (k, c) in cols.iter().enumerate() {
            if active[k] {
                if let Some(v) = c[i].valuation() {
                    if best.map_or(true, |(bv, _)| v < bv) {
                        best = Some((v, k));
                    }
                }
            }
        }
        let (a_i, p) = best.ok_or_else(|| TreeError::HnfFailed(format!("empty row {i}")))?;
        let unit = cols[p][i].shift(-a_i);
        let uinv = lf.unit_inverse_mod(&unit, unit_prec)?;
        let pc: [LaurentElem; 3] = array::from_fn(|r| lf.mul(&cols[p][r], &uinv).reduce_mod(q).unwrap());
        debug_assert_eq!(pc[i], LaurentElem::t_pow(a_i));
        active[p] = false;
        for k in 0..cols.len() {
            if !active[k] || cols[k][i].is_zero() {
                continue;
            }
            let f = cols[k][i].shift(-a_i);
            for r in 0..3 {
                cols[k][r] = lf.sub(&cols[k][r], &lf.mul(&f, &pc[r])).reduce_mod(q)?;
            }
        }
        piv[i] = a_i;
        pcols[i] = pc;
    }
    for j in 1..3 {
        for i in (0..j).rev() {
            let f = pcols[j][i].high_part(piv[i]).shift(-piv[i]);
            if f.is_zero() {
                continue;
            }
            for r in 0..3 {
                let v = lf.sub(&pcols[j][r], &lf.mul(&f, &pcols[i][r]));
                pcols[j][r] = v.reduce_mod(q)?;
            }
        }
    }
    if piv.iter().sum::<i32>() != det_val {
        return Err(TreeError::HnfFailed(format!("pivots {piv:?} do not match determinant valuation {det_val}")));
    }
    Ok(Lattice { piv, off: [pcols[1][0].clone(), pcols[2][0].clone(), pcols[2][1].clone()] })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Plus,
    Minus,
}

/// `Plus(m, u)` is the coset `u α^{-m} K`, `u ∈ N_{n_K}/N_{n_K+2m}`;
/// `Minus(n, u′)` is `u′ α^n K`, `u′ ∈ N′_{m_K}/N′_{m_K+2n-1}`.
/// The unipotent is stored by its canonical parameters `(x, z)`,
/// `y = -x x̄/2 + z`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CosetRep {
    pub side: Side,
    pub radius: u32,
    pub x: LaurentElem,
    pub z: LaurentElem,
}

impl CosetRep {
    pub fn base() -> Self {
        CosetRep { side: Side::Plus, radius: 0, x: LaurentElem::zero(), z: LaurentElem::zero() }
    }

    pub fn classify(&self) -> (Side, u32) {
        (self.side, self.radius)
    }

    /// Whether the unipotent part is trivial.
    pub fn is_pure(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    pub fn describe(&self, lf: &LocalField) -> String {
        let s = match self.side {
            Side::Plus => "Plus",
            Side::Minus => "Minus",
        };
        format!("{s}({}, x={}, z={})", self.radius, lf.format(&self.x), lf.format(&self.z))
    }
}

impl fmt::Display for CosetRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}({}, {:?}, {:?})", self.side, self.radius, self.x, self.z)
    }
}

/// All cosets of radius at most `R` around the base vertex.
#[derive(Debug, Clone)]
pub struct Ball {
    pub radius: u32,
    pub reps: Vec<CosetRep>,
    pub shell_sizes: Vec<usize>,
    pub lattices: HashMap<Lattice, usize>,
}

/// The tree around the vertex fixed by `K`.
#[derive(Debug, Clone)]
pub struct Tree {
    lf: LocalField,
    v: Vertex,
    nk: i32,
    mk: i32,
    limit: u32,
}

impl Tree {
    /// `limit` bounds the radius accepted by `normal_form`.
    pub fn new(lf: LocalField, v: Vertex, limit: u32) -> Result<Self, TreeError> {
        let (nk, mk) = lf.compute_nk_mk(v)?;
        Ok(Tree { lf, v, nk, mk, limit })
    }

    pub fn lf(&self) -> &LocalField {
        &self.lf
    }
    pub fn vertex(&self) -> Vertex {
        self.v
    }
    pub fn nk(&self) -> i32 {
        self.nk
    }
    pub fn mk(&self) -> i32 {
        self.mk
    }
    pub fn limit(&self) -> u32 {
        self.limit
    }

    fn e(&self) -> i32 {
        self.v.scale_exp()
    }

    fn scale(&self, v: Vertex) -> Mat3 {
        let e = v.scale_exp();
        array::from_fn(|i| {
            array::from_fn(|j| match (i == j, i) {
                (true, 2) => LaurentElem::t_pow(e),
                (true, _) => LaurentElem::one(),
                _ => LaurentElem::zero(),
            })
        })
    }

    fn scale_inv(&self, v: Vertex) -> Mat3 {
        let e = v.scale_exp();
        array::from_fn(|i| {
            array::from_fn(|j| match (i == j, i) {
                (true, 2) => LaurentElem::t_pow(-e),
                (true, _) => LaurentElem::one(),
                _ => LaurentElem::zero(),
            })
        })
    }

    /// The lattice `g·L_w` for the standard lattice of vertex type `w`.
    fn lattice_of(&self, g: &GroupElem, w: Vertex) -> Result<Lattice, TreeError> {
        let lf = &self.lf;
        let a = mat_mul(lf, g.entries(), &self.scale(w));
        let a_inv = mat_mul(lf, &self.scale_inv(w), lf.inverse(g).entries());
        hnf(lf, &a, &a_inv, w.scale_exp())
    }

    /// The vertex `g·v_K`.
    pub fn vertex_of(&self, g: &GroupElem) -> Result<Lattice, TreeError> {
        self.lattice_of(g, self.v)
    }

    pub fn base_lattice(&self) -> Lattice {
        self.vertex_of(&GroupElem::identity()).expect("identity lattice")
    }

    /// The group element of a canonical representative.
    pub fn rep_element(&self, r: &CosetRep) -> GroupElem {
        let lf = &self.lf;
        match r.side {
            Side::Plus => lf.mat_mul(&lf.n_from_xz(&r.x, &r.z), &GroupElem::alpha_pow(-(r.radius as i32))),
            Side::Minus => lf.mat_mul(&lf.nprime_from_xz(&r.x, &r.z), &GroupElem::alpha_pow(r.radius as i32)),
        }
    }

    /// Canonical representatives of the `Plus(m)` cosets.
    pub fn plus_reps(&self, m: u32) -> Vec<CosetRep> {
        let a = self.nk;
        let b = self.nk + 2 * m as i32;
        self.lf
            .quotient_params(a, b)
            .into_iter()
            .map(|(x, z)| CosetRep { side: Side::Plus, radius: m, x, z })
            .collect()
    }

    /// Canonical representatives of the `Minus(n)` cosets, `n ≥ 1`.
    pub fn minus_reps(&self, n: u32) -> Vec<CosetRep> {
        assert!(n >= 1);
        let a = self.mk;
        let b = self.mk + 2 * n as i32 - 1;
        self.lf
            .quotient_params(a, b)
            .into_iter()
            .map(|(x, z)| CosetRep { side: Side::Minus, radius: n, x, z })
            .collect()
    }

    /// Shell `m`: the `Plus(m)` cosets followed by the `Minus(m)` cosets.
    pub fn shell(&self, m: u32) -> Vec<CosetRep> {
        let mut s = self.plus_reps(m);
        if m >= 1 {
            s.extend(self.minus_reps(m));
        }
        s
    }

    /// Number of cosets in shell `m` without enumerating them.
    pub fn shell_size(&self, m: u32) -> usize {
        let q = self.lf.residue_field().order() as usize;
        let count = |a: i32, b: i32| q.pow((ceil_half(b) - ceil_half(a)) as u32) * self.q_base().pow((b - a) as u32);
        if m == 0 {
            return 1;
        }
        count(self.nk, self.nk + 2 * m as i32) + count(self.mk, self.mk + 2 * m as i32 - 1)
    }

    fn q_base(&self) -> usize {
        self.lf.residue_field().trace_zero_elements().len()
    }

    /// Canonical `(x, z)` of the class of `n(x, y)` in `N_a/N_b`, or of
    /// `n′(x, y)` in `N′_a/N′_b` when `prime` is set.
    fn canon(&self, x: &LaurentElem, y: &LaurentElem, a: i32, b: i32, prime: bool) -> Result<(LaurentElem, LaurentElem), TreeError> {
        let lf = &self.lf;
        let f = lf.residue_field();
        let xc = x.reduce_mod(ceil_half(b))?;
        let cross = if prime { lf.mul(&lf.conj_series(&xc), x) } else { lf.mul(&xc, &lf.conj_series(x)) };
        let w = lf.add(y, &cross);
        let w = lf.sub(&w, &lf.halve(&lf.mul(&xc, &lf.conj_series(&xc))));
        let w = w.reduce_mod(b)?;
        let mut zc = Vec::new();
        let lo = w.valuation().unwrap_or(b);
        for i in lo..b {
            let c = w.coeff(i)?;
            let cb = f.conj(c);
            if !f.add(c, cb).is_zero() {
                return Err(TreeError::HnfFailed("non trace-zero residual in canonical form".into()));
            }
            zc.push(c);
        }
        let zc = LaurentElem::exact(lo, zc);
        if xc.valuation().is_some_and(|v| v < ceil_half(a)) || zc.valuation().is_some_and(|v| v < a) {
            return Err(TreeError::HnfFailed("unipotent outside the quotient range".into()));
        }
        Ok((xc, zc))
    }

    /// The canonical representative of `gK`.
    pub fn coset_of(&self, g: &GroupElem) -> Result<CosetRep, TreeError> {
        let lf = &self.lf;
        let e = self.e();
        let lat = self.vertex_of(g)?;
        let j = -lat.piv[0];
        if lat.piv != [-j, 0, j + e] {
            return Err(TreeError::HnfFailed(format!("unexpected pivots {:?}", lat.piv)));
        }
        let x0 = lat.off[0].clone();
        let y0 = lf.neg(&lf.halve(&lf.mul(&x0, &lf.conj_series(&x0))));
        let lat1 = if x0.is_zero() {
            lat.clone()
        } else {
            let n0 = lf.make_n(&x0, &y0)?;
            let g1 = lf.mat_mul(&lf.inverse(&n0), g);
            self.vertex_of(&g1)?
        };
        if lat1.piv != lat.piv || !lat1.off[0].is_zero() || !lat1.off[2].is_zero() {
            return Err(TreeError::HnfFailed("x-part not removed".into()));
        }
        let z = lat1.off[1].shift(-(j + e));
        if lf.add(&z, &lf.conj_series(&z)) != LaurentElem::zero() {
            return Err(TreeError::HnfFailed("z is not trace-zero".into()));
        }
        let y = lf.add(&y0, &z);
        let b = self.nk - 2 * j;
        let c = match y.valuation() {
            None => {
                let rep = if j <= 0 {
                    CosetRep { side: Side::Plus, radius: (-j) as u32, x: LaurentElem::zero(), z: LaurentElem::zero() }
                } else {
                    CosetRep { side: Side::Minus, radius: j as u32, x: LaurentElem::zero(), z: LaurentElem::zero() }
                };
                return self.check_limit(rep);
            }
            Some(c) => c,
        };
        if c >= self.nk {
            if j >= 0 {
                return Err(TreeError::HnfFailed("nontrivial unipotent at non-negative level".into()));
            }
            let (x, z) = self.canon(&x0, &y, self.nk, b, false)?;
            return self.check_limit(CosetRep { side: Side::Plus, radius: (-j) as u32, x, z });
        }
        let n = self.nk - c - j;
        if n < 1 {
            return Err(TreeError::HnfFailed(format!("minus radius {n}")));
        }
        let y1 = lf.invert(&y)?;
        let xp = lf.neg(&lf.mul(&y1, &lf.conj_series(&x0)));
        let (x, z) = self.canon(&xp, &y1, self.mk, self.mk + 2 * n - 1, true)?;
        self.check_limit(CosetRep { side: Side::Minus, radius: n as u32, x, z })
    }

    fn check_limit(&self, r: CosetRep) -> Result<CosetRep, TreeError> {
        if r.radius > self.limit {
            Err(TreeError::OutOfBall { radius: r.radius, limit: self.limit })
        } else {
            Ok(r)
        }
    }

    /// `g = r·k` with `r` canonical and `k ∈ K`.
    pub fn normal_form(&self, g: &GroupElem) -> Result<(CosetRep, GroupElem), TreeError> {
        let r = self.coset_of(g)?;
        let k = self.lf.mat_mul(&self.lf.inverse(&self.rep_element(&r)), g);
        if !self.lf.in_k(&k, self.v)? {
            return Err(TreeError::MembershipFailed(r.describe(&self.lf)));
        }
        Ok((r, k))
    }

    /// `g = k₁ α^n k₂`.
    pub fn cartan_factor(&self, g: &GroupElem) -> Result<(GroupElem, u32, GroupElem), TreeError> {
        let lf = &self.lf;
        let (r, k) = self.normal_form(g)?;
        let bk = GroupElem::beta_k(self.v);
        Ok(match r.side {
            Side::Plus => {
                let u = lf.n_from_xz(&r.x, &r.z);
                (lf.mat_mul(&u, &bk), r.radius, lf.mat_mul(&bk, &k))
            }
            Side::Minus => (lf.nprime_from_xz(&r.x, &r.z), r.radius, k),
        })
    }

    /// Enumerates every canonical representative of radius `≤ R` and indexes
    /// them by lattice.
    pub fn enumerate_ball(&self, radius: u32) -> Result<Ball, TreeError> {
        let mut reps = Vec::new();
        let mut shell_sizes = Vec::new();
        let mut lattices = HashMap::new();
        for m in 0..=radius {
            let shell = self.shell(m);
            shell_sizes.push(shell.len());
            for r in shell {
                let lat = self.vertex_of(&self.rep_element(&r))?;
                if let Some(&old) = lattices.get(&lat) {
                    let old: &CosetRep = &reps[old];
                    return Err(TreeError::CollisionDetected(old.describe(&self.lf), r.describe(&self.lf)));
                }
                lattices.insert(lat, reps.len());
                reps.push(r);
            }
        }
        Ok(Ball { radius, reps, shell_sizes, lattices })
    }

    /// Lifts of generators of `Γ_K`.
    pub fn k_generators(&self) -> Vec<GroupElem> {
        let lf = &self.lf;
        let f = lf.residue_field();
        let mut gens = lf.enumerate_n_quotient(self.nk, self.nk + 1);
        gens.extend(lf.enumerate_nprime_quotient(self.mk - 1, self.mk));
        gens.push(GroupElem::beta_k(self.v));
        gens.push(lf.make_h(&LaurentElem::constant(f.generator())).expect("unit"));
        let eps = f.elements().find(|&x| f.norm(x) == Fe::ONE && f.mult_order(x) == Some(u64::from(f.order() / f.p().pow(f.degree() / 2) + 1)));
        if let Some(eps) = eps {
            gens.push(GroupElem::diag(LaurentElem::one(), LaurentElem::constant(eps), LaurentElem::one()));
        }
        gens.retain(|g| g != &GroupElem::identity());
        gens
    }

    /// `L ⊆ M`.
    pub fn contains(&self, m: &Lattice, l: &Lattice) -> bool {
        let lf = &self.lf;
        let x = mat_mul(lf, &triangular_inverse(lf, m), &l.matrix());
        x.iter().flatten().all(|e| e.valuation().map_or(true, |v| v >= 0))
    }

    /// `L* = t·β (L̄⁻¹)ᵀ o³`.
    pub fn dual(&self, l: &Lattice) -> Result<Lattice, TreeError> {
        let lf = &self.lf;
        let inv = triangular_inverse(lf, l);
        let beta = GroupElem::beta();
        let it: Mat3 = array::from_fn(|i| array::from_fn(|j| lf.conj_series(&inv[j][i]).shift(1)));
        let a = mat_mul(lf, beta.entries(), &it);
        let pt: Mat3 = array::from_fn(|i| array::from_fn(|j| lf.conj_series(&l.entry(j, i)).shift(-1)));
        let a_inv = mat_mul(lf, &pt, beta.entries());
        hnf(lf, &a, &a_inv, 3 - l.signature())
    }

    /// `t·L ⊆ L* ⊆ L`.
    pub fn is_vertex_lattice(&self, l: &Lattice) -> Result<bool, TreeError> {
        let d = self.dual(l)?;
        let tl = Lattice { piv: l.piv.map(|a| a + 1), off: l.off.clone().map(|e| e.shift(1)) };
        let tl = self.rehnf(&tl)?;
        Ok(self.contains(l, &d) && self.contains(&d, &tl))
    }

    fn rehnf(&self, l: &Lattice) -> Result<Lattice, TreeError> {
        let lf = &self.lf;
        hnf(lf, &l.matrix(), &triangular_inverse(lf, l), l.signature())
    }

    fn act(&self, g: &GroupElem, l: &Lattice) -> Result<Lattice, TreeError> {
        let lf = &self.lf;
        let a = mat_mul(lf, g.entries(), &l.matrix());
        let a_inv = mat_mul(lf, &triangular_inverse(lf, l), lf.inverse(g).entries());
        hnf(lf, &a, &a_inv, l.signature())
    }

    /// Neighbours of `g·v_K`: the orbit of `g·L_other` under `g K g⁻¹`,
    /// each certified adjacent by containment.
    pub fn neighbours(&self, g: &GroupElem) -> Result<Vec<Lattice>, TreeError> {
        let lf = &self.lf;
        let other = match self.v {
            Vertex::K0 => Vertex::K1,
            Vertex::K1 => Vertex::K0,
        };
        let centre = self.vertex_of(g)?;
        let start = self.lattice_of(g, other)?;
        let ginv = lf.inverse(g);
        let gens: Vec<GroupElem> = self.k_generators().iter().map(|k| lf.prod(&[g, k, &ginv])).collect();
        let mut seen = HashMap::new();
        let mut queue = VecDeque::new();
        seen.insert(start.clone(), ());
        queue.push_back(start);
        let mut out = Vec::new();
        while let Some(l) = queue.pop_front() {
            for h in &gens {
                let m = self.act(h, &l)?;
                if !seen.contains_key(&m) {
                    seen.insert(m.clone(), ());
                    queue.push_back(m);
                }
            }
            if !(self.contains(&centre, &l) || self.contains(&l, &centre)) {
                return Err(TreeError::HnfFailed("orbit element not adjacent".into()));
            }
            out.push(l);
        }
        Ok(out)
    }

    /// `q^{c_v} + 1` for the vertex `g·v_K`.
    pub fn degree(&self, g: &GroupElem) -> Result<usize, TreeError> {
        Ok(self.neighbours(g)?.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ff::Field;
    use crate::group::SubgroupTag;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tree(v: Vertex) -> Tree {
        Tree::new(LocalField::new(Field::with_degree(3, 2).unwrap(), 24), v, 6).unwrap()
    }

    fn random_k(t: &Tree, rng: &mut ChaCha8Rng, len: usize) -> GroupElem {
        let lf = t.lf();
        let mut gens = t.k_generators();
        gens.extend(lf.enumerate_n_quotient(t.nk() + 1, t.nk() + 3));
        gens.extend(lf.enumerate_nprime_quotient(t.mk(), t.mk() + 2));
        let mut g = GroupElem::identity();
        for _ in 0..len {
            g = lf.mat_mul(&g, &gens[rng.gen_range(0..gens.len())]);
        }
        g
    }

    #[test]
    fn base_lattices_and_duality() {
        for v in Vertex::ALL {
            let t = tree(v);
            let l = t.base_lattice();
            assert_eq!(l.pivots(), [0, 0, v.scale_exp()]);
            assert!(t.is_vertex_lattice(&l).unwrap());
            let la = t.vertex_of(&GroupElem::alpha()).unwrap();
            assert_ne!(la, l);
            assert!(t.is_vertex_lattice(&la).unwrap());
            assert_eq!(la.signature(), l.signature());
        }
    }

    #[test]
    fn stabilizer_is_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for v in Vertex::ALL {
            let t = tree(v);
            let base = t.base_lattice();
            for _ in 0..50 {
                let k = random_k(&t, &mut rng, 6);
                assert!(t.lf().is_member(&k, SubgroupTag::K(v)).unwrap());
                assert_eq!(t.vertex_of(&k).unwrap(), base);
            }
            for m in 1..3 {
                for r in t.shell(m).iter().step_by(7) {
                    assert_ne!(t.vertex_of(&t.rep_element(r)).unwrap(), base);
                }
            }
        }
    }

    #[test]
    fn degrees() {
        let t0 = tree(Vertex::K0);
        let t1 = tree(Vertex::K1);
        assert_eq!(t0.degree(&GroupElem::identity()).unwrap(), 28);
        assert_eq!(t1.degree(&GroupElem::identity()).unwrap(), 4);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let r = &t0.shell(1)[rng.gen_range(0..84)];
            assert_eq!(t0.degree(&t0.rep_element(r)).unwrap(), 28);
        }
    }

    #[test]
    fn shell_counts() {
        let t0 = tree(Vertex::K0);
        let t1 = tree(Vertex::K1);
        assert_eq!((0..3).map(|m| t0.shell_size(m)).collect::<Vec<_>>(), vec![1, 84, 6804]);
        assert_eq!((0..3).map(|m| t1.shell_size(m)).collect::<Vec<_>>(), vec![1, 108, 8748]);
        assert_eq!(t0.shell(1).len(), 84);
        assert_eq!(t0.minus_reps(1).len(), 3);
        assert_eq!(t1.minus_reps(1).len(), 27);
    }

    #[test]
    fn normal_form_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for v in Vertex::ALL {
            let t = tree(v);
            let lf = t.lf();
            for m in 0..3 {
                let shell = t.shell(m);
                for _ in 0..40 {
                    let r = &shell[rng.gen_range(0..shell.len())];
                    let k = random_k(&t, &mut rng, 5);
                    let g = lf.mat_mul(&t.rep_element(r), &k);
                    let (r2, k2) = t.normal_form(&g).unwrap();
                    assert_eq!(&r2, r, "{}", r.describe(lf));
                    assert_eq!(k2, k);
                    let (k1, n, k3) = t.cartan_factor(&g).unwrap();
                    assert_eq!(n, m);
                    assert_eq!(lf.prod(&[&k1, &GroupElem::alpha_pow(n as i32), &k3]), g);
                }
            }
        }
    }

    #[test]
    fn alpha_inverse_and_beta_u_alpha() {
        let t = tree(Vertex::K0);
        let lf = t.lf();
        let (r, _) = t.normal_form(&GroupElem::alpha_pow(-1)).unwrap();
        assert_eq!(r, CosetRep { side: Side::Plus, radius: 1, x: LaurentElem::zero(), z: LaurentElem::zero() });
        for (u, cls) in lf
            .enumerate_n_quotient(t.nk(), t.nk() + 3)
            .iter()
            .map(|u| (u, u.entry(0, 2).valuation().unwrap_or(i32::MAX) - t.nk()))
        {
            let g = lf.prod(&[&GroupElem::beta(), u, &GroupElem::alpha_pow(-1)]);
            let (r, _) = t.normal_form(&g).unwrap();
            let want = match cls {
                0 => (Side::Plus, 1),
                1 => (Side::Minus, 1),
                _ => (Side::Minus, 1),
            };
            assert_eq!(r.classify(), want);
            if cls >= 2 {
                assert!(r.is_pure());
            }
        }
    }
}
