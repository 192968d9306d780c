//! Compact induction `ind_K^G σ` on the tree, the Hecke operator `T`, and the
//! spherical Hecke algebra `H_K(σ)` by convolution.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use thiserror::Error;

use crate::ff::{Fe, Field};
use crate::group::{GroupElem, Vertex};
use crate::laurent::{LaurentElem, LocalField};
use crate::linalg::{kernel_basis, Mat};
use crate::rep::{Gamma, IrredRep, RepError};
use crate::tree::{CosetRep, Side, Tree, TreeError};

#[derive(Debug, Error)]
pub enum HeckeError {
    #[error("{0}")]
    Tree(#[from] TreeError),
    #[error("{0}")]
    Rep(#[from] RepError),
    #[error("value at alpha^{l} is not on the expected line")]
    NotOnLine { l: u32 },
    #[error("T f_{n} formula violated: {residual}")]
    FormulaViolated { n: i32, residual: String },
    #[error("support containment violated at {0:?}")]
    ContainmentViolated(Vec<String>),
}

/// One term `[g_j, M_j v]` of `T[Id, v]`.
#[derive(Debug, Clone)]
pub struct TTerm {
    pub g: GroupElem,
    /// `None` for the `β_K u α⁻¹` terms (matrix `j_σ σ(β_K)`); otherwise the
    /// `Γ_K`-index of `u⁻¹` (matrix `j_σ σ(u⁻¹)`).
    pub u_inv: Option<u32>,
}

#[derive(Debug, Default)]
struct Interner {
    reps: Vec<CosetRep>,
    ids: HashMap<CosetRep, u32>,
}

/// Transition of a coset under left multiplication: `g · r = r′ · k′`,
/// stored as `(id of r′, Γ_K-index of k′)`.
pub type Transition = (u32, u32);

/// The `σ`-independent data: coset interning, the ball `B_R`, the terms of
/// `T[Id, ·]` and a cache of their transitions.
#[derive(Debug)]
pub struct CosetSpace {
    tree: Tree,
    gamma: Gamma,
    radius: u32,
    shell_offsets: Vec<usize>,
    interner: RwLock<Interner>,
    tterms: Vec<TTerm>,
    tcache: Mutex<HashMap<u32, Arc<Vec<Transition>>>>,
}

impl CosetSpace {
    /// Interns the shells `0..=radius` in canonical order, so that the ids of
    /// `B_R` are `0..dim` and shell `m` occupies `shell_offsets[m]..shell_offsets[m+1]`.
    pub fn new(tree: Tree, gamma: Gamma, radius: u32) -> Result<Self, HeckeError> {
        let mut interner = Interner::default();
        let mut shell_offsets = vec![0];
        for m in 0..=radius {
            for r in tree.shell(m) {
                let id = interner.reps.len() as u32;
                interner.ids.insert(r.clone(), id);
                interner.reps.push(r);
            }
            shell_offsets.push(interner.reps.len());
        }
        let lf = tree.lf().clone();
        let nk = tree.nk();
        let bk = GroupElem::beta_k(tree.vertex());
        let ainv = GroupElem::alpha_pow(-1);
        let mut tterms = Vec::new();
        for u in lf.enumerate_n_quotient(nk + 1, nk + 2) {
            tterms.push(TTerm { g: lf.prod(&[&bk, &u, &ainv]), u_inv: None });
        }
        for u in lf.enumerate_n_quotient(nk, nk + 2) {
            let ui = gamma.reduce(&lf, &lf.inverse(&u))?;
            tterms.push(TTerm { g: lf.mat_mul(&u, &ainv), u_inv: Some(ui) });
        }
        Ok(CosetSpace {
            tree,
            gamma,
            radius,
            shell_offsets,
            interner: RwLock::new(interner),
            tterms,
            tcache: Mutex::new(HashMap::new()),
        })
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn gamma(&self) -> &Gamma {
        &self.gamma
    }

    pub fn lf(&self) -> &LocalField {
        self.tree.lf()
    }

    pub fn vertex(&self) -> Vertex {
        self.tree.vertex()
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn tterms(&self) -> &[TTerm] {
        &self.tterms
    }

    /// Number of cosets in `B_m`, `m ≤ radius`.
    pub fn ball_size(&self, m: u32) -> usize {
        self.shell_offsets[m as usize + 1]
    }

    /// Ids of shell `m ≤ radius`.
    pub fn shell_ids(&self, m: u32) -> std::ops::Range<u32> {
        self.shell_offsets[m as usize] as u32..self.shell_offsets[m as usize + 1] as u32
    }

    pub fn intern(&self, r: CosetRep) -> u32 {
        if let Some(&id) = self.interner.read().expect("lock").ids.get(&r) {
            return id;
        }
        let mut w = self.interner.write().expect("lock");
        if let Some(&id) = w.ids.get(&r) {
            return id;
        }
        let id = w.reps.len() as u32;
        w.ids.insert(r.clone(), id);
        w.reps.push(r);
        id
    }

    pub fn id_of(&self, r: &CosetRep) -> Option<u32> {
        self.interner.read().expect("lock").ids.get(r).copied()
    }

    pub fn rep(&self, id: u32) -> CosetRep {
        self.interner.read().expect("lock").reps[id as usize].clone()
    }

    pub fn classify(&self, id: u32) -> (Side, u32) {
        self.interner.read().expect("lock").reps[id as usize].classify()
    }

    pub fn rep_element(&self, id: u32) -> GroupElem {
        self.tree.rep_element(&self.rep(id))
    }

    /// `g = r · k` with `r` interned and `k` reduced to `Γ_K`.
    pub fn decompose(&self, g: &GroupElem) -> Result<Transition, HeckeError> {
        let (r, k) = self.tree.normal_form(g)?;
        let gk = self.gamma.reduce(self.lf(), &k)?;
        Ok((self.intern(r), gk))
    }

    /// Transition of coset `id` under left multiplication by `g`.
    pub fn transport(&self, g: &GroupElem, id: u32) -> Result<Transition, HeckeError> {
        let h = self.lf().mat_mul(g, &self.rep_element(id));
        self.decompose(&h)
    }

    /// Transitions `r · g_j` of coset `id` for every term of `T[Id, ·]`.
    pub fn t_transitions(&self, id: u32) -> Result<Arc<Vec<Transition>>, HeckeError> {
        if let Some(t) = self.tcache.lock().expect("lock").get(&id) {
            return Ok(t.clone());
        }
        let r = self.rep_element(id);
        let lf = self.lf();
        let t = self
            .tterms
            .iter()
            .map(|term| self.decompose(&lf.mat_mul(&r, &term.g)))
            .collect::<Result<Vec<_>, _>>()?;
        let t = Arc::new(t);
        self.tcache.lock().expect("lock").insert(id, t.clone());
        Ok(t)
    }

    pub fn cached_transitions(&self) -> usize {
        self.tcache.lock().expect("lock").len()
    }
}

/// A finitely supported function in `ind_K^G σ`: `Σ [r, v_r]` over interned cosets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InducedFun {
    pub terms: BTreeMap<u32, Vec<Fe>>,
}

impl InducedFun {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(id: u32, v: Vec<Fe>) -> Self {
        let mut f = Self::zero();
        if v.iter().any(|x| !x.is_zero()) {
            f.terms.insert(id, v);
        }
        f
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = u32> + '_ {
        self.terms.keys().copied()
    }

    pub fn value(&self, id: u32) -> Option<&Vec<Fe>> {
        self.terms.get(&id)
    }

    pub fn add_term(&mut self, f: &Field, id: u32, v: &[Fe]) {
        if v.iter().all(|x| x.is_zero()) {
            return;
        }
        match self.terms.get_mut(&id) {
            Some(w) => {
                for (a, &b) in w.iter_mut().zip(v) {
                    *a = f.add(*a, b);
                }
                if w.iter().all(|x| x.is_zero()) {
                    self.terms.remove(&id);
                }
            }
            None => {
                self.terms.insert(id, v.to_vec());
            }
        }
    }

    pub fn add(&self, f: &Field, other: &InducedFun) -> InducedFun {
        let mut out = self.clone();
        for (&id, v) in &other.terms {
            out.add_term(f, id, v);
        }
        out
    }

    pub fn scale(&self, f: &Field, c: Fe) -> InducedFun {
        if c.is_zero() {
            return Self::zero();
        }
        InducedFun { terms: self.terms.iter().map(|(&id, v)| (id, v.iter().map(|&x| f.mul(c, x)).collect())).collect() }
    }

    pub fn sub(&self, f: &Field, other: &InducedFun) -> InducedFun {
        self.add(f, &other.scale(f, f.neg(Fe::ONE)))
    }

    /// Keeps the terms whose coset satisfies `keep`.
    pub fn restrict(&self, keep: impl Fn(u32) -> bool) -> InducedFun {
        InducedFun { terms: self.terms.iter().filter(|(&id, _)| keep(id)).map(|(&id, v)| (id, v.clone())).collect() }
    }

    /// Coordinates `(id · dim + i, value)`, ascending.
    pub fn coordinates(&self, dim: usize) -> Vec<(u32, Fe)> {
        let mut out = Vec::new();
        for (&id, v) in &self.terms {
            for (i, &x) in v.iter().enumerate() {
                if !x.is_zero() {
                    out.push((id * dim as u32 + i as u32, x));
                }
            }
        }
        out
    }

    pub fn from_coordinates(dim: usize, coords: &[(u32, Fe)]) -> InducedFun {
        let mut terms: BTreeMap<u32, Vec<Fe>> = BTreeMap::new();
        for &(c, x) in coords {
            if x.is_zero() {
                continue;
            }
            let id = c / dim as u32;
            terms.entry(id).or_insert_with(|| vec![Fe::ZERO; dim])[(c % dim as u32) as usize] = x;
        }
        InducedFun { terms }
    }

    /// Renders as `(coset id, vector)` pairs.
    pub fn render(&self, f: &Field) -> String {
        self.terms
            .iter()
            .map(|(id, v)| format!("({id}, [{}])", v.iter().map(|&x| f.format(x)).collect::<Vec<_>>().join(", ")))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// `Σ c_n φ_n`, with `φ_0(Id) = Id` and `φ_n(α^n) = j_σ` for `n > 0`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HeckeElem {
    pub coeffs: BTreeMap<u32, Fe>,
}

impl HeckeElem {
    pub fn phi(n: u32) -> Self {
        HeckeElem { coeffs: BTreeMap::from([(n, Fe::ONE)]) }
    }

    pub fn coeff(&self, n: u32) -> Fe {
        self.coeffs.get(&n).copied().unwrap_or(Fe::ZERO)
    }

    pub fn max_support(&self) -> u32 {
        self.coeffs.keys().next_back().copied().unwrap_or(0)
    }
}

/// `ind_K^G σ` for one catalog entry over a shared [`CosetSpace`].
pub struct Hecke<'a> {
    space: &'a CosetSpace,
    sigma: &'a IrredRep,
    tmats: Vec<Mat>,
}

impl<'a> Hecke<'a> {
    pub fn new(space: &'a CosetSpace, sigma: &'a IrredRep) -> Self {
        let f = sigma.field();
        let g = space.gamma();
        let jb = sigma.jmat.mul(f, sigma.action(g, g.beta_k()));
        let tmats = space
            .tterms()
            .iter()
            .map(|t| match t.u_inv {
                None => jb.clone(),
                Some(u) => sigma.jmat.mul(f, sigma.action(g, u)),
            })
            .collect();
        Hecke { space, sigma, tmats }
    }

    pub fn space(&self) -> &CosetSpace {
        self.space
    }

    /// The matrices `M_j` of `T[Id, v] = Σ_j [g_j, M_j v]`.
    pub fn tmats(&self) -> &[Mat] {
        &self.tmats
    }

    pub fn sigma(&self) -> &IrredRep {
        self.sigma
    }

    pub fn field(&self) -> &Field {
        self.sigma.field()
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim
    }

    /// `σ` on a `Γ_K`-index.
    pub fn sig(&self, g: u32) -> &Mat {
        self.sigma.action(self.space.gamma(), g)
    }

    /// `σ(k)` for `k ∈ K`.
    pub fn sig_k(&self, k: &GroupElem) -> Result<&Mat, HeckeError> {
        let g = self.space.gamma().reduce(self.space.lf(), k)?;
        Ok(self.sig(g))
    }

    /// `g · Σ [r, v] = Σ [r′, σ(k′) v]` with `g r = r′ k′`.
    pub fn g_act(&self, g: &GroupElem, f: &InducedFun) -> Result<InducedFun, HeckeError> {
        let fl = self.field();
        let mut out = InducedFun::zero();
        for (&id, v) in &f.terms {
            let (id2, k) = self.space.transport(g, id)?;
            out.add_term(fl, id2, &self.sig(k).mul_vec(fl, v));
        }
        Ok(out)
    }

    /// Applies precomputed transitions: `Σ [r, v] ↦ Σ [r′, σ(k′) v]`.
    pub fn apply_transitions(&self, f: &InducedFun, trans: impl Fn(u32) -> Option<Transition>) -> Option<InducedFun> {
        let fl = self.field();
        let mut out = InducedFun::zero();
        for (&id, v) in &f.terms {
            let (id2, k) = trans(id)?;
            out.add_term(fl, id2, &self.sig(k).mul_vec(fl, v));
        }
        Some(out)
    }

    /// `T`, by transporting `T[Id, v] = Σ_j [g_j, M_j v]` to every support point.
    pub fn hecke_t(&self, f: &InducedFun) -> Result<InducedFun, HeckeError> {
        let fl = self.field();
        let mut out = InducedFun::zero();
        for (&id, v) in &f.terms {
            let trans = self.space.t_transitions(id)?;
            for (&(id2, k), m) in trans.iter().zip(&self.tmats) {
                let w = m.mul_vec(fl, v);
                if w.iter().all(|x| x.is_zero()) {
                    continue;
                }
                out.add_term(fl, id2, &self.sig(k).mul_vec(fl, &w));
            }
        }
        Ok(out)
    }

    /// `f_n`: `Σ_{Plus(m)} [r, v₀]` for `n = −m ≤ 0`, `Σ_{Minus(n)} [r, β_K v₀]` for `n > 0`.
    pub fn f_n(&self, n: i32) -> InducedFun {
        let fl = self.field();
        let tree = self.space.tree();
        let (reps, v) = if n <= 0 {
            (tree.plus_reps((-n) as u32), self.sigma.v0.clone())
        } else {
            (tree.minus_reps(n as u32), self.sig(self.space.gamma().beta_k()).mul_vec(fl, &self.sigma.v0))
        };
        let mut out = InducedFun::zero();
        for r in reps {
            out.add_term(fl, self.space.intern(r), &v);
        }
        out
    }

    /// `f_n` at a single coset.
    pub fn f_n_value(&self, n: i32, id: u32) -> Option<Vec<Fe>> {
        let want = if n <= 0 { (Side::Plus, (-n) as u32) } else { (Side::Minus, n as u32) };
        if self.space.classify(id) != want {
            return None;
        }
        Some(if n <= 0 {
            self.sigma.v0.clone()
        } else {
            self.sig(self.space.gamma().beta_k()).mul_vec(self.field(), &self.sigma.v0)
        })
    }

    /// Id of the coset `α^n K`, the point of `supp f_n` where `f_n` is normalized.
    pub fn orbit_point(&self, n: i32) -> Result<u32, HeckeError> {
        let (id, k) = self.space.decompose(&GroupElem::alpha_pow(n))?;
        debug_assert_eq!(k, self.space.gamma().identity());
        Ok(id)
    }

    /// `(T F)(x)` at one coset, for `F` given pointwise. Only the `T`-neighbours
    /// of `x` contribute, since `KαK = Kα⁻¹K`.
    pub fn t_value_at(&self, x: u32, f: impl Fn(u32) -> Option<Vec<Fe>>) -> Result<Vec<Fe>, HeckeError> {
        let fl = self.field();
        let mut cands: Vec<u32> = self.space.t_transitions(x)?.iter().map(|t| t.0).collect();
        cands.sort_unstable();
        cands.dedup();
        let mut acc = vec![Fe::ZERO; self.dim()];
        for r in cands {
            let Some(v) = f(r) else { continue };
            for (&(id2, k), m) in self.space.t_transitions(r)?.iter().zip(&self.tmats) {
                if id2 == x {
                    let w = self.sig(k).mul_vec(fl, &m.mul_vec(fl, &v));
                    for (a, b) in acc.iter_mut().zip(w) {
                        *a = fl.add(*a, b);
                    }
                }
            }
        }
        Ok(acc)
    }

    /// `φ(g) = σ(k₁) φ(α^n) σ(k₂)` through `g = k₁ α^n k₂`.
    pub fn eval_phi(&self, phi: &HeckeElem, g: &GroupElem) -> Result<Mat, HeckeError> {
        let (k1, n, k2) = self.space.tree().cartan_factor(g)?;
        self.eval_phi_factored(phi, &k1, n, &k2)
    }

    pub fn eval_phi_factored(&self, phi: &HeckeElem, k1: &GroupElem, n: u32, k2: &GroupElem) -> Result<Mat, HeckeError> {
        let fl = self.field();
        let c = phi.coeff(n);
        if c.is_zero() {
            return Ok(Mat::zeros(self.dim(), self.dim()));
        }
        let mid = if n == 0 { Mat::identity(self.dim()) } else { self.sigma.jmat.clone() };
        Ok(self.sig_k(k1)?.mul(fl, &mid.scale(fl, c)).mul(fl, self.sig_k(k2)?))
    }

    /// `T_n[r, v] = Σ_{s ∈ shell n} [r s, φ_n(s⁻¹) v]`.
    pub fn hecke_tn_apply(&self, n: u32, f: &InducedFun) -> Result<InducedFun, HeckeError> {
        let fl = self.field();
        let lf = self.space.lf();
        let tree = self.space.tree();
        let phi = HeckeElem::phi(n);
        let mut terms = Vec::new();
        for s in tree.shell(n) {
            let se = tree.rep_element(&s);
            let m = self.eval_phi(&phi, &lf.inverse(&se))?;
            if !m.is_zero() {
                terms.push((se, m));
            }
        }
        let mut out = InducedFun::zero();
        for (&id, v) in &f.terms {
            let r = self.space.rep_element(id);
            for (se, m) in &terms {
                let w = m.mul_vec(fl, v);
                if w.iter().all(|x| x.is_zero()) {
                    continue;
                }
                let (id2, k) = self.space.decompose(&lf.mat_mul(&r, se))?;
                out.add_term(fl, id2, &self.sig(k).mul_vec(fl, &w));
            }
        }
        Ok(out)
    }

    /// `(φ ∗ ψ)(α^l) = Σ_{h ∈ G/K} φ(h) ψ(h⁻¹ α^l)`, summed over the shells in `supp φ`.
    pub fn convolve_value(&self, phi: &HeckeElem, psi: &HeckeElem, l: u32) -> Result<Mat, HeckeError> {
        let fl = self.field();
        let lf = self.space.lf();
        let tree = self.space.tree();
        let al = GroupElem::alpha_pow(l as i32);
        let mut acc = Mat::zeros(self.dim(), self.dim());
        for (&m, _) in phi.coeffs.iter().filter(|(_, c)| !c.is_zero()) {
            for s in tree.shell(m) {
                let se = tree.rep_element(&s);
                let a = self.eval_phi(phi, &se)?;
                if a.is_zero() {
                    continue;
                }
                let b = self.eval_phi(psi, &lf.mat_mul(&lf.inverse(&se), &al))?;
                acc = acc.add(fl, &a.mul(fl, &b));
            }
        }
        Ok(acc)
    }

    /// Coordinate of a value at `α^l` on the line `Id` (`l = 0`) or `j_σ`.
    pub fn line_coefficient(&self, value: &Mat, l: u32) -> Result<Fe, HeckeError> {
        let fl = self.field();
        let base = if l == 0 { Mat::identity(self.dim()) } else { self.sigma.jmat.clone() };
        let (i, j) = (0..self.dim())
            .flat_map(|i| (0..self.dim()).map(move |j| (i, j)))
            .find(|&(i, j)| !base.get(i, j).is_zero())
            .expect("nonzero base");
        let c = fl.div(value.get(i, j), base.get(i, j)).expect("nonzero");
        if &base.scale(fl, c) != value {
            return Err(HeckeError::NotOnLine { l });
        }
        Ok(c)
    }

    pub fn convolve(&self, phi: &HeckeElem, psi: &HeckeElem) -> Result<HeckeElem, HeckeError> {
        let mut out = HeckeElem::default();
        for l in 0..=phi.max_support() + psi.max_support() {
            let v = self.convolve_value(phi, psi, l)?;
            let c = self.line_coefficient(&v, l)?;
            if !c.is_zero() {
                out.coeffs.insert(l, c);
            }
        }
        Ok(out)
    }

    /// `T f₀ = f₋₁ + λ f₁`.
    pub fn check_tf0(&self) -> Result<(), HeckeError> {
        let fl = self.field();
        let lhs = self.hecke_t(&self.f_n(0))?;
        let rhs = self.f_n(-1).add(fl, &self.f_n(1).scale(fl, self.sigma.lambda));
        if lhs != rhs {
            return Err(HeckeError::FormulaViolated { n: 0, residual: lhs.sub(fl, &rhs).render(fl) });
        }
        Ok(())
    }

    /// `T f_n = c_n f_n + f_{n+δ_n}` for `n ≠ 0`; returns `c_n`.
    pub fn check_tfn(&self, n: i32) -> Result<Fe, HeckeError> {
        assert!(n != 0);
        let fl = self.field();
        let fnv = self.f_n(n);
        let next = self.f_n(n + n.signum());
        let residual = self.hecke_t(&fnv)?.sub(fl, &next);
        let (&id0, v0) = fnv.terms.iter().next().expect("f_n nonzero");
        let i = v0.iter().position(|x| !x.is_zero()).expect("nonzero value");
        let r0 = residual.value(id0).map_or(Fe::ZERO, |w| w[i]);
        let c = fl.div(r0, v0[i]).expect("nonzero");
        let rest = residual.sub(fl, &fnv.scale(fl, c));
        if !rest.is_zero() {
            return Err(HeckeError::FormulaViolated { n, residual: rest.render(fl) });
        }
        Ok(c)
    }

    /// Pairs `(k₁, k₂)` with `k₁ α^n = α^n k₂` used to pin down `φ(α^n)`.
    fn equivariance_pairs(&self, n: u32) -> Result<Vec<(Mat, Mat)>, HeckeError> {
        let lf = self.space.lf();
        let tree = self.space.tree();
        let gamma = self.space.gamma();
        if n == 0 {
            return Ok(gamma.generators().iter().map(|&g| (self.sig(g).clone(), self.sig(g).clone())).collect());
        }
        let (nk, mk) = (tree.nk(), tree.mk());
        let n = n as i32;
        let a = GroupElem::alpha_pow(n);
        let ai = GroupElem::alpha_pow(-n);
        let mut k1s = lf.enumerate_nprime_quotient(2 * n - 1 + mk, 2 * n + mk);
        k1s.extend(lf.enumerate_n_quotient(nk, nk + 1));
        let f = lf.residue_field();
        k1s.push(GroupElem::diag(
            LaurentElem::constant(f.generator()),
            LaurentElem::constant(f.div(f.conj(f.generator()), f.generator()).expect("unit")),
            LaurentElem::constant(f.inv(f.conj(f.generator())).expect("unit")),
        ));
        let mut out = Vec::new();
        for k1 in k1s {
            let k2 = lf.prod(&[&ai, &k1, &a]);
            out.push((self.sig_k(&k1)?.clone(), self.sig_k(&k2)?.clone()));
        }
        Ok(out)
    }

    /// Basis of `{E : σ(k₁) E = E σ(k₂)}` over the pairs for `α^n`.
    pub fn bi_equivariant_solutions(&self, n: u32) -> Result<Vec<Mat>, HeckeError> {
        let fl = self.field();
        let d = self.dim();
        let mut rows = Vec::new();
        for (s1, s2) in self.equivariance_pairs(n)? {
            for a in 0..d {
                for b in 0..d {
                    let mut row = vec![Fe::ZERO; d * d];
                    for c in 0..d {
                        row[c * d + b] = fl.add(row[c * d + b], s1.get(a, c));
                        row[a * d + c] = fl.sub(row[a * d + c], s2.get(c, b));
                    }
                    rows.push(row);
                }
            }
        }
        let ker = kernel_basis(fl, &Mat::from_rows(&rows));
        Ok(ker
            .into_iter()
            .map(|v| {
                let mut m = Mat::zeros(d, d);
                for (i, x) in v.into_iter().enumerate() {
                    m.set(i / d, i % d, x);
                }
                m
            })
            .collect())
    }

    pub fn verify_bi_equivariant_line(&self, n: u32) -> Result<usize, HeckeError> {
        Ok(self.bi_equivariant_solutions(n)?.len())
    }

    /// The sub-sum `Σ_{k₂ ∈ N′_{m_K}/N′_{m_K+1}} σ(β_K) j_σ φ_n(α⁻¹ k₂⁻¹ β_K α^l)`.
    pub fn sigma_one(&self, n: u32, l: u32) -> Result<SigmaOne, HeckeError> {
        let fl = self.field();
        let lf = self.space.lf();
        let mk = self.space.tree().mk();
        let bk = GroupElem::beta_k(self.space.vertex());
        let sb = self.sig_k(&bk)?.clone();
        let lead = sb.mul(fl, &self.sigma.jmat);
        let ai = GroupElem::alpha_pow(-1);
        let al = GroupElem::alpha_pow(l as i32);
        let phi = HeckeElem::phi(n);
        let mut terms = Vec::new();
        for k2 in lf.enumerate_nprime_quotient(mk, mk + 1) {
            let g = lf.prod(&[&ai, &lf.inverse(&k2), &bk, &al]);
            terms.push(lead.mul(fl, &self.eval_phi(&phi, &g)?));
        }
        let sum = terms.iter().fold(Mat::zeros(self.dim(), self.dim()), |a, t| a.add(fl, t));
        let all_equal = terms.windows(2).all(|w| w[0] == w[1]);
        Ok(SigmaOne { count: terms.len(), all_equal, term: terms[0].clone(), sum })
    }
}

#[derive(Debug, Clone)]
pub struct SigmaOne {
    pub count: usize,
    pub all_equal: bool,
    pub term: Mat,
    pub sum: Mat,
}

/// The slice `R⁺_n` (cosets `Plus(n)`) or `R⁻_n` (cosets `Minus(n+1)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RSpace {
    Plus(u32),
    Minus(u32),
}

impl RSpace {
    /// Coset classes making up the slice; `R⁻_{-1}` is `R⁺_0`.
    fn classes(self) -> (Side, u32) {
        match self {
            RSpace::Plus(n) => (Side::Plus, n),
            RSpace::Minus(n) => (Side::Minus, n + 1),
        }
    }

    /// The slices allowed to contain `T` of this slice.
    pub fn allowed_image(self) -> Vec<(Side, u32)> {
        match self {
            RSpace::Plus(0) => vec![(Side::Plus, 1), (Side::Minus, 1)],
            RSpace::Plus(n) => vec![(Side::Plus, n - 1), (Side::Plus, n), (Side::Plus, n + 1)],
            RSpace::Minus(n) => {
                let below = if n == 0 { (Side::Plus, 0) } else { (Side::Minus, n) };
                vec![below, (Side::Minus, n + 1), (Side::Minus, n + 2)]
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PropagationReport {
    pub sources: usize,
    pub checked: usize,
    pub targets: BTreeMap<(Side, u32), usize>,
}

impl CosetSpace {
    /// Checks on the coset level that `T` maps the slice into the allowed
    /// slices. With `stride > 1` only every `stride`-th coset is checked.
    pub fn check_support_propagation(&self, space: RSpace, stride: usize) -> Result<PropagationReport, HeckeError> {
        let (side, radius) = space.classes();
        let reps = match side {
            Side::Plus => self.tree.plus_reps(radius),
            Side::Minus => self.tree.minus_reps(radius),
        };
        let allowed = space.allowed_image();
        let mut targets = BTreeMap::new();
        let mut bad = Vec::new();
        let mut checked = 0;
        for r in reps.iter().step_by(stride.max(1)) {
            checked += 1;
            let id = self.intern(r.clone());
            for &(t, _) in self.t_transitions(id)?.iter() {
                let c = self.classify(t);
                *targets.entry(c).or_insert(0) += 1;
                if !allowed.contains(&c) && bad.len() < 10 {
                    bad.push(format!("{} -> {}", r.describe(self.lf()), self.rep(t).describe(self.lf())));
                }
            }
        }
        if !bad.is_empty() {
            return Err(HeckeError::ContainmentViolated(bad));
        }
        Ok(PropagationReport { sources: reps.len(), checked, targets })
    }

    /// Generators of `I_{1,K}` modulo a subgroup acting trivially on `B_R`:
    /// single-coefficient elements of `N_{n_K}` and `N′_{m_K}` up to `2R+2`
    /// levels deep, and torus one-units up to level `2R+2`. Returned as
    /// `(upper, lower, torus)`.
    pub fn i1_generator_families(&self, radius: u32) -> [Vec<GroupElem>; 3] {
        let lf = self.lf();
        let f = lf.residue_field();
        let depth = 2 * radius as i32 + 2;
        let basis = [Fe::ONE, f.generator()];
        let z0 = f.trace_zero_elements().into_iter().find(|x| !x.is_zero()).expect("trace-zero unit");
        let mut families: [Vec<GroupElem>; 3] = Default::default();
        for (start, prime) in [(self.tree.nk(), false), (self.tree.mk(), true)] {
            let make = |x: &LaurentElem, z: &LaurentElem| if prime { lf.nprime_from_xz(x, z) } else { lf.n_from_xz(x, z) };
            let out = &mut families[prime as usize];
            for e in crate::group::ceil_half(start)..crate::group::ceil_half(start + depth) {
                for &c in &basis {
                    out.push(make(&LaurentElem::monomial(c, e), &LaurentElem::zero()));
                }
            }
            for a in start..start + depth {
                out.push(make(&LaurentElem::zero(), &LaurentElem::monomial(z0, a)));
            }
        }
        for e in 1..=depth {
            for &c in &basis {
                let w = lf.add(&LaurentElem::one(), &LaurentElem::monomial(c, e));
                let wb = lf.conj_series(&w);
                let wi = lf.invert(&w).expect("unit");
                let wbi = lf.invert(&wb).expect("unit");
                families[2].push(GroupElem::diag(w.clone(), lf.mul(&wb, &wi), wbi.clone()));
                families[2].push(GroupElem::diag(LaurentElem::one(), lf.mul(&w, &wbi), LaurentElem::one()));
            }
        }
        families
    }

    pub fn i1_generators(&self, radius: u32) -> Vec<GroupElem> {
        self.i1_generator_families(radius).into_iter().flatten().collect()
    }

    /// Transitions of every coset of `B_R` under the `I_{1,K}` generators.
    pub fn i1_action(&self, radius: u32) -> Result<I1Action, HeckeError> {
        let gens = self.i1_generators(radius);
        let n = self.ball_size(radius) as u32;
        let mut trans = Vec::with_capacity(gens.len());
        for g in &gens {
            trans.push((0..n).map(|id| self.transport(g, id)).collect::<Result<Vec<_>, _>>()?);
        }
        Ok(I1Action { radius, gens, trans })
    }
}

/// `I_{1,K}` acting on the cosets of a ball.
#[derive(Debug, Clone)]
pub struct I1Action {
    pub radius: u32,
    pub gens: Vec<GroupElem>,
    /// `trans[g][id]`.
    pub trans: Vec<Vec<Transition>>,
}

impl Hecke<'_> {
    /// Whether `g · F = F` for every generator; `None` if `F` leaves the ball.
    pub fn check_i1_invariance(&self, act: &I1Action, f: &InducedFun) -> Option<bool> {
        let n = act.trans.first().map_or(0, |t| t.len()) as u32;
        for t in &act.trans {
            let img = self.apply_transitions(f, |id| (id < n).then(|| t[id as usize]))?;
            if &img != f {
                return Some(false);
            }
        }
        Some(true)
    }

    /// Basis of the `I_{1,K}`-invariants of `B_R`, one orbit of cosets at a time:
    /// values are transported along a spanning tree of the orbit and the
    /// remaining edges cut down the admissible starting values.
    pub fn i1_invariants(&self, act: &I1Action) -> Vec<InducedFun> {
        let fl = self.field();
        let d = self.dim();
        let n = act.trans.first().map_or(0, |t| t.len());
        let mut transport: Vec<Option<Mat>> = vec![None; n];
        let mut out = Vec::new();
        for root in 0..n {
            if transport[root].is_some() {
                continue;
            }
            transport[root] = Some(Mat::identity(d));
            let mut orbit = vec![root];
            let mut sol = Mat::identity(d);
            let mut i = 0;
            while i < orbit.len() {
                let r = orbit[i];
                i += 1;
                let mr = transport[r].clone().expect("visited");
                for t in &act.trans {
                    let (r2, k) = t[r];
                    let m2 = self.sig(k).mul(fl, &mr);
                    match &transport[r2 as usize] {
                        None => {
                            transport[r2 as usize] = Some(m2);
                            orbit.push(r2 as usize);
                        }
                        Some(existing) => {
                            if sol.cols() == 0 || existing == &m2 {
                                continue;
                            }
                            let c = existing.sub(fl, &m2).mul(fl, &sol);
                            let ker = kernel_basis(fl, &c);
                            let cols: Vec<Vec<Fe>> = ker.iter().map(|v| sol.mul_vec(fl, v)).collect();
                            sol = if cols.is_empty() { Mat::zeros(d, 0) } else { Mat::from_cols(&cols, d) };
                        }
                    }
                }
            }
            orbit.sort_unstable();
            for c in 0..sol.cols() {
                let v = sol.col(c);
                let mut fun = InducedFun::zero();
                for &r in &orbit {
                    fun.add_term(fl, r as u32, &transport[r].as_ref().expect("visited").mul_vec(fl, &v));
                }
                out.push(fun);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rep::{build_catalog, CoeffField};

    fn setup(v: Vertex, radius: u32) -> (CosetSpace, Vec<IrredRep>) {
        let lf = LocalField::new(Field::with_degree(3, 2).unwrap(), 16);
        let tree = Tree::new(lf, v, radius + 3).unwrap();
        let gamma = Gamma::new(&tree).unwrap();
        let c = CoeffField::new(gamma.field(), 2).unwrap();
        let cat = build_catalog(&gamma, &c, 1, 50).unwrap();
        (CosetSpace::new(tree, gamma, radius).unwrap(), cat)
    }

    #[test]
    fn t_terms_count_the_first_shell() {
        for v in Vertex::ALL {
            let (space, _) = setup(v, 1);
            assert_eq!(space.tterms().len(), space.tree().shell_size(1));
        }
    }

    #[test]
    fn tf_formulas_on_both_vertices() {
        for v in Vertex::ALL {
            let (space, cat) = setup(v, 1);
            for sigma in cat.iter().filter(|s| s.dim <= 3) {
                let h = Hecke::new(&space, sigma);
                h.check_tf0().unwrap();
                for n in [-1, 1] {
                    let c = h.check_tfn(n).unwrap();
                    if sigma.dim > 1 {
                        assert_eq!(c, Fe::ZERO, "{v} dim {} n {n}", sigma.dim);
                    }
                }
            }
        }
    }

    #[test]
    fn convolution_relations() {
        for v in Vertex::ALL {
            let (space, cat) = setup(v, 1);
            for sigma in cat.iter().filter(|s| s.dim <= 3) {
                let h = Hecke::new(&space, sigma);
                for n in 1..=2 {
                    let prod = h.convolve(&HeckeElem::phi(1), &HeckeElem::phi(n)).unwrap();
                    assert!(prod.coeffs.keys().all(|&l| l == n || l == n + 1), "{prod:?}");
                    assert_eq!(prod.coeff(n + 1), Fe::ONE);
                    if sigma.dim > 1 {
                        assert_eq!(prod.coeff(n), Fe::ZERO);
                    }
                }
                for n in 0..=2 {
                    assert_eq!(h.verify_bi_equivariant_line(n).unwrap(), 1);
                }
                let s1 = h.sigma_one(2, 1).unwrap();
                assert!(s1.sum.is_zero());
                assert!(s1.all_equal);
                eprintln!("{v} dim {} sigma_one count {}", sigma.dim, s1.count);
            }
        }
    }

    #[test]
    fn support_propagation_near_the_base() {
        for v in Vertex::ALL {
            let (space, _) = setup(v, 1);
            for r in [RSpace::Plus(0), RSpace::Plus(1), RSpace::Minus(0)] {
                let rep = space.check_support_propagation(r, 1).unwrap();
                assert_eq!(rep.checked, rep.sources);
            }
        }
    }

    #[test]
    fn hecke_tn_matches_t_polynomials() {
        let (space, cat) = setup(Vertex::K0, 1);
        for sigma in cat.iter().filter(|s| s.dim <= 3) {
            let h = Hecke::new(&space, sigma);
            let f0 = h.f_n(0);
            assert_eq!(h.hecke_tn_apply(0, &f0).unwrap(), f0);
            assert_eq!(h.hecke_tn_apply(1, &f0).unwrap(), h.hecke_t(&f0).unwrap());
        }
    }

    #[test]
    fn i1_invariants_are_spanned_by_f_n() {
        for v in Vertex::ALL {
            let (space, cat) = setup(v, 1);
            let act = space.i1_action(1).unwrap();
            for sigma in cat.iter().filter(|s| s.dim == 1 || s.dim == 3).take(3) {
                let h = Hecke::new(&space, sigma);
                let inv = h.i1_invariants(&act);
                assert_eq!(inv.len(), 3, "{v} dim {}", sigma.dim);
                for n in -1..=1 {
                    let f = h.f_n(n);
                    assert_eq!(h.check_i1_invariance(&act, &f), Some(true), "{v} n {n}");
                }
            }
        }
    }
}
