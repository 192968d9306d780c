//! The finite reductive quotients `Γ_K = K/K¹` and their irreducible
//! representations over `F_{p^k}`.

use std::collections::{HashMap, VecDeque};
use std::sync::OnceLock;

use thiserror::Error;

use crate::ff::{Embedding, Fe, Field, FieldError};
use crate::group::{res_identity, res_mul, GroupElem, GroupError, ResMat, Vertex};
use crate::laurent::LocalField;
use crate::linalg::{kernel_basis, rref, Mat};
use crate::meataxe::{Certificate, MeataxeError, Module};
use crate::tree::Tree;

#[derive(Debug, Error)]
pub enum RepError {
    #[error("closure exceeded {0} elements")]
    ClosureOverflow(usize),
    #[error("coefficient field of degree {k} cannot carry the torus characters")]
    FieldTooSmall { k: u32 },
    #[error("span(v0) meets the augmentation subspace")]
    DecompositionFailed,
    #[error("{0}")]
    Field(#[from] FieldError),
    #[error("{0}")]
    Group(#[from] GroupError),
    #[error("{0}")]
    Meataxe(#[from] MeataxeError),
}

pub const CLOSURE_BOUND: usize = 1_000_000;

/// `Γ_K` as a table of reduced matrices, closed under a small generating set.
/// Element `i` equals `elems[parent[i].0] · gens[parent[i].1]`.
#[derive(Debug, Clone)]
pub struct Gamma {
    vertex: Vertex,
    field: Field,
    elems: Vec<ResMat>,
    index: HashMap<ResMat, u32>,
    gens: Vec<u32>,
    gen_lifts: Vec<GroupElem>,
    parent: Vec<(u32, u8)>,
    beta_k: u32,
}

fn closure(f: &Field, gens: &[ResMat], bound: usize) -> Result<(Vec<ResMat>, HashMap<ResMat, u32>, Vec<(u32, u8)>), RepError> {
    let mut elems = vec![res_identity()];
    let mut index = HashMap::from([(res_identity(), 0u32)]);
    let mut parent = vec![(0u32, 0u8)];
    let mut queue = VecDeque::from([0u32]);
    while let Some(i) = queue.pop_front() {
        for (g, m) in gens.iter().enumerate() {
            let prod = res_mul(f, &elems[i as usize], m);
            if !index.contains_key(&prod) {
                if elems.len() >= bound {
                    return Err(RepError::ClosureOverflow(bound));
                }
                let id = elems.len() as u32;
                index.insert(prod, id);
                elems.push(prod);
                parent.push((i, g as u8));
                queue.push_back(id);
            }
        }
    }
    Ok((elems, index, parent))
}

impl Gamma {
    /// Closure of the reductions of the tree's `K` generators. A generator is kept
    /// only if it is not already in the group generated by the earlier ones;
    /// the Weyl element and the torus come first.
    pub fn new(tree: &Tree) -> Result<Self, RepError> {
        Self::with_bound(tree, CLOSURE_BOUND)
    }

    pub fn with_bound(tree: &Tree, bound: usize) -> Result<Self, RepError> {
        let lf = tree.lf();
        let v = tree.vertex();
        let f = lf.residue_field().clone();
        let mut cands = tree.k_generators();
        let tail = cands.len().min(3);
        cands.rotate_right(tail);
        let mut gens: Vec<ResMat> = Vec::new();
        let mut gen_lifts = Vec::new();
        let mut current: HashMap<ResMat, u32> = HashMap::from([(res_identity(), 0)]);
        for g in cands {
            let r = lf.reduce(&g, v)?;
            if current.contains_key(&r) {
                continue;
            }
            gens.push(r);
            gen_lifts.push(g);
            current = closure(&f, &gens, bound)?.1;
        }
        let (elems, index, parent) = closure(&f, &gens, bound)?;
        let beta = lf.reduce(&GroupElem::beta_k(v), v)?;
        let beta_k = index[&beta];
        let gens = gens.iter().map(|g| index[g]).collect();
        Ok(Gamma { vertex: v, field: f, elems, index, gens, gen_lifts, parent, beta_k })
    }

    pub fn vertex(&self) -> Vertex {
        self.vertex
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn order(&self) -> usize {
        self.elems.len()
    }

    pub fn elem(&self, i: u32) -> &ResMat {
        &self.elems[i as usize]
    }

    pub fn index_of(&self, m: &ResMat) -> Option<u32> {
        self.index.get(m).copied()
    }

    pub fn generators(&self) -> &[u32] {
        &self.gens
    }

    pub fn generator_lifts(&self) -> &[GroupElem] {
        &self.gen_lifts
    }

    pub fn parent(&self, i: u32) -> (u32, usize) {
        let (p, g) = self.parent[i as usize];
        (p, g as usize)
    }

    pub fn beta_k(&self) -> u32 {
        self.beta_k
    }

    pub fn identity(&self) -> u32 {
        0
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        let m = res_mul(&self.field, self.elem(a), self.elem(b));
        self.index[&m]
    }

    pub fn inverse(&self, a: u32) -> u32 {
        // Orders are small; walk powers.
        let mut prev = 0;
        let mut cur = a;
        while cur != 0 {
            prev = cur;
            cur = self.mul(cur, a);
        }
        if a == 0 {
            0
        } else {
            prev
        }
    }

    /// Index of the reduction of `g ∈ K`.
    pub fn reduce(&self, lf: &LocalField, g: &GroupElem) -> Result<u32, RepError> {
        let r = lf.reduce(g, self.vertex)?;
        Ok(self.index[&r])
    }

    fn filter(&self, pred: impl Fn(&ResMat) -> bool) -> Vec<u32> {
        (0..self.order() as u32).filter(|&i| pred(self.elem(i))).collect()
    }

    /// The Borel `𝔹` (upper triangular elements).
    pub fn borel(&self) -> Vec<u32> {
        self.filter(|m| m[1][0].is_zero() && m[2][0].is_zero() && m[2][1].is_zero())
    }

    /// `𝕌`, the upper unipotent elements.
    pub fn unipotent(&self) -> Vec<u32> {
        self.filter(|m| is_unipotent(m, true))
    }

    /// `𝕌′`, the lower unipotent elements.
    pub fn unipotent_lower(&self) -> Vec<u32> {
        self.filter(|m| is_unipotent(m, false))
    }

    /// `𝕋`, the diagonal elements.
    pub fn torus(&self) -> Vec<u32> {
        self.filter(|m| (0..3).all(|i| (0..3).all(|j| i == j || m[i][j].is_zero())))
    }

    /// Number of conjugacy classes of elements of order prime to `p`.
    pub fn p_regular_classes(&self) -> usize {
        let p = u64::from(self.field.p());
        let n = self.order() as u32;
        let mut seen = vec![false; n as usize];
        let mut count = 0;
        let inv: Vec<u32> = self.gens.iter().map(|&g| self.inverse(g)).collect();
        for start in 0..n {
            if seen[start as usize] {
                continue;
            }
            let mut stack = vec![start];
            seen[start as usize] = true;
            while let Some(x) = stack.pop() {
                for (&g, &gi) in self.gens.iter().zip(&inv) {
                    let y = self.mul(self.mul(gi, x), g);
                    if !seen[y as usize] {
                        seen[y as usize] = true;
                        stack.push(y);
                    }
                }
            }
            if self.element_order(start) % p != 0 {
                count += 1;
            }
        }
        count
    }

    pub fn element_order(&self, a: u32) -> u64 {
        let mut k = 1;
        let mut cur = a;
        while cur != 0 {
            cur = self.mul(cur, a);
            k += 1;
        }
        k
    }
}

fn is_unipotent(m: &ResMat, upper: bool) -> bool {
    (0..3).all(|i| {
        (0..3).all(|j| {
            if i == j {
                m[i][j] == Fe::ONE
            } else if (j < i) == upper {
                m[i][j].is_zero()
            } else {
                true
            }
        })
    })
}

/// The coefficient field `F_{p^k}` with a fixed embedding of the residue field.
#[derive(Debug, Clone)]
pub struct CoeffField {
    pub field: Field,
    pub emb: Embedding,
}

impl CoeffField {
    pub fn new(res: &Field, k: u32) -> Result<Self, RepError> {
        if k == 0 || k % res.degree() != 0 {
            return Err(RepError::FieldTooSmall { k });
        }
        let field = Field::with_degree(res.p(), k)?;
        let emb = res.embedding_into(&field)?;
        Ok(CoeffField { field, emb })
    }

    /// The least admissible degree: the residue field itself.
    pub fn default_degree(res: &Field) -> u32 {
        res.degree()
    }
}

/// A character of `𝔹`, through `diag(x, y, x̄⁻¹) ↦ x^a · y^b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Character {
    pub a: u32,
    pub b: u32,
}

impl Character {
    pub fn trivial() -> Self {
        Character { a: 0, b: 0 }
    }

    pub fn value(&self, c: &CoeffField, m: &ResMat) -> Fe {
        let f = &c.field;
        f.mul(f.pow(c.emb.apply(m[0][0]), u64::from(self.a)), f.pow(c.emb.apply(m[1][1]), u64::from(self.b)))
    }

    /// All `(q²−1)(q+1)` characters, `a` major.
    pub fn all(res: &Field) -> Vec<Character> {
        let q2 = res.order();
        let q = (q2 as f64).sqrt().round() as u32;
        (0..q2 - 1).flat_map(|a| (0..=q).map(move |b| Character { a, b })).collect()
    }
}

/// Right cosets `𝔹\Γ`: element `g = bpart[g] · reps[coset[g]]`.
#[derive(Debug, Clone)]
pub struct BorelCosets {
    pub reps: Vec<u32>,
    pub coset: Vec<u32>,
    pub bpart: Vec<u32>,
}

impl Gamma {
    pub fn borel_cosets(&self) -> BorelCosets {
        let b = self.borel();
        let n = self.order();
        let mut coset = vec![u32::MAX; n];
        let mut bpart = vec![0; n];
        let mut reps = Vec::new();
        for g in 0..n as u32 {
            if coset[g as usize] != u32::MAX {
                continue;
            }
            let c = reps.len() as u32;
            reps.push(g);
            for &x in &b {
                let e = self.mul(x, g) as usize;
                coset[e] = c;
                bpart[e] = x;
            }
        }
        BorelCosets { reps, coset, bpart }
    }

    /// `Ind_𝔹^Γ χ` on functions with `f(bx) = χ(b) f(x)`, basis the indicator
    /// functions of the cosets, `(γ·f)(x) = f(xγ)`.
    pub fn induced_module(&self, cosets: &BorelCosets, c: &CoeffField, chi: Character) -> Module {
        let n = cosets.reps.len();
        let gens = self
            .gens
            .iter()
            .map(|&g| {
                let mut m = Mat::zeros(n, n);
                for (d, &s) in cosets.reps.iter().enumerate() {
                    let e = self.mul(s, g) as usize;
                    let val = chi.value(c, self.elem(cosets.bpart[e]));
                    m.set(d, cosets.coset[e] as usize, val);
                }
                m
            })
            .collect();
        Module { dim: n, gens }
    }

    /// The matrices of a module on every element, following the parent chain.
    pub fn action_table(&self, f: &Field, m: &Module) -> Vec<Mat> {
        let mut t: Vec<Mat> = Vec::with_capacity(self.order());
        t.push(Mat::identity(m.dim));
        for i in 1..self.order() {
            let (p, g) = self.parent[i];
            let next = t[p as usize].mul(f, &m.gens[g as usize]);
            t.push(next);
        }
        t
    }
}

/// An irreducible `Γ_K`-module with its `𝕌`-fixed line, the projection
/// `j_σ` onto it along the `𝕌′`-augmentation, and `λ_{β_K,σ}`.
#[derive(Debug)]
pub struct IrredRep {
    pub weight_id: u32,
    pub dim: usize,
    pub module: Module,
    pub certificate: Certificate,
    pub source: Character,
    pub v0: Vec<Fe>,
    pub jmat: Mat,
    pub lambda: Fe,
    field: Field,
    table: OnceLock<Vec<Mat>>,
}

fn normalize(f: &Field, v: &mut [Fe]) {
    if let Some(&lead) = v.iter().find(|x| !x.is_zero()) {
        let inv = f.inv(lead).expect("nonzero");
        for x in v.iter_mut() {
            *x = f.mul(*x, inv);
        }
    }
}

impl IrredRep {
    pub fn new(weight_id: u32, module: Module, certificate: Certificate, source: Character, gamma: &Gamma, field: &Field) -> Result<Self, RepError> {
        let dim = module.dim;
        let mut rep = IrredRep {
            weight_id,
            dim,
            module,
            certificate,
            source,
            v0: Vec::new(),
            jmat: Mat::zeros(dim, dim),
            lambda: Fe::ZERO,
            field: field.clone(),
            table: OnceLock::new(),
        };
        let fixed = rep.invariants(gamma, &gamma.unipotent());
        if fixed.len() != 1 {
            return Err(RepError::DecompositionFailed);
        }
        let mut v0 = fixed[0].clone();
        normalize(field, &mut v0);
        let d = rep.augmentation(gamma, &gamma.unipotent_lower());
        if d.len() + 1 != dim {
            return Err(RepError::DecompositionFailed);
        }
        let mut basis = vec![v0.clone()];
        basis.extend(d);
        let b = Mat::from_cols(&basis, dim);
        let binv = crate::linalg::inverse(field, &b).ok_or(RepError::DecompositionFailed)?;
        let mut jmat = Mat::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                jmat.set(i, j, field.mul(v0[i], binv.get(0, j)));
            }
        }
        let bv = rep.action(gamma, gamma.beta_k()).mul_vec(field, &v0);
        rep.lambda = binv.mul_vec(field, &bv)[0];
        rep.v0 = v0;
        rep.jmat = jmat;
        Ok(rep)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    /// `σ(γ)` for an element index of `Γ_K`.
    pub fn action(&self, gamma: &Gamma, g: u32) -> &Mat {
        &self.table.get_or_init(|| gamma.action_table(&self.field, &self.module))[g as usize]
    }

    /// `σ(k)` for `k ∈ K`, through the reduction.
    pub fn act(&self, gamma: &Gamma, lf: &LocalField, k: &GroupElem) -> Result<Mat, RepError> {
        Ok(self.action(gamma, gamma.reduce(lf, k)?).clone())
    }

    /// Basis of the vectors fixed by every listed element.
    pub fn invariants(&self, gamma: &Gamma, elems: &[u32]) -> Vec<Vec<Fe>> {
        let f = &self.field;
        let id = Mat::identity(self.dim);
        let blocks: Vec<Mat> = elems.iter().map(|&u| self.action(gamma, u).sub(f, &id)).collect();
        let refs: Vec<&Mat> = blocks.iter().collect();
        if refs.is_empty() {
            return (0..self.dim).map(|i| crate::linalg::SparseVec::unit(i).to_dense(self.dim)).collect();
        }
        kernel_basis(f, &Mat::vstack(&refs))
    }

    /// Echelonized basis of `span{(σ(u)−1)w}` over the listed elements.
    pub fn augmentation(&self, gamma: &Gamma, elems: &[u32]) -> Vec<Vec<Fe>> {
        let f = &self.field;
        let id = Mat::identity(self.dim);
        let mut rows = Vec::new();
        for &u in elems {
            let m = self.action(gamma, u).sub(f, &id).transpose();
            rows.extend((0..self.dim).map(|i| m.row(i).to_vec()));
        }
        if rows.is_empty() {
            return rows;
        }
        let (r, p) = rref(f, &Mat::from_rows(&rows));
        (0..p.len()).map(|i| r.row(i).to_vec()).collect()
    }

    pub fn coinvariant_dim(&self, gamma: &Gamma) -> usize {
        self.dim - self.augmentation(gamma, &gamma.unipotent_lower()).len()
    }

    pub fn is_trivial(&self, gamma: &Gamma) -> bool {
        self.dim == 1 && gamma.generators().iter().all(|&g| self.action(gamma, g).get(0, 0) == Fe::ONE)
    }

    /// Scalar by which `σ` acts on `v0` through the torus element `t`.
    pub fn torus_weight(&self, gamma: &Gamma, t: u32) -> Fe {
        let w = self.action(gamma, t).mul_vec(&self.field, &self.v0);
        let i = self.v0.iter().position(|x| !x.is_zero()).expect("v0 nonzero");
        self.field.div(w[i], self.v0[i]).expect("nonzero")
    }

    pub fn is_isomorphic(&self, other: &Module) -> bool {
        self.module.isomorphism_to(&self.field, &self.certificate, other).is_some()
    }

    /// `rank` of the intertwiner system, as an independent check.
    pub fn hom_dimension(&self, other: &Module) -> usize {
        self.module.hom_dimension(&self.field, other)
    }
}

/// Seed for the chop of the `i`-th induced module.
fn chop_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Chops `Ind_𝔹^Γ χ` for every character and keeps one module per isomorphism
/// class, in order of first appearance.
pub fn build_catalog(gamma: &Gamma, c: &CoeffField, seed: u64, attempts: usize) -> Result<Vec<IrredRep>, RepError> {
    let f = &c.field;
    let cosets = gamma.borel_cosets();
    let chars = Character::all(gamma.field());
    let factors: Vec<Result<Vec<(Module, Certificate)>, MeataxeError>> = std::thread::scope(|s| {
        let handles: Vec<_> = chars
            .iter()
            .enumerate()
            .map(|(i, &chi)| {
                let cosets = &cosets;
                s.spawn(move || gamma.induced_module(cosets, c, chi).composition_factors(f, chop_seed(seed, i), attempts))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("chop thread")).collect()
    });
    let mut out: Vec<IrredRep> = Vec::new();
    for (chi, fs) in chars.iter().zip(factors) {
        for (m, cert) in fs? {
            if out.iter().any(|r| r.dim == m.dim && r.is_isomorphic(&m)) {
                continue;
            }
            let id = out.len() as u32;
            out.push(IrredRep::new(id, m, cert, *chi, gamma, f)?);
        }
    }
    Ok(out)
}

/// [`build_catalog`], doubling the coefficient degree on `RetryLimit`.
pub fn build_catalog_escalating(gamma: &Gamma, k: u32, seed: u64, attempts: usize, max_escalations: u32) -> Result<(u32, Vec<IrredRep>), RepError> {
    let mut k = k;
    let mut tries = 0;
    loop {
        let c = CoeffField::new(gamma.field(), k)?;
        match build_catalog(gamma, &c, seed, attempts) {
            Err(RepError::Meataxe(MeataxeError::RetryLimit(_))) if tries < max_escalations => {
                k *= 2;
                tries += 1;
            }
            other => return other.map(|reps| (k, reps)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ff::Field;

    fn gamma(v: Vertex) -> Gamma {
        let lf = LocalField::new(Field::with_degree(3, 2).unwrap(), 12);
        Gamma::new(&Tree::new(lf, v, 2).unwrap()).unwrap()
    }

    #[test]
    fn orders_and_subgroups() {
        let g0 = gamma(Vertex::K0);
        // q³(q+1)(q²−1)(q³+1) at q = 3.
        assert_eq!(g0.order(), 27 * 4 * 8 * 28);
        assert_eq!(g0.borel().len(), 27 * 32);
        assert_eq!(g0.unipotent().len(), 27);
        assert_eq!(g0.unipotent_lower().len(), 27);
        assert_eq!(g0.torus().len(), 32);
        assert_eq!(g0.borel_cosets().reps.len(), 28);
        let g1 = gamma(Vertex::K1);
        // |U(1,1)(F_3)| · |U(1)(F_3)| = 96 · 4.
        assert_eq!(g1.order(), 384);
        assert_eq!(g1.borel_cosets().reps.len(), 4);
        assert_eq!(g1.torus().len(), 32);
    }

    #[test]
    fn trivial_induced_splits_as_one_plus_steinberg() {
        let g = gamma(Vertex::K0);
        let c = CoeffField::new(g.field(), 2).unwrap();
        let m = g.induced_module(&g.borel_cosets(), &c, Character::trivial());
        let mut dims: Vec<usize> = m.composition_factors(&c.field, 7, 50).unwrap().iter().map(|(x, _)| x.dim).collect();
        dims.sort();
        assert_eq!(dims, vec![1, 27]);
    }

    #[test]
    fn k0_catalog() {
        let g = gamma(Vertex::K0);
        let c = CoeffField::new(g.field(), 2).unwrap();
        let t = std::time::Instant::now();
        let cat = build_catalog(&g, &c, 1, 50).unwrap();
        let dims: Vec<usize> = cat.iter().map(|r| r.dim).collect();
        eprintln!("{dims:?} classes {} {:?}", g.p_regular_classes(), t.elapsed());
        assert_eq!(cat.len(), g.p_regular_classes());
        check_bundles(&g, &cat);
    }

    fn check_bundles(g: &Gamma, cat: &[IrredRep]) {
        assert!(cat.iter().any(|r| r.is_trivial(g)));
        for r in cat {
            let f = r.field();
            assert_eq!(r.coinvariant_dim(g), 1);
            assert_eq!(r.jmat.mul(f, &r.jmat), r.jmat);
            assert_eq!(r.jmat.mul_vec(f, &r.v0), r.v0);
            if r.dim > 1 {
                assert_eq!(r.lambda, Fe::ZERO);
            } else {
                assert_eq!(r.lambda, r.action(g, g.beta_k()).get(0, 0));
            }
        }
    }

    #[test]
    fn k1_catalog() {
        let g = gamma(Vertex::K1);
        let c = CoeffField::new(g.field(), 2).unwrap();
        let cat = build_catalog(&g, &c, 1, 50).unwrap();
        let dims: Vec<usize> = cat.iter().map(|r| r.dim).collect();
        eprintln!("{dims:?} classes {}", g.p_regular_classes());
        assert_eq!(cat.len(), g.p_regular_classes());
        check_bundles(&g, &cat);
    }
}
