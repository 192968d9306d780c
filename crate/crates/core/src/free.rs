//! Ball and circle filtration of `ind_K^G σ`, the key lemma, the free basis
//! construction and the growth of `ind_K^G σ / (T − λ)`.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::ff::{Fe, Field};
use crate::hecke::{Hecke, HeckeError, InducedFun};
use crate::linalg::{Echelon, Mat, SparseVec};

#[derive(Debug, Error)]
pub enum FreeError {
    #[error("{0}")]
    Hecke(#[from] HeckeError),
    #[error("dimension {dim} exceeds the budget {budget}")]
    BudgetExceeded { dim: usize, budget: usize },
    #[error("radius {needed} needed but the coset space stops at {radius}")]
    RadiusTooSmall { needed: u32, radius: u32 },
    #[error("key lemma violated at n = {n}: {witness}")]
    LemmaViolated { n: u32, witness: String },
    #[error("images at circle {n} are dependent: {witness}")]
    IndependenceFailed { n: u32, witness: String },
    #[error("T - lambda is not injective on B_{r}")]
    InjectivityFailed { r: u32 },
}

pub const DEFAULT_SPARSE_BUDGET: usize = 200_000;

/// Coordinates of `B_R`: coset id `c` and `W`-coordinate `i` give index `c · dim σ + i`.
/// Coset ids are ordered by shell, so `C_k` is a contiguous index range.
pub struct BallSpace<'h, 'a> {
    hecke: &'h Hecke<'a>,
    radius: u32,
}

impl<'h, 'a> BallSpace<'h, 'a> {
    pub fn new(hecke: &'h Hecke<'a>, radius: u32) -> Result<Self, FreeError> {
        let have = hecke.space().radius();
        if radius > have {
            return Err(FreeError::RadiusTooSmall { needed: radius, radius: have });
        }
        Ok(BallSpace { hecke, radius })
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn hecke(&self) -> &Hecke<'a> {
        self.hecke
    }

    fn field(&self) -> &Field {
        self.hecke.field()
    }

    /// `dim B_k`.
    pub fn dim_ball(&self, k: u32) -> usize {
        self.hecke.space().ball_size(k) * self.hecke.dim()
    }

    /// `dim C_k`.
    pub fn dim_circle(&self, k: u32) -> usize {
        let ids = self.hecke.space().shell_ids(k);
        (ids.end - ids.start) as usize * self.hecke.dim()
    }

    /// Index range of `C_k`.
    pub fn circle(&self, k: u32) -> std::ops::Range<u32> {
        let d = self.hecke.dim() as u32;
        let ids = self.hecke.space().shell_ids(k);
        ids.start * d..ids.end * d
    }

    pub fn to_fun(&self, v: &SparseVec) -> InducedFun {
        InducedFun::from_coordinates(self.hecke.dim(), &v.0)
    }

    pub fn to_sparse(&self, f: &InducedFun) -> SparseVec {
        SparseVec(f.coordinates(self.hecke.dim()))
    }

    pub fn apply_t(&self, v: &SparseVec) -> Result<SparseVec, FreeError> {
        Ok(self.to_sparse(&self.hecke.hecke_t(&self.to_fun(v))?))
    }

    /// `T − λ`.
    pub fn apply_t_minus(&self, lambda: Fe, v: &SparseVec) -> Result<SparseVec, FreeError> {
        let f = self.to_fun(v);
        let fl = self.field();
        let g = self.hecke.hecke_t(&f)?.sub(fl, &f.scale(fl, lambda));
        Ok(self.to_sparse(&g))
    }

    /// The entries of `v` inside `C_k`.
    pub fn project(&self, v: &SparseVec, k: u32) -> SparseVec {
        let r = self.circle_beyond(k);
        SparseVec(v.0.iter().filter(|(i, _)| r.contains(i)).copied().collect())
    }

    /// `C_k` may lie outside the interned ball, whose ids follow in interning order;
    /// membership is then decided by classification.
    fn circle_beyond(&self, k: u32) -> CircleTest<'_> {
        if k <= self.hecke.space().radius() {
            CircleTest::Range(self.circle(k))
        } else {
            CircleTest::Classify { space: self.hecke.space(), k, dim: self.hecke.dim() as u32 }
        }
    }

    fn describe(&self, index: u32) -> String {
        let d = self.hecke.dim() as u32;
        let space = self.hecke.space();
        format!("{} coordinate {}", space.rep(index / d).describe(space.lf()), index % d)
    }
}

enum CircleTest<'s> {
    Range(std::ops::Range<u32>),
    Classify { space: &'s crate::hecke::CosetSpace, k: u32, dim: u32 },
}

impl CircleTest<'_> {
    fn contains(&self, i: &u32) -> bool {
        match self {
            CircleTest::Range(r) => r.contains(i),
            CircleTest::Classify { space, k, dim } => space.classify(i / dim).1 == *k,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KeyLemmaReport {
    pub n: u32,
    pub dim_domain: usize,
    pub kernel_dim: usize,
    pub expected: usize,
}

fn check_key_lemma_preconditions(ball: &BallSpace, n: u32, budget: usize) -> Result<usize, FreeError> {
    let space = ball.hecke().space();
    if n + 1 > space.radius() {
        return Err(FreeError::RadiusTooSmall { needed: n + 1, radius: space.radius() });
    }
    let dim = ball.dim_ball(n + 1);
    if dim > budget {
        return Err(FreeError::BudgetExceeded { dim, budget });
    }
    Ok(dim)
}

/// The `C_{n+2}`-component of `T[r, ·]` as blocks `Σ_{j → t} σ(k_j) M_j`, one per target coset `t`.
fn outward_blocks(hecke: &Hecke, id: u32, outer: u32) -> Result<BTreeMap<u32, Vec<usize>>, FreeError> {
    let space = hecke.space();
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (j, &(t, _)) in space.t_transitions(id)?.iter().enumerate() {
        if space.classify(t).1 == outer {
            groups.entry(t).or_default().push(j);
        }
    }
    Ok(groups)
}

fn block_sum(hecke: &Hecke, id: u32, terms: &[usize]) -> Result<Mat, FreeError> {
    let fl = hecke.field();
    let trans = hecke.space().t_transitions(id)?;
    let mut acc = Mat::zeros(hecke.dim(), hecke.dim());
    for &j in terms {
        acc = acc.add(fl, &hecke.sig(trans[j].1).mul(fl, &hecke.tmats()[j]));
    }
    Ok(acc)
}

/// Rank of the stacked matrices, stopping once it is full.
fn stacked_rank<'m>(fl: &Field, d: usize, mats: impl IntoIterator<Item = std::borrow::Cow<'m, Mat>>) -> usize {
    let mut ech = Echelon::new(fl.clone());
    for m in mats {
        for i in 0..m.rows() {
            ech.insert(SparseVec::from_dense(m.row(i)));
            if ech.rank() == d {
                return d;
            }
        }
    }
    ech.rank()
}

/// `f ∈ B_{n+1}` and `T f ∈ B_{n+1}` force `f ∈ B_n`: the map `B_{n+1} → C_{n+2}`,
/// `f ↦ (T f)|_{C_{n+2}}`, vanishes on `B_n` and is injective on `C_{n+1}`.
///
/// Cosets of `C_{n+1}` with pairwise disjoint targets in `C_{n+2}` give a block
/// diagonal matrix, whose kernel is computed block by block. A block whose
/// targets each receive one term `σ(k_j) M_j` has the kernel of the stacked `M_j`.
/// Overlapping targets fall back to [`verify_key_lemma_global`].
pub fn verify_key_lemma(ball: &BallSpace, n: u32, budget: usize) -> Result<KeyLemmaReport, FreeError> {
    let dim = check_key_lemma_preconditions(ball, n, budget)?;
    let hecke = ball.hecke();
    let space = hecke.space();
    let (fl, d) = (hecke.field(), hecke.dim());
    for id in 0..space.ball_size(n) as u32 {
        for (t, terms) in outward_blocks(hecke, id, n + 2)? {
            if !block_sum(hecke, id, &terms)?.is_zero() {
                let lf = space.lf();
                return Err(FreeError::LemmaViolated {
                    n,
                    witness: format!("{} reaches {}", space.rep(id).describe(lf), space.rep(t).describe(lf)),
                });
            }
        }
    }
    let mut owner: HashMap<u32, u32> = HashMap::new();
    let mut cache: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut kernel_dim = ball.dim_ball(n);
    let mut deficient = None;
    for id in space.shell_ids(n + 1) {
        let blocks = outward_blocks(hecke, id, n + 2)?;
        for &t in blocks.keys() {
            if owner.insert(t, id).is_some() {
                return verify_key_lemma_global(ball, n, budget);
            }
        }
        let rank = if blocks.values().all(|b| b.len() == 1) {
            let mut key: Vec<usize> = blocks.values().map(|b| b[0]).collect();
            key.sort_unstable();
            *cache
                .entry(key)
                .or_insert_with_key(|key| stacked_rank(fl, d, key.iter().map(|&j| std::borrow::Cow::Borrowed(&hecke.tmats()[j]))))
        } else {
            let sums = blocks.values().map(|b| block_sum(hecke, id, b)).collect::<Result<Vec<_>, _>>()?;
            stacked_rank(fl, d, sums.into_iter().map(std::borrow::Cow::Owned))
        };
        if rank < d && deficient.is_none() {
            deficient = Some(id);
        }
        kernel_dim += d - rank;
    }
    if let Some(id) = deficient {
        return Err(FreeError::LemmaViolated {
            n,
            witness: format!("kernel dimension {kernel_dim}, deficient block at {}", space.rep(id).describe(space.lf())),
        });
    }
    Ok(KeyLemmaReport { n, dim_domain: dim, kernel_dim, expected: ball.dim_ball(n) })
}

/// [`verify_key_lemma`] by one sparse elimination over all columns of `C_{n+1}`.
pub fn verify_key_lemma_global(ball: &BallSpace, n: u32, budget: usize) -> Result<KeyLemmaReport, FreeError> {
    let dim = check_key_lemma_preconditions(ball, n, budget)?;
    let column = |c: u32| -> Result<SparseVec, FreeError> {
        let img = ball.apply_t(&SparseVec::unit(c as usize))?;
        Ok(ball.project(&img, n + 2))
    };
    for c in 0..ball.dim_ball(n) as u32 {
        let col = column(c)?;
        if !col.is_zero() {
            return Err(FreeError::LemmaViolated { n, witness: format!("{} reaches C_{}", ball.describe(c), n + 2) });
        }
    }
    let mut ech = Echelon::new(ball.field().clone());
    let mut dependent = None;
    for c in ball.circle(n + 1) {
        if !ech.insert(column(c)?) && dependent.is_none() {
            dependent = Some(c);
        }
    }
    let kernel_dim = dim - ech.rank();
    if let Some(c) = dependent {
        return Err(FreeError::LemmaViolated {
            n,
            witness: format!("kernel dimension {kernel_dim}, first dependent column at {}", ball.describe(c)),
        });
    }
    Ok(KeyLemmaReport { n, dim_domain: dim, kernel_dim, expected: ball.dim_ball(n) })
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantCheckReport {
    pub n: u32,
    /// Whether the component of `T(a f_{n+1} + b f_{−(n+1)})` on `C_{n+2}` is
    /// `a f_{n+2} + b f_{−(n+2)}`, for each sampled `(a, b)`.
    pub combinations: Vec<(String, String, bool)>,
}

/// The certificate behind the key lemma: on the `I₁`-invariants of `C_{n+1}`,
/// spanned by `f_{±(n+1)}`, the `C_{n+2}`-component of `T` is `f_{±(n+1)} ↦ f_{±(n+2)}`.
/// `T F` is `I_{1,K}`-invariant and `C_{n+2}` consists of the two orbits
/// `I_{1,K} α^{±(n+2)} K`, so the component is read off at `α^{±(n+2)} K`.
pub fn key_lemma_invariant_check(hecke: &Hecke, n: u32) -> Result<InvariantCheckReport, FreeError> {
    let fl = hecke.field();
    let m = n as i32 + 1;
    let up = hecke.orbit_point(m + 1)?;
    let down = hecke.orbit_point(-(m + 1))?;
    let expect_up = hecke.f_n_value(m + 1, up).expect("orbit point");
    let expect_down = hecke.f_n_value(-(m + 1), down).expect("orbit point");
    let samples = [(Fe::ONE, Fe::ZERO), (Fe::ZERO, Fe::ONE), (Fe::ONE, fl.generator())];
    let mut combinations = Vec::new();
    for (a, b) in samples {
        let f = |id: u32| {
            let p = hecke.f_n_value(m, id).map(|v| scale(fl, a, &v));
            let q = hecke.f_n_value(-m, id).map(|v| scale(fl, b, &v));
            p.or(q)
        };
        let at_up = hecke.t_value_at(up, f)?;
        let at_down = hecke.t_value_at(down, f)?;
        let ok = at_up == scale(fl, a, &expect_up) && at_down == scale(fl, b, &expect_down);
        combinations.push((fl.format(a), fl.format(b), ok));
        if !ok {
            return Err(FreeError::Hecke(HeckeError::FormulaViolated {
                n: m,
                residual: format!("C_{} component at (a, b) = ({}, {})", m + 1, fl.format(a), fl.format(b)),
            }));
        }
    }
    Ok(InvariantCheckReport { n, combinations })
}

fn scale(fl: &Field, c: Fe, v: &[Fe]) -> Vec<Fe> {
    v.iter().map(|&x| fl.mul(c, x)).collect()
}

#[derive(Debug, Clone)]
pub struct FreeBasis {
    pub radius: u32,
    /// `A_k` as sparse vectors of `C_k`.
    pub a: Vec<Vec<SparseVec>>,
    pub circle_dims: Vec<usize>,
    pub rank: usize,
    pub dim_ball: usize,
}

impl FreeBasis {
    pub fn sizes(&self) -> Vec<usize> {
        self.a.iter().map(Vec::len).collect()
    }
}

/// `A_0` is the coordinate basis of `C_0`. At circle `n` the projections of
/// `T^i A_k`, `k + i = n`, to `C_n` must be independent; they are completed
/// to a basis of `C_n` by unit vectors in ascending order, which form `A_n`.
/// The certificate is the rank of all `T^i A_k`, `k + i ≤ R`, in `B_R`.
pub fn construct_free_basis(ball: &BallSpace) -> Result<FreeBasis, FreeError> {
    let r = ball.radius();
    let fl = ball.field().clone();
    // powers[k][i] = T^i A_k
    let mut powers: Vec<Vec<Vec<SparseVec>>> = Vec::new();
    let mut a = Vec::new();
    for n in 0..=r {
        let mut ech = Echelon::new(fl.clone());
        for k in 0..n as usize {
            let prev = powers[k].last().expect("nonempty").clone();
            let next = prev.iter().map(|v| ball.apply_t(v)).collect::<Result<Vec<_>, _>>()?;
            for v in &next {
                if !ech.insert(ball.project(v, n)) {
                    return Err(FreeError::IndependenceFailed { n, witness: format!("image of A_{k} under T^{}", n as usize - k) });
                }
            }
            powers[k].push(next);
        }
        let mut an = Vec::new();
        for c in ball.circle(n) {
            let u = SparseVec::unit(c as usize);
            if ech.insert(u.clone()) {
                an.push(u);
            }
        }
        powers.push(vec![an.clone()]);
        a.push(an);
    }
    let mut ech = Echelon::new(fl);
    // Unit vectors first keeps the reduction of the T-images short.
    let mut all: Vec<&SparseVec> = powers.iter().flatten().flatten().collect();
    all.sort_by_key(|v| v.0.len());
    for v in all {
        ech.insert(v.clone());
    }
    Ok(FreeBasis {
        radius: r,
        circle_dims: (0..=r).map(|k| ball.dim_circle(k)).collect(),
        a,
        rank: ech.rank(),
        dim_ball: ball.dim_ball(r),
    })
}

/// `d_r = dim B_r − rank((T − λ): B_{r−1} → B_r)` for `r = 1..=R`, with
/// injectivity of `T − λ` on `B_{r−1}` asserted.
pub fn quotient_growth(ball: &BallSpace, lambda: Fe) -> Result<Vec<usize>, FreeError> {
    let mut out = Vec::new();
    for r in 1..=ball.radius() {
        let mut ech = Echelon::new(ball.field().clone());
        for c in 0..ball.dim_ball(r - 1) {
            ech.insert(ball.apply_t_minus(lambda, &SparseVec::unit(c))?);
        }
        if ech.rank() != ball.dim_ball(r - 1) {
            return Err(FreeError::InjectivityFailed { r: r - 1 });
        }
        out.push(ball.dim_ball(r) - ech.rank());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ff::Field;
    use crate::group::Vertex;
    use crate::hecke::CosetSpace;
    use crate::laurent::LocalField;
    use crate::rep::{build_catalog, CoeffField, Gamma};
    use crate::tree::Tree;

    fn setup(v: Vertex, radius: u32) -> (CosetSpace, Vec<crate::rep::IrredRep>) {
        let lf = LocalField::new(Field::with_degree(3, 2).unwrap(), 16);
        let tree = Tree::new(lf, v, radius + 4).unwrap();
        let gamma = Gamma::new(&tree).unwrap();
        let c = CoeffField::new(gamma.field(), 2).unwrap();
        let cat = build_catalog(&gamma, &c, 1, 50).unwrap();
        (CosetSpace::new(tree, gamma, radius).unwrap(), cat)
    }

    #[test]
    fn key_lemma_and_free_basis_at_radius_one() {
        for v in Vertex::ALL {
            let (space, cat) = setup(v, 1);
            for sigma in cat.iter().filter(|s| s.dim <= 3).take(4) {
                let h = Hecke::new(&space, sigma);
                let ball = BallSpace::new(&h, 1).unwrap();
                let rep = verify_key_lemma(&ball, 0, DEFAULT_SPARSE_BUDGET).unwrap();
                assert_eq!(rep.kernel_dim, sigma.dim);
                assert_eq!(verify_key_lemma_global(&ball, 0, DEFAULT_SPARSE_BUDGET).unwrap().kernel_dim, sigma.dim);
                key_lemma_invariant_check(&h, 0).unwrap();
                let fb = construct_free_basis(&ball).unwrap();
                let shell1 = space.tree().shell_size(1);
                assert_eq!(fb.sizes(), vec![sigma.dim, (shell1 - 1) * sigma.dim]);
                assert_eq!(fb.rank, fb.dim_ball);
                let g = quotient_growth(&ball, h.field().generator()).unwrap();
                assert_eq!(g, vec![shell1 * sigma.dim]);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let (space, cat) = setup(Vertex::K0, 1);
        let h = Hecke::new(&space, &cat[1]);
        let ball = BallSpace::new(&h, 1).unwrap();
        assert!(matches!(verify_key_lemma(&ball, 0, 10), Err(FreeError::BudgetExceeded { .. })));
        assert!(matches!(verify_key_lemma(&ball, 1, DEFAULT_SPARSE_BUDGET), Err(FreeError::RadiusTooSmall { .. })));
    }

    #[test]
    fn invariant_check_one_circle_out() {
        let (space, cat) = setup(Vertex::K1, 1);
        for sigma in cat.iter().filter(|s| s.dim <= 2).take(2) {
            let h = Hecke::new(&space, sigma);
            let rep = key_lemma_invariant_check(&h, 1).unwrap();
            assert!(rep.combinations.iter().all(|c| c.2));
        }
    }
}
