//! Module chopping over a finite field: Norton's irreducibility test with
//! spin-up and dual spin-up, composition factors, isomorphism testing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ff::{Fe, Field};
use crate::linalg::{kernel_basis, rank, rref, Mat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeataxeError {
    #[error("no certificate after {0} random algebra elements")]
    RetryLimit(usize),
}

/// A module given by the action of a fixed list of generators on column vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Module {
    pub dim: usize,
    pub gens: Vec<Mat>,
}

/// A linear combination of words in the generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recipe {
    pub terms: Vec<(Fe, Vec<usize>)>,
}

impl Recipe {
    pub fn eval(&self, f: &Field, m: &Module) -> Mat {
        let mut acc = Mat::zeros(m.dim, m.dim);
        for (c, word) in &self.terms {
            let mut w = Mat::identity(m.dim);
            for &g in word {
                w = w.mul(f, &m.gens[g]);
            }
            acc = acc.add(f, &w.scale(f, *c));
        }
        acc
    }
}

/// Norton witness: `ker(recipe − λ)` is one-dimensional, spanned by `vector`,
/// and both it and a kernel vector of the transpose spin to the whole space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub recipe: Recipe,
    pub lambda: Fe,
    pub vector: Vec<Fe>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChopResult {
    Irreducible(Certificate),
    /// Echelonized basis (rows) of a proper nonzero submodule.
    Submodule(Vec<Vec<Fe>>),
}

fn is_multiple(f: &Field, a: &[Fe], b: &[Fe]) -> bool {
    let Some(i) = a.iter().position(|x| !x.is_zero()) else { return false };
    let Some(c) = f.div(b[i], a[i]) else { return false };
    !c.is_zero() && a.iter().zip(b).all(|(&x, &y)| f.mul(c, x) == y)
}

/// Spin-up record: vector `k+1` is `gens[g]` applied to vector `i`.
#[derive(Debug, Clone)]
pub struct Spin {
    pub basis: Vec<Vec<Fe>>,
    pub steps: Vec<(usize, usize)>,
}

/// Span of the orbit of `v` under the algebra generated by `gens`.
pub fn spin(f: &Field, gens: &[Mat], v: &[Fe]) -> Spin {
    let n = v.len();
    let mut ech = crate::linalg::Echelon::new(f.clone());
    let mut basis = Vec::new();
    let mut steps = Vec::new();
    if !ech.insert(crate::linalg::SparseVec::from_dense(v)) {
        return Spin { basis, steps };
    }
    basis.push(v.to_vec());
    let mut i = 0;
    while i < basis.len() && basis.len() < n {
        for (g, m) in gens.iter().enumerate() {
            let w = m.mul_vec(f, &basis[i]);
            if ech.insert(crate::linalg::SparseVec::from_dense(&w)) {
                basis.push(w);
                steps.push((i, g));
                if basis.len() == n {
                    break;
                }
            }
        }
        i += 1;
    }
    Spin { basis, steps }
}

/// Replays a spin record from a new start vector.
pub fn replay(f: &Field, gens: &[Mat], start: &[Fe], steps: &[(usize, usize)]) -> Vec<Vec<Fe>> {
    let mut out = vec![start.to_vec()];
    for &(i, g) in steps {
        let w = gens[g].mul_vec(f, &out[i]);
        out.push(w);
    }
    out
}

fn echelon_rows(f: &Field, vs: &[Vec<Fe>]) -> Vec<Vec<Fe>> {
    let (r, p) = rref(f, &Mat::from_rows(vs));
    (0..p.len()).map(|i| r.row(i).to_vec()).collect()
}

impl Module {
    pub fn transpose(&self) -> Module {
        Module { dim: self.dim, gens: self.gens.iter().map(|g| g.transpose()).collect() }
    }

    /// Whether the listed rows span a subspace stable under every generator.
    pub fn is_submodule(&self, f: &Field, rows: &[Vec<Fe>]) -> bool {
        if rows.is_empty() {
            return true;
        }
        let r = rank(f, &Mat::from_rows(rows));
        self.gens.iter().all(|g| {
            let mut all = rows.to_vec();
            all.extend(rows.iter().map(|v| g.mul_vec(f, v)));
            rank(f, &Mat::from_rows(&all)) == r
        })
    }

    /// Action on a submodule with echelonized basis `rows`.
    pub fn restrict(&self, f: &Field, rows: &[Vec<Fe>]) -> Module {
        let (r, pivots) = rref(f, &Mat::from_rows(rows));
        let k = pivots.len();
        let gens = self
            .gens
            .iter()
            .map(|g| {
                let mut m = Mat::zeros(k, k);
                for j in 0..k {
                    let w = g.mul_vec(f, r.row(j));
                    for (i, &p) in pivots.iter().enumerate() {
                        m.set(i, j, w[p]);
                    }
                }
                m
            })
            .collect();
        Module { dim: k, gens }
    }

    /// Action on the quotient by the submodule with echelonized basis `rows`,
    /// in coordinates of the non-pivot positions.
    pub fn quotient(&self, f: &Field, rows: &[Vec<Fe>]) -> Module {
        let (r, pivots) = rref(f, &Mat::from_rows(rows));
        let free: Vec<usize> = (0..self.dim).filter(|c| !pivots.contains(c)).collect();
        let k = free.len();
        let gens = self
            .gens
            .iter()
            .map(|g| {
                let mut m = Mat::zeros(k, k);
                for (j, &c) in free.iter().enumerate() {
                    let mut w = g.col(c);
                    for (i, &p) in pivots.iter().enumerate() {
                        let a = w[p];
                        if !a.is_zero() {
                            for (x, &y) in w.iter_mut().zip(r.row(i)) {
                                *x = f.sub(*x, f.mul(a, y));
                            }
                        }
                    }
                    for (i, &c2) in free.iter().enumerate() {
                        m.set(i, j, w[c2]);
                    }
                }
                m
            })
            .collect();
        Module { dim: k, gens }
    }

    fn random_recipe(&self, f: &Field, rng: &mut ChaCha8Rng) -> Recipe {
        let ng = self.gens.len();
        let terms = (0..4)
            .map(|_| {
                let len = rng.gen_range(1..=4);
                let word = (0..len).map(|_| rng.gen_range(0..ng)).collect();
                let c = Fe(rng.gen_range(1..f.order()));
                (c, word)
            })
            .collect();
        Recipe { terms }
    }

    /// Las Vegas chop: a certified irreducibility verdict or a proper submodule.
    pub fn chop(&self, f: &Field, seed: u64, attempts: usize) -> Result<ChopResult, MeataxeError> {
        if self.dim == 1 {
            let recipe = Recipe { terms: vec![(Fe::ONE, vec![])] };
            return Ok(ChopResult::Irreducible(Certificate { recipe, lambda: Fe::ONE, vector: vec![Fe::ONE] }));
        }
        let dual = self.transpose();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..attempts {
            let recipe = self.random_recipe(f, &mut rng);
            let a = recipe.eval(f, self);
            for lambda in f.elements() {
                let mut shifted = a.clone();
                for i in 0..self.dim {
                    shifted.set(i, i, f.sub(shifted.get(i, i), lambda));
                }
                let ker = kernel_basis(f, &shifted);
                if ker.is_empty() {
                    continue;
                }
                let s = spin(f, &self.gens, &ker[0]);
                if s.basis.len() < self.dim {
                    return Ok(ChopResult::Submodule(echelon_rows(f, &s.basis)));
                }
                if ker.len() > 1 {
                    continue;
                }
                let dker = kernel_basis(f, &shifted.transpose());
                let ds = spin(f, &dual.gens, &dker[0]);
                if ds.basis.len() < self.dim {
                    let ann = kernel_basis(f, &Mat::from_rows(&ds.basis));
                    return Ok(ChopResult::Submodule(echelon_rows(f, &ann)));
                }
                return Ok(ChopResult::Irreducible(Certificate { recipe, lambda, vector: ker[0].clone() }));
            }
        }
        Err(MeataxeError::RetryLimit(attempts))
    }

    /// Re-checks a Norton certificate: `ker(recipe − λ)` is the line through
    /// `vector`, which spins to the whole module, as does a kernel vector of the transpose.
    pub fn verify_certificate(&self, f: &Field, cert: &Certificate) -> bool {
        if self.dim == 1 {
            return true;
        }
        let mut shifted = cert.recipe.eval(f, self);
        for i in 0..self.dim {
            shifted.set(i, i, f.sub(shifted.get(i, i), cert.lambda));
        }
        let ker = kernel_basis(f, &shifted);
        if ker.len() != 1 || !is_multiple(f, &ker[0], &cert.vector) {
            return false;
        }
        let dker = kernel_basis(f, &shifted.transpose());
        dker.len() == 1
            && spin(f, &self.gens, &cert.vector).basis.len() == self.dim
            && spin(f, &self.transpose().gens, &dker[0]).basis.len() == self.dim
    }

    /// Composition factors with their certificates, in a deterministic order
    /// (submodule factors before quotient factors).
    pub fn composition_factors(&self, f: &Field, seed: u64, attempts: usize) -> Result<Vec<(Module, Certificate)>, MeataxeError> {
        let mut out = Vec::new();
        let mut stack = vec![(self.clone(), seed)];
        while let Some((m, s)) = stack.pop() {
            match m.chop(f, s, attempts)? {
                ChopResult::Irreducible(c) => out.push((m, c)),
                ChopResult::Submodule(rows) => {
                    let sub = m.restrict(f, &rows);
                    let quo = m.quotient(f, &rows);
                    let next = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    stack.push((quo, next ^ 0x9e37_79b9));
                    stack.push((sub, next));
                }
            }
        }
        Ok(out)
    }

    /// For an irreducible `self` with certificate `cert`, an isomorphism to
    /// `other` if one exists: `X` with `X·g_self = g_other·X` for all generators.
    pub fn isomorphism_to(&self, f: &Field, cert: &Certificate, other: &Module) -> Option<Mat> {
        if self.dim != other.dim || self.gens.len() != other.gens.len() {
            return None;
        }
        let mut b = cert.recipe.eval(f, other);
        for i in 0..other.dim {
            b.set(i, i, f.sub(b.get(i, i), cert.lambda));
        }
        let ker = kernel_basis(f, &b);
        if ker.len() != 1 {
            return None;
        }
        let s = spin(f, &self.gens, &cert.vector);
        let w = replay(f, &other.gens, &ker[0], &s.steps);
        let sa = Mat::from_cols(&s.basis, self.dim);
        let sb = Mat::from_cols(&w, self.dim);
        let inv = crate::linalg::inverse(f, &sa)?;
        let x = sb.mul(f, &inv);
        let ok = self.gens.iter().zip(&other.gens).all(|(ga, gb)| x.mul(f, ga) == gb.mul(f, &x));
        (ok && crate::linalg::inverse(f, &x).is_some()).then_some(x)
    }

    /// Dimension of `Hom(self, other)` by solving `X·g_self = g_other·X` directly.
    pub fn hom_dimension(&self, f: &Field, other: &Module) -> usize {
        let (n, m) = (self.dim, other.dim);
        // Unknown X is m×n, entry (a, b) at index a*n + b.
        let mut rows = Vec::new();
        for (ga, gb) in self.gens.iter().zip(&other.gens) {
            for a in 0..m {
                for b in 0..n {
                    let mut row = vec![Fe::ZERO; m * n];
                    // (X ga)_{ab} = Σ_c X_{ac} ga_{cb}
                    for c in 0..n {
                        let v = ga.get(c, b);
                        row[a * n + c] = f.add(row[a * n + c], v);
                    }
                    // (gb X)_{ab} = Σ_c gb_{ac} X_{cb}
                    for c in 0..m {
                        let v = gb.get(a, c);
                        row[c * n + b] = f.sub(row[c * n + b], v);
                    }
                    rows.push(row);
                }
            }
        }
        m * n - rank(f, &Mat::from_rows(&rows))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f9() -> Field {
        Field::with_degree(3, 2).unwrap()
    }

    /// The permutation module of the symmetric group S_3 on three points, over F_9.
    fn perm_module(f: &Field) -> Module {
        let p = |perm: [usize; 3]| {
            let mut m = Mat::zeros(3, 3);
            for (i, &j) in perm.iter().enumerate() {
                m.set(j, i, Fe::ONE);
            }
            m
        };
        let _ = f;
        Module { dim: 3, gens: vec![p([1, 0, 2]), p([1, 2, 0])] }
    }

    #[test]
    fn one_dimensional_is_irreducible() {
        let f = f9();
        let m = Module { dim: 1, gens: vec![Mat::identity(1)] };
        assert!(matches!(m.chop(&f, 0, 10).unwrap(), ChopResult::Irreducible(_)));
    }

    #[test]
    fn trivial_plus_trivial_has_a_line() {
        let f = f9();
        let m = Module { dim: 2, gens: vec![Mat::identity(2)] };
        match m.chop(&f, 1, 10).unwrap() {
            ChopResult::Submodule(rows) => {
                assert_eq!(rows.len(), 1);
                assert!(m.is_submodule(&f, &rows));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn permutation_module_in_characteristic_three() {
        // In characteristic 3 the permutation module of S_3 is uniserial with
        // three trivial or sign composition factors.
        let f = f9();
        let m = perm_module(&f);
        let factors = m.composition_factors(&f, 5, 50).unwrap();
        assert_eq!(factors.iter().map(|(x, _)| x.dim).sum::<usize>(), 3);
        assert!(factors.iter().all(|(x, _)| x.dim == 1));
        let trivial = Module { dim: 1, gens: vec![Mat::identity(1), Mat::identity(1)] };
        let n_triv = factors.iter().filter(|(x, _)| x.hom_dimension(&f, &trivial) == 1).count();
        assert_eq!(n_triv, 2);
    }

    #[test]
    fn isomorphism_detection_matches_hom_space() {
        let f = f9();
        let m = perm_module(&f);
        let factors = m.composition_factors(&f, 5, 50).unwrap();
        for (a, ca) in &factors {
            for (b, _) in &factors {
                let iso = a.isomorphism_to(&f, ca, b).is_some();
                assert_eq!(iso, a.hom_dimension(&f, b) > 0);
            }
        }
    }

    #[test]
    fn certificates_verify_and_detect_tampering() {
        // The reflection representation of S_3 over F_5.
        let f = Field::with_degree(5, 1).unwrap();
        let m1 = f.neg(Fe::ONE);
        let m = Module {
            dim: 2,
            gens: vec![
                Mat::from_rows(&[vec![Fe::ZERO, Fe::ONE], vec![Fe::ONE, Fe::ZERO]]),
                Mat::from_rows(&[vec![Fe::ZERO, m1], vec![Fe::ONE, m1]]),
            ],
        };
        let ChopResult::Irreducible(cert) = m.chop(&f, 3, 50).unwrap() else { panic!("reducible") };
        assert!(m.verify_certificate(&f, &cert));
        let mut bad = cert.clone();
        bad.lambda = f.add(bad.lambda, Fe::ONE);
        assert!(!m.verify_certificate(&f, &bad));
        let split = Module { dim: 2, gens: vec![Mat::identity(2), Mat::identity(2)] };
        assert!(!split.verify_certificate(&f, &cert));
    }
}
