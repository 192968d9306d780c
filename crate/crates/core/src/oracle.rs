//! Independent recomputations of counts and dimensions, for cross-checking.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::free::BallSpace;
use crate::group::{GroupElem, Vertex};
use crate::hecke::CosetSpace;
use crate::linalg::{kernel_basis, Mat, SparseVec};
use crate::rep::Gamma;
use crate::tree::{Lattice, Tree, TreeError};

/// `q^{c_v}` for the given vertex type, `c_{K₀} = 3`, `c_{K₁} = 1`.
pub fn q_pow_c(q: u64, v: Vertex) -> u64 {
    match v {
        Vertex::K0 => q.pow(3),
        Vertex::K1 => q,
    }
}

fn other(v: Vertex) -> Vertex {
    match v {
        Vertex::K0 => Vertex::K1,
        Vertex::K1 => Vertex::K0,
    }
}

/// Shell sizes of the biregular tree of degrees `q^{c}+1`, counting vertices
/// of the base type at distance `2m`.
pub fn biregular_shells(q: u64, v: Vertex, radius: u32) -> Vec<u64> {
    let (a, b) = (q_pow_c(q, v), q_pow_c(q, other(v)));
    let mut out = vec![1];
    for m in 1..=radius {
        let prev = out[m as usize - 1];
        out.push(if m == 1 { (a + 1) * b } else { prev * a * b });
    }
    out
}

/// `|Γ_K|`: `|U(3)(F_q)|` for `K₀` and `|U(1,1)(F_q) × U(1)(F_q)|` for `K₁`.
pub fn gamma_order(q: u64, v: Vertex) -> u64 {
    match v {
        Vertex::K0 => q.pow(3) * (q + 1) * (q * q - 1) * (q.pow(3) + 1),
        Vertex::K1 => q * (q + 1) * (q * q - 1) * (q + 1),
    }
}

/// Orbit of `g₀ · L_K` under the group generated by `gens`, by breadth-first
/// search on Hermite normal forms.
pub fn lattice_orbit(tree: &Tree, gens: &[GroupElem], g0: &GroupElem) -> Result<HashSet<Lattice>, TreeError> {
    let lf = tree.lf();
    let mut seen = HashMap::new();
    let mut queue = VecDeque::new();
    seen.insert(tree.vertex_of(g0)?, ());
    queue.push_back(g0.clone());
    while let Some(g) = queue.pop_front() {
        for h in gens {
            let hg = lf.mat_mul(h, &g);
            let l = tree.vertex_of(&hg)?;
            if seen.insert(l, ()).is_none() {
                queue.push_back(hg);
            }
        }
    }
    Ok(seen.into_keys().collect())
}

/// Shell sizes as sizes of the `K`-orbits of `α^{-m} L_K`, with `K` generated
/// by lifts of `Γ_K` and the `I_{1,K}` generators of `space`.
pub fn shells_by_orbits(space: &CosetSpace, radius: u32) -> Result<Vec<usize>, TreeError> {
    let tree = space.tree();
    let mut gens = tree.k_generators();
    gens.extend(space.i1_generators(radius));
    (0..=radius).map(|m| Ok(lattice_orbit(tree, &gens, &GroupElem::alpha_pow(-(m as i32)))?.len())).collect()
}

/// `|N_{n_K}/N_{n_K+2m}|` and `|N′_{m_K}/N′_{m_K+2m−1}|` as orbit sizes of
/// `α^{∓m} L_K` under single-coefficient generators.
pub fn one_sided_orbits(space: &CosetSpace, m: u32) -> Result<(usize, usize), TreeError> {
    let tree = space.tree();
    let [upper, lower, _] = space.i1_generator_families(m);
    let plus = lattice_orbit(tree, &upper, &GroupElem::alpha_pow(-(m as i32)))?.len();
    let minus = lattice_orbit(tree, &lower, &GroupElem::alpha_pow(m as i32))?.len();
    Ok((plus, minus))
}

/// `(n_K, m_K)` as the least levels whose one-parameter generators reduce into
/// the unipotent radical `𝕌` of the Borel subgroup of `Γ_K`.
pub fn nk_mk_by_reduction(tree: &Tree, gamma: &Gamma) -> (i32, i32) {
    let lf = tree.lf();
    let up: HashSet<u32> = gamma.unipotent().into_iter().collect();
    let inside = |gs: Vec<GroupElem>, set: &HashSet<u32>| gs.iter().all(|g| gamma.reduce(lf, g).map_or(false, |i| set.contains(&i)));
    let scan = |upper: bool| {
        (-4..=4)
            .find(|&k| {
                let layer = |a, b| if upper { lf.enumerate_n_quotient(a, b) } else { lf.enumerate_nprime_quotient(a, b) };
                inside(layer(k, k + 3), &up) && !inside(layer(k - 1, k), &up)
            })
            .expect("level in range")
    };
    (scan(true), scan(false))
}

/// Kernel dimension of `f ↦ (T f)|_{C_{n+2}}` on `B_{n+1}` by dense elimination.
pub fn dense_key_lemma_kernel(ball: &BallSpace, n: u32) -> Result<usize, crate::free::FreeError> {
    let dim = ball.dim_ball(n + 1);
    let mut cols: Vec<SparseVec> = Vec::with_capacity(dim);
    let mut rows: HashMap<u32, usize> = HashMap::new();
    let d = ball.hecke().dim() as u32;
    let space = ball.hecke().space();
    for c in 0..dim {
        let img = ball.apply_t(&SparseVec::unit(c))?;
        let col = SparseVec(img.0.into_iter().filter(|(i, _)| space.classify(i / d).1 == n + 2).collect());
        for (i, _) in &col.0 {
            let len = rows.len();
            rows.entry(*i).or_insert(len);
        }
        cols.push(col);
    }
    let mut m = Mat::zeros(rows.len(), dim);
    for (j, col) in cols.iter().enumerate() {
        for (i, x) in &col.0 {
            m.set(rows[i], j, *x);
        }
    }
    Ok(kernel_basis(ball.hecke().field(), &m).len())
}
