//! Exact linear algebra over a finite field: dense elimination for the
//! representation layer, incremental sparse echelon forms for the large
//! Hecke matrices.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use thiserror::Error;

use crate::ff::{Fe, Field};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("input vectors are linearly dependent")]
    NotIndependent,
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<Fe>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![Fe::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Fe::ONE);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Fe>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_cols(cols: &[Vec<Fe>], rows: usize) -> Self {
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for (i, &x) in c.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Fe {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Fe) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Fe] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<Fe> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn data(&self) -> &[Fe] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, f: &Field, b: &Mat) -> Mat {
        assert_eq!(self.cols, b.rows, "shape mismatch in product");
        let mut out = Mat::zeros(self.rows, b.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                let brow = b.row(k);
                let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
                for (o, &x) in orow.iter_mut().zip(brow) {
                    if !x.is_zero() {
                        *o = f.add(*o, f.mul(a, x));
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, f: &Field, v: &[Fe]) -> Vec<Fe> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut s = Fe::ZERO;
                for (&a, &x) in self.row(i).iter().zip(v) {
                    if !a.is_zero() && !x.is_zero() {
                        s = f.add(s, f.mul(a, x));
                    }
                }
                s
            })
            .collect()
    }

    pub fn add(&self, f: &Field, b: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (b.rows, b.cols));
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&b.data).map(|(&x, &y)| f.add(x, y)).collect() }
    }

    pub fn sub(&self, f: &Field, b: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (b.rows, b.cols));
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&b.data).map(|(&x, &y)| f.sub(x, y)).collect() }
    }

    pub fn scale(&self, f: &Field, c: Fe) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f.mul(c, x)).collect() }
    }

    /// Rows stacked below one another.
    pub fn vstack(blocks: &[&Mat]) -> Mat {
        let cols = blocks.first().map_or(0, |b| b.cols);
        let mut data = Vec::new();
        let mut rows = 0;
        for b in blocks {
            assert_eq!(b.cols, cols);
            data.extend_from_slice(&b.data);
            rows += b.rows;
        }
        Mat { rows, cols, data }
    }
}

/// Reduced row echelon form and pivot columns.
pub fn rref(f: &Field, m: &Mat) -> (Mat, Vec<usize>) {
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..a.cols {
        if r == a.rows {
            break;
        }
        let Some(p) = (r..a.rows).find(|&i| !a.get(i, c).is_zero()) else { continue };
        if p != r {
            for j in 0..a.cols {
                let t = a.get(p, j);
                a.set(p, j, a.get(r, j));
                a.set(r, j, t);
            }
        }
        let inv = f.inv(a.get(r, c)).unwrap();
        for j in c..a.cols {
            a.set(r, j, f.mul(inv, a.get(r, j)));
        }
        for i in 0..a.rows {
            if i == r {
                continue;
            }
            let factor = a.get(i, c);
            if factor.is_zero() {
                continue;
            }
            for j in c..a.cols {
                let v = f.sub(a.get(i, j), f.mul(factor, a.get(r, j)));
                a.set(i, j, v);
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

pub fn rank(f: &Field, m: &Mat) -> usize {
    rref(f, m).1.len()
}

/// Basis of `{v : m v = 0}`, one vector per free column in ascending order.
pub fn kernel_basis(f: &Field, m: &Mat) -> Vec<Vec<Fe>> {
    let (r, pivots) = rref(f, m);
    let mut is_pivot = vec![None; m.cols];
    for (i, &p) in pivots.iter().enumerate() {
        is_pivot[p] = Some(i);
    }
    let mut out = Vec::new();
    for free in 0..m.cols {
        if is_pivot[free].is_some() {
            continue;
        }
        let mut v = vec![Fe::ZERO; m.cols];
        v[free] = Fe::ONE;
        for (i, &p) in pivots.iter().enumerate() {
            v[p] = f.neg(r.get(i, free));
        }
        out.push(v);
    }
    out
}

/// Some solution of `m x = b`.
pub fn solve(f: &Field, m: &Mat, b: &[Fe]) -> Option<Vec<Fe>> {
    assert_eq!(m.rows, b.len());
    let mut aug = Mat::zeros(m.rows, m.cols + 1);
    for i in 0..m.rows {
        for j in 0..m.cols {
            aug.set(i, j, m.get(i, j));
        }
        aug.set(i, m.cols, b[i]);
    }
    let (r, pivots) = rref(f, &aug);
    if pivots.last() == Some(&m.cols) {
        return None;
    }
    let mut x = vec![Fe::ZERO; m.cols];
    for (i, &p) in pivots.iter().enumerate() {
        x[p] = r.get(i, m.cols);
    }
    Some(x)
}

pub fn inverse(f: &Field, m: &Mat) -> Option<Mat> {
    let n = m.rows;
    if n != m.cols {
        return None;
    }
    let mut aug = Mat::zeros(n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            aug.set(i, j, m.get(i, j));
        }
        aug.set(i, n + i, Fe::ONE);
    }
    let (r, pivots) = rref(f, &aug);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    let mut inv = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            inv.set(i, j, r.get(i, n + j));
        }
    }
    Some(inv)
}

/// Rank of a list of vectors.
pub fn rank_of_vectors(f: &Field, vs: &[Vec<Fe>], dim: usize) -> usize {
    if vs.is_empty() {
        return 0;
    }
    let m = Mat::from_rows(vs);
    assert_eq!(m.cols, dim);
    rank(f, &m)
}

/// Appends standard coordinate vectors, scanned in ascending order, until the
/// family spans the whole space. Returns the completed list.
pub fn extend_to_basis(f: &Field, indep: &[Vec<Fe>], dim: usize) -> Result<Vec<Vec<Fe>>, LinalgError> {
    let mut ech = Echelon::new(f.clone());
    for v in indep {
        if v.len() != dim {
            return Err(LinalgError::Shape(format!("vector of length {} in dimension {dim}", v.len())));
        }
        if !ech.insert(SparseVec::from_dense(v)) {
            return Err(LinalgError::NotIndependent);
        }
    }
    let mut out = indep.to_vec();
    for i in 0..dim {
        if ech.rank() == dim {
            break;
        }
        if ech.insert(SparseVec::unit(i)) {
            let mut e = vec![Fe::ZERO; dim];
            e[i] = Fe::ONE;
            out.push(e);
        }
    }
    Ok(out)
}

/// Sparse vector: `(index, value)` pairs, sorted by index, no zeros.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SparseVec(pub Vec<(u32, Fe)>);

impl SparseVec {
    pub fn from_dense(v: &[Fe]) -> Self {
        SparseVec(v.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(i, &x)| (i as u32, x)).collect())
    }

    pub fn unit(i: usize) -> Self {
        SparseVec(vec![(i as u32, Fe::ONE)])
    }

    /// Builds from unsorted entries, summing duplicates.
    pub fn from_entries(f: &Field, entries: impl IntoIterator<Item = (u32, Fe)>) -> Self {
        let mut map: HashMap<u32, Fe> = HashMap::new();
        for (i, x) in entries {
            let e = map.entry(i).or_insert(Fe::ZERO);
            *e = f.add(*e, x);
        }
        let mut v: Vec<(u32, Fe)> = map.into_iter().filter(|(_, x)| !x.is_zero()).collect();
        v.sort_unstable_by_key(|p| p.0);
        SparseVec(v)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn lead(&self) -> Option<u32> {
        self.0.first().map(|p| p.0)
    }

    pub fn to_dense(&self, dim: usize) -> Vec<Fe> {
        let mut v = vec![Fe::ZERO; dim];
        for &(i, x) in &self.0 {
            v[i as usize] = x;
        }
        v
    }
}

/// Incrementally built semi-echelon basis: every stored row has a distinct
/// leading index (its lowest nonzero index) with coefficient one.
#[derive(Debug, Clone)]
pub struct Echelon {
    f: Field,
    rows: Vec<SparseVec>,
    pivot: HashMap<u32, usize>,
}

impl Echelon {
    pub fn new(f: Field) -> Self {
        Echelon { f, rows: Vec::new(), pivot: HashMap::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Residual of `v` modulo the span, reduced against every pivot.
    pub fn reduce(&self, v: &SparseVec) -> SparseVec {
        let f = &self.f;
        let mut acc: HashMap<u32, Fe> = v.0.iter().copied().collect();
        let mut heap: BinaryHeap<Reverse<u32>> = v.0.iter().map(|p| Reverse(p.0)).collect();
        let mut out = Vec::new();
        let mut last: Option<u32> = None;
        while let Some(Reverse(i)) = heap.pop() {
            if last == Some(i) {
                continue;
            }
            last = Some(i);
            let c = match acc.remove(&i) {
                Some(c) if !c.is_zero() => c,
                _ => continue,
            };
            match self.pivot.get(&i) {
                None => out.push((i, c)),
                Some(&r) => {
                    for &(j, x) in &self.rows[r].0[1..] {
                        let e = acc.entry(j).or_insert_with(|| {
                            heap.push(Reverse(j));
                            Fe::ZERO
                        });
                        *e = f.sub(*e, f.mul(c, x));
                    }
                }
            }
        }
        SparseVec(out)
    }

    /// Adds `v` to the span; false when it was already in it.
    pub fn insert(&mut self, v: SparseVec) -> bool {
        let r = self.reduce(&v);
        let Some(&(lead, c)) = r.0.first() else { return false };
        let inv = self.f.inv(c).unwrap();
        let row = SparseVec(r.0.iter().map(|&(i, x)| (i, self.f.mul(inv, x))).collect());
        self.pivot.insert(lead, self.rows.len());
        self.rows.push(row);
        true
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v).is_zero()
    }

    pub fn pivots(&self) -> Vec<u32> {
        self.rows.iter().map(|r| r.lead().unwrap()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f9() -> Field {
        Field::with_degree(3, 2).unwrap()
    }

    fn random_mat(rng: &mut ChaCha8Rng, f: &Field, r: usize, c: usize, density: f64) -> Mat {
        let mut m = Mat::zeros(r, c);
        for i in 0..r {
            for j in 0..c {
                if rng.gen_bool(density) {
                    m.set(i, j, Fe(rng.gen_range(0..f.order())));
                }
            }
        }
        m
    }

    #[test]
    fn trivial_ranks_and_kernels() {
        let f = f9();
        assert_eq!(rank(&f, &Mat::identity(7)), 7);
        assert_eq!(rank(&f, &Mat::zeros(4, 6)), 0);
        assert!(kernel_basis(&f, &Mat::identity(5)).is_empty());
        assert_eq!(kernel_basis(&f, &Mat::zeros(5, 5)).len(), 5);
    }

    #[test]
    fn rank_is_permutation_invariant() {
        let f = f9();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let m = random_mat(&mut rng, &f, 50, 50, 0.08);
            let r = rank(&f, &m);
            let mut rows: Vec<Vec<Fe>> = (0..50).map(|i| m.row(i).to_vec()).collect();
            rows.shuffle(&mut rng);
            assert_eq!(rank(&f, &Mat::from_rows(&rows)), r);
            let t = m.transpose();
            assert_eq!(rank(&f, &t), r);
            let mut ech = Echelon::new(f.clone());
            for row in &rows {
                ech.insert(SparseVec::from_dense(row));
            }
            assert_eq!(ech.rank(), r);
        }
    }

    #[test]
    fn kernel_annihilates_and_rank_nullity() {
        let f = f9();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..10 {
            let m = random_mat(&mut rng, &f, 20, 30, 0.3);
            let k = kernel_basis(&f, &m);
            assert_eq!(k.len(), 30 - rank(&f, &m));
            for v in &k {
                assert!(m.mul_vec(&f, v).iter().all(|x| x.is_zero()));
            }
        }
    }

    #[test]
    fn solve_round_trip_and_inverse() {
        let f = f9();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let m = random_mat(&mut rng, &f, 15, 20, 0.5);
            let x: Vec<Fe> = (0..20).map(|_| Fe(rng.gen_range(0..9))).collect();
            let b = m.mul_vec(&f, &x);
            let y = solve(&f, &m, &b).unwrap();
            assert_eq!(m.mul_vec(&f, &y), b);
            let sq = random_mat(&mut rng, &f, 12, 12, 0.6);
            if let Some(inv) = inverse(&f, &sq) {
                assert_eq!(sq.mul(&f, &inv), Mat::identity(12));
            } else {
                assert!(rank(&f, &sq) < 12);
            }
        }
    }

    #[test]
    fn extension_to_basis() {
        let f = f9();
        let std: Vec<Vec<Fe>> = (0..4).map(|i| SparseVec::unit(i).to_dense(4)).collect();
        assert_eq!(extend_to_basis(&f, &[], 4).unwrap(), std);
        assert_eq!(extend_to_basis(&f, &std, 4).unwrap(), std);
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let m = random_mat(&mut rng, &f, 8, 10, 0.7);
        let indep: Vec<Vec<Fe>> = {
            let (r, _) = rref(&f, &m);
            (0..rank(&f, &m)).map(|i| r.row(i).to_vec()).collect()
        };
        let full = extend_to_basis(&f, &indep, 10).unwrap();
        assert_eq!(full.len() - indep.len(), 10 - indep.len());
        assert_eq!(rank_of_vectors(&f, &full, 10), 10);
        let dep = vec![std[0].clone(), std[0].clone()];
        assert_eq!(extend_to_basis(&f, &dep, 4), Err(LinalgError::NotIndependent));
    }
}
