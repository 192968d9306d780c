use std::sync::OnceLock;

use proptest::prelude::*;
use utree_core::ff::{Fe, Field};
use utree_core::group::{GroupElem, Vertex};
use utree_core::hecke::{CosetSpace, Hecke, InducedFun};
use utree_core::laurent::{LaurentElem, LocalField};
use utree_core::linalg::{kernel_basis, rank, Mat};
use utree_core::rep::{build_catalog, CoeffField, Gamma, IrredRep};
use utree_core::tree::Tree;

fn f81() -> &'static Field {
    static F: OnceLock<Field> = OnceLock::new();
    F.get_or_init(|| Field::with_degree(3, 4).unwrap())
}

fn lf() -> &'static LocalField {
    static L: OnceLock<LocalField> = OnceLock::new();
    L.get_or_init(|| LocalField::new(Field::with_degree(3, 2).unwrap(), 24))
}

fn k1() -> &'static (CosetSpace, Vec<IrredRep>) {
    static S: OnceLock<(CosetSpace, Vec<IrredRep>)> = OnceLock::new();
    S.get_or_init(|| {
        let lf = LocalField::new(Field::with_degree(3, 2).unwrap(), 12);
        let tree = Tree::new(lf, Vertex::K1, 5).unwrap();
        let gamma = Gamma::new(&tree).unwrap();
        let c = CoeffField::new(gamma.field(), 2).unwrap();
        let cat = build_catalog(&gamma, &c, 1, 50).unwrap();
        (CosetSpace::new(tree, gamma, 1).unwrap(), cat)
    })
}

fn fe81() -> impl Strategy<Value = Fe> {
    (0u32..81).prop_map(Fe)
}

fn fe9() -> impl Strategy<Value = Fe> {
    (0u32..9).prop_map(Fe)
}

fn series(lo: i32) -> impl Strategy<Value = LaurentElem> {
    (lo..lo + 3, prop::collection::vec(fe9(), 1..12)).prop_map(|(v, c)| LaurentElem::truncated(v, c, 14))
}

fn unit() -> impl Strategy<Value = LaurentElem> {
    ((1u32..9).prop_map(Fe), prop::collection::vec(fe9(), 0..10))
        .prop_map(|(u, mut c)| {
            c.insert(0, u);
            LaurentElem::truncated(0, c, 16)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_axioms(a in fe81(), b in fe81(), c in fe81()) {
        let f = f81();
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        prop_assert_eq!(f.add(a, f.neg(a)), Fe::ZERO);
        if !a.is_zero() {
            prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), Fe::ONE);
            prop_assert_eq!(f.pow(a, 80), Fe::ONE);
        }
    }

    #[test]
    fn conjugation_is_an_involutive_automorphism(a in fe81(), b in fe81()) {
        let f = f81();
        prop_assert_eq!(f.conj(f.conj(a)), a);
        prop_assert_eq!(f.conj(f.mul(a, b)), f.mul(f.conj(a), f.conj(b)));
        prop_assert_eq!(f.conj(f.add(a, b)), f.add(f.conj(a), f.conj(b)));
        prop_assert!(f.is_real(f.norm(a)));
    }

    #[test]
    fn trace_decomposition(y in fe81()) {
        let f = f81();
        let (a, z) = f.decompose_trace(y);
        prop_assert_eq!(f.add(a, z), y);
        prop_assert!(f.is_real(a));
        prop_assert_eq!(f.add(f.conj(z), z), Fe::ZERO);
    }

    #[test]
    fn series_ring_laws(x in series(-2), y in series(0), z in series(1)) {
        let l = lf();
        let f = l.residue_field();
        let lhs = l.mul(&x, &l.add(&y, &z));
        let rhs = l.add(&l.mul(&x, &y), &l.mul(&x, &z));
        prop_assert!(lhs.eq_known(&rhs, f));
        prop_assert!(l.conj_series(&l.mul(&x, &y)).eq_known(&l.mul(&l.conj_series(&x), &l.conj_series(&y)), f));
    }

    #[test]
    fn residue_is_multiplicative(x in series(0), y in series(0)) {
        let l = lf();
        let f = l.residue_field();
        let r = |a: &LaurentElem| a.residue(1).unwrap()[0];
        prop_assert_eq!(r(&l.mul(&x, &y)), f.mul(r(&x), r(&y)));
    }

    #[test]
    fn unit_inverse(u in unit()) {
        let l = lf();
        let prod = l.mul(&u, &l.invert(&u).unwrap());
        prop_assert!(prod.eq_known(&LaurentElem::one(), l.residue_field()));
        prop_assert!(prod.precision().unwrap() >= 16);
    }

    #[test]
    fn rank_nullity(rows in prop::collection::vec(prop::collection::vec(fe9(), 6), 1..7)) {
        let f = lf().residue_field();
        let m = Mat::from_rows(&rows);
        let k = kernel_basis(f, &m);
        prop_assert_eq!(rank(f, &m) + k.len(), 6);
        prop_assert_eq!(rank(f, &m), rank(f, &m.transpose()));
        for v in &k {
            prop_assert!(m.mul_vec(f, v).iter().all(|x| x.is_zero()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn identity_2_1_holds(seed in any::<u64>()) {
        use rand::SeedableRng;
        let l = lf();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = l.random_valid_xy(&mut rng, 20);
        prop_assert!(l.verify_identity_2_1(&x, &y).unwrap());
        let n = l.make_n(&x, &y).unwrap();
        prop_assert!(l.is_unitary(&n));
    }

    #[test]
    fn hecke_t_is_linear(
        sigma in 0usize..48,
        terms in prop::collection::vec((0u32..109, prop::collection::vec(fe9(), 3)), 1..6),
        other in prop::collection::vec((0u32..109, prop::collection::vec(fe9(), 3)), 1..6),
        c in fe9(),
    ) {
        let (space, cat) = k1();
        let s = &cat[sigma % cat.len()];
        let h = Hecke::new(space, s);
        let f = h.field();
        let build = |ts: &[(u32, Vec<Fe>)]| {
            let mut out = InducedFun::zero();
            for (id, v) in ts {
                out.add_term(f, *id, &v[..s.dim]);
            }
            out
        };
        let (a, b) = (build(&terms), build(&other));
        let lhs = h.hecke_t(&a.scale(f, c).add(f, &b)).unwrap();
        let rhs = h.hecke_t(&a).unwrap().scale(f, c).add(f, &h.hecke_t(&b).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn g_act_round_trip(
        sigma in 0usize..48,
        word in prop::collection::vec(0usize..64, 1..4),
        terms in prop::collection::vec((0u32..109, prop::collection::vec(fe9(), 3)), 1..6),
    ) {
        let (space, cat) = k1();
        let s = &cat[sigma % cat.len()];
        let h = Hecke::new(space, s);
        let f = h.field();
        let lf = space.lf();
        let mut gens = space.tree().k_generators();
        gens.push(GroupElem::alpha());
        let g = word.iter().fold(GroupElem::identity(), |acc, &i| lf.mat_mul(&acc, &gens[i % gens.len()]));
        let mut fun = InducedFun::zero();
        for (id, v) in &terms {
            fun.add_term(f, *id, &v[..s.dim]);
        }
        let back = h.g_act(&g, &h.g_act(&lf.inverse(&g), &fun).unwrap()).unwrap();
        prop_assert_eq!(back, fun);
    }
}
