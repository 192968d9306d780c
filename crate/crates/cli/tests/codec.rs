use utree_core::ff::Field;
use utree_core::group::Vertex;
use utree_core::laurent::LocalField;
use utree_core::rep::{build_catalog, CoeffField, Gamma, IrredRep};
use utree_core::tree::Tree;
use utree_hecke::codec::{self, CodecError, Header};
use utree_hecke::suites::CHOP_ATTEMPTS;

fn k1() -> (Gamma, Vec<IrredRep>) {
    let lf = LocalField::new(Field::with_degree(3, 2).unwrap(), 12);
    let tree = Tree::new(lf, Vertex::K1, 3).unwrap();
    let gamma = Gamma::new(&tree).unwrap();
    let c = CoeffField::new(gamma.field(), 2).unwrap();
    let cat = build_catalog(&gamma, &c, 5, CHOP_ATTEMPTS).unwrap();
    (gamma, cat)
}

#[test]
fn round_trip_and_tampering() {
    let (gamma, cat) = k1();
    let field = cat[0].field().clone();
    let header = Header::new(3, 1, &field, Vertex::K1, 5);
    let some: Vec<&IrredRep> = cat.iter().filter(|r| r.dim <= 3).take(6).collect();
    let bytes = codec::encode(&header, &some);
    assert_eq!(codec::decode_header(&bytes).unwrap(), header);

    let (h2, back) = codec::decode(&bytes, &gamma, CHOP_ATTEMPTS).unwrap();
    assert_eq!(h2, header);
    assert_eq!(back.len(), some.len());
    let again = codec::encode(&h2, &back.iter().collect::<Vec<_>>());
    assert_eq!(again, bytes);
    assert_eq!(codec::sha256_hex(&again), codec::sha256_hex(&bytes));

    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(codec::decode(&bad, &gamma, CHOP_ATTEMPTS), Err(CodecError::BadMagic)));

    assert!(matches!(codec::decode(&bytes[..bytes.len() - 3], &gamma, CHOP_ATTEMPTS), Err(CodecError::Truncated)));

    // λ is the last word of the last record.
    let mut bad = bytes.clone();
    let n = bad.len();
    bad[n - 4] ^= 1;
    assert!(codec::decode(&bad, &gamma, CHOP_ATTEMPTS).is_err());
}

#[test]
fn header_hash_tracks_every_field() {
    let f = Field::with_degree(3, 2).unwrap();
    let h = Header::new(3, 1, &f, Vertex::K0, 0);
    let mut other = h.clone();
    other.seed = 1;
    assert_ne!(h.hash(), other.hash());
    let mut other = h.clone();
    other.vertex = Vertex::K1;
    assert_ne!(h.hash(), other.hash());
    assert_eq!(h.hash(), Header::new(3, 1, &f, Vertex::K0, 0).hash());
    assert_eq!(h.field().unwrap(), f);
}

#[test]
fn wrong_vertex_is_rejected() {
    let (_, cat) = k1();
    let header = Header::new(3, 1, cat[0].field(), Vertex::K1, 5);
    let bytes = codec::encode(&header, &[&cat[0]]);
    let lf = LocalField::new(Field::with_degree(3, 2).unwrap(), 12);
    let k0 = Gamma::new(&Tree::new(lf, Vertex::K0, 3).unwrap()).unwrap();
    assert!(matches!(codec::decode(&bytes, &k0, CHOP_ATTEMPTS), Err(CodecError::HeaderMismatch(_))));
}
