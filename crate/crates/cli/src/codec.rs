//! The catalog file: magic `UHK1`, a little-endian header and one
//! length-prefixed record per representation.

use sha2::{Digest, Sha256};
use thiserror::Error;
use utree_core::ff::{Fe, Field, FieldSpec};
use utree_core::group::Vertex;
use utree_core::linalg::Mat;
use utree_core::meataxe::{ChopResult, Module};
use utree_core::rep::{Character, Gamma, IrredRep, RepError};

pub const MAGIC: &[u8; 4] = b"UHK1";

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("not a catalog file")]
    BadMagic,
    #[error("catalog file is truncated")]
    Truncated,
    #[error("catalog header does not match: {0}")]
    HeaderMismatch(String),
    #[error("record {0} does not reproduce its stored data")]
    Corrupt(u32),
    #[error("{0}")]
    Rep(#[from] RepError),
    #[error("{0}")]
    Meataxe(#[from] utree_core::meataxe::MeataxeError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub p: u32,
    pub f: u32,
    pub k: u32,
    pub vertex: Vertex,
    /// Modulus of the coefficient field, low degree first.
    pub modulus: Vec<u32>,
    pub seed: u64,
}

impl Header {
    pub fn new(p: u32, f: u32, field: &Field, vertex: Vertex, seed: u64) -> Self {
        Header { p, f, k: field.degree(), vertex, modulus: field.spec().modulus.clone(), seed }
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        put(out, self.p);
        put(out, self.f);
        put(out, self.k);
        out.push(match self.vertex {
            Vertex::K0 => 0,
            Vertex::K1 => 1,
        });
        put(out, self.modulus.len() as u32);
        for &c in &self.modulus {
            put(out, c);
        }
        out.extend_from_slice(&self.seed.to_le_bytes());
    }

    pub fn hash(&self) -> String {
        let mut bytes = Vec::new();
        self.encode(&mut bytes);
        hex::encode(&Sha256::digest(&bytes)[..8])
    }

    pub fn field(&self) -> Result<Field, CodecError> {
        let spec = FieldSpec::with_modulus(self.p, self.modulus.clone()).map_err(RepError::from)?;
        Ok(Field::new(spec))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn put(out: &mut Vec<u8>, x: u32) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_mat(out: &mut Vec<u8>, m: &Mat) {
    for &Fe(x) in m.data() {
        put(out, x);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], CodecError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(CodecError::Truncated)?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn fes(&mut self, n: usize) -> Result<Vec<Fe>, CodecError> {
        (0..n).map(|_| self.u32().map(Fe)).collect()
    }

    fn mat(&mut self, d: usize) -> Result<Mat, CodecError> {
        let data = self.fes(d * d)?;
        Ok(Mat::from_rows(&data.chunks(d).map(<[Fe]>::to_vec).collect::<Vec<_>>()))
    }
}

/// Encodes the catalog. Equal inputs give identical bytes.
pub fn encode(header: &Header, reps: &[&IrredRep]) -> Vec<u8> {
    let mut out = Vec::new();
    header.encode(&mut out);
    put(&mut out, reps.len() as u32);
    for r in reps {
        let mut rec = Vec::new();
        put(&mut rec, r.weight_id);
        put(&mut rec, r.dim as u32);
        put(&mut rec, r.source.a);
        put(&mut rec, r.source.b);
        put(&mut rec, r.module.gens.len() as u32);
        for g in &r.module.gens {
            put_mat(&mut rec, g);
        }
        for &Fe(x) in &r.v0 {
            put(&mut rec, x);
        }
        put_mat(&mut rec, &r.jmat);
        put(&mut rec, r.lambda.0);
        put(&mut out, rec.len() as u32);
        out.extend_from_slice(&rec);
    }
    out
}

pub fn decode_header(bytes: &[u8]) -> Result<Header, CodecError> {
    let mut r = Reader { bytes, pos: 0 };
    read_header(&mut r)
}

fn read_header(r: &mut Reader) -> Result<Header, CodecError> {
    if r.take(4)? != MAGIC {
        return Err(CodecError::BadMagic);
    }
    let p = r.u32()?;
    let f = r.u32()?;
    let k = r.u32()?;
    let vertex = match r.u8()? {
        0 => Vertex::K0,
        1 => Vertex::K1,
        v => return Err(CodecError::HeaderMismatch(format!("vertex tag {v}"))),
    };
    let len = r.u32()? as usize;
    let modulus = (0..len).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
    let seed = r.u64()?;
    Ok(Header { p, f, k, vertex, modulus, seed })
}

/// Decodes a catalog for `gamma`. Every record is re-certified irreducible and
/// its `v₀`, `j_σ` and `λ` are recomputed and compared with the stored values.
pub fn decode(bytes: &[u8], gamma: &Gamma, attempts: usize) -> Result<(Header, Vec<IrredRep>), CodecError> {
    let mut r = Reader { bytes, pos: 0 };
    let header = read_header(&mut r)?;
    if header.vertex != gamma.vertex() {
        return Err(CodecError::HeaderMismatch(format!("catalog is for {}", header.vertex)));
    }
    let field = header.field()?;
    let count = r.u32()?;
    let mut reps = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let len = r.u32()? as usize;
        let mut rec = Reader { bytes: r.take(len)?, pos: 0 };
        let weight_id = rec.u32()?;
        let dim = rec.u32()? as usize;
        let source = Character { a: rec.u32()?, b: rec.u32()? };
        let ngens = rec.u32()? as usize;
        if dim == 0 || ngens != gamma.generators().len() {
            return Err(CodecError::Corrupt(weight_id));
        }
        let gens = (0..ngens).map(|_| rec.mat(dim)).collect::<Result<Vec<_>, _>>()?;
        let v0 = rec.fes(dim)?;
        let jmat = rec.mat(dim)?;
        let lambda = Fe(rec.u32()?);
        let order = field.order();
        let in_range = |xs: &[Fe]| xs.iter().all(|x| x.0 < order);
        if !(gens.iter().all(|g| in_range(g.data())) && in_range(&v0) && in_range(jmat.data()) && lambda.0 < order) {
            return Err(CodecError::Corrupt(weight_id));
        }
        let module = Module { dim, gens };
        let cert = match module.chop(&field, header.seed ^ u64::from(weight_id), attempts)? {
            ChopResult::Irreducible(c) => c,
            ChopResult::Submodule(_) => return Err(CodecError::Corrupt(weight_id)),
        };
        let rep = IrredRep::new(weight_id, module, cert, source, gamma, &field)?;
        if rep.v0 != v0 || rep.jmat != jmat || rep.lambda != lambda {
            return Err(CodecError::Corrupt(weight_id));
        }
        reps.push(rep);
    }
    Ok((header, reps))
}
