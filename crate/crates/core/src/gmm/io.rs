//! GMM model file: magic "UBSM", version u32, kind u8 = 2, M u32, d u32,
//! seed u64, floor f64 (relative variance floor), then weights (M f64),
//! means (M * d f64) and variances (M * d f64), little-endian.

use super::DiagonalGmm;
use crate::binio::{put_f64, put_u32, put_u64, to_u32, Cursor};
use crate::error::{Error, Result};
use crate::model::{read_header, MODEL_MAGIC, MODEL_VERSION};
use crate::supervector::ModelKind;

pub fn encode_model(gmm: &DiagonalGmm) -> Result<Vec<u8>> {
    let m = gmm.n_components();
    let mut out = Vec::with_capacity(37 + 8 * m * (1 + 2 * gmm.dim));
    out.extend_from_slice(MODEL_MAGIC);
    put_u32(&mut out, MODEL_VERSION);
    out.push(ModelKind::Gmm.code());
    put_u32(&mut out, to_u32(m, "M")?);
    put_u32(&mut out, to_u32(gmm.dim, "d")?);
    put_u64(&mut out, gmm.seed);
    put_f64(&mut out, gmm.floor_scale);
    for v in gmm.weights.iter().chain(&gmm.means).chain(&gmm.variances) {
        put_f64(&mut out, *v);
    }
    Ok(out)
}

pub fn decode_model(bytes: &[u8]) -> Result<DiagonalGmm> {
    let mut cur = Cursor::new(bytes, "model");
    let kind = read_header(&mut cur)?;
    if kind != ModelKind::Gmm {
        return Err(Error::WrongModelKind { expected: "gmm", found: kind.name().into() });
    }
    let m = cur.u32()? as usize;
    let dim = cur.u32()? as usize;
    let seed = cur.u64()?;
    let floor_scale = cur.f64()?;
    let md = m.checked_mul(dim).ok_or(Error::Truncated("model"))?;
    let weights = cur.f64s(m)?;
    let means = cur.f64s(md)?;
    let variances = cur.f64s(md)?;
    cur.finish()?;
    DiagonalGmm::new(weights, means, variances, dim, seed, floor_scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ubsc::{self, UbscModel};

    fn gmm() -> DiagonalGmm {
        DiagonalGmm::new(vec![0.25, 0.75], vec![1.0, -2.0, 0.5, 3.25], vec![0.1, 2.0, 1.5, 0.3], 2, 42, 1e-4).unwrap()
    }

    #[test]
    fn round_trip() {
        let g = gmm();
        assert_eq!(decode_model(&encode_model(&g).unwrap()).unwrap(), g);
    }

    #[test]
    fn readers_reject_the_other_kind() {
        let g = encode_model(&gmm()).unwrap();
        assert!(matches!(ubsc::decode_model(&g), Err(Error::WrongModelKind { .. })));
        let u = ubsc::encode_model(&UbscModel::from_centers(1, 1, 2, 0, vec![0.0, 1.0]).unwrap()).unwrap();
        assert!(matches!(decode_model(&u), Err(Error::WrongModelKind { .. })));
    }

    #[test]
    fn truncated() {
        let g = encode_model(&gmm()).unwrap();
        assert!(matches!(decode_model(&g[..g.len() - 8]), Err(Error::Truncated(_))));
    }
}
