//! UBSC model file: magic "UBSM", version u32, kind u8 = 1, V u32, k u32,
//! d u32, seed u64, then V * k * d f32 center values.

use super::UbscModel;
use crate::binio::{put_f32, put_u32, put_u64, to_u32, Cursor};
use crate::error::{Error, Result};
use crate::model::{read_header, MODEL_MAGIC, MODEL_VERSION};
use crate::supervector::ModelKind;

pub fn encode_model(model: &UbscModel) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(33 + model.centers.len() * 4);
    out.extend_from_slice(MODEL_MAGIC);
    put_u32(&mut out, MODEL_VERSION);
    out.push(ModelKind::Ubsc.code());
    put_u32(&mut out, to_u32(model.n_models, "V")?);
    put_u32(&mut out, to_u32(model.k, "k")?);
    put_u32(&mut out, to_u32(model.dim, "d")?);
    put_u64(&mut out, model.seed);
    for &c in &model.centers {
        put_f32(&mut out, c);
    }
    Ok(out)
}

pub fn decode_model(bytes: &[u8]) -> Result<UbscModel> {
    let mut cur = Cursor::new(bytes, "model");
    let kind = read_header(&mut cur)?;
    if kind != ModelKind::Ubsc {
        return Err(Error::WrongModelKind { expected: "ubsc", found: kind.name().into() });
    }
    let n_models = cur.u32()? as usize;
    let k = cur.u32()? as usize;
    let dim = cur.u32()? as usize;
    let seed = cur.u64()?;
    let n = n_models.checked_mul(k).and_then(|x| x.checked_mul(dim)).ok_or(Error::Truncated("model"))?;
    let centers = cur.f32s(n)?;
    cur.finish()?;
    UbscModel::from_centers(n_models, k, dim, seed, centers)
}
