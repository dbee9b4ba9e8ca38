//! Matrix and vector JSON schema: row-major data with explicit dims.
//!
//! ```json
//! { "rows": 2, "cols": 3, "data": [a00, a01, a02, a10, a11, a12] }
//! ```
//!
//! Use with serde field attributes: `#[serde(with = "crate::matio::mat")]`.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Serialize, Deserialize)]
struct MatRepr<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

#[derive(Serialize, Deserialize)]
struct VecRepr<S> {
    len: usize,
    data: Vec<S>,
}

pub mod mat {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Real, Ser: Serializer>(
        m: &Array2<S>,
        ser: Ser,
    ) -> std::result::Result<Ser::Ok, Ser::Error> {
        MatRepr {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.iter().cloned().collect(),
        }
        .serialize(ser)
    }

    pub fn deserialize<'de, S: Real, De: Deserializer<'de>>(
        de: De,
    ) -> std::result::Result<Array2<S>, De::Error> {
        let r = MatRepr::<S>::deserialize(de)?;
        if r.data.len() != r.rows * r.cols {
            return Err(serde::de::Error::custom(format!(
                "matrix payload has {} entries, dims say {}x{}",
                r.data.len(),
                r.rows,
                r.cols
            )));
        }
        Array2::from_shape_vec((r.rows, r.cols), r.data)
            .map_err(|e| serde::de::Error::custom(e.to_string()))
    }
}

pub mod vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Real, Ser: Serializer>(
        v: &Array1<S>,
        ser: Ser,
    ) -> std::result::Result<Ser::Ok, Ser::Error> {
        VecRepr {
            len: v.len(),
            data: v.to_vec(),
        }
        .serialize(ser)
    }

    pub fn deserialize<'de, S: Real, De: Deserializer<'de>>(
        de: De,
    ) -> std::result::Result<Array1<S>, De::Error> {
        let r = VecRepr::<S>::deserialize(de)?;
        if r.data.len() != r.len {
            return Err(serde::de::Error::custom("vector payload length mismatch"));
        }
        Ok(Array1::from_vec(r.data))
    }
}
