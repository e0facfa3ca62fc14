//! JSON encoding of matrices.
//!
//! A complex matrix is a nested array of rows, each entry an `[re, im]` pair.
//! Numbers are written with 17 significant digits so that encoding is
//! byte-stable and decoding recovers every `f64` bit for bit.

use serde::de::Error as _;
use serde::ser::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::numerics::{c, ComplexMatrix};
use crate::{Error, Result};

/// Fixed 17-significant-digit rendering of a finite float.
pub fn format_f64(x: f64) -> Option<String> {
    if !x.is_finite() {
        return None;
    }
    Some(format!("{x:.16e}"))
}

fn raw<E: serde::ser::Error>(x: f64) -> std::result::Result<Box<RawValue>, E> {
    let s = format_f64(x).ok_or_else(|| E::custom(format!("non-finite matrix entry {x}")))?;
    RawValue::from_string(s).map_err(E::custom)
}

fn to_rows<E: serde::ser::Error>(m: &ComplexMatrix) -> std::result::Result<Vec<Vec<[Box<RawValue>; 2]>>, E> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| Ok([raw(m[(i, j)].re)?, raw(m[(i, j)].im)?]))
                .collect()
        })
        .collect()
}

fn from_rows<E: serde::de::Error>(rows: Vec<Vec<[f64; 2]>>) -> std::result::Result<ComplexMatrix, E> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(E::custom("matrix rows have unequal lengths"));
    }
    Ok(ComplexMatrix::from_fn(n, m, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

/// `#[serde(with = "crate::serial::matrix")]` for a single matrix.
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_rows::<S::Error>(m)?.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ComplexMatrix, D::Error> {
        from_rows(Vec::<Vec<[f64; 2]>>::deserialize(d)?)
    }
}

/// `#[serde(with = "crate::serial::matrix_list")]` for a list of matrices.
pub mod matrix_list {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[ComplexMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: std::result::Result<Vec<_>, S::Error> = ms.iter().map(to_rows::<S::Error>).collect();
        rows?.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<ComplexMatrix>, D::Error> {
        Vec::<Vec<Vec<[f64; 2]>>>::deserialize(d)?
            .into_iter()
            .map(from_rows)
            .collect()
    }
}

/// Owned matrix that serialises in the `[re, im]` nested-array format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixJson(#[serde(with = "matrix")] pub ComplexMatrix);

/// Real number rendered with the same fixed formatting as matrix entries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fixed(pub f64);

impl Serialize for Fixed {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match format_f64(self.0) {
            Some(_) => raw::<S::Error>(self.0)?.serialize(s),
            None => Err(S::Error::custom("non-finite value")),
        }
    }
}

impl<'de> Deserialize<'de> for Fixed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let x = f64::deserialize(d)?;
        if x.is_finite() {
            Ok(Fixed(x))
        } else {
            Err(D::Error::custom("non-finite value"))
        }
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Serialization(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
