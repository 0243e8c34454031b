//! Serde helpers: big integers travel as decimal strings.

pub mod big_str {
    use num_bigint::BigInt;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let raw = super::NumOrString::deserialize(d)?;
        raw.parse().map_err(D::Error::custom)
    }
}

pub mod big_vec_str {
    use num_bigint::BigInt;
    use serde::{de::Error, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&x.to_string())?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        let raw = Vec::<super::NumOrString>::deserialize(d)?;
        raw.into_iter().map(|r| r.parse().map_err(D::Error::custom)).collect()
    }
}

pub mod big_mat_str {
    use num_bigint::BigInt;
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(xs: &[Vec<BigInt>], s: S) -> Result<S::Ok, S::Error> {
        let strs: Vec<Vec<String>> = xs.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<BigInt>>, D::Error> {
        let raw = Vec::<Vec<super::NumOrString>>::deserialize(d)?;
        raw.into_iter()
            .map(|row| row.into_iter().map(|r| r.parse().map_err(D::Error::custom)).collect())
            .collect()
    }
}

/// Accepts either a JSON integer or a decimal string.
#[derive(serde::Deserialize)]
#[serde(untagged)]
pub(crate) enum NumOrString {
    Int(i64),
    Str(String),
}

impl NumOrString {
    pub(crate) fn parse(self) -> Result<num_bigint::BigInt, String> {
        match self {
            NumOrString::Int(i) => Ok(i.into()),
            NumOrString::Str(s) => s.trim().parse().map_err(|_| format!("not an integer: {s:?}")),
        }
    }
}

pub mod opt_big_vec_str {
    use num_bigint::BigInt;
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(xs: &Option<Vec<BigInt>>, s: S) -> Result<S::Ok, S::Error> {
        xs.as_ref().map(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<BigInt>>, D::Error> {
        let raw = Option::<Vec<super::NumOrString>>::deserialize(d)?;
        raw.map(|v| v.into_iter().map(|r| r.parse().map_err(D::Error::custom)).collect()).transpose()
    }
}
