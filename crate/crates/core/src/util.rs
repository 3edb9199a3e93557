//! Small shared helpers: a stable hash and lossless float serialization.

/// 64-bit FNV-1a. Stable across platforms and toolchain versions, unlike
/// `std::collections::hash_map::DefaultHasher`.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Serializes `f64` as a JSON number when finite and as a string
/// (`"inf"`, `"-inf"`, `"NaN"`) otherwise, so records survive a round trip.
pub mod lossless_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }

    pub mod vec {
        use serde::ser::SerializeSeq;
        use serde::{Deserialize, Deserializer, Serializer};

        #[derive(serde::Serialize, Deserialize)]
        #[serde(transparent)]
        struct Wrapped(#[serde(with = "super")] f64);

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for x in v {
                seq.serialize_element(&Wrapped(*x))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Ok(Vec::<Wrapped>::deserialize(d)?
                .into_iter()
                .map(|w| w.0)
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::{Deserialize, Serialize};

    #[test]
    fn fnv_reference_values() {
        assert_eq!(stable_hash(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(stable_hash(b"a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    struct Rec {
        #[serde(with = "lossless_f64")]
        x: f64,
        #[serde(with = "lossless_f64::vec")]
        xs: Vec<f64>,
    }

    #[test]
    fn non_finite_round_trip() {
        let r = Rec {
            x: f64::NEG_INFINITY,
            xs: vec![0.5, f64::INFINITY],
        };
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"x":"-inf","xs":[0.5,"inf"]}"#);
        assert_eq!(serde_json::from_str::<Rec>(&s).unwrap(), r);
    }

    #[test]
    fn finite_values_round_trip_bit_exactly() {
        let xs = vec![
            -0.9857604065825587,
            -0.9857604065825588,
            0.1 + 0.2,
            f64::MIN_POSITIVE,
            -1e-300,
            123456.789e10,
        ];
        let r = Rec {
            x: -0.9857604065825587,
            xs: xs.clone(),
        };
        let back: Rec = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back.x.to_bits(), r.x.to_bits());
        for (a, b) in back.xs.iter().zip(&xs) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
