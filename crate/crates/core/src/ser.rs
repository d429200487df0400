//! Serde helpers for extended reals: non-finite values travel as the
//! strings `"inf"`, `"-inf"`, and `"nan"`.

pub mod ext_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&format_ext(*x))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Str(s) => parse_ext(&s).ok_or_else(|| serde::de::Error::custom(format!("bad real `{s}`"))),
        }
    }

    pub fn format_ext(x: f64) -> String {
        if x.is_nan() {
            "nan".into()
        } else if x == f64::INFINITY {
            "inf".into()
        } else if x == f64::NEG_INFINITY {
            "-inf".into()
        } else {
            format!("{x}")
        }
    }

    pub fn parse_ext(s: &str) -> Option<f64> {
        match s.trim() {
            "inf" | "+inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            t => t.parse().ok(),
        }
    }
}

pub mod opt_ext_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => super::ext_real::serialize(v, s),
            None => s.serialize_str("n/a"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Some(x)),
            Raw::Str(s) if s == "n/a" => Ok(None),
            Raw::Str(s) => super::ext_real::parse_ext(&s)
                .map(Some)
                .ok_or_else(|| serde::de::Error::custom(format!("bad real `{s}`"))),
        }
    }
}
