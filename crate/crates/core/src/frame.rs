use serde::{Deserialize, Serialize};

use crate::sensor::SENTINEL;

/// One timestamped vector of per-second rates, aligned with the current
/// headings.
///
/// Serialized as `{"t":…,"elapsed":…,"v":[…],"label":…}`; sentinel slots are
/// written as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFrame {
    /// Milliseconds since the Unix epoch.
    #[serde(rename = "t")]
    pub timestamp_ms: u64,
    /// Seconds covered by this window.
    pub elapsed: f64,
    #[serde(rename = "v", with = "sentinel_values")]
    pub values: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

mod sentinel_values {
    use super::SENTINEL;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[i64], serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(values.len()))?;
        for &v in values {
            if v == SENTINEL {
                seq.serialize_element(&None::<i64>)?;
            } else {
                seq.serialize_element(&v)?;
            }
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<i64>, D::Error> {
        let raw = Vec::<Option<i64>>::deserialize(deserializer)?;
        Ok(raw.into_iter().map(|v| v.unwrap_or(SENTINEL)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentinel_serializes_as_null() {
        let frame = SampleFrame {
            timestamp_ms: 5,
            elapsed: 0.5,
            values: vec![1, SENTINEL, -3],
            label: None,
        };
        let json = serde_json::to_string(&frame).unwrap();
        assert_eq!(json, r#"{"t":5,"elapsed":0.5,"v":[1,null,-3]}"#);
        let back: SampleFrame = serde_json::from_str(&json).unwrap();
        assert_eq!(back, frame);
    }

    #[test]
    fn label_is_carried() {
        let frame = SampleFrame {
            timestamp_ms: 1,
            elapsed: 1.0,
            values: vec![],
            label: Some("phase-2".into()),
        };
        let json = serde_json::to_string(&frame).unwrap();
        assert!(json.contains(r#""label":"phase-2""#));
    }
}
