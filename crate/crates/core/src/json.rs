//! JSON helpers for the line-oriented snapshot and export formats.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

/// Recursively sort object keys so output never depends on map ordering.
pub fn sorted(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let ordered: BTreeMap<String, Value> = map.into_iter().map(|(k, v)| (k, sorted(v))).collect();
            Value::Object(ordered.into_iter().collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sorted).collect()),
        other => other,
    }
}

/// One compact JSON object with keys in ascending byte order.
pub fn canonical_line<T: Serialize>(item: &T) -> serde_json::Result<String> {
    let value = sorted(serde_json::to_value(item)?);
    serde_json::to_string(&value)
}
