//! Canonical JSON reporting: sorted keys, fixed float formatting at 12
//! significant digits, non-finite values refused before emission.

use serde_json::Value;

/// FNV-1a 64-bit digest of the raw input text, hex encoded.
pub fn digest(text: &str) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

/// Wrap a float, refusing NaN and infinities.
pub fn num(x: f64) -> Result<Value, String> {
    if !x.is_finite() {
        return Err(format!("non-finite value {x} refused"));
    }
    Ok(Value::from(x))
}

/// Serialize with sorted keys and fixed float formatting.
pub fn canonical(v: &Value) -> Result<String, String> {
    let mut out = String::new();
    emit(v, &mut out)?;
    Ok(out)
}

fn emit(v: &Value, out: &mut String) -> Result<(), String> {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                let x = n.as_f64().ok_or("unrepresentable number")?;
                if !x.is_finite() {
                    return Err(format!("non-finite value {x} refused"));
                }
                out.push_str(&format!("{x:.11e}"));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).map_err(|e| e.to_string())?);
        }
        Value::Array(items) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                emit(item, out)?;
            }
            out.push(']');
        }
        Value::Object(map) => {
            // serde_json's default map is a BTreeMap: keys already sorted
            out.push('{');
            for (k, (key, item)) in map.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).map_err(|e| e.to_string())?);
                out.push(':');
                emit(item, out)?;
            }
            out.push('}');
        }
    }
    Ok(())
}
