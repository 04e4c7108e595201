//! JSON output with every floating-point number written to 17 significant digits.

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

fn number(n: &serde_json::Number, out: &mut String) {
    if n.is_f64() {
        let x = n.as_f64().unwrap_or(f64::NAN);
        out.push_str(&format!("{x:.16e}"));
    } else {
        out.push_str(&n.to_string());
    }
}

fn indent(out: &mut String, level: usize) {
    out.push('\n');
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn write(v: &Value, level: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => number(n, out),
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
            } else if items.iter().all(is_scalar) {
                // short scalar arrays (complex pairs, matrix rows) stay on one line
                out.push('[');
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write(item, level, out);
                }
                out.push(']');
            } else {
                out.push('[');
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        out.push(',');
                    }
                    indent(out, level + 1);
                    write(item, level + 1, out);
                }
                indent(out, level);
                out.push(']');
            }
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (k, (key, item)) in map.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                indent(out, level + 1);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write(item, level + 1, out);
            }
            indent(out, level);
            out.push('}');
        }
    }
}

pub fn to_string_17<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        let s = to_string_17(&serde_json::json!({"x": 0.1, "n": 3, "v": [1.0, -0.25]})).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"n\": 3"));
        assert!(s.contains("-2.5000000000000000e-1"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
    }

    #[test]
    fn round_trips_exactly() {
        let xs = [std::f64::consts::PI, 1.0 / 3.0, f64::MIN_POSITIVE, 1e300];
        let s = to_string_17(&xs).unwrap();
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, xs);
    }
}
