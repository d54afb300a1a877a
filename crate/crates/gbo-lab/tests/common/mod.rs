use std::path::PathBuf;

use serde_json::Value;

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("golden")
        .join(format!("{name}.json"))
}

/// Structural equality with floats compared to `1e-6` relative plus `1e-9`
/// absolute, loose enough for FFT kernels that differ between CPUs.
pub fn close(path: &str, got: &Value, want: &Value, errors: &mut Vec<String>) {
    match (got, want) {
        (Value::Number(g), Value::Number(w)) => {
            let (g, w) = (g.as_f64().unwrap(), w.as_f64().unwrap());
            if (g - w).abs() > 1e-6 * g.abs().max(w.abs()) + 1e-9 {
                errors.push(format!("{path}: {g} != {w}"));
            }
        }
        (Value::Array(g), Value::Array(w)) if g.len() == w.len() => {
            for (i, (a, b)) in g.iter().zip(w).enumerate() {
                close(&format!("{path}[{i}]"), a, b, errors);
            }
        }
        (Value::Object(g), Value::Object(w)) if g.keys().eq(w.keys()) => {
            for (k, a) in g {
                close(&format!("{path}.{k}"), a, &w[k], errors);
            }
        }
        _ if got == want => {}
        _ => errors.push(format!("{path}: {got} != {want}")),
    }
}

/// Compare a summary with its golden file; `GBO_LAB_BLESS=1` rewrites it.
pub fn check_golden(name: &str, summary: &Value) -> Vec<String> {
    let path = golden_path(name);
    if std::env::var_os("GBO_LAB_BLESS").is_some() {
        let mut text = serde_json::to_string_pretty(summary).unwrap();
        text.push('\n');
        std::fs::write(&path, text).unwrap();
        return Vec::new();
    }
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => return vec![format!("{}: {e}", path.display())],
    };
    let want: Value = serde_json::from_str(&text).unwrap();
    let mut errors = Vec::new();
    close(name, summary, &want, &mut errors);
    errors
}
