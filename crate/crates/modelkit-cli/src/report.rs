//! Machine-readable reports: canonical JSON (UTF-8, sorted keys, complex
//! scalars as `[re, im]`) plus a flat CSV summary. Timings and environment
//! metadata live in their own blocks so the rest of the report is
//! byte-stable for identical configs.

use num_complex::Complex64;
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct CheckRecord {
    pub check: String,
    pub scenario: String,
    pub bc: Option<String>,
    pub z: Option<Complex64>,
    pub defect: Option<f64>,
    pub tol: f64,
    pub pass: Option<bool>,
    pub error: Option<String>,
    pub runtime_ms: f64,
}

impl CheckRecord {
    pub fn digest(&self) -> String {
        let mut h = Fnv::new();
        h.update(self.check.as_bytes());
        h.update(self.scenario.as_bytes());
        if let Some(bc) = &self.bc {
            h.update(bc.as_bytes());
        }
        if let Some(z) = self.z {
            h.update(&z.re.to_bits().to_le_bytes());
            h.update(&z.im.to_bits().to_le_bytes());
        }
        h.update(&self.tol.to_bits().to_le_bytes());
        format!("{:016x}", h.finish())
    }

    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("check".into(), json!(self.check));
        m.insert("scenario".into(), json!(self.scenario));
        m.insert("bc".into(), self.bc.as_ref().map(|b| json!(b)).unwrap_or(Value::Null));
        m.insert(
            "z".into(),
            self.z.map(|z| json!([z.re, z.im])).unwrap_or(Value::Null),
        );
        m.insert(
            "defect".into(),
            self.defect.map(|d| json!(d)).unwrap_or(Value::Null),
        );
        m.insert("tol".into(), json!(self.tol));
        m.insert(
            "pass".into(),
            self.pass.map(|p| json!(p)).unwrap_or(Value::Null),
        );
        m.insert(
            "error".into(),
            self.error.as_ref().map(|e| json!(e)).unwrap_or(Value::Null),
        );
        m.insert("digest".into(), json!(self.digest()));
        Value::Object(m)
    }

    pub fn csv_row(&self) -> String {
        let z = self
            .z
            .map(|z| format!("{}{}{}i", z.re, if z.im >= 0.0 { "+" } else { "-" }, z.im.abs()))
            .unwrap_or_default();
        let tol = format!("{:e}", self.tol);
        format!(
            "{},{},{},{},{},{tol},{}\n",
            csv_field(&self.check),
            csv_field(&self.scenario),
            csv_field(self.bc.as_deref().unwrap_or("")),
            z,
            self.defect.map(|d| format!("{d:e}")).unwrap_or_default(),
            match self.pass {
                Some(true) => "true",
                Some(false) => "false",
                None => "error",
            }
        )
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// FNV-1a, used only as a stable inputs digest.
pub struct Fnv(u64);

impl Fnv {
    pub fn new() -> Self {
        Fnv(0xcbf29ce484222325)
    }
    pub fn update(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }
    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv {
    fn default() -> Self {
        Self::new()
    }
}

/// Serialize with sorted keys (serde_json maps are BTree-backed) and a
/// trailing newline.
pub fn canonical_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serialization");
    s.push('\n');
    s
}

/// Write-temp-rename so report files are never observed half-written.
pub fn atomic_write(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

pub fn summary_value(records: &[CheckRecord]) -> Value {
    let passed = records.iter().filter(|r| r.pass == Some(true)).count();
    let failed = records.iter().filter(|r| r.pass == Some(false)).count();
    let errors = records.iter().filter(|r| r.error.is_some()).count();
    json!({
        "total": records.len(),
        "passed": passed,
        "failed": failed,
        "errors": errors,
    })
}

pub fn csv_report(records: &[CheckRecord]) -> String {
    let mut out = String::from("check,scenario,bc,z,defect,tol,pass\n");
    for r in records {
        out.push_str(&r.csv_row());
    }
    out
}

pub fn timings_value(records: &[CheckRecord]) -> Value {
    let mut m = Map::new();
    for r in records {
        m.insert(r.digest(), json!(r.runtime_ms));
    }
    Value::Object(m)
}

pub fn environment_value(threads: Option<usize>) -> Value {
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    json!({
        "crate_version": env!("CARGO_PKG_VERSION"),
        "threads": threads,
        "unix_time": now,
    })
}
