//! CSV and manifest writers, config hashing and the exit-code contract.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use critasym::Error;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// A command failure that aborts before any table is written.
#[derive(Debug, Clone)]
pub struct Failure {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: EXIT_VALIDATION, kind: "validation".into(), message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self { code: EXIT_INTERNAL, kind: "internal".into(), message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain(_) | Error::OutOfRegime(_) | Error::NotOneCut(_) | Error::Genericity(_) => EXIT_VALIDATION,
            _ => EXIT_INTERNAL,
        };
        Self { code, kind: error_kind(&e).into(), message: e.to_string() }
    }
}

/// Short machine-readable tag for a library error.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::Convergence { .. } => "convergence",
        Error::SingularJacobian(_) => "singular_jacobian",
        Error::Ambiguous { .. } => "ambiguous",
        Error::Genericity(_) => "genericity",
        Error::Precision { .. } => "precision",
        Error::Resolution(_) => "resolution",
        Error::Stability(_) => "stability",
        Error::Branch(_) => "branch",
        Error::Accuracy(_) => "accuracy",
        Error::OutOfRegime(_) => "out_of_regime",
        Error::NotOneCut(_) => "not_one_cut",
        Error::CatastropheReached(_) => "catastrophe_reached",
    }
}

/// A finished table plus the metadata that goes into its manifest.
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub failed_rows: usize,
    pub tolerances: Value,
    pub summary: Value,
}

/// Fixed 17-significant-digit scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Keep free text inside one CSV field.
pub fn field(s: &str) -> String {
    s.chars().map(|c| if c == ',' || c == '\n' || c == '\r' { ';' } else { c }).collect()
}

pub fn config_hash(config: &Value, inputs: &[Vec<u8>]) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(config).expect("config serialises"));
    for bytes in inputs {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    h.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::internal(format!("writing {}: {e}", path.display())))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serialises");
    s.push('\n');
    s
}

/// Write `<name>.csv` and `<name>.manifest.json`; returns the exit code.
pub fn emit(out: &Path, command: &str, config: &Value, hash: &str, table: &Table) -> Result<i32, Failure> {
    fs::create_dir_all(out).map_err(|e| Failure::internal(format!("creating {}: {e}", out.display())))?;
    let csv_name = format!("{}.csv", table.name);
    let mut csv = format!("# config_hash={hash}\n{}\n", table.header.join(","));
    for row in &table.rows {
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    write_file(&out.join(&csv_name), &csv)?;
    let status = if table.failed_rows > 0 { "partial" } else { "ok" };
    let manifest = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": hash,
        "config": config,
        "tolerances": table.tolerances,
        "seeds": [],
        "outputs": [csv_name],
        "rows": table.rows.len(),
        "failed_rows": table.failed_rows,
        "status": status,
        "summary": table.summary,
    });
    write_file(&out.join(format!("{}.manifest.json", table.name)), &pretty(&manifest))?;
    // A stale error report from an earlier failed run would contradict the table.
    let _ = fs::remove_file(out.join("error.json"));
    Ok(if table.failed_rows > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

/// Best-effort `error.json` next to the would-be outputs.
pub fn emit_error(out: &Path, command: &str, hash: Option<&str>, f: &Failure) -> Option<PathBuf> {
    let v = json!({
        "command": command,
        "config_hash": hash,
        "exit_code": f.code,
        "kind": f.kind,
        "message": f.message,
    });
    fs::create_dir_all(out).ok()?;
    let path = out.join("error.json");
    fs::write(&path, pretty(&v)).ok()?;
    Some(path)
}
