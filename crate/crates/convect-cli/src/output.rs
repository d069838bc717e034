//! Atomic file writes and the fixed record formats.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use convect_core::dynamics::DiagnosticSample;
use serde_json::Value;

use crate::CliError;

/// Column order of the diagnostic trace CSV.
pub const TRACE_HEADER: &str = "t,E,theta_l2,grad_theta_l2,u_l2,grad_pi_l2";

/// Write through a sibling temp file and rename, so readers never observe a
/// half-written file and an interrupted run leaves the previous version
/// intact.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io_err =
        |e: std::io::Error| CliError::Validation(format!("write {}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    let mut name = path.file_name().map(OsString::from).unwrap_or_default();
    name.push(".tmp");
    let tmp = path.with_file_name(name);
    fs::write(&tmp, bytes).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Validation(format!("encode {}: {e}", path.display())))?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

/// Full-precision trace rows under the fixed header.
pub fn trace_csv(samples: &[DiagnosticSample]) -> String {
    let mut out = String::with_capacity(150 * (samples.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for s in samples {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            s.t, s.energy, s.theta_l2, s.grad_theta_l2, s.u_l2, s.grad_pi_l2
        )
        .expect("write to string");
    }
    out
}
