//! Config files: TOML with one table per subcommand, e.g.
//!
//! ```toml
//! [simulate]
//! m-sweep = "100:50:1000"
//! K = [15, 30]
//! case = ["flat", "decay11", "decay12", "gauss"]
//! trials = 1000
//! ```
//!
//! Each entry becomes a `--key value` pair placed ahead of the user's own
//! arguments, so anything given on the command line wins.

use std::ffi::OsString;
use std::path::Path;

use toml::Value;

use crate::error::CliError;

/// Keys that select the same quantity; a flag for any of them hides all of
/// them in the file.
const EXCLUSIVE_GROUPS: &[&[&str]] = &[&["m", "m-sweep"]];

fn scalar(key: &str, v: &Value) -> Result<String, CliError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Integer(i) => Ok(i.to_string()),
        Value::Float(f) => Ok(f.to_string()),
        Value::Boolean(b) => Ok(b.to_string()),
        _ => Err(CliError::Usage(format!("config key {key:?}: unsupported value {v}"))),
    }
}

fn flag_given(user_args: &[OsString], key: &str) -> bool {
    let long = format!("--{key}");
    let prefix = format!("--{key}=");
    user_args.iter().any(|a| {
        let a = a.to_string_lossy();
        a == long || a.starts_with(&prefix)
    })
}

/// Argument tokens for `section` of the file at `path`. A missing section is
/// not an error.
pub fn injected_args(path: &Path, section: &str, user_args: &[OsString]) -> Result<Vec<OsString>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let doc: toml::Table = text
        .parse()
        .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
    let Some(table) = doc.get(section) else {
        return Ok(Vec::new());
    };
    let table = table
        .as_table()
        .ok_or_else(|| CliError::Usage(format!("config entry [{section}] must be a table")))?;

    let mut out = Vec::new();
    for (raw_key, value) in table {
        let key = raw_key.replace('_', "-");
        if key == "config" {
            continue;
        }
        let own = [key.as_str()];
        let group = EXCLUSIVE_GROUPS
            .iter()
            .find(|g| g.contains(&key.as_str()))
            .copied()
            .unwrap_or(&own);
        if group.iter().any(|k| flag_given(user_args, k)) {
            continue;
        }
        match value {
            Value::Boolean(true) => out.push(format!("--{key}").into()),
            Value::Boolean(false) => {}
            Value::Array(items) => {
                let parts = items.iter().map(|v| scalar(&key, v)).collect::<Result<Vec<_>, _>>()?;
                out.push(format!("--{key}").into());
                out.push(parts.join(",").into());
            }
            v => {
                out.push(format!("--{key}").into());
                out.push(scalar(&key, v)?.into());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    fn strings(v: Vec<OsString>) -> Vec<String> {
        v.into_iter().map(|s| s.into_string().unwrap()).collect()
    }

    #[test]
    fn section_becomes_flags() {
        let f = file("[simulate]\nK = [15, 30]\ntrials = 20\nskip_errors = true\ntolerance = 1e-10\n[bound]\nn = 5\n");
        let args = strings(injected_args(f.path(), "simulate", &[]).unwrap());
        assert_eq!(args, ["--K", "15,30", "--skip-errors", "--tolerance", "0.0000000001", "--trials", "20"]);
    }

    #[test]
    fn command_line_sweep_hides_file_m() {
        let f = file("[bound]\nm = 500\nn = 1024\n");
        let user: Vec<OsString> = vec!["--m-sweep".into(), "100:50:200".into()];
        let args = strings(injected_args(f.path(), "bound", &user).unwrap());
        assert_eq!(args, ["--n", "1024"]);
    }

    #[test]
    fn missing_file_is_usage_error() {
        let err = injected_args(Path::new("/nonexistent/omp.toml"), "bound", &[]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
