use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

/// `{:.16e}`: seventeen significant digits, enough to round-trip.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// `quantity,value` lines for scalar results.
#[derive(Default)]
pub struct Scalars {
    rows: Vec<(String, String)>,
}

impl Scalars {
    pub fn real(&mut self, key: &str, x: f64) -> &mut Self {
        self.rows.push((key.into(), num(x)));
        self
    }

    pub fn text(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.rows.push((key.into(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let mut s = String::from("quantity,value\n");
        for (k, v) in &self.rows {
            s.push_str(k);
            s.push(',');
            s.push_str(v);
            s.push('\n');
        }
        s
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, body).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Table-shaped output: to `--out` when given, else stdout.
pub fn emit(out: Option<&Path>, body: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, body),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}

/// Grid output: to `--out` when given, else `./out/<default_name>`; the
/// chosen path is returned.
pub fn emit_grid(out: Option<&Path>, default_name: &str, body: &str) -> Result<PathBuf, CliError> {
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| Path::new("out").join(default_name));
    write_file(&path, body)?;
    Ok(path)
}
