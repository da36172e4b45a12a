use std::io::{Read, Write};
use std::path::Path;

use crate::error::CliError;

/// Reads a whole input into memory; `-` means stdin. Commands parse and
/// validate this buffer completely before any output is produced.
pub fn read_input(path: &Path) -> Result<String, CliError> {
    if path == Path::new("-") {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
        Ok(buf)
    } else {
        std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Writes fully assembled output; `-` means stdout. Every command builds its
/// complete output string first, so a validation failure never leaves a
/// partial file behind.
pub fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    if path == Path::new("-") {
        let stdout = std::io::stdout();
        let mut handle = stdout.lock();
        handle
            .write_all(contents.as_bytes())
            .and_then(|_| handle.flush())
            .map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })
    } else {
        std::fs::write(path, contents).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
