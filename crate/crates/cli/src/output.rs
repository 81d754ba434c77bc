use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Stamp;
use crate::error::{CliError, CliResult};

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(path))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Writes the stamp comment line, then whatever `body` emits.
pub fn write_stamped_csv<F>(path: &Path, stamp: &Stamp, body: F) -> CliResult<()>
where
    F: FnOnce(&mut BufWriter<File>) -> kernmoment::Result<()>,
{
    let file = File::create(path).map_err(CliError::io(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(stamp.csv_header().as_bytes()).map_err(CliError::io(path))?;
    body(&mut w).map_err(CliError::at(path))?;
    w.flush().map_err(CliError::io(path))?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn file_sha256(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
