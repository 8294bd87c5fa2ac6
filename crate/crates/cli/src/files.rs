//! File access with errors mapped to the usage exit code.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{CliResult, ResultExt};

pub fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).usage_ctx(|| format!("cannot open {}", path.display()))
}

/// Opens `path` and hands it to a format reader.
pub fn read_with<T, E>(path: &Path, read: impl FnOnce(BufReader<File>) -> Result<T, E>) -> CliResult<T>
where
    E: std::error::Error + Send + Sync + 'static,
{
    read(open(path)?).usage_ctx(|| format!("reading {}", path.display()))
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).usage_ctx(|| format!("cannot create directory {}", path.display()))
}

/// Creates `path` and hands it to a format writer.
pub fn write_with<E>(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> Result<(), E>) -> CliResult<()>
where
    E: std::error::Error + Send + Sync + 'static,
{
    let mut out = File::create(path).map(BufWriter::new).usage_ctx(|| format!("cannot create {}", path.display()))?;
    write(&mut out).usage_ctx(|| format!("writing {}", path.display()))?;
    out.flush().usage_ctx(|| format!("writing {}", path.display()))
}
