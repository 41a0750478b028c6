//! Plain-text persistence of stiffness matrices.
//!
//! Line 1 is `# unfold-stiffness v1 <key> structure=<circulant|toeplitz>`,
//! followed by one first-row value per line in shortest round-trip decimal.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::kernel::KernelSpec;
use super::stiffness::{cache_key, StiffnessMatrix, Structure};
use crate::{Error, Result};

const MAGIC: &str = "# unfold-stiffness v1";

pub fn write_stiffness(k: &StiffnessMatrix, path: &Path) -> Result<()> {
    let structure = match k.structure() {
        Structure::Circulant => "circulant",
        Structure::SymmetricToeplitz => "toeplitz",
    };
    let mut out = String::with_capacity(24 * k.dim() + 128);
    out.push_str(&format!(
        "{MAGIC} {} structure={structure}\n",
        k.cache_key()
    ));
    for v in k.first_row() {
        out.push_str(&format!("{v:?}\n"));
    }
    // Write-then-rename so a concurrent reader never sees a torn file.
    let tmp = path.with_extension("tmp");
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(out.as_bytes())?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads a cache file, checking that it was produced for the expected key.
pub fn read_stiffness(
    path: &Path,
    kernel: &KernelSpec,
    resolution: u32,
    quad_resolution: u32,
) -> Result<StiffnessMatrix> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{}: empty stiffness cache", path.display())))?;
    let rest = header
        .strip_prefix(MAGIC)
        .ok_or_else(|| Error::Parse(format!("{}: not a stiffness cache", path.display())))?
        .trim();
    let (key, structure) = rest
        .rsplit_once(" structure=")
        .ok_or_else(|| Error::Parse(format!("{}: header lacks structure", path.display())))?;
    let expected = cache_key(kernel, resolution, quad_resolution);
    if key != expected {
        return Err(Error::Parse(format!(
            "{}: cache key '{key}' does not match '{expected}'",
            path.display()
        )));
    }
    let structure = match structure {
        "circulant" => Structure::Circulant,
        "toeplitz" => Structure::SymmetricToeplitz,
        other => return Err(Error::Parse(format!("unknown structure '{other}'"))),
    };
    let row = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{}: bad value '{l}': {e}", path.display())))
        })
        .collect::<Result<Vec<f64>>>()?;
    StiffnessMatrix::from_first_row(kernel.clone(), resolution, quad_resolution, structure, row)
}

fn cache_file_name(kernel: &KernelSpec, resolution: u32, quad_resolution: u32) -> String {
    let key = cache_key(kernel, resolution, quad_resolution);
    let safe: String = key
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("stiffness_{safe}.txt")
}

/// Loads the matrix from `dir` when a matching cache file exists, otherwise
/// builds and stores it. Returns the matrix and the cache path.
pub fn load_or_build(
    dir: &Path,
    kernel: &KernelSpec,
    resolution: u32,
    quad_resolution: u32,
) -> Result<(StiffnessMatrix, PathBuf)> {
    let path = dir.join(cache_file_name(kernel, resolution, quad_resolution));
    if path.exists() {
        if let Ok(k) = read_stiffness(&path, kernel, resolution, quad_resolution) {
            return Ok((k, path));
        }
    }
    let k = StiffnessMatrix::build(kernel, resolution, quad_resolution)?;
    fs::create_dir_all(dir)?;
    write_stiffness(&k, &path)?;
    Ok((k, path))
}
