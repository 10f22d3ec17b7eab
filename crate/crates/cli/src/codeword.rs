//! Codeword files: surface configurations stored as alphabet indices in
//! row-major element order, either one integer per line or a JSON array.

use anyhow::{bail, Context, Result};
use risbeam_core::beamforming::codeword_from_indices;
use risbeam_core::geometry::PhaseAlphabet;
use risbeam_core::Complex64;
use std::path::Path;

/// Parse alphabet indices from file text. A leading `[` selects the JSON
/// array form; otherwise each non-empty line must hold one index.
pub fn parse_indices(text: &str) -> Result<Vec<usize>> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        let values: Vec<u64> = serde_json::from_str(trimmed).context("JSON index array")?;
        return Ok(values.into_iter().map(|v| v as usize).collect());
    }
    let mut indices = Vec::new();
    for (number, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: usize = line
            .parse()
            .with_context(|| format!("line {}: {line:?}", number + 1))?;
        indices.push(value);
    }
    Ok(indices)
}

/// Load a codeword file and resolve it against an alphabet and element
/// count.
pub fn load_codeword(
    path: &Path,
    alphabet: &PhaseAlphabet,
    n_elements: usize,
) -> Result<Vec<Complex64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let indices = parse_indices(&text).with_context(|| format!("in {}", path.display()))?;
    if indices.len() != n_elements {
        bail!(
            "{} holds {} indices but the surface has {} elements",
            path.display(),
            indices.len(),
            n_elements
        );
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= alphabet.len()) {
        bail!(
            "index {bad} outside the {}-phase alphabet",
            alphabet.len()
        );
    }
    Ok(codeword_from_indices(&indices, alphabet))
}

/// Write indices in the line-oriented form.
pub fn save_indices(path: &Path, indices: &[usize]) -> Result<()> {
    let mut text = String::new();
    for i in indices {
        text.push_str(&i.to_string());
        text.push('\n');
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
