//! File helpers: single-mask records and atomic report writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use boundary_iou::mask::{decode_rle, rasterize_polygons};
use boundary_iou::{BinaryMask, Polygon, RleMask};
use serde_json::Value;
use tempfile::NamedTempFile;

/// Reads one mask from a JSON file holding either an uncompressed RLE
/// (`{"size": [h, w], "counts": [...]}`) or polygons
/// (`{"height": h, "width": w, "polygons": [[x0, y0, ...], ...]}`).
pub fn read_mask_file(path: &Path) -> Result<BinaryMask> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let field = |name: &str| {
        value
            .get(name)
            .with_context(|| format!("{}: missing field `{name}`", path.display()))
    };
    if value.get("counts").is_some() {
        let rle: RleMask = serde_json::from_value(value.clone())
            .with_context(|| format!("{}: invalid RLE in field `counts`/`size`", path.display()))?;
        return decode_rle(&rle).with_context(|| format!("{}: field `counts`", path.display()));
    }
    if value.get("polygons").is_some() {
        let height = field("height")?.as_u64().with_context(|| {
            format!(
                "{}: field `height` must be a positive integer",
                path.display()
            )
        })?;
        let width = field("width")?.as_u64().with_context(|| {
            format!(
                "{}: field `width` must be a positive integer",
                path.display()
            )
        })?;
        if height == 0 || width == 0 {
            bail!(
                "{}: fields `height`/`width` must be positive",
                path.display()
            );
        }
        let polygons: Vec<Polygon> = serde_json::from_value(field("polygons")?.clone())
            .with_context(|| format!("{}: invalid field `polygons`", path.display()))?;
        return Ok(rasterize_polygons(
            &polygons,
            height as usize,
            width as usize,
        ));
    }
    bail!(
        "{}: expected a `counts` (RLE) or `polygons` field",
        path.display()
    )
}

/// Writes `bytes` to `path` through a temporary file in the same directory so
/// a failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Writes to `path` when given, otherwise to stdout.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn to_json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}
