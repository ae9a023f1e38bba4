use serde::{Deserialize, Serialize};

use super::BinaryMask;
use crate::error::{Error, Result};

/// Closed polygon in continuous pixel coordinates, `(x, y)` with x along
/// columns. Serializes as the flat COCO list `[x1, y1, x2, y2, ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polygon {
    vertices: Vec<(f64, f64)>,
}

impl Polygon {
    pub fn new(vertices: Vec<(f64, f64)>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::MalformedEncoding(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices
            .iter()
            .any(|(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(Error::MalformedEncoding(
                "polygon has non-finite coordinates".into(),
            ));
        }
        Ok(Polygon { vertices })
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Iterator over closed edges, the last one joining back to the first vertex.
    pub fn edges(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Absolute shoelace area.
    pub fn area(&self) -> f64 {
        self.edges()
            .map(|((x1, y1), (x2, y2))| x1 * y2 - x2 * y1)
            .sum::<f64>()
            .abs()
            / 2.0
    }

    pub fn flat(&self) -> Vec<f64> {
        self.vertices.iter().flat_map(|&(x, y)| [x, y]).collect()
    }
}

impl TryFrom<Vec<f64>> for Polygon {
    type Error = Error;

    fn try_from(flat: Vec<f64>) -> Result<Self> {
        if flat.len() % 2 != 0 {
            return Err(Error::MalformedEncoding(format!(
                "polygon coordinate list has odd length {}",
                flat.len()
            )));
        }
        Polygon::new(flat.chunks_exact(2).map(|p| (p[0], p[1])).collect())
    }
}

impl From<Polygon> for Vec<f64> {
    fn from(poly: Polygon) -> Self {
        poly.flat()
    }
}

/// Even-odd scanline fill sampled at pixel centres `(c + 0.5, r + 0.5)`.
///
/// Edge crossings use the half-open rule: an edge spans a scanline when exactly
/// one endpoint lies strictly below it, and a centre lying exactly on a
/// crossing belongs to the span that starts there. Left and top edges are
/// therefore inclusive, right and bottom edges exclusive.
pub fn rasterize_polygon(poly: &Polygon, height: usize, width: usize) -> BinaryMask {
    let mut mask = BinaryMask::new(height, width);
    fill_even_odd(&mut mask, poly);
    mask
}

/// Union of the even-odd fills of each polygon, as COCO merges multi-part
/// polygon annotations.
pub fn rasterize_polygons(polys: &[Polygon], height: usize, width: usize) -> BinaryMask {
    let mut mask = BinaryMask::new(height, width);
    for poly in polys {
        fill_even_odd(&mut mask, poly);
    }
    mask
}

fn fill_even_odd(mask: &mut BinaryMask, poly: &Polygon) {
    let (height, width) = mask.frame();
    let mut crossings = Vec::new();
    for r in 0..height {
        let y = r as f64 + 0.5;
        crossings.clear();
        for ((x1, y1), (x2, y2)) in poly.edges() {
            if (y1 > y) != (y2 > y) {
                crossings.push(x1 + (y - y1) * (x2 - x1) / (y2 - y1));
            }
        }
        crossings.sort_by(f64::total_cmp);
        for span in crossings.chunks_exact(2) {
            // Centre c + 0.5 inside [start, end).
            let first = (span[0] - 0.5).ceil().max(0.0);
            let last = ((span[1] - 0.5).ceil()).min(width as f64);
            if last <= first {
                continue;
            }
            for c in first as usize..last as usize {
                mask.set(r, c, true);
            }
        }
    }
}
