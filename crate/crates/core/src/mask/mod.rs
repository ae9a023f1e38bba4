//! Binary masks, their encodings, and the morphology every measure is built on.
//!
//! Masks are dense row-major boolean grids. Distances are Chebyshev (the 3×3
//! all-ones structuring element) and locations outside the frame count as
//! background, so an object touching the image edge has a boundary there.

mod morphology;
mod polygon;
mod rle;

pub use morphology::{band_region, boundary_region, contour, dilate, erode, pixel_distance};
pub use polygon::{rasterize_polygon, rasterize_polygons, Polygon};
pub use rle::{decode_rle, encode_rle, RleMask};

use std::fmt;

use crate::error::{Error, Result};

/// A rectangular grid of boolean pixels stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    pixels: Vec<bool>,
}

impl BinaryMask {
    /// All-false mask. Panics if either dimension is zero.
    pub fn new(height: usize, width: usize) -> Self {
        assert!(height > 0 && width > 0, "mask dimensions must be positive");
        BinaryMask {
            height,
            width,
            pixels: vec![false; height * width],
        }
    }

    pub fn full(height: usize, width: usize) -> Self {
        let mut mask = Self::new(height, width);
        mask.pixels.fill(true);
        mask
    }

    pub fn from_pixels(height: usize, width: usize, pixels: Vec<bool>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::MalformedEncoding(format!(
                "mask dimensions must be positive, got {height}x{width}"
            )));
        }
        if pixels.len() != height * width {
            return Err(Error::MalformedEncoding(format!(
                "{} pixel values for a {height}x{width} frame",
                pixels.len()
            )));
        }
        Ok(BinaryMask {
            height,
            width,
            pixels,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut mask = Self::new(height, width);
        for r in 0..height {
            for c in 0..width {
                mask.pixels[r * width + c] = f(r, c);
            }
        }
        mask
    }

    /// Mask with the axis-aligned block `rows × cols` starting at `(top, left)` set,
    /// clipped to the frame.
    pub fn from_block(
        height: usize,
        width: usize,
        top: usize,
        left: usize,
        rows: usize,
        cols: usize,
    ) -> Self {
        Self::from_fn(height, width, |r, c| {
            r >= top && r < top.saturating_add(rows) && c >= left && c < left.saturating_add(cols)
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(height, width)`.
    pub fn frame(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixels(&self) -> &[bool] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.pixels[row * self.width + col] = value;
    }

    pub fn area(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.pixels.iter().any(|&p| p)
    }

    pub fn ensure_same_frame(&self, other: &BinaryMask) -> Result<()> {
        if self.frame() != other.frame() {
            return Err(Error::FrameMismatch {
                expected: self.frame(),
                found: other.frame(),
            });
        }
        Ok(())
    }

    pub fn complement(&self) -> BinaryMask {
        self.map(|p| !p)
    }

    fn map(&self, f: impl Fn(bool) -> bool) -> BinaryMask {
        BinaryMask {
            height: self.height,
            width: self.width,
            pixels: self.pixels.iter().map(|&p| f(p)).collect(),
        }
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> BinaryMask {
        debug_assert_eq!(self.frame(), other.frame());
        BinaryMask {
            height: self.height,
            width: self.width,
            pixels: self
                .pixels
                .iter()
                .zip(&other.pixels)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Pixel-wise AND. Both masks must share a frame.
    pub fn and(&self, other: &BinaryMask) -> BinaryMask {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &BinaryMask) -> BinaryMask {
        self.zip_with(other, |a, b| a || b)
    }

    /// Pixels of `self` that are not in `other`.
    pub fn and_not(&self, other: &BinaryMask) -> BinaryMask {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn intersection_area(&self, other: &BinaryMask) -> usize {
        debug_assert_eq!(self.frame(), other.frame());
        self.pixels
            .iter()
            .zip(&other.pixels)
            .filter(|(&a, &b)| a && b)
            .count()
    }

    pub fn union_area(&self, other: &BinaryMask) -> usize {
        debug_assert_eq!(self.frame(), other.frame());
        self.pixels
            .iter()
            .zip(&other.pixels)
            .filter(|(&a, &b)| a || b)
            .count()
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.frame() == other.frame()
            && self
                .pixels
                .iter()
                .zip(&other.pixels)
                .all(|(&a, &b)| !a || b)
    }

    /// Tight bounding box of the true pixels as `(top, left, rows, cols)`.
    pub fn bounding_box(&self) -> Option<BoundingBox> {
        let mut top = usize::MAX;
        let mut bottom = 0;
        let mut left = usize::MAX;
        let mut right = 0;
        for r in 0..self.height {
            let row = &self.pixels[r * self.width..(r + 1) * self.width];
            if let Some(first) = row.iter().position(|&p| p) {
                let last = row.iter().rposition(|&p| p).unwrap_or(first);
                top = top.min(r);
                bottom = r;
                left = left.min(first);
                right = right.max(last);
            }
        }
        (top != usize::MAX).then(|| BoundingBox {
            top,
            left,
            rows: bottom - top + 1,
            cols: right - left + 1,
        })
    }

    /// Copy of the window `bbox`. The window must lie inside the frame.
    pub fn crop(&self, bbox: BoundingBox) -> BinaryMask {
        assert!(bbox.top + bbox.rows <= self.height && bbox.left + bbox.cols <= self.width);
        BinaryMask::from_fn(bbox.rows, bbox.cols, |r, c| {
            self.get(bbox.top + r, bbox.left + c)
        })
    }

    /// Writes `patch` into this mask with its origin at `(top, left)`, clipped to the frame.
    pub fn paste(&mut self, patch: &BinaryMask, top: usize, left: usize) {
        for r in 0..patch.height {
            let dr = top + r;
            if dr >= self.height {
                break;
            }
            for c in 0..patch.width {
                let dc = left + c;
                if dc >= self.width {
                    break;
                }
                self.set(dr, dc, patch.get(r, c));
            }
        }
    }

    /// Mask translated by `(dy, dx)`; pixels leaving the frame are dropped.
    pub fn translate(&self, dy: i64, dx: i64) -> BinaryMask {
        let mut out = BinaryMask::new(self.height, self.width);
        let (h, w) = (self.height as i64, self.width as i64);
        for r in 0..h {
            let sr = r - dy;
            if sr < 0 || sr >= h {
                continue;
            }
            for c in 0..w {
                let sc = c - dx;
                if sc >= 0 && sc < w && self.get(sr as usize, sc as usize) {
                    out.set(r as usize, c as usize, true);
                }
            }
        }
        out
    }
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "BinaryMask {}x{} (area {})",
            self.height,
            self.width,
            self.area()
        )?;
        if self.height * self.width <= 64 * 64 {
            for r in 0..self.height {
                for c in 0..self.width {
                    f.write_str(if self.get(r, c) { "#" } else { "." })?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub top: usize,
    pub left: usize,
    pub rows: usize,
    pub cols: usize,
}

impl BoundingBox {
    pub fn union(self, other: BoundingBox) -> BoundingBox {
        let top = self.top.min(other.top);
        let left = self.left.min(other.left);
        let bottom = (self.top + self.rows).max(other.top + other.rows);
        let right = (self.left + self.cols).max(other.left + other.cols);
        BoundingBox {
            top,
            left,
            rows: bottom - top,
            cols: right - left,
        }
    }
}

/// A set of pixel coordinates inside a reference frame, kept sorted row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelSet {
    height: usize,
    width: usize,
    coords: Vec<(usize, usize)>,
}

impl PixelSet {
    pub fn from_mask(mask: &BinaryMask) -> Self {
        let coords = (0..mask.height)
            .flat_map(|r| (0..mask.width).map(move |c| (r, c)))
            .filter(|&(r, c)| mask.get(r, c))
            .collect();
        PixelSet {
            height: mask.height,
            width: mask.width,
            coords,
        }
    }

    pub fn frame(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.coords.binary_search(&(row, col)).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.coords.iter().copied()
    }

    pub fn to_mask(&self) -> BinaryMask {
        let mut mask = BinaryMask::new(self.height, self.width);
        for &(r, c) in &self.coords {
            mask.set(r, c, true);
        }
        mask
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_pixels_rejects_wrong_length() {
        assert!(BinaryMask::from_pixels(2, 2, vec![true; 3]).is_err());
        assert!(BinaryMask::from_pixels(0, 2, vec![]).is_err());
    }

    #[test]
    fn bounding_box_and_crop() {
        let m = BinaryMask::from_block(10, 12, 2, 3, 4, 5);
        let bbox = m.bounding_box().unwrap();
        assert_eq!(
            bbox,
            BoundingBox {
                top: 2,
                left: 3,
                rows: 4,
                cols: 5
            }
        );
        let crop = m.crop(bbox);
        assert_eq!(crop.area(), 20);
        let mut back = BinaryMask::new(10, 12);
        back.paste(&crop, 2, 3);
        assert_eq!(back, m);
        assert!(BinaryMask::new(3, 3).bounding_box().is_none());
    }

    #[test]
    fn translate_drops_pixels_leaving_frame() {
        let m = BinaryMask::from_block(6, 6, 0, 0, 2, 2);
        assert_eq!(m.translate(1, 1), BinaryMask::from_block(6, 6, 1, 1, 2, 2));
        assert!(m.translate(-2, 0).is_empty());
        assert_eq!(m.translate(0, 5).area(), 2);
    }

    #[test]
    fn pixel_set_roundtrips_through_mask() {
        let m = BinaryMask::from_fn(5, 7, |r, c| (r * 7 + c) % 3 == 0);
        let set = PixelSet::from_mask(&m);
        assert_eq!(set.len(), m.area());
        assert!(set.contains(0, 0));
        assert!(!set.contains(0, 1));
        assert_eq!(set.to_mask(), m);
    }
}
