use super::{BinaryMask, PixelSet};

/// Erosion by the Chebyshev ball of radius `iterations`, identical to that many
/// applications of a 3×3 all-ones erosion. Out-of-frame pixels are background.
pub fn erode(mask: &BinaryMask, iterations: usize) -> BinaryMask {
    if iterations == 0 {
        return mask.clone();
    }
    erode_separable(mask, iterations)
}

/// Dilation by the Chebyshev ball of radius `iterations`, clipped to the frame.
pub fn dilate(mask: &BinaryMask, iterations: usize) -> BinaryMask {
    if iterations == 0 {
        return mask.clone();
    }
    dilate_separable(mask, iterations)
}

/// Mask pixels with at least one background (or out-of-frame) 8-neighbour.
pub fn contour(mask: &BinaryMask) -> PixelSet {
    PixelSet::from_mask(&boundary_region(mask, 1))
}

/// Mask pixels within Chebyshev distance `d` of the background: `mask \ erode(mask, d)`.
pub fn boundary_region(mask: &BinaryMask, d: usize) -> BinaryMask {
    mask.and_not(&erode(mask, d))
}

/// Two-sided band of half-width `d` around the mask outline: `dilate(mask, d) \ erode(mask, d)`.
pub fn band_region(mask: &BinaryMask, d: usize) -> BinaryMask {
    dilate(mask, d).and_not(&erode(mask, d))
}

/// Resolves a diagonal fraction to whole pixels: nearest integer with ties
/// rounded up, never below one.
pub fn pixel_distance(height: usize, width: usize, ratio: f64) -> usize {
    debug_assert!(ratio > 0.0 && ratio.is_finite());
    let diagonal = (height as f64).hypot(width as f64);
    let d = (ratio * diagonal + 0.5).floor();
    if d.is_finite() && d >= 1.0 {
        d as usize
    } else {
        1
    }
}

/// Chebyshev erosion as a horizontal then a vertical segment erosion. Both
/// passes walk the grid in row-major order.
fn erode_separable(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let (h, w) = mask.frame();
    let span = radius.saturating_mul(2).saturating_add(1);
    let mut rows = vec![false; h * w];
    for (src, dst) in mask.pixels.chunks_exact(w).zip(rows.chunks_exact_mut(w)) {
        erode_line(src, dst, radius, span);
    }

    // run[c]: consecutive true values in column c ending at the current row.
    let mut out = vec![false; h * w];
    let mut run = vec![0usize; w];
    for end in 0..h {
        let row = &rows[end * w..(end + 1) * w];
        for (count, &v) in run.iter_mut().zip(row) {
            *count = if v { *count + 1 } else { 0 };
        }
        if end >= radius {
            let center = end - radius;
            for (slot, &count) in out[center * w..(center + 1) * w].iter_mut().zip(&run) {
                *slot = count >= span;
            }
        }
    }
    BinaryMask {
        height: h,
        width: w,
        pixels: out,
    }
}

fn erode_line(line: &[bool], out: &mut [bool], radius: usize, span: usize) {
    out.fill(false);
    let mut run = 0usize;
    for (end, &v) in line.iter().enumerate() {
        run = if v { run + 1 } else { 0 };
        if run >= span {
            out[end - radius] = true;
        }
    }
}

/// Chebyshev dilation as a horizontal then a vertical segment dilation; a
/// pixel is set when the nearest true pixel along the line is within `radius`.
fn dilate_separable(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let (h, w) = mask.frame();
    let mut rows = vec![false; h * w];
    for (src, dst) in mask.pixels.chunks_exact(w).zip(rows.chunks_exact_mut(w)) {
        dilate_line(src, dst, radius);
    }

    let mut out = vec![false; h * w];
    // Forward: rows since the last true value in each column.
    let mut since = vec![usize::MAX; w];
    for r in 0..h {
        let row = &rows[r * w..(r + 1) * w];
        let dst = &mut out[r * w..(r + 1) * w];
        for ((gap, &v), slot) in since.iter_mut().zip(row).zip(dst.iter_mut()) {
            *gap = if v { 0 } else { gap.saturating_add(1) };
            *slot = *gap <= radius;
        }
    }
    // Backward: rows until the next true value.
    let mut until = vec![usize::MAX; w];
    for r in (0..h).rev() {
        let row = &rows[r * w..(r + 1) * w];
        let dst = &mut out[r * w..(r + 1) * w];
        for ((gap, &v), slot) in until.iter_mut().zip(row).zip(dst.iter_mut()) {
            *gap = if v { 0 } else { gap.saturating_add(1) };
            *slot |= *gap <= radius;
        }
    }
    BinaryMask {
        height: h,
        width: w,
        pixels: out,
    }
}

fn dilate_line(line: &[bool], out: &mut [bool], radius: usize) {
    let mut gap = usize::MAX;
    for (&v, slot) in line.iter().zip(out.iter_mut()) {
        gap = if v { 0 } else { gap.saturating_add(1) };
        *slot = gap <= radius;
    }
    gap = usize::MAX;
    for (&v, slot) in line.iter().zip(out.iter_mut()).rev() {
        gap = if v { 0 } else { gap.saturating_add(1) };
        *slot |= gap <= radius;
    }
}
