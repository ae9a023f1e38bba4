//! Pseudo-prediction generators.
//!
//! Each generator perturbs a ground-truth mask (or its polygons) with one
//! controlled error type. Randomized generators draw only from the
//! [`RngStream`] they are given, so output is a pure function of input,
//! severity and seed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{dilate, erode, rasterize_polygons, BinaryMask, Polygon};
use crate::panoptic::PanopticLabelMap;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    ScaleDilation,
    ScaleErosion,
    BoundaryLocalization,
    ObjectLocalization,
    BoundaryApproximation,
    InnerMask,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 6] = [
        ErrorKind::ScaleDilation,
        ErrorKind::ScaleErosion,
        ErrorKind::BoundaryLocalization,
        ErrorKind::ObjectLocalization,
        ErrorKind::BoundaryApproximation,
        ErrorKind::InnerMask,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::ScaleDilation => "scale_dilation",
            ErrorKind::ScaleErosion => "scale_erosion",
            ErrorKind::BoundaryLocalization => "boundary_localization",
            ErrorKind::ObjectLocalization => "object_localization",
            ErrorKind::BoundaryApproximation => "boundary_approximation",
            ErrorKind::InnerMask => "inner_mask",
        }
    }

    /// Whether the generator works on polygon vertices rather than pixels.
    pub fn needs_polygons(self) -> bool {
        matches!(
            self,
            ErrorKind::BoundaryLocalization | ErrorKind::BoundaryApproximation
        )
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ErrorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown error kind `{s}`")))
    }
}

/// Error type, severity and seed for one batch of pseudo-predictions.
///
/// Severity units: kernel radius in pixels for the scale kinds, noise std for
/// boundary localization, shift length for object localization, distance
/// tolerance for boundary approximation, and hole count for inner mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSpec {
    pub kind: ErrorKind,
    pub severity: f64,
    pub seed: u64,
}

/// A ground-truth object: its raster mask and, when available, the polygons
/// it was rasterized from.
#[derive(Debug, Clone)]
pub struct GtShape {
    pub mask: BinaryMask,
    pub polygons: Option<Vec<Polygon>>,
}

impl GtShape {
    pub fn from_mask(mask: BinaryMask) -> Self {
        GtShape {
            mask,
            polygons: None,
        }
    }

    /// Rasterizes `polygons` onto a `height × width` frame and keeps both forms.
    pub fn from_polygons(polygons: Vec<Polygon>, height: usize, width: usize) -> Self {
        GtShape {
            mask: rasterize_polygons(&polygons, height, width),
            polygons: Some(polygons),
        }
    }
}

impl ErrorSpec {
    pub fn new(kind: ErrorKind, severity: f64, seed: u64) -> Result<Self> {
        let spec = ErrorSpec {
            kind,
            severity,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.severity >= 0.0 && self.severity.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "severity must be a non-negative number, got {}",
                self.severity
            )));
        }
        if self.kind == ErrorKind::InnerMask && self.severity.fract() != 0.0 {
            return Err(Error::InvalidConfig(format!(
                "inner_mask severity counts holes and must be an integer, got {}",
                self.severity
            )));
        }
        Ok(())
    }

    /// Generates the pseudo-prediction for `gt` using this spec's seed.
    pub fn apply(&self, gt: &GtShape) -> Result<BinaryMask> {
        self.apply_with(gt, &mut RngStream::new(self.seed))
    }

    /// Like [`ErrorSpec::apply`] but drawing from a caller-provided stream.
    pub fn apply_with(&self, gt: &GtShape, rng: &mut RngStream) -> Result<BinaryMask> {
        self.validate()?;
        let (h, w) = gt.mask.frame();
        let polygons = || {
            gt.polygons
                .as_deref()
                .ok_or_else(|| Error::MissingPolygon(self.kind.name().into()))
        };
        Ok(match self.kind {
            ErrorKind::ScaleDilation => {
                scale_error(&gt.mask, radius(self.severity), ScaleMode::Dilate)
            }
            ErrorKind::ScaleErosion => {
                scale_error(&gt.mask, radius(self.severity), ScaleMode::Erode)
            }
            ErrorKind::ObjectLocalization => {
                object_localization_error(&gt.mask, self.severity, rng)
            }
            ErrorKind::InnerMask => inner_mask_error(&gt.mask, self.severity as usize, rng),
            ErrorKind::BoundaryLocalization => {
                let polys = polygons()?;
                if self.severity == 0.0 {
                    return Ok(gt.mask.clone());
                }
                let noisy: Vec<Polygon> = polys
                    .iter()
                    .map(|p| boundary_localization_error(p, self.severity, rng))
                    .collect();
                rasterize_polygons(&noisy, h, w)
            }
            ErrorKind::BoundaryApproximation => {
                let polys = polygons()?;
                if self.severity == 0.0 {
                    return Ok(gt.mask.clone());
                }
                let simplified: Vec<Polygon> = polys
                    .iter()
                    .map(|p| boundary_approximation_error(p, self.severity))
                    .collect();
                rasterize_polygons(&simplified, h, w)
            }
        })
    }
}

fn radius(severity: f64) -> usize {
    (severity + 0.5).floor() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleMode {
    Dilate,
    Erode,
}

pub fn scale_error(mask: &BinaryMask, radius: usize, mode: ScaleMode) -> BinaryMask {
    match mode {
        ScaleMode::Dilate => dilate(mask, radius),
        ScaleMode::Erode => erode(mask, radius),
    }
}

/// Adds independent `N(0, std²)` noise to both coordinates of every vertex.
pub fn boundary_localization_error(poly: &Polygon, std: f64, rng: &mut RngStream) -> Polygon {
    let vertices = poly
        .vertices()
        .iter()
        .map(|&(x, y)| (x + std * rng.normal(), y + std * rng.normal()))
        .collect();
    Polygon::new(vertices).expect("perturbation keeps vertex count and finiteness")
}

/// Integer shift vector of length close to `offset` in direction `angle`.
///
/// Among the four floor/ceil roundings of the continuous vector, picks the one
/// whose length is closest to `offset`, breaking ties by distance to the
/// continuous point.
pub fn shift_vector(offset: f64, angle: f64) -> (i64, i64) {
    let fx = offset * angle.cos();
    let fy = offset * angle.sin();
    let mut best = (0i64, 0i64);
    let mut best_key = (f64::INFINITY, f64::INFINITY);
    for x in [fx.floor(), fx.ceil()] {
        for y in [fy.floor(), fy.ceil()] {
            let key = ((x.hypot(y) - offset).abs(), (x - fx).hypot(y - fy));
            if key < best_key {
                best_key = key;
                best = (x as i64, y as i64);
            }
        }
    }
    best
}

/// Translates the mask by an integer vector of length ≈ `offset` in a uniformly
/// random direction. Pixels shifted out of the frame are lost.
pub fn object_localization_error(
    mask: &BinaryMask,
    offset: f64,
    rng: &mut RngStream,
) -> BinaryMask {
    if offset == 0.0 {
        return mask.clone();
    }
    let angle = std::f64::consts::TAU * rng.uniform();
    let (dx, dy) = shift_vector(offset, angle);
    mask.translate(dy, dx)
}

/// Douglas–Peucker simplification of a closed polygon.
///
/// The ring is split at its two most distant vertices and each half is
/// simplified as an open chain. At least three vertices are always kept (the
/// chord endpoints and the vertex farthest from the chord), so the result is
/// still a polygon. Kept vertices stay in their original order.
pub fn boundary_approximation_error(poly: &Polygon, tolerance: f64) -> Polygon {
    let pts = poly.vertices();
    let n = pts.len();
    if n <= 3 {
        return poly.clone();
    }

    let (a, b) = most_distant_pair(pts);
    let mut keep = vec![false; n];
    keep[a] = true;
    keep[b] = true;
    let first: Vec<usize> = (a..=b).collect();
    let second: Vec<usize> = (b..n).chain(0..=a).collect();
    douglas_peucker(pts, &first, tolerance, &mut keep);
    douglas_peucker(pts, &second, tolerance, &mut keep);

    if keep.iter().filter(|&&k| k).count() < 3 {
        let far = (0..n)
            .filter(|&i| i != a && i != b)
            .max_by(|&i, &j| {
                segment_distance(pts[i], pts[a], pts[b])
                    .total_cmp(&segment_distance(pts[j], pts[a], pts[b]))
                    .then(j.cmp(&i))
            })
            .expect("polygon has more than three vertices");
        keep[far] = true;
    }

    let vertices = (0..n).filter(|&i| keep[i]).map(|i| pts[i]).collect();
    Polygon::new(vertices).expect("at least three vertices kept")
}

fn most_distant_pair(pts: &[(f64, f64)]) -> (usize, usize) {
    let mut best = (0, 1);
    let mut best_d = -1.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1);
            if d > best_d {
                best_d = d;
                best = (i, j);
            }
        }
    }
    best
}

/// Marks the vertices of `chain` (indices into `pts`) that survive
/// simplification; the chain's endpoints are assumed kept.
fn douglas_peucker(pts: &[(f64, f64)], chain: &[usize], tolerance: f64, keep: &mut [bool]) {
    let mut stack = vec![(0usize, chain.len() - 1)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let (start, end) = (pts[chain[lo]], pts[chain[hi]]);
        let (far, dist) = (lo + 1..hi)
            .map(|k| (k, segment_distance(pts[chain[k]], start, end)))
            .fold((lo, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if dist > tolerance {
            keep[chain[far]] = true;
            stack.push((lo, far));
            stack.push((far, hi));
        }
    }
}

/// Euclidean distance from `p` to the segment `a`–`b`.
pub fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    (p.0 - (a.0 + t * dx)).hypot(p.1 - (a.1 + t * dy))
}

/// Hole semi-axes are drawn from this fraction range of the mask's bounding-box
/// diagonal.
pub const HOLE_AXIS_RANGE: (f64, f64) = (0.02, 0.10);

/// Removes `holes` random ellipses from the mask. Centres are drawn uniformly
/// from the mask's pixels, semi-axes uniformly from [`HOLE_AXIS_RANGE`] of the
/// bounding-box diagonal, and orientation uniformly.
pub fn inner_mask_error(mask: &BinaryMask, holes: usize, rng: &mut RngStream) -> BinaryMask {
    let Some(bbox) = mask.bounding_box() else {
        return mask.clone();
    };
    if holes == 0 {
        return mask.clone();
    }
    let (h, w) = mask.frame();
    let diagonal = (bbox.rows as f64).hypot(bbox.cols as f64);
    let inside: Vec<(usize, usize)> = (0..h)
        .flat_map(|r| (0..w).map(move |c| (r, c)))
        .filter(|&(r, c)| mask.get(r, c))
        .collect();

    let mut out = mask.clone();
    for _ in 0..holes {
        let (cr, cc) = inside[rng.index(inside.len())];
        let (cy, cx) = (cr as f64 + 0.5, cc as f64 + 0.5);
        let a = diagonal * rng.uniform_range(HOLE_AXIS_RANGE.0, HOLE_AXIS_RANGE.1);
        let b = diagonal * rng.uniform_range(HOLE_AXIS_RANGE.0, HOLE_AXIS_RANGE.1);
        let theta = std::f64::consts::PI * rng.uniform();
        let (sin, cos) = theta.sin_cos();
        let reach = a.max(b).ceil() as usize + 1;
        for r in cr.saturating_sub(reach)..(cr + reach + 1).min(h) {
            for c in cc.saturating_sub(reach)..(cc + reach + 1).min(w) {
                let dx = c as f64 + 0.5 - cx;
                let dy = r as f64 + 0.5 - cy;
                let u = (dx * cos + dy * sin) / a;
                let v = (-dx * sin + dy * cos) / b;
                if u * u + v * v <= 1.0 {
                    out.set(r, c, false);
                }
            }
        }
    }
    out
}

/// Bilinear resampling of a row-major grid with pixel-centre alignment: output
/// pixel `i` samples source coordinate `(i + 0.5) · src / dst − 0.5`, clamped
/// to the grid.
pub fn resize_bilinear(
    src: &[f64],
    src_h: usize,
    src_w: usize,
    dst_h: usize,
    dst_w: usize,
) -> Vec<f64> {
    let axis = |dst: usize, src: usize| -> Vec<(usize, usize, f64)> {
        (0..dst)
            .map(|i| {
                let pos =
                    ((i as f64 + 0.5) * src as f64 / dst as f64 - 0.5).clamp(0.0, (src - 1) as f64);
                let lo = pos.floor() as usize;
                let hi = (lo + 1).min(src - 1);
                (lo, hi, pos - lo as f64)
            })
            .collect()
    };
    let rows = axis(dst_h, src_h);
    let cols = axis(dst_w, src_w);
    let mut out = Vec::with_capacity(dst_h * dst_w);
    for &(r0, r1, fy) in &rows {
        for &(c0, c1, fx) in &cols {
            let top = src[r0 * src_w + c0] * (1.0 - fx) + src[r0 * src_w + c1] * fx;
            let bottom = src[r1 * src_w + c0] * (1.0 - fx) + src[r1 * src_w + c1] * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

/// Caps the effective resolution of an instance mask: crop to the tight box,
/// resample to `res × res`, resample back, binarize at 0.5 and paste at the
/// original position.
pub fn cap_resolution_instance(mask: &BinaryMask, res: usize) -> BinaryMask {
    assert!(res >= 1, "resolution must be positive");
    let Some(bbox) = mask.bounding_box() else {
        return mask.clone();
    };
    let crop = mask.crop(bbox);
    let values: Vec<f64> = crop
        .pixels()
        .iter()
        .map(|&p| f64::from(u8::from(p)))
        .collect();
    let low = resize_bilinear(&values, bbox.rows, bbox.cols, res, res);
    let back = resize_bilinear(&low, res, res, bbox.rows, bbox.cols);
    let patch = BinaryMask::from_pixels(
        bbox.rows,
        bbox.cols,
        back.iter().map(|&v| v >= 0.5).collect(),
    )
    .expect("resampled patch matches box size");
    let (h, w) = mask.frame();
    let mut out = BinaryMask::new(h, w);
    out.paste(&patch, bbox.top, bbox.left);
    out
}

/// Nearest-neighbour downscale of a panoptic id map by `ratio`, then
/// nearest-neighbour upscale back to the original frame. Segments that lose
/// all their pixels are dropped from the metadata.
pub fn cap_resolution_panoptic(
    labels: &PanopticLabelMap,
    ratio: usize,
) -> Result<PanopticLabelMap> {
    if ratio == 0 {
        return Err(Error::InvalidConfig(
            "downscale ratio must be at least 1".into(),
        ));
    }
    let (h, w) = labels.frame();
    if ratio == 1 {
        return Ok(labels.clone());
    }
    let small_h = h.div_ceil(ratio);
    let small_w = w.div_ceil(ratio);
    let nearest = |i: usize, from: usize, to: usize| -> usize {
        (((i as f64 + 0.5) * from as f64 / to as f64).floor() as usize).min(from - 1)
    };
    let mut small = Vec::with_capacity(small_h * small_w);
    for i in 0..small_h {
        let sr = nearest(i, h, small_h);
        for j in 0..small_w {
            small.push(labels.id_at(sr, nearest(j, w, small_w)));
        }
    }
    let mut ids = Vec::with_capacity(h * w);
    for r in 0..h {
        let sr = nearest(r, small_h, h);
        for c in 0..w {
            ids.push(small[sr * small_w + nearest(c, small_w, w)]);
        }
    }
    PanopticLabelMap::retain_present(h, w, ids, labels.segments())
}
