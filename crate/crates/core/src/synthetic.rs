//! Synthetic shapes and datasets for running the evaluation and sensitivity
//! machinery without external data.

use std::f64::consts::TAU;

use crate::detection::{
    Category, DetectionResult, GtDataset, ImageInfo, InstanceAnnotation, Segmentation,
};
use crate::errorsim::{cap_resolution_instance, GtShape};
use crate::mask::{encode_rle, rasterize_polygon, rasterize_polygons, Polygon};
use crate::panoptic::{PanopticLabelMap, SegmentInfo, VOID};
use crate::rng::{derive_seed, RngStream};

/// Axis-aligned square with its top-left corner at `(x, y)`.
pub fn square_polygon(x: f64, y: f64, side: f64) -> Polygon {
    Polygon::new(vec![
        (x, y),
        (x + side, y),
        (x + side, y + side),
        (x, y + side),
    ])
    .expect("square has four finite vertices")
}

/// Regular `vertices`-gon approximating a circle.
pub fn disc_polygon(cx: f64, cy: f64, radius: f64, vertices: usize) -> Polygon {
    let pts = (0..vertices.max(3))
        .map(|i| {
            let t = TAU * i as f64 / vertices.max(3) as f64;
            (cx + radius * t.cos(), cy + radius * t.sin())
        })
        .collect();
    Polygon::new(pts).expect("disc vertices are finite")
}

/// Parameters of star-shaped random blobs: the radius along each direction is
/// `mean · (1 + Σ aₖ cos(kθ + φₖ))` for `k = 2..=harmonics`, with amplitudes
/// `aₖ ~ U(0, roughness / √k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobStyle {
    pub vertices: usize,
    pub harmonics: usize,
    pub roughness: f64,
}

impl Default for BlobStyle {
    fn default() -> Self {
        BlobStyle {
            vertices: 128,
            harmonics: 12,
            roughness: 0.12,
        }
    }
}

pub fn blob_polygon(
    cx: f64,
    cy: f64,
    mean_radius: f64,
    style: BlobStyle,
    rng: &mut RngStream,
) -> Polygon {
    let terms: Vec<(f64, f64, f64)> = (2..=style.harmonics)
        .map(|k| {
            let amp = rng.uniform() * style.roughness / (k as f64).sqrt();
            (k as f64, amp, TAU * rng.uniform())
        })
        .collect();
    let n = style.vertices.max(3);
    let pts = (0..n)
        .map(|i| {
            let t = TAU * i as f64 / n as f64;
            let wobble: f64 = terms
                .iter()
                .map(|&(k, a, phi)| a * (k * t + phi).cos())
                .sum();
            let r = mean_radius * (1.0 + wobble).max(0.3);
            (cx + r * t.cos(), cy + r * t.sin())
        })
        .collect();
    Polygon::new(pts).expect("blob vertices are finite")
}

/// Squares of the given sides centred on a `frame × frame` canvas.
pub fn centered_squares(sides: &[usize], frame: usize) -> Vec<GtShape> {
    sides
        .iter()
        .map(|&side| {
            let offset = (frame as f64 - side as f64) / 2.0;
            let offset = offset.floor();
            GtShape::from_polygons(
                vec![square_polygon(offset, offset, side as f64)],
                frame,
                frame,
            )
        })
        .collect()
}

/// Mixed suite of squares, discs and blobs of varied size on a
/// `frame × frame` canvas, each object fully inside the frame.
pub fn shape_suite(count: usize, frame: usize, seed: u64) -> Vec<GtShape> {
    let f = frame as f64;
    (0..count)
        .map(|i| {
            let mut rng = RngStream::derived(seed, &[i as u64]);
            let radius = rng.uniform_range(0.04 * f, 0.3 * f);
            let margin = radius * 1.5;
            let cx = rng.uniform_range(margin, f - margin);
            let cy = rng.uniform_range(margin, f - margin);
            let poly = match i % 3 {
                0 => square_polygon(cx - radius, cy - radius, 2.0 * radius),
                1 => disc_polygon(cx, cy, radius, 64),
                _ => blob_polygon(cx, cy, radius, BlobStyle::default(), &mut rng),
            };
            GtShape::from_polygons(vec![poly], frame, frame)
        })
        .collect()
}

/// Shapes used when a sensitivity sweep runs without ground-truth input:
/// centred squares of sides 16 to 160 plus a mixed suite of 60 objects, all
/// on 256 × 256 canvases.
pub fn builtin_shapes(seed: u64) -> Vec<GtShape> {
    let sides: Vec<usize> = (2..=20).map(|k| 8 * k).collect();
    let mut shapes = centered_squares(&sides, 256);
    shapes.extend(shape_suite(60, 256, seed));
    shapes
}

/// Settings for [`instance_dataset`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceDatasetSpec {
    pub images: usize,
    pub objects_per_image: usize,
    pub height: usize,
    pub width: usize,
    pub categories: u64,
    pub blob: BlobStyle,
}

impl Default for InstanceDatasetSpec {
    fn default() -> Self {
        InstanceDatasetSpec {
            images: 24,
            objects_per_image: 10,
            height: 480,
            width: 640,
            categories: 3,
            blob: BlobStyle::default(),
        }
    }
}

/// Blob radii (in pixels) per size class, chosen so object areas fall in the
/// small, medium and large COCO ranges.
const RADIUS_BY_SIZE: [(f64, f64); 3] = [(6.0, 15.0), (22.0, 48.0), (70.0, 140.0)];

/// Random blob objects cycling through small, medium and large sizes, stored
/// as polygon segmentations.
pub fn instance_dataset(spec: &InstanceDatasetSpec, seed: u64) -> GtDataset {
    let (h, w) = (spec.height as f64, spec.width as f64);
    let mut annotations = Vec::new();
    let mut next_id = 1;
    for img in 0..spec.images {
        for obj in 0..spec.objects_per_image {
            let mut rng = RngStream::derived(seed, &[img as u64, obj as u64]);
            let (lo, hi) = RADIUS_BY_SIZE[(img * spec.objects_per_image + obj) % 3];
            let radius = rng.uniform_range(lo, hi).min(0.4 * h.min(w));
            let margin = radius * 1.4;
            let cx = rng.uniform_range(margin, w - margin);
            let cy = rng.uniform_range(margin, h - margin);
            let poly = blob_polygon(cx, cy, radius, spec.blob, &mut rng);
            let area = rasterize_polygon(&poly, spec.height, spec.width).area();
            if area == 0 {
                continue;
            }
            annotations.push(InstanceAnnotation {
                id: next_id,
                image_id: img as u64 + 1,
                category_id: 1 + rng.index(spec.categories.max(1) as usize) as u64,
                segmentation: Segmentation::Polygons(vec![poly]),
                area: Some(area as f64),
                iscrowd: false,
            });
            next_id += 1;
        }
    }
    GtDataset {
        images: (0..spec.images)
            .map(|i| ImageInfo {
                id: i as u64 + 1,
                height: spec.height,
                width: spec.width,
                file_name: None,
            })
            .collect(),
        annotations,
        categories: (1..=spec.categories.max(1))
            .map(|id| Category {
                id,
                name: format!("blob{id}"),
            })
            .collect(),
    }
}

/// Detections made by capping every ground-truth mask at `res × res`, with
/// seeded random scores.
pub fn resolution_capped_detections(gt: &GtDataset, res: usize, seed: u64) -> Vec<DetectionResult> {
    gt.annotations
        .iter()
        .filter(|a| !a.iscrowd)
        .map(|a| {
            let image = gt.image(a.image_id).expect("dataset is validated");
            let mask = a
                .segmentation
                .decode(image.height, image.width)
                .expect("synthetic segmentation decodes");
            let capped = cap_resolution_instance(&mask, res);
            let mut rng = RngStream::new(derive_seed(seed, &[a.id]));
            DetectionResult {
                image_id: a.image_id,
                category_id: a.category_id,
                segmentation: Segmentation::Rle(encode_rle(&capped)),
                score: 0.5 + 0.5 * rng.uniform(),
            }
        })
        .collect()
}

/// Settings for [`panoptic_map`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanopticMapSpec {
    pub height: usize,
    pub width: usize,
    /// Number of horizontal stuff bands.
    pub stuff_bands: usize,
    pub things: usize,
    pub stuff_categories: u64,
    pub thing_categories: u64,
    /// Width in pixels of the void seam left between stuff bands.
    pub void_seam: usize,
}

impl Default for PanopticMapSpec {
    fn default() -> Self {
        PanopticMapSpec {
            height: 256,
            width: 512,
            stuff_bands: 4,
            things: 8,
            stuff_categories: 4,
            thing_categories: 3,
            void_seam: 2,
        }
    }
}

/// A street-scene-like panoptic map: wavy horizontal stuff bands separated by
/// thin void seams, with blob-shaped things painted on top.
///
/// Stuff category ids start at 1; thing category ids follow them.
pub fn panoptic_map(spec: &PanopticMapSpec, seed: u64) -> PanopticLabelMap {
    let (h, w) = (spec.height, spec.width);
    let mut rng = RngStream::new(seed);
    let bands = spec.stuff_bands.max(1);

    // Band boundaries: base height plus a few low-frequency waves.
    let boundaries: Vec<Vec<f64>> = (1..bands)
        .map(|b| {
            let base = h as f64 * b as f64 / bands as f64;
            let waves: Vec<(f64, f64, f64)> = (1..=4)
                .map(|k| {
                    let amp = rng.uniform() * h as f64 * 0.04 / k as f64;
                    (k as f64, amp, TAU * rng.uniform())
                })
                .collect();
            (0..w)
                .map(|c| {
                    let t = TAU * c as f64 / w as f64;
                    base + waves
                        .iter()
                        .map(|&(k, a, p)| a * (k * t + p).sin())
                        .sum::<f64>()
                })
                .collect()
        })
        .collect();

    let mut ids = vec![VOID; h * w];
    let mut segments = Vec::new();
    let mut band_cats = Vec::with_capacity(bands);
    for b in 0..bands {
        band_cats.push(1 + (b as u64 % spec.stuff_categories.max(1)));
    }
    let seam = spec.void_seam as f64 / 2.0;
    for r in 0..h {
        let y = r as f64 + 0.5;
        for c in 0..w {
            let band = boundaries.iter().filter(|line| y > line[c]).count();
            let near_seam = boundaries.iter().any(|line| (y - line[c]).abs() < seam);
            if !near_seam {
                ids[r * w + c] = band as u32 + 1;
            }
        }
    }
    for (b, &category_id) in band_cats.iter().enumerate() {
        segments.push(SegmentInfo {
            id: b as u32 + 1,
            category_id,
            isthing: false,
        });
    }

    let short = h.min(w) as f64;
    for t in 0..spec.things {
        let id = 1000 + t as u32;
        let radius = rng.uniform_range(0.06 * short, 0.16 * short);
        let cx = rng.uniform_range(radius, w as f64 - radius);
        let cy = rng.uniform_range(radius, h as f64 - radius);
        let style = BlobStyle {
            vertices: 96,
            harmonics: 8,
            roughness: 0.15,
        };
        let mask = rasterize_polygons(&[blob_polygon(cx, cy, radius, style, &mut rng)], h, w);
        for (slot, &inside) in ids.iter_mut().zip(mask.pixels()) {
            if inside {
                *slot = id;
            }
        }
        segments.push(SegmentInfo {
            id,
            category_id: spec.stuff_categories.max(1)
                + 1
                + rng.index(spec.thing_categories.max(1) as usize) as u64,
            isthing: true,
        });
    }
    PanopticLabelMap::retain_present(h, w, ids, &segments).expect("generated map is consistent")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squares_are_centered() {
        let shapes = centered_squares(&[4, 10], 20);
        assert_eq!(shapes[0].mask.area(), 16);
        let b = shapes[1].mask.bounding_box().unwrap();
        assert_eq!((b.top, b.left, b.rows, b.cols), (5, 5, 10, 10));
    }

    #[test]
    fn blobs_are_deterministic_and_roughly_sized() {
        let a = blob_polygon(
            50.0,
            50.0,
            30.0,
            BlobStyle::default(),
            &mut RngStream::new(3),
        );
        let b = blob_polygon(
            50.0,
            50.0,
            30.0,
            BlobStyle::default(),
            &mut RngStream::new(3),
        );
        assert_eq!(a, b);
        let area = rasterize_polygon(&a, 100, 100).area() as f64;
        let disc = std::f64::consts::PI * 900.0;
        assert!(area > 0.5 * disc && area < 1.5 * disc, "{area}");
    }

    #[test]
    fn instance_dataset_spans_size_ranges() {
        let gt = instance_dataset(&InstanceDatasetSpec::default(), 1);
        gt.validate().unwrap();
        assert!(gt.annotations.len() >= 200);
        let areas: Vec<f64> = gt.annotations.iter().map(|a| a.area.unwrap()).collect();
        assert!(areas.iter().any(|&a| a <= 1024.0));
        assert!(areas.iter().any(|&a| a > 1024.0 && a <= 9216.0));
        assert!(areas.iter().any(|&a| a > 9216.0));
    }

    #[test]
    fn panoptic_map_has_things_stuff_and_void() {
        let map = panoptic_map(&PanopticMapSpec::default(), 5);
        assert!(map.segments().iter().any(|s| s.isthing));
        assert!(map.segments().iter().any(|s| !s.isthing));
        assert!(map.void_mask().area() > 0);
        assert_eq!(map, panoptic_map(&PanopticMapSpec::default(), 5));
    }
}
