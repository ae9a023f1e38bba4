//! Pairwise mask-consistency measures.
//!
//! Every measure takes a ground-truth mask `gt` and a prediction `pred` on the
//! same frame and returns a ratio in `[0, 1]`. Two empty masks are perfectly
//! consistent (1.0); an empty mask against a non-empty one scores 0.0.
//!
//! Pixels outside the joint bounding box of both masks never influence any
//! measure, so each pair is cropped to that box before the morphology runs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{band_region, boundary_region, dilate, pixel_distance, BinaryMask, BoundingBox};

pub const DEFAULT_DILATION_RATIO: f64 = 0.02;
/// Preset for high-resolution street scenes.
pub const CITYSCAPES_DILATION_RATIO: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub dilation_ratio: f64,
    pub mf_ratios: Vec<f64>,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            dilation_ratio: DEFAULT_DILATION_RATIO,
            mf_ratios: default_mf_ratios(),
        }
    }
}

/// 0.1% to 2.1% of the diagonal in 0.4% steps.
pub fn default_mf_ratios() -> Vec<f64> {
    (0..6).map(|i| (1.0 + 4.0 * i as f64) / 1000.0).collect()
}

impl MeasureConfig {
    pub fn with_dilation_ratio(dilation_ratio: f64) -> Self {
        MeasureConfig {
            dilation_ratio,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dilation_ratio > 0.0 && self.dilation_ratio.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "dilation ratio must be positive, got {}",
                self.dilation_ratio
            )));
        }
        if self.mf_ratios.is_empty() {
            return Err(Error::InvalidConfig(
                "mF-measure ratio list is empty".into(),
            ));
        }
        if self.mf_ratios.iter().any(|&r| !(r > 0.0 && r.is_finite()))
            || self.mf_ratios.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidConfig(
                "mF-measure ratios must be positive and strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// All measures for one mask pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub pixel_accuracy: f64,
    pub mask_iou: f64,
    pub trimap_iou: f64,
    pub f_measure: f64,
    pub mf_measure: f64,
    pub boundary_iou: f64,
    pub combined_iou: f64,
    pub d_pixels: usize,
}

/// Named measure, used where measures are selected at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    PixelAccuracy,
    MaskIou,
    TrimapIou,
    FMeasure,
    MfMeasure,
    BoundaryIou,
    CombinedIou,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 7] = [
        MeasureKind::PixelAccuracy,
        MeasureKind::MaskIou,
        MeasureKind::TrimapIou,
        MeasureKind::FMeasure,
        MeasureKind::MfMeasure,
        MeasureKind::BoundaryIou,
        MeasureKind::CombinedIou,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::PixelAccuracy => "pixel_accuracy",
            MeasureKind::MaskIou => "mask_iou",
            MeasureKind::TrimapIou => "trimap_iou",
            MeasureKind::FMeasure => "f_measure",
            MeasureKind::MfMeasure => "mf_measure",
            MeasureKind::BoundaryIou => "boundary_iou",
            MeasureKind::CombinedIou => "combined_iou",
        }
    }

    /// Evaluates this measure with `d` resolved from `cfg` on the pair's frame.
    pub fn evaluate(self, gt: &BinaryMask, pred: &BinaryMask, cfg: &MeasureConfig) -> Result<f64> {
        let (h, w) = gt.frame();
        let d = pixel_distance(h, w, cfg.dilation_ratio);
        match self {
            MeasureKind::PixelAccuracy => pixel_accuracy(gt, pred),
            MeasureKind::MaskIou => mask_iou(gt, pred),
            MeasureKind::TrimapIou => trimap_iou(gt, pred, d),
            MeasureKind::FMeasure => f_measure(gt, pred, d),
            MeasureKind::MfMeasure => mf_measure(gt, pred, cfg),
            MeasureKind::BoundaryIou => boundary_iou(gt, pred, d),
            MeasureKind::CombinedIou => combined_iou(gt, pred, d),
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MeasureKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown measure `{s}`")))
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    num as f64 / den as f64
}

/// Both masks cropped to their joint bounding box; `None` when both are empty.
fn crop_pair(gt: &BinaryMask, pred: &BinaryMask) -> Option<(BinaryMask, BinaryMask)> {
    let bbox: BoundingBox = match (gt.bounding_box(), pred.bounding_box()) {
        (Some(a), Some(b)) => a.union(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => return None,
    };
    Some((gt.crop(bbox), pred.crop(bbox)))
}

/// `|G ∩ P| / |G|`.
pub fn pixel_accuracy(gt: &BinaryMask, pred: &BinaryMask) -> Result<f64> {
    gt.ensure_same_frame(pred)?;
    let g = gt.area();
    if g == 0 {
        return Ok(if pred.is_empty() { 1.0 } else { 0.0 });
    }
    Ok(ratio(gt.intersection_area(pred), g))
}

/// `|G ∩ P| / |G ∪ P|`.
pub fn mask_iou(gt: &BinaryMask, pred: &BinaryMask) -> Result<f64> {
    gt.ensure_same_frame(pred)?;
    Ok(mask_iou_unchecked(gt, pred))
}

fn mask_iou_unchecked(gt: &BinaryMask, pred: &BinaryMask) -> f64 {
    let union = gt.union_area(pred);
    if union == 0 {
        return 1.0;
    }
    ratio(gt.intersection_area(pred), union)
}

/// IoU inside the two-sided band of half-width `d` around the ground-truth
/// outline: `|B ∩ G ∩ P| / |B ∩ (G ∪ P)|` with `B = band_region(G, d)`.
///
/// Not symmetric: only the ground-truth band is evaluated.
pub fn trimap_iou(gt: &BinaryMask, pred: &BinaryMask, d: usize) -> Result<f64> {
    gt.ensure_same_frame(pred)?;
    if gt.is_empty() {
        return Ok(if pred.is_empty() { 1.0 } else { 0.0 });
    }
    let Some((g, p)) = crop_pair(gt, pred) else {
        return Ok(1.0);
    };
    let band = band_region(&g, d);
    let den = band.intersection_area(&g.or(&p));
    if den == 0 {
        return Ok(1.0);
    }
    Ok(ratio(band.and(&g).intersection_area(&p), den))
}

/// Approximate boundary F-measure with duplicate matches: contour pixels of
/// one mask count as matched when they lie within Chebyshev distance `d` of
/// the other mask's contour.
pub fn f_measure(gt: &BinaryMask, pred: &BinaryMask, d: usize) -> Result<f64> {
    gt.ensure_same_frame(pred)?;
    let Some((g, p)) = crop_pair(gt, pred) else {
        return Ok(1.0);
    };
    if g.is_empty() || p.is_empty() {
        return Ok(0.0);
    }
    Ok(f_measure_cropped(&g, &p, d))
}

fn f_measure_cropped(g: &BinaryMask, p: &BinaryMask, d: usize) -> f64 {
    f_measure_from_contours(&boundary_region(g, 1), &boundary_region(p, 1), d)
}

fn f_measure_from_contours(g_contour: &BinaryMask, p_contour: &BinaryMask, d: usize) -> f64 {
    let precision = ratio(
        p_contour.intersection_area(&dilate(g_contour, d)),
        p_contour.area(),
    );
    let recall = ratio(
        g_contour.intersection_area(&dilate(p_contour, d)),
        g_contour.area(),
    );
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Mean of [`f_measure`] over the distance ladder `cfg.mf_ratios`.
pub fn mf_measure(gt: &BinaryMask, pred: &BinaryMask, cfg: &MeasureConfig) -> Result<f64> {
    gt.ensure_same_frame(pred)?;
    let (h, w) = gt.frame();
    let Some((g, p)) = crop_pair(gt, pred) else {
        return Ok(1.0);
    };
    if g.is_empty() || p.is_empty() || cfg.mf_ratios.is_empty() {
        return Ok(0.0);
    }
    let (gc, pc) = (boundary_region(&g, 1), boundary_region(&p, 1));
    let sum: f64 = cfg
        .mf_ratios
        .iter()
        .map(|&r| f_measure_from_contours(&gc, &pc, pixel_distance(h, w, r)))
        .sum();
    Ok(sum / cfg.mf_ratios.len() as f64)
}

/// IoU of the mask pixels lying within distance `d` of each mask's own
/// contour: `|(G_d ∩ G) ∩ (P_d ∩ P)| / |(G_d ∩ G) ∪ (P_d ∩ P)|`.
pub fn boundary_iou(gt: &BinaryMask, pred: &BinaryMask, d: usize) -> Result<f64> {
    gt.ensure_same_frame(pred)?;
    let Some((g, p)) = crop_pair(gt, pred) else {
        return Ok(1.0);
    };
    if g.is_empty() || p.is_empty() {
        return Ok(0.0);
    }
    let gb = boundary_region(&g, d);
    let pb = boundary_region(&p, d);
    Ok(ratio(gb.intersection_area(&pb), gb.union_area(&pb)))
}

/// `min(mask IoU, boundary IoU)`, the measure behind Boundary AP and Boundary PQ.
pub fn combined_iou(gt: &BinaryMask, pred: &BinaryMask, d: usize) -> Result<f64> {
    Ok(mask_iou(gt, pred)?.min(boundary_iou(gt, pred, d)?))
}

/// Boundary IoU with `void` pixels removed from both boundary regions.
pub(crate) fn boundary_iou_excluding(
    gt: &BinaryMask,
    pred: &BinaryMask,
    void: &BinaryMask,
    d: usize,
) -> f64 {
    let bbox = match (gt.bounding_box(), pred.bounding_box()) {
        (Some(a), Some(b)) => a.union(b),
        (None, None) => return 1.0,
        _ => return 0.0,
    };
    let (g, p, v) = (gt.crop(bbox), pred.crop(bbox), void.crop(bbox));
    let gb = boundary_region(&g, d).and_not(&v);
    let pb = boundary_region(&p, d).and_not(&v);
    let union = gb.union_area(&pb);
    if union == 0 {
        return 1.0;
    }
    ratio(gb.intersection_area(&pb), union)
}

pub fn measure_all(
    gt: &BinaryMask,
    pred: &BinaryMask,
    cfg: &MeasureConfig,
) -> Result<MeasureReport> {
    gt.ensure_same_frame(pred)?;
    cfg.validate()?;
    let (h, w) = gt.frame();
    let d = pixel_distance(h, w, cfg.dilation_ratio);
    let mask_iou = mask_iou_unchecked(gt, pred);
    let boundary_iou = boundary_iou(gt, pred, d)?;
    Ok(MeasureReport {
        pixel_accuracy: pixel_accuracy(gt, pred)?,
        mask_iou,
        trimap_iou: trimap_iou(gt, pred, d)?,
        f_measure: f_measure(gt, pred, d)?,
        mf_measure: mf_measure(gt, pred, cfg)?,
        boundary_iou,
        combined_iou: mask_iou.min(boundary_iou),
        d_pixels: d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::erode;

    fn block(h: usize, w: usize, top: usize, left: usize, side: usize) -> BinaryMask {
        BinaryMask::from_block(h, w, top, left, side, side)
    }

    #[test]
    fn frame_mismatch_is_an_error() {
        let a = BinaryMask::new(4, 4);
        let b = BinaryMask::new(4, 5);
        assert!(matches!(mask_iou(&a, &b), Err(Error::FrameMismatch { .. })));
        assert!(boundary_iou(&a, &b, 1).is_err());
        assert!(pixel_accuracy(&a, &b).is_err());
        assert!(measure_all(&a, &b, &MeasureConfig::default()).is_err());
    }

    #[test]
    fn pixel_accuracy_cases() {
        let g = block(8, 8, 2, 2, 4);
        assert_eq!(pixel_accuracy(&g, &g).unwrap(), 1.0);
        let mut larger = g.clone();
        for c in 0..8 {
            larger.set(0, c, true);
        }
        larger.set(7, 0, true);
        larger.set(7, 1, true);
        assert_eq!(larger.area(), 26);
        assert_eq!(pixel_accuracy(&g, &larger).unwrap(), 1.0);
        let half = BinaryMask::from_block(8, 8, 2, 2, 2, 4);
        assert_eq!(pixel_accuracy(&g, &half).unwrap(), 0.5);
        let empty = BinaryMask::new(8, 8);
        assert_eq!(pixel_accuracy(&empty, &empty).unwrap(), 1.0);
        assert_eq!(pixel_accuracy(&empty, &g).unwrap(), 0.0);
    }

    #[test]
    fn mask_iou_cases() {
        let g = block(8, 8, 2, 0, 4);
        assert_eq!(mask_iou(&g, &g).unwrap(), 1.0);
        assert_eq!(mask_iou(&g, &block(8, 8, 2, 4, 4)).unwrap(), 0.0);
        let shifted = block(8, 8, 2, 2, 4);
        assert_eq!(mask_iou(&g, &shifted).unwrap(), 8.0 / 24.0);
    }

    #[test]
    fn trimap_plateau_and_zero() {
        let d = 2;
        let g = block(40, 40, 10, 10, 20);
        assert_eq!(trimap_iou(&g, &g, d).unwrap(), 1.0);
        let band = band_region(&g, d);
        let p = dilate(&g, 3 * d);
        let expected = band.intersection_area(&g) as f64 / band.area() as f64;
        assert_eq!(trimap_iou(&g, &p, d).unwrap(), expected);
        assert!(expected > 0.0);
        let eroded = erode(&g, 10);
        assert!(eroded.is_empty());
        assert_eq!(trimap_iou(&g, &eroded, d).unwrap(), 0.0);
    }

    #[test]
    fn f_measure_steps() {
        let d = 4;
        let g = block(80, 80, 20, 20, 40);
        assert_eq!(f_measure(&g, &g, d).unwrap(), 1.0);
        assert_eq!(f_measure(&g, &dilate(&g, d - 1), d).unwrap(), 1.0);
        assert!(f_measure(&g, &dilate(&g, 2 * d + 2), d).unwrap() <= 0.1);
    }

    #[test]
    fn boundary_iou_large_d_equals_mask_iou() {
        let g = block(30, 30, 3, 4, 12);
        let p = block(30, 30, 6, 9, 15);
        assert_eq!(boundary_iou(&g, &p, 60).unwrap(), mask_iou(&g, &p).unwrap());
    }

    #[test]
    fn empty_pairs() {
        let e = BinaryMask::new(10, 10);
        let g = block(10, 10, 2, 2, 5);
        let cfg = MeasureConfig::default();
        for m in MeasureKind::ALL {
            assert_eq!(m.evaluate(&e, &e, &cfg).unwrap(), 1.0, "{m}");
            assert_eq!(m.evaluate(&g, &e, &cfg).unwrap(), 0.0, "{m}");
            assert_eq!(m.evaluate(&e, &g, &cfg).unwrap(), 0.0, "{m}");
        }
    }

    #[test]
    fn measure_all_identical_and_empty() {
        let g = block(50, 60, 10, 12, 20);
        let cfg = MeasureConfig::default();
        let same = measure_all(&g, &g, &cfg).unwrap();
        for v in [
            same.pixel_accuracy,
            same.mask_iou,
            same.trimap_iou,
            same.f_measure,
            same.mf_measure,
            same.boundary_iou,
            same.combined_iou,
        ] {
            assert_eq!(v, 1.0);
        }
        assert_eq!(same.d_pixels, pixel_distance(50, 60, 0.02));

        let none = measure_all(&g, &BinaryMask::new(50, 60), &cfg).unwrap();
        for v in [
            none.pixel_accuracy,
            none.mask_iou,
            none.trimap_iou,
            none.f_measure,
            none.mf_measure,
            none.boundary_iou,
            none.combined_iou,
        ] {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn config_validation() {
        assert!(MeasureConfig::default().validate().is_ok());
        assert_eq!(default_mf_ratios().len(), 6);
        assert!((default_mf_ratios()[5] - 0.021).abs() < 1e-15);
        assert!(MeasureConfig::with_dilation_ratio(0.0).validate().is_err());
        let bad = MeasureConfig {
            mf_ratios: vec![0.01, 0.01],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn measure_kind_names_roundtrip() {
        for m in MeasureKind::ALL {
            assert_eq!(m.name().parse::<MeasureKind>().unwrap(), m);
        }
        assert!("nope".parse::<MeasureKind>().is_err());
    }

    #[test]
    fn report_serializes_flat() {
        let g = block(20, 20, 4, 4, 8);
        let report = measure_all(&g, &g, &MeasureConfig::default()).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        let obj = json.as_object().unwrap();
        assert_eq!(obj.len(), 8);
        assert_eq!(obj["d_pixels"], 1);
    }
}
