use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{load_detections, Category, DetectionResult, GtDataset};
use crate::error::{Error, Result};
use crate::mask::{pixel_distance, BinaryMask, BoundingBox};
use crate::measures::{boundary_iou, DEFAULT_DILATION_RATIO};

/// Which pairwise measure drives matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IouMeasure {
    /// Mask IoU (Mask AP / Mask PQ).
    Mask,
    /// `min(mask IoU, boundary IoU)` (Boundary AP / Boundary PQ).
    Boundary,
}

impl fmt::Display for IouMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IouMeasure::Mask => "mask",
            IouMeasure::Boundary => "boundary",
        })
    }
}

impl FromStr for IouMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mask" => Ok(IouMeasure::Mask),
            "boundary" => Ok(IouMeasure::Boundary),
            _ => Err(Error::InvalidConfig(format!("unknown IoU measure `{s}`"))),
        }
    }
}

/// Object-area interval `(min_exclusive, max_inclusive]`; `None` is unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaRange {
    pub label: String,
    pub min_exclusive: Option<f64>,
    pub max_inclusive: Option<f64>,
}

impl AreaRange {
    pub fn new(label: &str, min_exclusive: Option<f64>, max_inclusive: Option<f64>) -> Self {
        AreaRange {
            label: label.to_string(),
            min_exclusive,
            max_inclusive,
        }
    }

    pub fn contains(&self, area: f64) -> bool {
        self.min_exclusive.is_none_or(|lo| area > lo)
            && self.max_inclusive.is_none_or(|hi| area <= hi)
    }

    /// `all`, then small ≤ 32², medium (32², 96²], large > 96².
    pub fn coco_defaults() -> Vec<AreaRange> {
        let small = 32.0 * 32.0;
        let medium = 96.0 * 96.0;
        vec![
            AreaRange::new("all", None, None),
            AreaRange::new("small", None, Some(small)),
            AreaRange::new("medium", Some(small), Some(medium)),
            AreaRange::new("large", Some(medium), None),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApConfig {
    pub iou_measure: IouMeasure,
    pub dilation_ratio: f64,
    pub iou_thresholds: Vec<f64>,
    pub area_ranges: Vec<AreaRange>,
    pub max_detections_per_image: usize,
    pub recall_points: usize,
}

/// `count` evenly spaced values from `start` to `stop`, computed as
/// `start + i·step` with the last value pinned to `stop`.
fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let step = (stop - start) / (count - 1) as f64;
    let mut values: Vec<f64> = (0..count).map(|i| start + i as f64 * step).collect();
    values[count - 1] = stop;
    values
}

impl Default for ApConfig {
    fn default() -> Self {
        ApConfig {
            iou_measure: IouMeasure::Mask,
            dilation_ratio: DEFAULT_DILATION_RATIO,
            iou_thresholds: linspace(0.5, 0.95, 10),
            area_ranges: AreaRange::coco_defaults(),
            max_detections_per_image: 100,
            recall_points: 101,
        }
    }
}

impl ApConfig {
    pub fn with_measure(iou_measure: IouMeasure) -> Self {
        ApConfig {
            iou_measure,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iou_thresholds.is_empty()
            || self.iou_thresholds.iter().any(|&t| !(t > 0.0 && t <= 1.0))
            || self.iou_thresholds.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidConfig(
                "IoU thresholds must be strictly increasing within (0, 1]".into(),
            ));
        }
        if !(self.dilation_ratio > 0.0 && self.dilation_ratio.is_finite()) {
            return Err(Error::InvalidConfig(
                "dilation ratio must be positive".into(),
            ));
        }
        if self.recall_points < 2 {
            return Err(Error::InvalidConfig(
                "need at least two recall points".into(),
            ));
        }
        if self.max_detections_per_image == 0 {
            return Err(Error::InvalidConfig(
                "max detections must be positive".into(),
            ));
        }
        if self.area_ranges.is_empty() {
            return Err(Error::InvalidConfig("no area ranges configured".into()));
        }
        Ok(())
    }

    pub fn recall_thresholds(&self) -> Vec<f64> {
        linspace(0.0, 1.0, self.recall_points)
    }

    fn area_index(&self, label: &str) -> Option<usize> {
        self.area_ranges.iter().position(|a| a.label == label)
    }

    fn threshold_index(&self, value: f64) -> Option<usize> {
        self.iou_thresholds
            .iter()
            .position(|&t| (t - value).abs() < 1e-9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtRecord {
    pub area: f64,
    pub iscrowd: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetRecord {
    pub score: f64,
    pub area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetLabel {
    TruePositive,
    FalsePositive,
    /// Matched a crowd or out-of-range ground truth, or is itself out of range.
    Ignored,
}

fn boxes_overlap(a: BoundingBox, b: BoundingBox) -> bool {
    a.top < b.top + b.rows
        && b.top < a.top + a.rows
        && a.left < b.left + b.cols
        && b.left < a.left + a.cols
}

/// IoU matrix indexed `[detection][ground truth]`.
///
/// Crowd ground truths use intersection over detection area for either
/// measure. `d` is the boundary distance in pixels for this frame.
pub fn pairwise_iou_matrix(
    gts: &[BinaryMask],
    crowd: &[bool],
    dets: &[BinaryMask],
    measure: IouMeasure,
    d: usize,
) -> Result<Vec<Vec<f64>>> {
    assert_eq!(gts.len(), crowd.len());
    let gt_boxes: Vec<Option<BoundingBox>> = gts.iter().map(BinaryMask::bounding_box).collect();
    dets.iter()
        .map(|det| {
            let det_box = det.bounding_box();
            let det_area = det.area();
            gts.iter()
                .zip(crowd)
                .zip(&gt_boxes)
                .map(|((gt, &is_crowd), gt_box)| {
                    det.ensure_same_frame(gt)?;
                    let (Some(db), Some(gb)) = (det_box, *gt_box) else {
                        // At most one side has pixels, so nothing overlaps.
                        return Ok(if det_area == 0 && gt_box.is_none() && !is_crowd {
                            1.0
                        } else {
                            0.0
                        });
                    };
                    if !boxes_overlap(db, gb) {
                        return Ok(0.0);
                    }
                    let bbox = db.union(gb);
                    let (dc, gc) = (det.crop(bbox), gt.crop(bbox));
                    let inter = dc.intersection_area(&gc);
                    if is_crowd {
                        return Ok(inter as f64 / det_area as f64);
                    }
                    let mask = inter as f64 / dc.union_area(&gc) as f64;
                    Ok(match measure {
                        IouMeasure::Mask => mask,
                        IouMeasure::Boundary => mask.min(boundary_iou(&gc, &dc, d)?),
                    })
                })
                .collect()
        })
        .collect()
}

/// Greedy COCO matching of one image/category at one IoU threshold.
///
/// Detections are visited by descending score (ties keep input order) and at
/// most `max_dets` are considered. Returns the visited detection indices and
/// their labels, plus the number of ground truths that count towards recall.
pub fn match_image_category(
    gts: &[GtRecord],
    dets: &[DetRecord],
    ious: &[Vec<f64>],
    threshold: f64,
    area_range: &AreaRange,
    max_dets: usize,
) -> (Vec<usize>, Vec<DetLabel>, usize) {
    let order = score_order(dets, max_dets);
    let gt_ignore: Vec<bool> = gts
        .iter()
        .map(|g| g.iscrowd || !area_range.contains(g.area))
        .collect();
    let labels = label_detections(gts, dets, ious, &order, &gt_ignore, threshold, area_range);
    let num_gt = gt_ignore.iter().filter(|&&ig| !ig).count();
    (order, labels, num_gt)
}

fn score_order(dets: &[DetRecord], max_dets: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));
    order.truncate(max_dets);
    order
}

fn label_detections(
    gts: &[GtRecord],
    dets: &[DetRecord],
    ious: &[Vec<f64>],
    order: &[usize],
    gt_ignore: &[bool],
    threshold: f64,
    area_range: &AreaRange,
) -> Vec<DetLabel> {
    // Ground truths that count towards recall are tried before ignored ones.
    let mut gt_order: Vec<usize> = (0..gts.len()).collect();
    gt_order.sort_by_key(|&g| gt_ignore[g]);
    let mut gt_taken = vec![false; gts.len()];

    order
        .iter()
        .map(|&di| {
            let mut best_iou = threshold.min(1.0 - 1e-10);
            let mut best: Option<usize> = None;
            for &g in &gt_order {
                if gt_taken[g] && !gts[g].iscrowd {
                    continue;
                }
                if best.is_some_and(|m| !gt_ignore[m]) && gt_ignore[g] {
                    break;
                }
                let iou = ious[di][g];
                if iou < best_iou {
                    continue;
                }
                best_iou = iou;
                best = Some(g);
            }
            match best {
                Some(g) => {
                    gt_taken[g] = true;
                    if gt_ignore[g] {
                        DetLabel::Ignored
                    } else {
                        DetLabel::TruePositive
                    }
                }
                None if !area_range.contains(dets[di].area) => DetLabel::Ignored,
                None => DetLabel::FalsePositive,
            }
        })
        .collect()
}

/// Matching results of one image, category and area range across all IoU
/// thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageCategoryEval {
    pub image_id: u64,
    pub category_id: u64,
    pub area_index: usize,
    /// Scores of the considered detections, descending.
    pub scores: Vec<f64>,
    /// `labels[t][k]` for threshold `t` and the `k`-th considered detection.
    pub labels: Vec<Vec<DetLabel>>,
    pub num_gt: usize,
}

pub fn evaluate_image_category(
    image_id: u64,
    category_id: u64,
    gts: &[GtRecord],
    dets: &[DetRecord],
    ious: &[Vec<f64>],
    cfg: &ApConfig,
) -> Vec<ImageCategoryEval> {
    let order = score_order(dets, cfg.max_detections_per_image);
    let scores: Vec<f64> = order.iter().map(|&i| dets[i].score).collect();
    cfg.area_ranges
        .iter()
        .enumerate()
        .map(|(area_index, range)| {
            let gt_ignore: Vec<bool> = gts
                .iter()
                .map(|g| g.iscrowd || !range.contains(g.area))
                .collect();
            let labels = cfg
                .iou_thresholds
                .iter()
                .map(|&t| label_detections(gts, dets, ious, &order, &gt_ignore, t, range))
                .collect();
            ImageCategoryEval {
                image_id,
                category_id,
                area_index,
                scores: scores.clone(),
                labels,
                num_gt: gt_ignore.iter().filter(|&&ig| !ig).count(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryAp {
    pub category_id: u64,
    pub name: String,
    pub ap: Option<f64>,
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
    pub ap_s: Option<f64>,
    pub ap_m: Option<f64>,
    pub ap_l: Option<f64>,
}

/// AP summary. `None` (serialized as `null`) marks values with no ground truth
/// in range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApReport {
    pub measure: IouMeasure,
    pub ap: Option<f64>,
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
    pub ap_s: Option<f64>,
    pub ap_m: Option<f64>,
    pub ap_l: Option<f64>,
    pub per_category: Vec<CategoryAp>,
    /// Boundary distance used for each image id.
    pub d_pixels: BTreeMap<u64, usize>,
}

/// Interpolated precision at each recall threshold for one category, area
/// range and IoU threshold; `None` when no ground truth counts.
fn precision_curve(
    evals: &[&ImageCategoryEval],
    t: usize,
    recall_thresholds: &[f64],
) -> Option<Vec<f64>> {
    let num_gt: usize = evals.iter().map(|e| e.num_gt).sum();
    if num_gt == 0 {
        return None;
    }
    let mut entries: Vec<(f64, DetLabel)> = evals
        .iter()
        .flat_map(|e| e.scores.iter().copied().zip(e.labels[t].iter().copied()))
        .collect();
    entries.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut recall = Vec::new();
    let mut precision = Vec::new();
    for &(_, label) in &entries {
        match label {
            DetLabel::TruePositive => tp += 1,
            DetLabel::FalsePositive => fp += 1,
            DetLabel::Ignored => {}
        }
        recall.push(tp as f64 / num_gt as f64);
        precision.push(if tp + fp > 0 {
            tp as f64 / (tp + fp) as f64
        } else {
            0.0
        });
    }
    for i in (1..precision.len()).rev() {
        if precision[i] > precision[i - 1] {
            precision[i - 1] = precision[i];
        }
    }

    let mut out = Vec::with_capacity(recall_thresholds.len());
    let mut k = 0;
    for &r in recall_thresholds {
        while k < recall.len() && recall[k] < r {
            k += 1;
        }
        out.push(if k < recall.len() { precision[k] } else { 0.0 });
    }
    Some(out)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// 101-point interpolated AP from completed matchings.
///
/// AP averages precision over recall points, IoU thresholds and categories
/// that have ground truth in range; AP50/AP75 fix the threshold and
/// AP_S/M/L fix the area range.
pub fn compute_ap(
    evals: &[ImageCategoryEval],
    categories: &[Category],
    cfg: &ApConfig,
) -> ApReport {
    let recall_thresholds = cfg.recall_thresholds();
    let mut grouped: BTreeMap<(u64, usize), Vec<&ImageCategoryEval>> = BTreeMap::new();
    for e in evals {
        grouped
            .entry((e.category_id, e.area_index))
            .or_default()
            .push(e);
    }
    for group in grouped.values_mut() {
        group.sort_by_key(|e| e.image_id);
    }

    let mut categories: Vec<&Category> = categories.iter().collect();
    categories.sort_by_key(|c| c.id);

    // curves[cat][area][t]
    let curves: Vec<Vec<Vec<Option<Vec<f64>>>>> = categories
        .iter()
        .map(|cat| {
            (0..cfg.area_ranges.len())
                .map(|a| {
                    let group = grouped.get(&(cat.id, a)).map(Vec::as_slice).unwrap_or(&[]);
                    (0..cfg.iou_thresholds.len())
                        .map(|t| precision_curve(group, t, &recall_thresholds))
                        .collect()
                })
                .collect()
        })
        .collect();

    let summarize = |cats: &[usize], area: Option<usize>, threshold: Option<f64>| -> Option<f64> {
        let a = area?;
        let ts: Vec<usize> = match threshold {
            Some(v) => vec![cfg.threshold_index(v)?],
            None => (0..cfg.iou_thresholds.len()).collect(),
        };
        mean(cats.iter().flat_map(|&k| {
            let curves = &curves[k][a];
            ts.iter()
                .filter_map(move |&t| curves[t].as_ref())
                .flat_map(|c| c.iter().copied())
        }))
    };

    let all = cfg.area_index("all");
    let small = cfg.area_index("small");
    let medium = cfg.area_index("medium");
    let large = cfg.area_index("large");
    let report_for = |cats: &[usize]| {
        (
            summarize(cats, all, None),
            summarize(cats, all, Some(0.5)),
            summarize(cats, all, Some(0.75)),
            summarize(cats, small, None),
            summarize(cats, medium, None),
            summarize(cats, large, None),
        )
    };

    let per_category = categories
        .iter()
        .enumerate()
        .map(|(k, cat)| {
            let (ap, ap50, ap75, ap_s, ap_m, ap_l) = report_for(&[k]);
            CategoryAp {
                category_id: cat.id,
                name: cat.name.clone(),
                ap,
                ap50,
                ap75,
                ap_s,
                ap_m,
                ap_l,
            }
        })
        .collect();
    let every: Vec<usize> = (0..categories.len()).collect();
    let (ap, ap50, ap75, ap_s, ap_m, ap_l) = report_for(&every);
    ApReport {
        measure: cfg.iou_measure,
        ap,
        ap50,
        ap75,
        ap_s,
        ap_m,
        ap_l,
        per_category,
        d_pixels: BTreeMap::new(),
    }
}

/// Full pipeline over an in-memory dataset: decode, IoU matrices, matching, AP.
pub fn evaluate_dataset(
    gt: &GtDataset,
    dets: &[DetectionResult],
    cfg: &ApConfig,
) -> Result<ApReport> {
    cfg.validate()?;
    gt.validate()?;
    let category_ids: HashSet<u64> = gt.categories.iter().map(|c| c.id).collect();
    let image_index: HashMap<u64, usize> = gt
        .images
        .iter()
        .enumerate()
        .map(|(i, im)| (im.id, i))
        .collect();

    let mut gts_by_image: Vec<Vec<usize>> = vec![Vec::new(); gt.images.len()];
    for (i, ann) in gt.annotations.iter().enumerate() {
        gts_by_image[image_index[&ann.image_id]].push(i);
    }
    let mut dets_by_image: Vec<Vec<usize>> = vec![Vec::new(); gt.images.len()];
    for (i, det) in dets.iter().enumerate() {
        let Some(&img) = image_index.get(&det.image_id) else {
            return Err(Error::ReferentialIntegrity(format!(
                "detection #{i} references unknown image {}",
                det.image_id
            )));
        };
        if !category_ids.contains(&det.category_id) {
            return Err(Error::ReferentialIntegrity(format!(
                "detection #{i} references unknown category {}",
                det.category_id
            )));
        }
        dets_by_image[img].push(i);
    }

    let per_image: Vec<Vec<ImageCategoryEval>> = gt
        .images
        .par_iter()
        .enumerate()
        .map(|(img, image)| {
            let (h, w) = (image.height, image.width);
            let d = pixel_distance(h, w, cfg.dilation_ratio);
            let mut cats: BTreeMap<u64, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
            for &a in &gts_by_image[img] {
                cats.entry(gt.annotations[a].category_id)
                    .or_default()
                    .0
                    .push(a);
            }
            for &k in &dets_by_image[img] {
                cats.entry(dets[k].category_id).or_default().1.push(k);
            }
            let mut out = Vec::new();
            for (cat, (gt_ids, det_ids)) in cats {
                let gt_masks = gt_ids
                    .iter()
                    .map(|&a| {
                        let ann = &gt.annotations[a];
                        ann.segmentation
                            .decode(h, w)
                            .map_err(|e| Error::MalformedAnnotation {
                                record: format!("annotation {}", ann.id),
                                reason: e.to_string(),
                            })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let det_masks = det_ids
                    .iter()
                    .map(|&k| {
                        dets[k]
                            .segmentation
                            .decode(h, w)
                            .map_err(|e| Error::MalformedAnnotation {
                                record: format!("detection #{k}"),
                                reason: e.to_string(),
                            })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let gt_records: Vec<GtRecord> = gt_ids
                    .iter()
                    .zip(&gt_masks)
                    .map(|(&a, m)| GtRecord {
                        area: gt.annotations[a].area.unwrap_or(m.area() as f64),
                        iscrowd: gt.annotations[a].iscrowd,
                    })
                    .collect();
                let det_records: Vec<DetRecord> = det_ids
                    .iter()
                    .zip(&det_masks)
                    .map(|(&k, m)| DetRecord {
                        score: dets[k].score,
                        area: m.area() as f64,
                    })
                    .collect();
                let crowd: Vec<bool> = gt_records.iter().map(|g| g.iscrowd).collect();
                let ious = pairwise_iou_matrix(&gt_masks, &crowd, &det_masks, cfg.iou_measure, d)?;
                out.extend(evaluate_image_category(
                    image.id,
                    cat,
                    &gt_records,
                    &det_records,
                    &ious,
                    cfg,
                ));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let evals: Vec<ImageCategoryEval> = per_image.into_iter().flatten().collect();
    let mut report = compute_ap(&evals, &gt.categories, cfg);
    report.d_pixels = gt
        .images
        .iter()
        .map(|im| {
            (
                im.id,
                pixel_distance(im.height, im.width, cfg.dilation_ratio),
            )
        })
        .collect();
    Ok(report)
}

/// Loads a ground-truth file and a detection file and evaluates them.
pub fn evaluate_detections(
    gt_path: impl AsRef<Path>,
    det_path: impl AsRef<Path>,
    cfg: &ApConfig,
) -> Result<ApReport> {
    let gt = GtDataset::load(gt_path)?;
    let dets = load_detections(det_path)?;
    evaluate_dataset(&gt, &dets, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{ImageInfo, InstanceAnnotation, Segmentation};
    use crate::mask::encode_rle;

    fn all_range() -> AreaRange {
        AreaRange::new("all", None, None)
    }

    #[test]
    fn default_thresholds() {
        let cfg = ApConfig::default();
        assert_eq!(cfg.iou_thresholds.len(), 10);
        assert_eq!(cfg.iou_thresholds[0], 0.5);
        assert_eq!(cfg.iou_thresholds[9], 0.95);
        assert!(cfg.threshold_index(0.75).is_some());
        let r = cfg.recall_thresholds();
        assert_eq!(r.len(), 101);
        assert_eq!(r[100], 1.0);
        cfg.validate().unwrap();
        let bad = ApConfig {
            iou_thresholds: vec![0.7, 0.5],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn area_ranges_partition() {
        let ranges = AreaRange::coco_defaults();
        for area in [1.0, 1024.0, 1025.0, 9216.0, 9217.0, 1e7] {
            let hits = ranges[1..].iter().filter(|r| r.contains(area)).count();
            assert_eq!(hits, 1, "area {area}");
            assert!(ranges[0].contains(area));
        }
        assert!(ranges[1].contains(1024.0));
        assert!(ranges[2].contains(9216.0));
        assert!(ranges[3].contains(9217.0));
    }

    #[test]
    fn iou_matrix_entries() {
        let a = BinaryMask::from_block(8, 8, 2, 0, 4, 4);
        let b = BinaryMask::from_block(8, 8, 2, 2, 4, 4);
        let far = BinaryMask::from_block(8, 8, 0, 6, 2, 2);
        let m = pairwise_iou_matrix(
            &[a.clone(), far.clone()],
            &[false, false],
            &[a.clone(), b.clone()],
            IouMeasure::Mask,
            1,
        )
        .unwrap();
        assert_eq!(m[0], vec![1.0, 0.0]);
        assert_eq!(m[1][0], 1.0 / 3.0);

        let crowd =
            pairwise_iou_matrix(&[a.clone()], &[true], &[b], IouMeasure::Boundary, 1).unwrap();
        assert_eq!(crowd[0][0], 0.5);
    }

    #[test]
    fn greedy_matching() {
        let gts = [GtRecord {
            area: 100.0,
            iscrowd: false,
        }];
        let dets = [
            DetRecord {
                score: 0.6,
                area: 100.0,
            },
            DetRecord {
                score: 0.9,
                area: 100.0,
            },
        ];
        let ious = vec![vec![0.9], vec![0.8]];
        let (order, labels, num_gt) =
            match_image_category(&gts, &dets, &ious, 0.5, &all_range(), 100);
        assert_eq!(order, vec![1, 0]);
        assert_eq!(
            labels,
            vec![DetLabel::TruePositive, DetLabel::FalsePositive]
        );
        assert_eq!(num_gt, 1);
    }

    #[test]
    fn crowd_match_is_ignored() {
        let gts = [
            GtRecord {
                area: 100.0,
                iscrowd: false,
            },
            GtRecord {
                area: 400.0,
                iscrowd: true,
            },
        ];
        let dets = [DetRecord {
            score: 0.7,
            area: 50.0,
        }];
        let ious = vec![vec![0.1, 0.9]];
        let (_, labels, num_gt) = match_image_category(&gts, &dets, &ious, 0.5, &all_range(), 100);
        assert_eq!(labels, vec![DetLabel::Ignored]);
        assert_eq!(num_gt, 1);
    }

    #[test]
    fn out_of_range_detection_is_ignored_when_unmatched() {
        let gts: [GtRecord; 0] = [];
        let dets = [DetRecord {
            score: 0.7,
            area: 5000.0,
        }];
        let small = AreaRange::new("small", None, Some(1024.0));
        let (_, labels, _) = match_image_category(&gts, &dets, &[vec![]], 0.5, &small, 100);
        assert_eq!(labels, vec![DetLabel::Ignored]);
        let (_, labels, _) = match_image_category(&gts, &dets, &[vec![]], 0.5, &all_range(), 100);
        assert_eq!(labels, vec![DetLabel::FalsePositive]);
    }

    fn toy_dataset() -> GtDataset {
        let m1 = BinaryMask::from_block(40, 40, 2, 2, 10, 10);
        let m2 = BinaryMask::from_block(40, 40, 20, 20, 15, 12);
        GtDataset {
            images: vec![ImageInfo {
                id: 7,
                height: 40,
                width: 40,
                file_name: None,
            }],
            annotations: vec![
                InstanceAnnotation {
                    id: 1,
                    image_id: 7,
                    category_id: 1,
                    segmentation: Segmentation::Rle(encode_rle(&m1)),
                    area: None,
                    iscrowd: false,
                },
                InstanceAnnotation {
                    id: 2,
                    image_id: 7,
                    category_id: 2,
                    segmentation: Segmentation::Rle(encode_rle(&m2)),
                    area: None,
                    iscrowd: false,
                },
            ],
            categories: vec![
                Category {
                    id: 1,
                    name: "a".into(),
                },
                Category {
                    id: 2,
                    name: "b".into(),
                },
                Category {
                    id: 3,
                    name: "unused".into(),
                },
            ],
        }
    }

    #[test]
    fn perfect_detections_score_one() {
        let gt = toy_dataset();
        for measure in [IouMeasure::Mask, IouMeasure::Boundary] {
            let report =
                evaluate_dataset(&gt, &gt.as_detections(), &ApConfig::with_measure(measure))
                    .unwrap();
            assert_eq!(report.ap, Some(1.0));
            assert_eq!(report.ap50, Some(1.0));
            assert_eq!(report.ap75, Some(1.0));
            assert_eq!(report.ap_s, Some(1.0));
            assert_eq!(report.ap_m, None);
            assert_eq!(report.ap_l, None);
            assert_eq!(report.per_category[2].ap, None);
            assert_eq!(report.d_pixels[&7], 1);
        }
    }

    #[test]
    fn no_detections_score_zero() {
        let report = evaluate_dataset(&toy_dataset(), &[], &ApConfig::default()).unwrap();
        assert_eq!(report.ap, Some(0.0));
    }

    #[test]
    fn unknown_references_are_errors() {
        let gt = toy_dataset();
        let mut dets = gt.as_detections();
        dets[0].image_id = 99;
        assert!(matches!(
            evaluate_dataset(&gt, &dets, &ApConfig::default()),
            Err(Error::ReferentialIntegrity(_))
        ));
        let mut dets = gt.as_detections();
        dets[0].category_id = 42;
        assert!(evaluate_dataset(&gt, &dets, &ApConfig::default()).is_err());
    }

    #[test]
    fn bad_detection_frame_names_record() {
        let gt = toy_dataset();
        let mut dets = gt.as_detections();
        dets[1].segmentation = Segmentation::Rle(encode_rle(&BinaryMask::new(5, 5)));
        let err = evaluate_dataset(&gt, &dets, &ApConfig::default()).unwrap_err();
        assert!(err.to_string().contains("detection #1"), "{err}");
    }
}
