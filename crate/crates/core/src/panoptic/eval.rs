use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::labels::{PanopticLabelMap, VOID};
use crate::detection::IouMeasure;
use crate::error::{Error, Result};
use crate::measures::{boundary_iou_excluding, DEFAULT_DILATION_RATIO};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PqConfig {
    pub measure: IouMeasure,
    pub dilation_ratio: f64,
}

impl Default for PqConfig {
    fn default() -> Self {
        PqConfig {
            measure: IouMeasure::Mask,
            dilation_ratio: DEFAULT_DILATION_RATIO,
        }
    }
}

impl PqConfig {
    pub fn with_measure(measure: IouMeasure) -> Self {
        PqConfig {
            measure,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dilation_ratio > 0.0 && self.dilation_ratio.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(
                "dilation ratio must be positive".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentMatch {
    pub gt_id: u32,
    pub pred_id: u32,
    pub category_id: u64,
    pub iou: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnmatchedSegment {
    pub id: u32,
    pub category_id: u64,
    pub isthing: bool,
}

/// Result of matching one image. Unmatched predictions lying mostly on void
/// are left out of `unmatched_pred`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SegmentMatching {
    pub matches: Vec<SegmentMatch>,
    pub unmatched_gt: Vec<UnmatchedSegment>,
    pub unmatched_pred: Vec<UnmatchedSegment>,
    /// `isthing` flag per category seen in this image.
    pub isthing: BTreeMap<u64, bool>,
}

/// Matches ground-truth and predicted segments of the same category whose IoU
/// under `measure` exceeds 0.5. Void pixels of the ground truth are excluded
/// from every IoU.
pub fn match_segments(
    gt: &PanopticLabelMap,
    pred: &PanopticLabelMap,
    measure: IouMeasure,
    d: usize,
) -> Result<SegmentMatching> {
    if gt.frame() != pred.frame() {
        return Err(Error::FrameMismatch {
            expected: gt.frame(),
            found: pred.frame(),
        });
    }
    let mut overlaps: HashMap<(u32, u32), usize> = HashMap::new();
    for (&g, &p) in gt.ids().iter().zip(pred.ids()) {
        *overlaps.entry((g, p)).or_insert(0) += 1;
    }
    let gt_areas = gt.areas();
    let pred_areas = pred.areas();
    let pred_on_void = |p: u32| overlaps.get(&(VOID, p)).copied().unwrap_or(0);

    let mut candidates: Vec<(u32, u32)> = overlaps
        .keys()
        .filter(|&&(g, p)| g != VOID && p != VOID)
        .copied()
        .collect();
    candidates.sort_unstable();

    let void = (measure == IouMeasure::Boundary).then(|| gt.void_mask());
    let mut out = SegmentMatching::default();
    let mut gt_matched = HashMap::new();
    let mut pred_matched = HashMap::new();
    for (g, p) in candidates {
        let (gs, ps) = (
            gt.segment(g).expect("validated"),
            pred.segment(p).expect("validated"),
        );
        if gs.category_id != ps.category_id {
            continue;
        }
        let inter = overlaps[&(g, p)];
        let union = gt_areas[&g] + pred_areas[&p] - inter - pred_on_void(p);
        let mask = inter as f64 / union as f64;
        if mask <= 0.5 {
            continue;
        }
        let iou = match &void {
            None => mask,
            Some(void) => {
                let b = boundary_iou_excluding(&gt.segment_mask(g), &pred.segment_mask(p), void, d);
                mask.min(b)
            }
        };
        if iou <= 0.5 {
            continue;
        }
        // Mask IoU above 0.5 makes each segment match at most once.
        debug_assert!(!gt_matched.contains_key(&g) && !pred_matched.contains_key(&p));
        gt_matched.insert(g, p);
        pred_matched.insert(p, g);
        out.matches.push(SegmentMatch {
            gt_id: g,
            pred_id: p,
            category_id: gs.category_id,
            iou,
        });
    }

    for s in gt.segments() {
        out.isthing.entry(s.category_id).or_insert(s.isthing);
        if !gt_matched.contains_key(&s.id) {
            out.unmatched_gt.push(UnmatchedSegment {
                id: s.id,
                category_id: s.category_id,
                isthing: s.isthing,
            });
        }
    }
    for s in pred.segments() {
        out.isthing.entry(s.category_id).or_insert(s.isthing);
        if pred_matched.contains_key(&s.id) {
            continue;
        }
        if 2 * pred_on_void(s.id) > pred_areas[&s.id] {
            continue;
        }
        out.unmatched_pred.push(UnmatchedSegment {
            id: s.id,
            category_id: s.category_id,
            isthing: s.isthing,
        });
    }
    out.unmatched_gt.sort_by_key(|s| s.id);
    out.unmatched_pred.sort_by_key(|s| s.id);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PqStats {
    pub pq: f64,
    pub sq: f64,
    pub rq: f64,
    /// Number of categories averaged.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryPq {
    pub category_id: u64,
    pub isthing: bool,
    pub pq: f64,
    pub sq: f64,
    pub rq: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PqReport {
    pub measure: IouMeasure,
    pub overall: PqStats,
    pub things: PqStats,
    pub stuff: PqStats,
    pub per_category: Vec<CategoryPq>,
    /// Boundary distance used for each image id.
    pub d_pixels: BTreeMap<u64, usize>,
}

#[derive(Default)]
struct Counts {
    tp: usize,
    fp: usize,
    fn_: usize,
    iou_sum: f64,
    isthing: bool,
}

fn average(cats: &[&CategoryPq]) -> PqStats {
    if cats.is_empty() {
        return PqStats {
            pq: 0.0,
            sq: 0.0,
            rq: 0.0,
            n: 0,
        };
    }
    let n = cats.len() as f64;
    PqStats {
        pq: cats.iter().map(|c| c.pq).sum::<f64>() / n,
        sq: cats.iter().map(|c| c.sq).sum::<f64>() / n,
        rq: cats.iter().map(|c| c.rq).sum::<f64>() / n,
        n: cats.len(),
    }
}

/// Aggregates per-image matchings into per-category and averaged PQ/SQ/RQ.
/// SQ of a category without true positives is reported as 0.
pub fn compute_pq(matchings: &[SegmentMatching], measure: IouMeasure) -> PqReport {
    let mut counts: BTreeMap<u64, Counts> = BTreeMap::new();
    for m in matchings {
        for (&cat, &isthing) in &m.isthing {
            counts.entry(cat).or_insert_with(|| Counts {
                isthing,
                ..Default::default()
            });
        }
        for hit in &m.matches {
            let c = counts.entry(hit.category_id).or_default();
            c.tp += 1;
            c.iou_sum += hit.iou;
        }
        for s in &m.unmatched_gt {
            counts.entry(s.category_id).or_default().fn_ += 1;
        }
        for s in &m.unmatched_pred {
            counts.entry(s.category_id).or_default().fp += 1;
        }
    }

    let per_category: Vec<CategoryPq> = counts
        .into_iter()
        .filter(|(_, c)| c.tp + c.fp + c.fn_ > 0)
        .map(|(category_id, c)| {
            let sq = if c.tp > 0 {
                c.iou_sum / c.tp as f64
            } else {
                0.0
            };
            let rq = c.tp as f64 / (c.tp as f64 + 0.5 * c.fp as f64 + 0.5 * c.fn_ as f64);
            CategoryPq {
                category_id,
                isthing: c.isthing,
                pq: sq * rq,
                sq,
                rq,
                tp: c.tp,
                fp: c.fp,
                fn_: c.fn_,
            }
        })
        .collect();

    let all: Vec<&CategoryPq> = per_category.iter().collect();
    let things: Vec<&CategoryPq> = per_category.iter().filter(|c| c.isthing).collect();
    let stuff: Vec<&CategoryPq> = per_category.iter().filter(|c| !c.isthing).collect();
    PqReport {
        measure,
        overall: average(&all),
        things: average(&things),
        stuff: average(&stuff),
        per_category,
        d_pixels: BTreeMap::new(),
    }
}
