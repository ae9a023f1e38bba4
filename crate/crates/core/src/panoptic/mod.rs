//! Panoptic quality with a pluggable IoU: plain mask IoU gives Mask PQ,
//! `min(mask IoU, boundary IoU)` gives Boundary PQ.

mod eval;
mod format;
mod labels;

pub use eval::{
    compute_pq, match_segments, CategoryPq, PqConfig, PqReport, PqStats, SegmentMatch,
    SegmentMatching, UnmatchedSegment,
};
pub use format::{
    evaluate_panoptic, evaluate_panoptic_files, write_png_ids, PanopticAnnotation, PanopticDataset,
};
pub use labels::{PanopticLabelMap, SegmentInfo, VOID};
