use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::BinaryMask;

/// Id of pixels that belong to no segment.
pub const VOID: u32 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentInfo {
    pub id: u32,
    pub category_id: u64,
    #[serde(default, deserialize_with = "crate::detection::bool_or_int")]
    pub isthing: bool,
}

/// Per-pixel segment ids (row-major, 0 = void) plus segment metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanopticLabelMap {
    height: usize,
    width: usize,
    ids: Vec<u32>,
    segments: Vec<SegmentInfo>,
}

impl PanopticLabelMap {
    /// Validates that segment ids are unique and non-zero, every non-void
    /// pixel has a segment, and every segment owns at least one pixel.
    pub fn new(
        height: usize,
        width: usize,
        ids: Vec<u32>,
        segments: Vec<SegmentInfo>,
    ) -> Result<Self> {
        if height == 0 || width == 0 || ids.len() != height * width {
            return Err(Error::MalformedMap(format!(
                "{} ids for a {height}x{width} frame",
                ids.len()
            )));
        }
        let mut seen = HashSet::new();
        for seg in &segments {
            if seg.id == VOID {
                return Err(Error::MalformedMap(
                    "segment id 0 is reserved for void".into(),
                ));
            }
            if !seen.insert(seg.id) {
                return Err(Error::MalformedMap(format!(
                    "duplicate segment id {}",
                    seg.id
                )));
            }
        }
        let areas = pixel_counts(&ids);
        if let Some(orphan) = areas.keys().find(|&&id| id != VOID && !seen.contains(&id)) {
            return Err(Error::MalformedMap(format!(
                "pixels carry id {orphan} which has no segment entry"
            )));
        }
        if let Some(seg) = segments.iter().find(|s| !areas.contains_key(&s.id)) {
            return Err(Error::MalformedMap(format!(
                "segment {} has no pixels",
                seg.id
            )));
        }
        Ok(PanopticLabelMap {
            height,
            width,
            ids,
            segments,
        })
    }

    /// Builds a map from ids, keeping only segments that still own pixels.
    pub(crate) fn retain_present(
        height: usize,
        width: usize,
        ids: Vec<u32>,
        segments: &[SegmentInfo],
    ) -> Result<Self> {
        let areas = pixel_counts(&ids);
        let kept = segments
            .iter()
            .filter(|s| areas.contains_key(&s.id))
            .copied()
            .collect();
        Self::new(height, width, ids, kept)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn frame(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn id_at(&self, row: usize, col: usize) -> u32 {
        self.ids[row * self.width + col]
    }

    pub fn segments(&self) -> &[SegmentInfo] {
        &self.segments
    }

    pub fn segment(&self, id: u32) -> Option<&SegmentInfo> {
        self.segments.iter().find(|s| s.id == id)
    }

    /// Pixel count per id, void included.
    pub fn areas(&self) -> BTreeMap<u32, usize> {
        pixel_counts(&self.ids)
    }

    pub fn segment_mask(&self, id: u32) -> BinaryMask {
        let pixels = self.ids.iter().map(|&v| v == id).collect();
        BinaryMask::from_pixels(self.height, self.width, pixels)
            .expect("label map dimensions are validated")
    }

    pub fn void_mask(&self) -> BinaryMask {
        self.segment_mask(VOID)
    }
}

fn pixel_counts(ids: &[u32]) -> BTreeMap<u32, usize> {
    let mut counts = BTreeMap::new();
    for &id in ids {
        *counts.entry(id).or_insert(0) += 1;
    }
    counts
}
