//! COCO-protocol instance segmentation evaluation with a pluggable IoU
//! measure: plain mask IoU gives Mask AP, `min(mask IoU, boundary IoU)` gives
//! Boundary AP.

mod eval;

pub use eval::{
    compute_ap, evaluate_dataset, evaluate_detections, evaluate_image_category,
    match_image_category, pairwise_iou_matrix, ApConfig, ApReport, AreaRange, CategoryAp, DetLabel,
    DetRecord, GtRecord, ImageCategoryEval, IouMeasure,
};

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::mask::{decode_rle, rasterize_polygons, BinaryMask, Polygon, RleMask};

/// Accepts `true`/`false` as well as the integer `0`/`1` COCO files use.
pub(crate) fn bool_or_int<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<bool, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Flag {
        Bool(bool),
        Int(i64),
    }
    Ok(match Flag::deserialize(de)? {
        Flag::Bool(b) => b,
        Flag::Int(i) => i != 0,
    })
}

/// Instance segmentation: uncompressed RLE or a list of polygons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Segmentation {
    Rle(RleMask),
    Polygons(Vec<Polygon>),
}

impl Segmentation {
    /// Decodes onto a `height × width` frame. RLE frames must match it.
    pub fn decode(&self, height: usize, width: usize) -> Result<BinaryMask> {
        match self {
            Segmentation::Rle(rle) => {
                if (rle.height, rle.width) != (height, width) {
                    return Err(Error::FrameMismatch {
                        expected: (height, width),
                        found: (rle.height, rle.width),
                    });
                }
                decode_rle(rle)
            }
            Segmentation::Polygons(polys) => Ok(rasterize_polygons(polys, height, width)),
        }
    }

    pub fn polygons(&self) -> Option<&[Polygon]> {
        match self {
            Segmentation::Polygons(p) => Some(p),
            Segmentation::Rle(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageInfo {
    pub id: u64,
    pub height: usize,
    pub width: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub id: u64,
    #[serde(default)]
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u64,
    pub segmentation: Segmentation,
    /// Stored area; when absent the decoded mask area is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<f64>,
    #[serde(default, deserialize_with = "bool_or_int")]
    pub iscrowd: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub image_id: u64,
    pub category_id: u64,
    pub segmentation: Segmentation,
    pub score: f64,
}

/// Ground-truth file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtDataset {
    pub images: Vec<ImageInfo>,
    pub annotations: Vec<InstanceAnnotation>,
    pub categories: Vec<Category>,
}

impl GtDataset {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dataset: GtDataset = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        dataset.validate()?;
        Ok(dataset)
    }

    pub fn image(&self, id: u64) -> Option<&ImageInfo> {
        self.images.iter().find(|i| i.id == id)
    }

    /// Checks id uniqueness, references to images and categories, and areas.
    pub fn validate(&self) -> Result<()> {
        let mut image_ids = HashSet::new();
        for image in &self.images {
            if !image_ids.insert(image.id) {
                return Err(Error::ReferentialIntegrity(format!(
                    "duplicate image id {}",
                    image.id
                )));
            }
            if image.height == 0 || image.width == 0 {
                return Err(Error::MalformedAnnotation {
                    record: format!("image {}", image.id),
                    reason: "zero-sized frame".into(),
                });
            }
        }
        let category_ids: HashSet<u64> = self.categories.iter().map(|c| c.id).collect();
        let mut ann_ids = HashSet::new();
        for ann in &self.annotations {
            if !ann_ids.insert(ann.id) {
                return Err(Error::ReferentialIntegrity(format!(
                    "duplicate annotation id {}",
                    ann.id
                )));
            }
            if !image_ids.contains(&ann.image_id) {
                return Err(Error::ReferentialIntegrity(format!(
                    "annotation {} references unknown image {}",
                    ann.id, ann.image_id
                )));
            }
            if !category_ids.contains(&ann.category_id) {
                return Err(Error::ReferentialIntegrity(format!(
                    "annotation {} references unknown category {}",
                    ann.id, ann.category_id
                )));
            }
            if let Some(area) = ann.area {
                if !(area > 0.0 && area.is_finite()) {
                    return Err(Error::MalformedAnnotation {
                        record: format!("annotation {}", ann.id),
                        reason: format!("area must be positive, got {area}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Every non-crowd annotation turned into a detection with score 1.0.
    pub fn as_detections(&self) -> Vec<DetectionResult> {
        self.annotations
            .iter()
            .filter(|a| !a.iscrowd)
            .map(|a| DetectionResult {
                image_id: a.image_id,
                category_id: a.category_id,
                segmentation: a.segmentation.clone(),
                score: 1.0,
            })
            .collect()
    }
}

pub fn load_detections(path: impl AsRef<Path>) -> Result<Vec<DetectionResult>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let dets: Vec<DetectionResult> =
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    if let Some(bad) = dets.iter().position(|d| !d.score.is_finite()) {
        return Err(Error::MalformedAnnotation {
            record: format!("detection #{bad}"),
            reason: "score is not finite".into(),
        });
    }
    Ok(dets)
}
