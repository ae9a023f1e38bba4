use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eval::{compute_pq, match_segments, PqConfig, PqReport};
use super::labels::{PanopticLabelMap, SegmentInfo};
use crate::detection::ImageInfo;
use crate::error::{Error, Result};
use crate::mask::pixel_distance;

/// One image's segmentation: an inline id grid or a PNG in the COCO panoptic
/// colour encoding (`id = R + 256·G + 65536·B`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanopticAnnotation {
    pub image_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<Vec<Vec<u32>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file_name: Option<String>,
    pub segments_info: Vec<SegmentInfo>,
}

impl PanopticAnnotation {
    /// Inline-grid annotation for `map`.
    pub fn from_map(image_id: u64, map: &PanopticLabelMap) -> Self {
        let ids = map.ids().chunks(map.width()).map(<[u32]>::to_vec).collect();
        PanopticAnnotation {
            image_id,
            ids: Some(ids),
            file_name: None,
            segments_info: map.segments().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanopticDataset {
    pub images: Vec<ImageInfo>,
    pub annotations: Vec<PanopticAnnotation>,
    /// Directory PNG file names are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl PanopticDataset {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut dataset: PanopticDataset =
            serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        dataset.base_dir = path.parent().map(Path::to_path_buf);
        Ok(dataset)
    }

    /// Builds a dataset of inline maps, numbering images from 1.
    pub fn from_maps(maps: &[PanopticLabelMap]) -> Self {
        let images = maps
            .iter()
            .enumerate()
            .map(|(i, m)| ImageInfo {
                id: i as u64 + 1,
                height: m.height(),
                width: m.width(),
                file_name: None,
            })
            .collect();
        let annotations = maps
            .iter()
            .enumerate()
            .map(|(i, m)| PanopticAnnotation::from_map(i as u64 + 1, m))
            .collect();
        PanopticDataset {
            images,
            annotations,
            base_dir: None,
        }
    }

    /// Decodes every annotation, keyed by image id.
    pub fn label_maps(&self) -> Result<HashMap<u64, PanopticLabelMap>> {
        let frames: HashMap<u64, &ImageInfo> = self.images.iter().map(|i| (i.id, i)).collect();
        if frames.len() != self.images.len() {
            return Err(Error::ReferentialIntegrity("duplicate image id".into()));
        }
        let mut seen = HashSet::new();
        for ann in &self.annotations {
            if !frames.contains_key(&ann.image_id) {
                return Err(Error::ReferentialIntegrity(format!(
                    "panoptic annotation references unknown image {}",
                    ann.image_id
                )));
            }
            if !seen.insert(ann.image_id) {
                return Err(Error::ReferentialIntegrity(format!(
                    "image {} has more than one panoptic annotation",
                    ann.image_id
                )));
            }
        }
        self.annotations
            .par_iter()
            .map(|ann| {
                let info = frames[&ann.image_id];
                let map = self.decode(ann, info).map_err(|e| match e {
                    Error::MalformedMap(reason) => {
                        Error::MalformedMap(format!("image {}: {reason}", ann.image_id))
                    }
                    other => other,
                })?;
                Ok((ann.image_id, map))
            })
            .collect()
    }

    fn decode(&self, ann: &PanopticAnnotation, info: &ImageInfo) -> Result<PanopticLabelMap> {
        let (h, w) = (info.height, info.width);
        let ids = match (&ann.ids, &ann.file_name) {
            (Some(rows), _) => {
                if rows.len() != h || rows.iter().any(|r| r.len() != w) {
                    return Err(Error::FrameMismatch {
                        expected: (h, w),
                        found: (rows.len(), rows.first().map_or(0, Vec::len)),
                    });
                }
                rows.concat()
            }
            (None, Some(name)) => {
                let path = match &self.base_dir {
                    Some(dir) => dir.join(name),
                    None => PathBuf::from(name),
                };
                read_png_ids(&path, h, w)?
            }
            (None, None) => {
                return Err(Error::MalformedMap(
                    "annotation has neither `ids` nor `file_name`".into(),
                ))
            }
        };
        PanopticLabelMap::new(h, w, ids, ann.segments_info.clone())
    }
}

fn read_png_ids(path: &Path, height: usize, width: usize) -> Result<Vec<u32>> {
    let img = image::open(path)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?
        .to_rgb8();
    let found = (img.height() as usize, img.width() as usize);
    if found != (height, width) {
        return Err(Error::FrameMismatch {
            expected: (height, width),
            found,
        });
    }
    Ok(img
        .pixels()
        .map(|p| u32::from(p[0]) + 256 * u32::from(p[1]) + 65536 * u32::from(p[2]))
        .collect())
}

/// Writes `map` as a PNG in the COCO panoptic colour encoding.
pub fn write_png_ids(map: &PanopticLabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut img = image::RgbImage::new(map.width() as u32, map.height() as u32);
    for (pixel, &id) in img.pixels_mut().zip(map.ids()) {
        if id >= 1 << 24 {
            return Err(Error::MalformedMap(format!(
                "segment id {id} exceeds 24 bits"
            )));
        }
        *pixel = image::Rgb([
            (id & 0xff) as u8,
            ((id >> 8) & 0xff) as u8,
            (id >> 16) as u8,
        ]);
    }
    img.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Matches every ground-truth image against its prediction and aggregates.
/// Both datasets must cover the same image ids.
pub fn evaluate_panoptic(
    gt: &PanopticDataset,
    pred: &PanopticDataset,
    cfg: &PqConfig,
) -> Result<PqReport> {
    cfg.validate()?;
    let gt_maps = gt.label_maps()?;
    let pred_maps = pred.label_maps()?;
    let mut image_ids: Vec<u64> = gt_maps.keys().copied().collect();
    image_ids.sort_unstable();
    if let Some(extra) = pred_maps.keys().find(|id| !gt_maps.contains_key(id)) {
        return Err(Error::ReferentialIntegrity(format!(
            "prediction for image {extra} has no ground truth"
        )));
    }
    let matchings = image_ids
        .par_iter()
        .map(|id| {
            let g = &gt_maps[id];
            let p = pred_maps.get(id).ok_or_else(|| {
                Error::ReferentialIntegrity(format!("no prediction for image {id}"))
            })?;
            let d = pixel_distance(g.height(), g.width(), cfg.dilation_ratio);
            Ok((*id, d, match_segments(g, p, cfg.measure, d)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let d_pixels = matchings.iter().map(|(id, d, _)| (*id, *d)).collect();
    let matchings: Vec<_> = matchings.into_iter().map(|(_, _, m)| m).collect();
    let mut report = compute_pq(&matchings, cfg.measure);
    report.d_pixels = d_pixels;
    Ok(report)
}

pub fn evaluate_panoptic_files(
    gt_path: impl AsRef<Path>,
    pred_path: impl AsRef<Path>,
    cfg: &PqConfig,
) -> Result<PqReport> {
    let gt = PanopticDataset::load(gt_path)?;
    let pred = PanopticDataset::load(pred_path)?;
    evaluate_panoptic(&gt, &pred, cfg)
}
