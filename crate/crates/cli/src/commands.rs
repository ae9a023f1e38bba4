use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use boundary_iou::detection::{
    evaluate_dataset, load_detections, ApConfig, DetectionResult, GtDataset, InstanceAnnotation,
    IouMeasure, Segmentation,
};
use boundary_iou::errorsim::{ErrorKind, ErrorSpec, GtShape};
use boundary_iou::mask::encode_rle;
use boundary_iou::measures::measure_all;
use boundary_iou::panoptic::{evaluate_panoptic, PanopticDataset, PqConfig};
use boundary_iou::rng::derive_seed;
use boundary_iou::sensitivity::{
    run_severity_sweep, run_size_sweep, write_curves_csv, AreaBinning, SweepConfig,
};
use boundary_iou::synthetic::builtin_shapes;
use boundary_iou::{MeasureConfig, MeasureKind};

use crate::io::{emit, read_mask_file, to_json};

/// Header echoed at the top of every JSON report.
#[derive(Debug, Serialize)]
struct Provenance {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    inputs: BTreeMap<&'static str, String>,
    dilation_ratio: f64,
    /// Boundary distance in pixels per image id.
    d_pixels: BTreeMap<u64, usize>,
}

impl Provenance {
    fn new(command: &'static str, inputs: &[(&'static str, &Path)], dilation_ratio: f64) -> Self {
        Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            inputs: inputs
                .iter()
                .map(|(k, p)| (*k, p.display().to_string()))
                .collect(),
            dilation_ratio,
            d_pixels: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Report<T> {
    provenance: Provenance,
    results: T,
}

pub fn measure(gt: &Path, pred: &Path, dilation_ratio: f64, out: Option<&Path>) -> Result<()> {
    let g = read_mask_file(gt)?;
    let p = read_mask_file(pred)?;
    let cfg = MeasureConfig::with_dilation_ratio(dilation_ratio);
    let report = measure_all(&g, &p, &cfg)
        .with_context(|| format!("comparing {} with {}", gt.display(), pred.display()))?;
    let mut provenance = Provenance::new("measure", &[("gt", gt), ("pred", pred)], dilation_ratio);
    provenance.d_pixels.insert(0, report.d_pixels);
    emit(
        out,
        &to_json(&Report {
            provenance,
            results: report,
        })?,
    )
}

pub fn eval_ap(
    gt_path: &Path,
    det_path: &Path,
    measures: Vec<IouMeasure>,
    dilation_ratio: f64,
    out: Option<&Path>,
) -> Result<()> {
    let gt = GtDataset::load(gt_path)?;
    let dets = load_detections(det_path)?;
    let mut provenance = Provenance::new(
        "eval-ap",
        &[("gt", gt_path), ("pred", det_path)],
        dilation_ratio,
    );
    let mut results = BTreeMap::new();
    for measure in measures {
        let cfg = ApConfig {
            dilation_ratio,
            ..ApConfig::with_measure(measure)
        };
        let report = evaluate_dataset(&gt, &dets, &cfg).with_context(|| {
            format!(
                "evaluating {} against {}",
                det_path.display(),
                gt_path.display()
            )
        })?;
        provenance.d_pixels = report.d_pixels.clone();
        results.insert(measure.to_string(), report);
    }
    emit(
        out,
        &to_json(&Report {
            provenance,
            results,
        })?,
    )
}

pub fn eval_pq(
    gt_path: &Path,
    pred_path: &Path,
    measures: Vec<IouMeasure>,
    dilation_ratio: f64,
    out: Option<&Path>,
) -> Result<()> {
    let gt = PanopticDataset::load(gt_path)?;
    let pred = PanopticDataset::load(pred_path)?;
    let mut provenance = Provenance::new(
        "eval-pq",
        &[("gt", gt_path), ("pred", pred_path)],
        dilation_ratio,
    );
    let mut results = BTreeMap::new();
    for measure in measures {
        let cfg = PqConfig {
            measure,
            dilation_ratio,
        };
        let report = evaluate_panoptic(&gt, &pred, &cfg).with_context(|| {
            format!(
                "evaluating {} against {}",
                pred_path.display(),
                gt_path.display()
            )
        })?;
        provenance.d_pixels = report.d_pixels.clone();
        results.insert(measure.to_string(), report);
    }
    emit(
        out,
        &to_json(&Report {
            provenance,
            results,
        })?,
    )
}

fn annotation_shapes(gt: &GtDataset) -> Result<Vec<(u64, &InstanceAnnotation, GtShape)>> {
    gt.annotations
        .par_iter()
        .filter(|a| !a.iscrowd)
        .map(|a| {
            let image = gt.image(a.image_id).expect("validated on load");
            let shape = match &a.segmentation {
                Segmentation::Polygons(polys) => {
                    GtShape::from_polygons(polys.clone(), image.height, image.width)
                }
                Segmentation::Rle(_) => GtShape::from_mask(
                    a.segmentation
                        .decode(image.height, image.width)
                        .with_context(|| format!("annotation {}: field `segmentation`", a.id))?,
                ),
            };
            Ok((a.id, a, shape))
        })
        .collect()
}

pub fn simulate(
    gt_path: &Path,
    kind: ErrorKind,
    severity: f64,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let gt = GtDataset::load(gt_path)?;
    let shapes = annotation_shapes(&gt)?;
    let dets: Vec<DetectionResult> = shapes
        .par_iter()
        .map(|(id, ann, shape)| {
            let spec = ErrorSpec::new(kind, severity, derive_seed(seed, &[*id]))?;
            let pred = spec
                .apply(shape)
                .with_context(|| format!("annotation {id} in {}", gt_path.display()))?;
            Ok(DetectionResult {
                image_id: ann.image_id,
                category_id: ann.category_id,
                segmentation: Segmentation::Rle(encode_rle(&pred)),
                score: 1.0,
            })
        })
        .collect::<Result<_>>()?;
    let mut bytes = serde_json::to_vec(&dets)?;
    bytes.push(b'\n');
    emit(out, &bytes)
}

pub struct SensitivityPlan {
    pub gt: Option<PathBuf>,
    pub kinds: Vec<ErrorKind>,
    pub severities: Vec<f64>,
    pub size_severity: Option<f64>,
    pub measures: Vec<MeasureKind>,
    pub bins: Vec<f64>,
    pub severity_sweep: bool,
    pub size_sweep: bool,
    pub seed: u64,
    pub dilation_ratio: f64,
}

/// Default severity ladder for each error kind, in that kind's units.
fn default_severities(kind: ErrorKind) -> Vec<f64> {
    match kind {
        ErrorKind::ScaleDilation | ErrorKind::ScaleErosion => {
            vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0]
        }
        ErrorKind::BoundaryLocalization => vec![0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0],
        ErrorKind::ObjectLocalization => vec![0.0, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0],
        ErrorKind::BoundaryApproximation => vec![0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0],
        ErrorKind::InnerMask => vec![0.0, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0],
    }
}

fn default_size_severity(kind: ErrorKind) -> f64 {
    match kind {
        ErrorKind::BoundaryLocalization | ErrorKind::BoundaryApproximation => 2.0,
        _ => 5.0,
    }
}

pub fn sensitivity(plan: &SensitivityPlan, out: Option<&Path>) -> Result<()> {
    let shapes: Vec<GtShape> = match &plan.gt {
        Some(path) => {
            let gt = GtDataset::load(path)?;
            annotation_shapes(&gt)?
                .into_iter()
                .map(|(_, _, s)| s)
                .collect()
        }
        None => builtin_shapes(plan.seed),
    };
    let has_polygons = shapes.iter().all(|s| s.polygons.is_some());
    let kinds: Vec<ErrorKind> = if plan.kinds.is_empty() {
        ErrorKind::ALL
            .into_iter()
            .filter(|k| {
                let usable = has_polygons || !k.needs_polygons();
                if !usable {
                    eprintln!("note: skipping {k}, the ground truth has no polygons");
                }
                usable
            })
            .collect()
    } else {
        plan.kinds.clone()
    };
    let cfg = SweepConfig {
        measures: if plan.measures.is_empty() {
            MeasureKind::ALL.to_vec()
        } else {
            plan.measures.clone()
        },
        measure_config: MeasureConfig::with_dilation_ratio(plan.dilation_ratio),
        base_seed: plan.seed,
    };
    let binning = if plan.bins.is_empty() {
        AreaBinning::default()
    } else {
        AreaBinning::new(plan.bins.clone())?
    };

    let mut curves = Vec::new();
    for kind in kinds {
        if plan.severity_sweep {
            let severities = if plan.severities.is_empty() {
                default_severities(kind)
            } else {
                plan.severities.clone()
            };
            curves.extend(run_severity_sweep(&shapes, kind, &severities, &cfg)?);
        }
        if plan.size_sweep {
            let severity = plan
                .size_severity
                .unwrap_or_else(|| default_size_severity(kind));
            curves.extend(run_size_sweep(&shapes, kind, severity, &binning, &cfg)?);
        }
    }
    let mut bytes = Vec::new();
    write_curves_csv(&curves, &mut bytes)?;
    emit(out, &bytes)
}
