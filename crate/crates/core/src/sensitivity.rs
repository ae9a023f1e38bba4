//! Sensitivity sweeps: generate pseudo-predictions over a range of error
//! severities or object sizes and summarise each measure by mean and
//! population standard deviation.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::errorsim::{ErrorKind, ErrorSpec, GtShape};
use crate::measures::{MeasureConfig, MeasureKind};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Severity,
    Size,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Severity => "severity",
            SweepAxis::Size => "size",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "severity" => Ok(SweepAxis::Severity),
            "size" => Ok(SweepAxis::Size),
            _ => Err(Error::InvalidConfig(format!("unknown sweep axis `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl CurvePoint {
    /// Mean and population standard deviation, computed in two passes.
    pub fn from_values(x: f64, values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(CurvePoint {
            x,
            mean,
            std: var.sqrt(),
            n: values.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCurve {
    pub error_kind: ErrorKind,
    pub measure: MeasureKind,
    pub axis: SweepAxis,
    pub points: Vec<CurvePoint>,
}

/// Area bins `(edges[i], edges[i + 1]]`. Each point of a size sweep is placed
/// at its bin's upper edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaBinning {
    edges: Vec<f64>,
}

/// COCO small/medium/large cutoffs.
pub const SMALL_MAX_AREA: f64 = 32.0 * 32.0;
pub const MEDIUM_MAX_AREA: f64 = 96.0 * 96.0;

impl AreaBinning {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2
            || edges.iter().any(|e| !e.is_finite() || *e < 0.0)
            || edges.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidConfig(
                "area bin edges must be at least two strictly increasing non-negative values"
                    .into(),
            ));
        }
        Ok(AreaBinning { edges })
    }

    /// Edges `0, 16², 32², …, (16·steps)²`.
    pub fn squares_of_16(steps: usize) -> Self {
        let edges = (0..=steps.max(1))
            .map(|k| (16.0 * k as f64).powi(2))
            .collect();
        AreaBinning { edges }
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn bin_of(&self, area: f64) -> Option<usize> {
        (0..self.bins()).find(|&i| area > self.edges[i] && area <= self.edges[i + 1])
    }

    /// `small`, `medium` or `large` when the whole bin lies in one range.
    pub fn named_range(&self, bin: usize) -> Option<&'static str> {
        let (lo, hi) = (self.edges[bin], self.edges[bin + 1]);
        if hi <= SMALL_MAX_AREA {
            Some("small")
        } else if lo >= SMALL_MAX_AREA && hi <= MEDIUM_MAX_AREA {
            Some("medium")
        } else if lo >= MEDIUM_MAX_AREA {
            Some("large")
        } else {
            None
        }
    }
}

impl Default for AreaBinning {
    /// Sixteen bins up to 256² pixels.
    fn default() -> Self {
        AreaBinning::squares_of_16(16)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub measures: Vec<MeasureKind>,
    pub measure_config: MeasureConfig,
    pub base_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            measures: vec![MeasureKind::MaskIou, MeasureKind::BoundaryIou],
            measure_config: MeasureConfig::default(),
            base_seed: 0,
        }
    }
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if self.measures.is_empty() {
            return Err(Error::InvalidConfig("no measures selected".into()));
        }
        self.measure_config.validate()
    }
}

fn check_inputs(gts: &[GtShape], kind: ErrorKind) -> Result<()> {
    if gts.is_empty() {
        return Err(Error::InvalidConfig("no ground-truth masks".into()));
    }
    if kind.needs_polygons() {
        if let Some(i) = gts.iter().position(|g| g.polygons.is_none()) {
            return Err(Error::MissingPolygon(format!(
                "{} needs polygons but mask #{i} has none",
                kind.name()
            )));
        }
    }
    Ok(())
}

/// Measure values of every mask against its pseudo-prediction, `[mask][measure]`.
fn evaluate_batch(
    gts: &[GtShape],
    kind: ErrorKind,
    severity: f64,
    severity_index: usize,
    cfg: &SweepConfig,
) -> Result<Vec<Vec<f64>>> {
    gts.par_iter()
        .enumerate()
        .map(|(i, gt)| {
            let seed = derive_seed(cfg.base_seed, &[i as u64, severity_index as u64]);
            let pred = ErrorSpec::new(kind, severity, seed)?.apply(gt)?;
            cfg.measures
                .iter()
                .map(|m| m.evaluate(&gt.mask, &pred, &cfg.measure_config))
                .collect()
        })
        .collect()
}

/// One curve per measure with one point per severity.
pub fn run_severity_sweep(
    gts: &[GtShape],
    kind: ErrorKind,
    severities: &[f64],
    cfg: &SweepConfig,
) -> Result<Vec<SensitivityCurve>> {
    cfg.validate()?;
    check_inputs(gts, kind)?;
    if severities.is_empty() {
        return Err(Error::InvalidConfig("no severities given".into()));
    }
    let batches = severities
        .iter()
        .enumerate()
        .map(|(si, &s)| evaluate_batch(gts, kind, s, si, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut curves: Vec<SensitivityCurve> = cfg
        .measures
        .iter()
        .enumerate()
        .map(|(mi, &measure)| {
            let mut points: Vec<CurvePoint> = severities
                .iter()
                .zip(&batches)
                .map(|(&s, batch)| {
                    let values: Vec<f64> = batch.iter().map(|row| row[mi]).collect();
                    CurvePoint::from_values(s, &values).expect("non-empty batch")
                })
                .collect();
            points.sort_by(|a, b| a.x.total_cmp(&b.x));
            SensitivityCurve {
                error_kind: kind,
                measure,
                axis: SweepAxis::Severity,
                points,
            }
        })
        .collect();
    curves.sort_by_key(|c| c.measure);
    Ok(curves)
}

/// One curve per measure with one point per non-empty area bin, all at a
/// fixed severity.
pub fn run_size_sweep(
    gts: &[GtShape],
    kind: ErrorKind,
    severity: f64,
    binning: &AreaBinning,
    cfg: &SweepConfig,
) -> Result<Vec<SensitivityCurve>> {
    cfg.validate()?;
    check_inputs(gts, kind)?;
    let batch = evaluate_batch(gts, kind, severity, 0, cfg)?;
    let bins: Vec<Option<usize>> = gts
        .iter()
        .map(|g| binning.bin_of(g.mask.area() as f64))
        .collect();
    let mut curves: Vec<SensitivityCurve> = cfg
        .measures
        .iter()
        .enumerate()
        .map(|(mi, &measure)| {
            let points = (0..binning.bins())
                .filter_map(|b| {
                    let values: Vec<f64> = batch
                        .iter()
                        .zip(&bins)
                        .filter(|(_, bin)| **bin == Some(b))
                        .map(|(row, _)| row[mi])
                        .collect();
                    CurvePoint::from_values(binning.edges()[b + 1], &values)
                })
                .collect();
            SensitivityCurve {
                error_kind: kind,
                measure,
                axis: SweepAxis::Size,
                points,
            }
        })
        .collect();
    curves.sort_by_key(|c| c.measure);
    Ok(curves)
}

const CSV_HEADER: [&str; 7] = [
    "error_kind",
    "measure",
    "axis",
    "x_value",
    "mean",
    "std",
    "n",
];

/// Writes curves as CSV, ordered by error kind, measure, axis and x.
pub fn write_curves_csv<W: Write>(curves: &[SensitivityCurve], out: W) -> Result<()> {
    let mut order: Vec<&SensitivityCurve> = curves.iter().collect();
    order.sort_by(|a, b| {
        (a.error_kind.name(), a.measure.name(), a.axis.name()).cmp(&(
            b.error_kind.name(),
            b.measure.name(),
            b.axis.name(),
        ))
    });
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for curve in order {
        let mut points = curve.points.clone();
        points.sort_by(|a, b| a.x.total_cmp(&b.x));
        for p in points {
            writer.write_record([
                curve.error_kind.name().to_string(),
                curve.measure.name().to_string(),
                curve.axis.name().to_string(),
                format!("{:.6}", p.x),
                format!("{:.6}", p.mean),
                format!("{:.6}", p.std),
                p.n.to_string(),
            ])?;
        }
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn emit_curves_csv(curves: &[SensitivityCurve], destination: impl AsRef<Path>) -> Result<()> {
    let path = destination.as_ref();
    let mut buf = Vec::new();
    write_curves_csv(curves, &mut buf)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    error_kind: String,
    measure: String,
    axis: String,
    x_value: f64,
    mean: f64,
    std: f64,
    n: usize,
}

/// Reads curves written by [`write_curves_csv`], grouping consecutive rows.
pub fn read_curves_csv<R: Read>(input: R) -> Result<Vec<SensitivityCurve>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut curves: Vec<SensitivityCurve> = Vec::new();
    for row in reader.deserialize() {
        let row: CsvRow = row?;
        let error_kind: ErrorKind = row.error_kind.parse()?;
        let measure: MeasureKind = row.measure.parse()?;
        let axis: SweepAxis = row.axis.parse()?;
        let point = CurvePoint {
            x: row.x_value,
            mean: row.mean,
            std: row.std,
            n: row.n,
        };
        match curves.last_mut() {
            Some(c) if (c.error_kind, c.measure, c.axis) == (error_kind, measure, axis) => {
                c.points.push(point)
            }
            _ => curves.push(SensitivityCurve {
                error_kind,
                measure,
                axis,
                points: vec![point],
            }),
        }
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::centered_squares;

    fn cfg(measures: Vec<MeasureKind>) -> SweepConfig {
        SweepConfig {
            measures,
            measure_config: MeasureConfig::default(),
            base_seed: 11,
        }
    }

    #[test]
    fn severity_zero_is_perfect() {
        let gts = centered_squares(&[20, 40, 60], 100);
        for kind in ErrorKind::ALL {
            let curves =
                run_severity_sweep(&gts, kind, &[0.0], &cfg(MeasureKind::ALL.to_vec())).unwrap();
            assert_eq!(curves.len(), MeasureKind::ALL.len());
            for c in curves {
                assert_eq!(
                    c.points,
                    vec![CurvePoint {
                        x: 0.0,
                        mean: 1.0,
                        std: 0.0,
                        n: 3
                    }],
                    "{kind} {}",
                    c.measure
                );
            }
        }
    }

    #[test]
    fn polygon_kinds_need_polygons() {
        let gts = vec![GtShape::from_mask(crate::mask::BinaryMask::from_block(
            10, 10, 2, 2, 4, 4,
        ))];
        let err = run_severity_sweep(
            &gts,
            ErrorKind::BoundaryApproximation,
            &[1.0],
            &cfg(vec![MeasureKind::MaskIou]),
        );
        assert!(matches!(err, Err(Error::MissingPolygon(_))));
        assert!(
            run_severity_sweep(&gts, ErrorKind::ScaleDilation, &[], &SweepConfig::default())
                .is_err()
        );
    }

    #[test]
    fn population_std() {
        let p = CurvePoint::from_values(1.0, &[1.0, 3.0]).unwrap();
        assert_eq!((p.mean, p.std, p.n), (2.0, 1.0, 2));
        assert!(CurvePoint::from_values(0.0, &[]).is_none());
    }

    #[test]
    fn binning() {
        let b = AreaBinning::default();
        assert_eq!(b.bins(), 16);
        assert_eq!(b.bin_of(256.0), Some(0));
        assert_eq!(b.bin_of(257.0), Some(1));
        assert_eq!(b.bin_of(0.0), None);
        assert_eq!(b.named_range(0), Some("small"));
        assert_eq!(b.named_range(1), Some("small"));
        assert_eq!(b.named_range(2), Some("medium"));
        assert_eq!(b.named_range(6), Some("large"));
        assert!(AreaBinning::new(vec![4.0, 4.0]).is_err());
    }

    #[test]
    fn csv_layout_and_parse_back() {
        let curve = SensitivityCurve {
            error_kind: ErrorKind::ScaleDilation,
            measure: MeasureKind::BoundaryIou,
            axis: SweepAxis::Severity,
            points: vec![
                CurvePoint {
                    x: 2.0,
                    mean: 0.25,
                    std: 0.125,
                    n: 4,
                },
                CurvePoint {
                    x: 1.0,
                    mean: 0.5,
                    std: 0.0,
                    n: 4,
                },
            ],
        };
        let mut buf = Vec::new();
        write_curves_csv(std::slice::from_ref(&curve), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "error_kind,measure,axis,x_value,mean,std,n\n\
             scale_dilation,boundary_iou,severity,1.000000,0.500000,0.000000,4\n\
             scale_dilation,boundary_iou,severity,2.000000,0.250000,0.125000,4\n"
        );
        let back = read_curves_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].points[0], curve.points[1]);
        assert_eq!(back[0].points[1], curve.points[0]);

        let mut empty = Vec::new();
        write_curves_csv(&[], &mut empty).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().lines().count(), 1);
    }
}
