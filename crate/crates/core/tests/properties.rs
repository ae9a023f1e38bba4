use boundary_iou::detection::{evaluate_dataset, ApConfig, IouMeasure};
use boundary_iou::errorsim::{
    boundary_approximation_error, inner_mask_error, ErrorKind, ErrorSpec, GtShape,
};
use boundary_iou::mask::{boundary_region, dilate, erode, rasterize_polygon};
use boundary_iou::measures::{boundary_iou, mask_iou, trimap_iou};
use boundary_iou::panoptic::{compute_pq, match_segments, PanopticLabelMap, SegmentInfo};
use boundary_iou::rng::RngStream;
use boundary_iou::sensitivity::{run_severity_sweep, SweepConfig};
use boundary_iou::synthetic::{
    blob_polygon, centered_squares, instance_dataset, panoptic_map, BlobStyle, InstanceDatasetSpec,
    PanopticMapSpec,
};
use boundary_iou::{BinaryMask, MeasureConfig, MeasureKind, Polygon};
use proptest::prelude::*;

fn mask_strategy(h: usize, w: usize) -> impl Strategy<Value = BinaryMask> {
    proptest::collection::vec(any::<bool>(), h * w)
        .prop_map(move |px| BinaryMask::from_pixels(h, w, px).unwrap())
}

fn pair_strategy() -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
    (2usize..14, 2usize..14).prop_flat_map(|(h, w)| (mask_strategy(h, w), mask_strategy(h, w)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn measures_are_symmetric_and_bounded((a, b) in pair_strategy(), d in 1usize..5) {
        for (x, y) in [
            (mask_iou(&a, &b).unwrap(), mask_iou(&b, &a).unwrap()),
            (boundary_iou(&a, &b, d).unwrap(), boundary_iou(&b, &a, d).unwrap()),
        ] {
            prop_assert_eq!(x, y);
            prop_assert!((0.0..=1.0).contains(&x));
        }
        let t = trimap_iou(&a, &b, d).unwrap();
        prop_assert!((0.0..=1.0).contains(&t));
    }

    #[test]
    fn self_comparison_is_perfect(a in (1usize..14, 1usize..14).prop_flat_map(|(h, w)| mask_strategy(h, w))) {
        let cfg = MeasureConfig::default();
        for kind in MeasureKind::ALL {
            prop_assert_eq!(kind.evaluate(&a, &a, &cfg).unwrap(), 1.0, "{}", kind.name());
        }
    }

    #[test]
    fn boundary_iou_matches_mask_iou_for_large_d((a, b) in pair_strategy()) {
        let d = a.height().max(a.width());
        prop_assert_eq!(boundary_iou(&a, &b, d).unwrap(), mask_iou(&a, &b).unwrap());
    }

    #[test]
    fn erosion_dilation_duality(a in mask_strategy(12, 12), k in 1usize..4) {
        // Pad with a background margin so out-of-frame pixels play no role.
        let padded = BinaryMask::from_fn(12 + 2 * k, 12 + 2 * k, |r, c| {
            r >= k && c >= k && r < 12 + k && c < 12 + k && a.get(r - k, c - k)
        });
        let via_dual = dilate(&padded.complement(), k).complement();
        let eroded = erode(&padded, k);
        for r in 0..padded.height() {
            for c in 0..padded.width() {
                let interior = r >= k && c >= k && r < 12 + k && c < 12 + k;
                if interior {
                    prop_assert_eq!(via_dual.get(r, c), eroded.get(r, c));
                }
            }
        }
        prop_assert!(eroded.is_subset_of(&padded));
        prop_assert!(padded.is_subset_of(&dilate(&padded, k)));
        prop_assert!(boundary_region(&padded, k).is_subset_of(&padded));
    }

    #[test]
    fn inner_mask_error_only_removes_pixels(seed in any::<u64>(), holes in 1usize..6) {
        let mask = BinaryMask::from_block(64, 64, 8, 8, 48, 40);
        let out = inner_mask_error(&mask, holes, &mut RngStream::new(seed));
        prop_assert!(out.is_subset_of(&mask));
    }

    #[test]
    fn approximation_keeps_ordered_vertex_subset(seed in any::<u64>(), tol in 0.0f64..8.0) {
        let poly = blob_polygon(64.0, 64.0, 40.0, BlobStyle::default(), &mut RngStream::new(seed));
        let simple = boundary_approximation_error(&poly, tol);
        prop_assert!(simple.len() >= 3);
        let mut cursor = poly.vertices().iter();
        for v in simple.vertices() {
            prop_assert!(cursor.any(|u| u == v), "vertex {v:?} out of order or new");
        }
    }

    #[test]
    fn generators_are_deterministic(seed in any::<u64>(), kind_idx in 0usize..6) {
        let kind = ErrorKind::ALL[kind_idx];
        let poly = blob_polygon(48.0, 48.0, 30.0, BlobStyle::default(), &mut RngStream::new(7));
        let gt = GtShape::from_polygons(vec![poly], 96, 96);
        let spec = ErrorSpec::new(kind, 2.0, seed).unwrap();
        prop_assert_eq!(spec.apply(&gt).unwrap(), spec.apply(&gt).unwrap());
    }
}

#[test]
fn perfect_and_empty_detections() {
    let gt = instance_dataset(
        &InstanceDatasetSpec {
            images: 3,
            objects_per_image: 5,
            ..Default::default()
        },
        11,
    );
    for measure in [IouMeasure::Mask, IouMeasure::Boundary] {
        let cfg = ApConfig::with_measure(measure);
        let perfect = evaluate_dataset(&gt, &gt.as_detections(), &cfg).unwrap();
        assert_eq!(perfect.ap, Some(1.0));
        assert_eq!(perfect.ap50, Some(1.0));
        let empty = evaluate_dataset(&gt, &[], &cfg).unwrap();
        assert_eq!(empty.ap, Some(0.0));
    }
}

#[test]
fn boundary_ap_equals_mask_ap_for_huge_ratio() {
    let gt = instance_dataset(
        &InstanceDatasetSpec {
            images: 3,
            objects_per_image: 6,
            ..Default::default()
        },
        5,
    );
    let dets = boundary_iou::synthetic::resolution_capped_detections(&gt, 16, 1);
    let mut mask_cfg = ApConfig::with_measure(IouMeasure::Mask);
    mask_cfg.dilation_ratio = 10.0;
    let mut boundary_cfg = ApConfig::with_measure(IouMeasure::Boundary);
    boundary_cfg.dilation_ratio = 10.0;
    let m = evaluate_dataset(&gt, &dets, &mask_cfg).unwrap();
    let b = evaluate_dataset(&gt, &dets, &boundary_cfg).unwrap();
    assert_eq!(m.ap, b.ap);
    assert_eq!(m.ap_l, b.ap_l);
}

fn toy_map(ids: [[u32; 10]; 10], segments: &[(u32, u64, bool)]) -> PanopticLabelMap {
    PanopticLabelMap::new(
        10,
        10,
        ids.concat(),
        segments
            .iter()
            .map(|&(id, category_id, isthing)| SegmentInfo {
                id,
                category_id,
                isthing,
            })
            .collect(),
    )
    .unwrap()
}

#[test]
fn toy_panoptic_example() {
    // Stuff id 1 everywhere, thing 2 a 4x4 block; the prediction shifts the
    // thing one column and adds a spurious thing 3 on the stuff.
    let mut gt_ids = [[1u32; 10]; 10];
    let mut pred_ids = [[1u32; 10]; 10];
    for r in 2..6 {
        for c in 2..6 {
            gt_ids[r][c] = 2;
            pred_ids[r][c + 1] = 2;
        }
    }
    pred_ids[8][8] = 3;
    let gt = toy_map(gt_ids, &[(1, 1, false), (2, 2, true)]);
    let pred = toy_map(pred_ids, &[(1, 1, false), (2, 2, true), (3, 2, true)]);
    let m = match_segments(&gt, &pred, IouMeasure::Mask, 1).unwrap();
    assert_eq!(m.matches.len(), 2);
    assert_eq!(m.unmatched_pred.len(), 1);
    let report = compute_pq(&[m], IouMeasure::Mask);
    let thing = report
        .per_category
        .iter()
        .find(|c| c.category_id == 2)
        .unwrap();
    // Thing IoU: 12 shared of 20 in the union.
    assert!((thing.sq - 0.6).abs() < 1e-12);
    assert!((thing.rq - 1.0 / 1.5).abs() < 1e-12);
    assert!((thing.pq - thing.sq * thing.rq).abs() < 1e-12);
    let stuff = report
        .per_category
        .iter()
        .find(|c| c.category_id == 1)
        .unwrap();
    assert!((stuff.sq - 79.0 / 88.0).abs() < 1e-12);
    assert_eq!(stuff.rq, 1.0);
    assert!((report.overall.pq - (thing.pq + stuff.pq) / 2.0).abs() < 1e-12);
}

#[test]
fn void_pixels_do_not_change_pq() {
    let spec = PanopticMapSpec {
        height: 96,
        width: 128,
        ..Default::default()
    };
    let gt = panoptic_map(&spec, 2);
    let pred = panoptic_map(&spec, 3);
    // Overwrite the prediction with a different label wherever GT is void.
    let stuff_id = pred.segments().iter().find(|s| !s.isthing).unwrap().id;
    let relabelled: Vec<u32> = gt
        .ids()
        .iter()
        .zip(pred.ids())
        .map(|(&g, &p)| if g == 0 { stuff_id } else { p })
        .collect();
    let pred2 = PanopticLabelMap::new(96, 128, relabelled, pred.segments().to_vec()).unwrap();
    // Mask IoU ignores predicted pixels on void, so relabelling them changes
    // nothing. Boundary regions depend on the whole predicted shape and are
    // not covered by this invariance.
    let a = compute_pq(
        &[match_segments(&gt, &pred, IouMeasure::Mask, 2).unwrap()],
        IouMeasure::Mask,
    );
    let b = compute_pq(
        &[match_segments(&gt, &pred2, IouMeasure::Mask, 2).unwrap()],
        IouMeasure::Mask,
    );
    assert_eq!(a.per_category.len(), b.per_category.len());
    for (x, y) in a.per_category.iter().zip(&b.per_category) {
        assert_eq!((x.tp, x.fn_), (y.tp, y.fn_), "category {}", x.category_id);
        assert!((x.sq - y.sq).abs() < 1e-12);
    }
}

#[test]
fn matches_are_unique_and_above_half() {
    let spec = PanopticMapSpec::default();
    for seed in 0..4 {
        let gt = panoptic_map(&spec, seed);
        let capped = boundary_iou::errorsim::cap_resolution_panoptic(&gt, 16).unwrap();
        let m = match_segments(&gt, &capped, IouMeasure::Boundary, 3).unwrap();
        let mut gts: Vec<u32> = m.matches.iter().map(|x| x.gt_id).collect();
        let mut preds: Vec<u32> = m.matches.iter().map(|x| x.pred_id).collect();
        gts.sort_unstable();
        gts.dedup();
        preds.sort_unstable();
        preds.dedup();
        assert_eq!(gts.len(), m.matches.len());
        assert_eq!(preds.len(), m.matches.len());
        assert!(m.matches.iter().all(|x| x.iou > 0.5));
    }
}

#[test]
fn severity_zero_sweep_is_perfect() {
    let gts = centered_squares(&[32, 64], 128);
    let cfg = SweepConfig {
        measures: MeasureKind::ALL.to_vec(),
        ..Default::default()
    };
    for kind in [
        ErrorKind::ScaleDilation,
        ErrorKind::ScaleErosion,
        ErrorKind::ObjectLocalization,
        ErrorKind::InnerMask,
    ] {
        for curve in run_severity_sweep(&gts, kind, &[0.0], &cfg).unwrap() {
            assert_eq!(curve.points[0].mean, 1.0, "{kind} {}", curve.measure.name());
            assert_eq!(curve.points[0].std, 0.0);
        }
    }
}

#[test]
fn dilation_curve_decreases_with_severity() {
    let gts = centered_squares(&[128], 256);
    let curves = run_severity_sweep(
        &gts,
        ErrorKind::ScaleDilation,
        &[1.0, 2.0, 4.0, 8.0],
        &SweepConfig::default(),
    )
    .unwrap();
    for curve in curves {
        let means: Vec<f64> = curve.points.iter().map(|p| p.mean).collect();
        assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
    }
}

#[test]
fn boundary_iou_penalises_boundary_errors_on_large_objects() {
    // The same one-pixel dilation costs a large object far less mask IoU
    // than boundary IoU.
    let gts = centered_squares(&[200], 256);
    let curves = run_severity_sweep(
        &gts,
        ErrorKind::ScaleDilation,
        &[1.0],
        &SweepConfig::default(),
    )
    .unwrap();
    let mask = curves
        .iter()
        .find(|c| c.measure == MeasureKind::MaskIou)
        .unwrap();
    let boundary = curves
        .iter()
        .find(|c| c.measure == MeasureKind::BoundaryIou)
        .unwrap();
    assert!(mask.points[0].mean > 0.97);
    assert!(boundary.points[0].mean < 0.9);
}

#[test]
fn rasterised_square_is_exact() {
    let poly = Polygon::new(vec![(2.0, 3.0), (9.0, 3.0), (9.0, 7.0), (2.0, 7.0)]).unwrap();
    let mask = rasterize_polygon(&poly, 10, 12);
    assert_eq!(mask.area(), 28);
    assert_eq!(mask, BinaryMask::from_block(10, 12, 3, 2, 4, 7));
}
