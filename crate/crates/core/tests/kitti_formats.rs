use std::path::Path;
use std::sync::Arc;

use proptest::prelude::*;
use pseudo_lidar::cloud::{LabeledPoint, LabeledPointCloud, Provenance, RawScan, ScanPoint};
use pseudo_lidar::geometry::{HomogeneousPixel, Vec3};
use pseudo_lidar::kitti_io::*;
use pseudo_lidar::raster::{DepthMap, SegmentMap};
use pseudo_lidar::{Calibration, LabelMap};

const FIXTURE: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/tests/fixtures/kitti_000000_calib.txt"
);

#[test]
fn genuine_calibration_parses_and_is_rigid() {
    let calib: Calibration = read_calib_file(Path::new(FIXTURE)).unwrap();
    assert_eq!(calib.p2()[0][0], 707.0493);
    assert_eq!(calib.p2()[2][3], 4.981016e-3);
    calib.r0().check_rotation().unwrap();
    calib.tr_velo_to_cam().check_rigid().unwrap();
    calib.tr_cam_to_velo().check_rigid().unwrap();
    // snapping moves entries by no more than the file's printed precision
    assert!((calib.tr_velo_to_cam().m[0][1] + 0.9999722).abs() < 1e-6);
    assert!((calib.r0().m[1][1] - 0.9999406).abs() < 1e-6);
    let id = *calib.tr_velo_to_cam() * *calib.tr_cam_to_velo();
    assert!(id.max_abs_diff(&pseudo_lidar::geometry::Mat4::identity()) < 1e-12);
}

#[test]
fn genuine_calibration_round_trips_points() {
    let calib: Calibration = read_calib_file(Path::new(FIXTURE)).unwrap();
    for p in [[10.0, 0.0, -1.0], [25.0, -6.0, 0.5], [5.0, 3.0, -1.7]] {
        let p = Vec3::from_array(p);
        let px = calib.project_lidar_to_pixel(p).unwrap();
        let back = calib.backproject_pixel(px).unwrap();
        assert!(back.max_abs_diff(p) < 1e-9, "{back:?} vs {p:?}");
    }
    // a point straight ahead lands near the principal point
    let px = calib
        .project_lidar_to_pixel(Vec3::new(40.0, 0.0, -0.08))
        .unwrap();
    assert!(
        (px.u - 604.0).abs() < 15.0 && (px.v - 180.5).abs() < 15.0,
        "{px:?}"
    );
}

#[test]
fn written_calibration_reads_back_exactly() {
    let calib: Calibration = read_calib_file(Path::new(FIXTURE)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.txt");
    write_calib_file(&calib, &path).unwrap();
    let back: Calibration = read_calib_file(&path).unwrap();
    assert_eq!(back.p2(), calib.p2());
    assert_eq!(back.r0(), calib.r0());
    assert_eq!(back.tr_velo_to_cam(), calib.tr_velo_to_cam());
    let px = HomogeneousPixel::new(100.0, 50.0, 12.0);
    assert_eq!(
        back.backproject_pixel(px).unwrap(),
        calib.backproject_pixel(px).unwrap()
    );
}

#[test]
fn truncated_scan_reports_byte_offset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.bin");
    std::fs::write(&path, [0u8; 16 * 3 + 7]).unwrap();
    let e = read_velodyne_bin::<f64>(&path).unwrap_err().to_string();
    assert!(e.contains("byte offset 48"), "{e}");
}

fn scan_strategy() -> impl Strategy<Value = Vec<(f32, f32, f32, f32)>> {
    prop::collection::vec(
        (-80.0f32..80.0, -80.0f32..80.0, -5.0f32..5.0, 0.0f32..=1.0),
        0..300,
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, ..ProptestConfig::default() })]

    #[test]
    fn velodyne_and_labels_round_trip_bit_exactly(points in scan_strategy(), classes in prop::collection::vec(0u8..20, 300)) {
        let labels = Arc::new(LabelMap::semantic_kitti());
        let cloud = LabeledPointCloud::new(
            points
                .iter()
                .enumerate()
                .map(|(i, &(x, y, z, r))| LabeledPoint {
                    position: Vec3::new(x as f64, y as f64, z as f64),
                    intensity: r as f64,
                    class_id: classes[i],
                    provenance: if i % 3 == 0 { Provenance::Pseudo } else { Provenance::Real },
                })
                .collect(),
            labels.clone(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.bin");
        let b = dir.path().join("b.bin");
        write_labeled_cloud(&cloud, &a).unwrap();
        let back = read_labeled_cloud::<f64>(&a, labels).unwrap();
        prop_assert_eq!(&back, &cloud);
        write_labeled_cloud(&back, &b).unwrap();
        prop_assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        prop_assert_eq!(
            std::fs::read(labels_sidecar_path(&a)).unwrap(),
            std::fs::read(labels_sidecar_path(&b)).unwrap()
        );
        // raw float bytes are exactly the inputs
        let bytes = std::fs::read(&a).unwrap();
        for (i, &(x, y, z, r)) in points.iter().enumerate() {
            let rec = &bytes[16 * i..16 * i + 16];
            let expect: Vec<u8> = [x, y, z, r].iter().flat_map(|v| v.to_le_bytes()).collect();
            prop_assert_eq!(rec, &expect[..]);
        }
        let raw: RawScan<f32> = read_velodyne_bin(&a).unwrap();
        prop_assert_eq!(raw.len(), points.len());
    }

    #[test]
    fn depth_png_round_trips_bit_exactly(
        w in 1usize..40, h in 1usize..30,
        raw in prop::collection::vec(0u16..=u16::MAX, 1200),
    ) {
        let n = w * h;
        let values: Vec<Option<f64>> = raw[..n]
            .iter()
            .map(|&r| (r != 0).then(|| r as f64 / DEFAULT_DEPTH_SCALE))
            .collect();
        let depth = DepthMap::from_options(w, h, values.clone()).unwrap();
        let (bytes, stats) = encode_depth_png(&depth, DEFAULT_DEPTH_SCALE).unwrap();
        prop_assert_eq!(stats.saturated, 0);
        let back: DepthMap<f64> = decode_depth_png(&bytes, DEFAULT_DEPTH_SCALE, Path::new("mem")).unwrap();
        prop_assert_eq!(&back, &depth);
        let (again, _) = encode_depth_png(&back, DEFAULT_DEPTH_SCALE).unwrap();
        prop_assert_eq!(again, bytes);
    }

    #[test]
    fn segment_png_round_trips_bit_exactly(
        w in 1usize..40, h in 1usize..30,
        ids in prop::collection::vec(0u8..20, 1200),
    ) {
        let labels = Arc::new(LabelMap::semantic_kitti());
        let seg = SegmentMap::new(w, h, ids[..w * h].to_vec(), labels.clone()).unwrap();
        let bytes = encode_segment_png(&seg);
        let back = decode_segment_png(&bytes, labels, Path::new("mem")).unwrap();
        prop_assert_eq!(&back, &seg);
        prop_assert_eq!(encode_segment_png(&back), bytes);
    }
}

#[test]
fn raw_scan_points_survive_f32_storage() {
    let scan = RawScan::new(vec![ScanPoint {
        position: Vec3::new(1.5f64, -2.25, 0.125),
        intensity: 0.5,
    }])
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.bin");
    write_velodyne_bin(&scan, &path).unwrap();
    assert_eq!(read_velodyne_bin::<f64>(&path).unwrap(), scan);
}
