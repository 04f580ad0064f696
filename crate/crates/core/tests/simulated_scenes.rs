use std::path::Path;
use std::sync::Arc;

use pseudo_lidar::augment::fuse;
use pseudo_lidar::clean::{clean_pseudo, CleanPolicy};
use pseudo_lidar::cloud::{LabeledPoint, LabeledPointCloud, Provenance};
use pseudo_lidar::kitti_io::{decode_depth_png, encode_depth_png, DEFAULT_DEPTH_SCALE};
use pseudo_lidar::rangeview::{lift_labels, spherical_project, FovSpec};
use pseudo_lidar::sgp::{sgp_generate, ClassWhitelist};
use pseudo_lidar::simulate::{
    random_scene, render_frame, surface_distance, GroundTruthFrame, RandomSceneSpec,
    SceneDescription,
};
use pseudo_lidar::{LabelMap, Scene};

fn labels() -> Arc<LabelMap> {
    Arc::new(LabelMap::semantic_kitti())
}

fn scene(seed: u64) -> (Scene, GroundTruthFrame<f64>) {
    let desc = random_scene(seed, &RandomSceneSpec::default());
    let scene: Scene = desc.build(labels()).unwrap();
    let frame = render_frame(&scene, &FovSpec::default());
    (scene, frame)
}

#[test]
fn scene_descriptions_survive_toml() {
    let desc = random_scene(11, &RandomSceneSpec::default());
    let back = SceneDescription::parse(&desc.to_toml(), Path::new("mem")).unwrap();
    assert_eq!(back, desc);
}

#[test]
fn sgp_through_png_stays_on_generating_surfaces() {
    for seed in [0u64, 5] {
        let (scene, frame) = scene(seed);
        let (bytes, _) = encode_depth_png(&frame.depth, DEFAULT_DEPTH_SCALE).unwrap();
        let depth = decode_depth_png::<f64>(&bytes, DEFAULT_DEPTH_SCALE, Path::new("mem")).unwrap();
        let wl = ClassWhitelist::detection_default(labels()).unwrap();
        let (cloud, report) = sgp_generate(&depth, &frame.segments, &wl, scene.calib()).unwrap();
        assert!(report.points_emitted > 1000, "seed {seed}: {report:?}");

        // re-derive the generating pixel by projecting back into the camera
        let mut near = 0;
        for p in cloud.points() {
            let px = scene.calib().project_lidar_to_pixel(p.position).unwrap();
            let (u, v) = (px.u.round() as usize, px.v.round() as usize);
            let hit = frame.surface(u, v).unwrap();
            let shape = &scene.primitives()[hit.primitive];
            assert_eq!(shape.class_id, p.class_id);
            if shape.shape.distance(p.position) <= 0.05 {
                near += 1;
            }
        }
        assert!(
            near as f64 >= 0.99 * cloud.len() as f64,
            "seed {seed}: {near}/{}",
            cloud.len()
        );
    }
}

#[test]
fn lifted_scan_labels_match_what_each_ray_hit() {
    let (scene, frame) = scene(2);
    let fov = FovSpec::default();
    let image = spherical_project(&frame.scan, &fov);
    // each rendered ray lands in its own range pixel
    assert_eq!(image.valid_count(), frame.scan.len());
    let lifted = lift_labels(&frame.range_labels, &image, &frame.scan, &fov).unwrap();
    for p in lifted.points() {
        assert!(surface_distance(p.position, &scene) < 1e-6);
        let (col, row) = fov.pixel_of(p.position);
        assert_eq!(p.class_id, frame.range_labels.get(col, row));
    }
}

#[test]
fn clean_and_fuse_on_a_rendered_frame() {
    let (scene, frame) = scene(4);
    let labels = labels();
    let wl = ClassWhitelist::detection_default(labels.clone()).unwrap();
    let (pseudo, _) = sgp_generate(&frame.depth, &frame.segments, &wl, scene.calib()).unwrap();
    // a far stray point has no LiDAR support
    let mut points = pseudo.points().to_vec();
    points.push(LabeledPoint {
        position: pseudo_lidar::Vec3d::new(500.0, 500.0, 500.0),
        intensity: 0.0,
        class_id: labels.id_of("car").unwrap(),
        provenance: Provenance::Pseudo,
    });
    let pseudo = LabeledPointCloud::new(points, labels.clone()).unwrap();
    let (cleaned, report) = clean_pseudo(&pseudo, &frame.scan, &CleanPolicy::default());
    assert!(report.removed >= 1);
    assert!(cleaned.points().iter().all(|p| p.position.x < 400.0));

    let fov = FovSpec::default();
    let image = spherical_project(&frame.scan, &fov);
    let real = lift_labels(&frame.range_labels, &image, &frame.scan, &fov).unwrap();
    let fused = fuse(&real, &cleaned).unwrap();
    assert_eq!(fused.real, frame.scan.len());
    assert_eq!(fused.pseudo, cleaned.len());
    assert_eq!(fused.total, fused.real + fused.pseudo);
}
