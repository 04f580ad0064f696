//! Analytic scenes with exact ground truth: a virtual camera and a virtual
//! spherical LiDAR cast rays against boxes, spheres and planes.
//!
//! Scenes are authored in the LiDAR frame. Camera depth is the homogeneous
//! image depth used by [`CalibrationSet::backproject_pixel`], so
//! back-projecting a rendered depth pixel recovers the hit point.

mod description;
mod random;
mod shape;

use std::sync::Arc;

pub use description::{read_scene_file, CameraSpec, PrimitiveSpec, SceneDescription};
pub use random::{random_scene, RandomSceneSpec};
pub use shape::Shape;

use crate::cloud::{LabeledPoint, LabeledPointCloud, Provenance, RawScan, ScanPoint};
use crate::error::{Error, Result};
use crate::geometry::{CalibrationSet, HomogeneousPixel, Vec3, DEPTH_FLOOR};
use crate::labels::{ClassId, LabelMap};
use crate::rangeview::{FovSpec, RANGE_FLOOR};
use crate::raster::{DepthMap, SegmentMap};
use crate::scalar::Real;
use crate::sgp::ClassWhitelist;

/// Intensity assigned to every simulated LiDAR return.
pub const LIDAR_INTENSITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive<T> {
    pub shape: Shape<T>,
    pub class_id: ClassId,
}

#[derive(Debug, Clone)]
pub struct Scene<T> {
    primitives: Vec<Primitive<T>>,
    calib: CalibrationSet<T>,
    width: usize,
    height: usize,
    background: ClassId,
    labels: Arc<LabelMap>,
}

impl<T: Real> Scene<T> {
    /// `width`×`height` is the camera image size. Shapes are validated by
    /// their constructors; class ids must resolve in `labels`.
    pub fn new(
        primitives: Vec<Primitive<T>>,
        calib: CalibrationSet<T>,
        width: usize,
        height: usize,
        background: ClassId,
        labels: Arc<LabelMap>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Config(format!(
                "camera image must be at least 1x1, got {width}x{height}"
            )));
        }
        for id in primitives
            .iter()
            .map(|p| p.class_id)
            .chain(std::iter::once(background))
        {
            if !labels.contains(id) {
                return Err(Error::Config(format!(
                    "scene class id {id} is not in the label map"
                )));
            }
        }
        Ok(Scene {
            primitives,
            calib,
            width,
            height,
            background,
            labels,
        })
    }

    pub fn primitives(&self) -> &[Primitive<T>] {
        &self.primitives
    }

    pub fn calib(&self) -> &CalibrationSet<T> {
        &self.calib
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn background(&self) -> ClassId {
        self.background
    }

    pub fn labels(&self) -> &Arc<LabelMap> {
        &self.labels
    }

    /// Nearest primitive hit with parameter `t > t_min`; ties go to the
    /// lower primitive index.
    pub fn nearest_hit(&self, origin: Vec3<T>, dir: Vec3<T>, t_min: T) -> Option<(usize, T)> {
        let mut best: Option<(usize, T)> = None;
        for (i, p) in self.primitives.iter().enumerate() {
            if let Some(t) = p.shape.intersect(origin, dir, t_min) {
                if best.is_none_or(|(_, bt)| t < bt) {
                    best = Some((i, t));
                }
            }
        }
        best
    }
}

/// Exact distance from `p` to the nearest primitive surface; infinite for an
/// empty scene.
pub fn surface_distance<T: Real>(p: Vec3<T>, scene: &Scene<T>) -> T {
    scene
        .primitives
        .iter()
        .map(|q| q.shape.distance(p))
        .fold(T::infinity(), T::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceHit<T> {
    pub primitive: usize,
    pub point: Vec3<T>,
}

#[derive(Debug, Clone)]
pub struct CameraRender<T> {
    pub depth: DepthMap<T>,
    pub segments: SegmentMap,
    /// Row-major, one entry per pixel; `Some` exactly where depth is valid.
    pub surfaces: Vec<Option<SurfaceHit<T>>>,
}

/// Casts the ray through every integer pixel coordinate `(u, v)`.
pub fn raycast_camera<T: Real>(scene: &Scene<T>) -> CameraRender<T> {
    let (w, h) = (scene.width, scene.height);
    let mut depth = vec![T::zero(); w * h];
    let mut valid = vec![false; w * h];
    let mut ids = vec![scene.background; w * h];
    let mut surfaces = vec![None; w * h];
    let t_min = T::lit(DEPTH_FLOOR);
    for v in 0..h {
        for u in 0..w {
            let (origin, dir) = scene.calib.pixel_ray(T::lit(u as f64), T::lit(v as f64));
            if let Some((i, t)) = scene.nearest_hit(origin, dir, t_min) {
                let k = v * w + u;
                depth[k] = t;
                valid[k] = true;
                ids[k] = scene.primitives[i].class_id;
                surfaces[k] = Some(SurfaceHit {
                    primitive: i,
                    point: origin + dir * t,
                });
            }
        }
    }
    CameraRender {
        depth: DepthMap::new(w, h, depth, valid).expect("ray hits have positive finite depth"),
        segments: SegmentMap::new(w, h, ids, scene.labels.clone())
            .expect("scene class ids are validated"),
        surfaces,
    }
}

#[derive(Debug, Clone)]
pub struct LidarRender<T> {
    /// Returns in row-major order of the range grid.
    pub scan: RawScan<T>,
    /// Class of the nearest hit per range pixel, background where nothing was hit.
    pub range_labels: SegmentMap,
    /// Primitive hit per range pixel.
    pub primitives: Vec<Option<usize>>,
}

/// One ray from the origin through each range-pixel center.
pub fn raycast_lidar<T: Real>(scene: &Scene<T>, fov: &FovSpec) -> LidarRender<T> {
    let (w, h) = (fov.width(), fov.height());
    let mut points = Vec::new();
    let mut ids = vec![scene.background; w * h];
    let mut primitives = vec![None; w * h];
    let (origin, t_min) = (Vec3::zero(), T::lit(RANGE_FLOOR));
    for row in 0..h {
        for col in 0..w {
            let dir = fov.ray_direction::<T>(col, row);
            if let Some((i, t)) = scene.nearest_hit(origin, dir, t_min) {
                points.push(ScanPoint {
                    position: dir * t,
                    intensity: T::lit(LIDAR_INTENSITY),
                });
                ids[row * w + col] = scene.primitives[i].class_id;
                primitives[row * w + col] = Some(i);
            }
        }
    }
    LidarRender {
        scan: RawScan::new(points).expect("ray hits are finite"),
        range_labels: SegmentMap::new(w, h, ids, scene.labels.clone())
            .expect("scene class ids are validated"),
        primitives,
    }
}

/// Everything rendered from one scene.
#[derive(Debug, Clone)]
pub struct GroundTruthFrame<T> {
    pub scan: RawScan<T>,
    pub range_labels: SegmentMap,
    pub depth: DepthMap<T>,
    pub segments: SegmentMap,
    pub surfaces: Vec<Option<SurfaceHit<T>>>,
}

impl<T: Real> GroundTruthFrame<T> {
    pub fn surface(&self, u: usize, v: usize) -> Option<SurfaceHit<T>> {
        self.surfaces[v * self.depth.width() + u]
    }

    /// Fraction of camera pixels whose class is in `classes`.
    pub fn class_pixel_ratio(&self, classes: &ClassWhitelist) -> f64 {
        let ids = self.segments.ids();
        ids.iter().filter(|id| classes.contains(**id)).count() as f64 / ids.len() as f64
    }
}

pub fn render_frame<T: Real>(scene: &Scene<T>, fov: &FovSpec) -> GroundTruthFrame<T> {
    let cam = raycast_camera(scene);
    let lidar = raycast_lidar(scene, fov);
    GroundTruthFrame {
        scan: lidar.scan,
        range_labels: lidar.range_labels,
        depth: cam.depth,
        segments: cam.segments,
        surfaces: cam.surfaces,
    }
}

/// Outer-boundary pixels of objects in `classes`: pixels with a 4-neighbor
/// that is empty or shows a different primitive farther away. Row-major.
pub fn silhouette_pixels<T: Real>(
    frame: &GroundTruthFrame<T>,
    classes: &ClassWhitelist,
) -> Vec<(usize, usize)> {
    let (w, h) = (frame.depth.width(), frame.depth.height());
    let mut out = Vec::new();
    for v in 0..h {
        for u in 0..w {
            let Some(hit) = frame.surface(u, v) else {
                continue;
            };
            if !classes.contains(frame.segments.get(u, v)) {
                continue;
            }
            let z = frame.depth.get(u, v).expect("surface pixels have depth");
            let neighbors = [
                (u.wrapping_sub(1), v),
                (u + 1, v),
                (u, v.wrapping_sub(1)),
                (u, v + 1),
            ];
            let on_edge = neighbors.iter().any(|&(nu, nv)| {
                if nu >= w || nv >= h {
                    return false;
                }
                match frame.surface(nu, nv) {
                    None => true,
                    Some(n) => {
                        n.primitive != hit.primitive
                            && frame.depth.get(nu, nv).is_some_and(|nz| nz > z)
                    }
                }
            });
            if on_edge {
                out.push((u, v));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LongTail<T> {
    pub cloud: LabeledPointCloud<T>,
    /// Indices into `cloud` of the injected points.
    pub injected: Vec<usize>,
}

/// Appends one pseudo point per pixel, back-projected at the rendered depth
/// plus `offset` and labeled with the pixel's class. Mimics the smeared
/// depth of a depth network at object edges.
pub fn inject_long_tail<T: Real>(
    pseudo: &LabeledPointCloud<T>,
    frame: &GroundTruthFrame<T>,
    calib: &CalibrationSet<T>,
    pixels: &[(usize, usize)],
    offset: T,
) -> Result<LongTail<T>> {
    if !(offset.is_finite() && offset > T::zero()) {
        return Err(Error::Domain(format!(
            "long-tail offset must be positive, got {offset}"
        )));
    }
    if pseudo.labels() != frame.segments.labels() {
        return Err(Error::Contract(
            "pseudo cloud and frame use different label maps".into(),
        ));
    }
    let mut points = pseudo.points().to_vec();
    let mut injected = Vec::with_capacity(pixels.len());
    for &(u, v) in pixels {
        let z = (u < frame.depth.width() && v < frame.depth.height())
            .then(|| frame.depth.get(u, v))
            .flatten()
            .ok_or_else(|| Error::Domain(format!("pixel ({u}, {v}) has no depth to extend")))?;
        let px = HomogeneousPixel::new(T::lit(u as f64), T::lit(v as f64), z + offset);
        injected.push(points.len());
        points.push(LabeledPoint {
            position: calib.backproject_pixel(px)?,
            intensity: T::zero(),
            class_id: frame.segments.get(u, v),
            provenance: Provenance::Pseudo,
        });
    }
    Ok(LongTail {
        cloud: LabeledPointCloud::new(points, pseudo.labels().clone())?,
        injected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rangeview::spherical_project;
    use crate::sgp::sgp_generate;

    fn labels() -> Arc<LabelMap> {
        Arc::new(LabelMap::semantic_kitti())
    }

    fn small_camera() -> CameraSpec {
        CameraSpec {
            width: 124,
            height: 38,
            fx: 72.15,
            fy: 72.15,
            cx: 62.0,
            cy: 18.75,
            ..CameraSpec::default()
        }
    }

    fn scene(primitives: Vec<PrimitiveSpec>, camera: CameraSpec) -> Scene<f64> {
        SceneDescription {
            camera,
            primitives,
            ..SceneDescription::default()
        }
        .build(labels())
        .unwrap()
    }

    fn car_scene() -> Scene<f64> {
        scene(
            vec![
                PrimitiveSpec::Plane {
                    class: "road".into(),
                    normal: [0.0, 0.0, 1.0],
                    offset: -1.73,
                },
                PrimitiveSpec::Box {
                    class: "car".into(),
                    min: [10.0, -1.0, -1.73],
                    max: [14.0, 0.8, -0.23],
                },
            ],
            small_camera(),
        )
    }

    #[test]
    fn plane_orthogonal_to_optical_axis_gives_constant_depth() {
        // LiDAR x = 10.27 is camera z = 10 with the default extrinsics
        let s = scene(
            vec![PrimitiveSpec::Plane {
                class: "building".into(),
                normal: [1.0, 0.0, 0.0],
                offset: 10.27,
            }],
            small_camera(),
        );
        let cam = raycast_camera(&s);
        assert_eq!(cam.depth.valid_count(), 124 * 38);
        for &d in cam.depth.depths() {
            assert!((d - 10.0).abs() < 1e-12, "{d}");
        }
        assert!(cam.segments.ids().iter().all(|&id| id == 13));
    }

    #[test]
    fn sphere_on_axis_principal_depth() {
        let s = scene(
            vec![PrimitiveSpec::Sphere {
                class: "vegetation".into(),
                center: [20.27, 0.0, -0.08],
                radius: 3.0,
            }],
            CameraSpec::default(),
        );
        let cam = raycast_camera(&s);
        // principal point (621, 187.5) falls between rows 187 and 188
        let d187 = cam.depth.get(621, 187).unwrap();
        let d188 = cam.depth.get(621, 188).unwrap();
        assert!((d187 - 17.0).abs() < 1e-3 && (d188 - 17.0).abs() < 1e-3);
        let exact = CameraSpec {
            cy: 187.0,
            ..CameraSpec::default()
        };
        let s = SceneDescription {
            camera: exact,
            primitives: vec![PrimitiveSpec::Sphere {
                class: "vegetation".into(),
                center: [20.27, 0.0, -0.08],
                radius: 3.0,
            }],
            ..SceneDescription::default()
        }
        .build::<f64>(labels())
        .unwrap();
        assert!((raycast_camera(&s).depth.get(621, 187).unwrap() - 17.0).abs() < 1e-12);
    }

    #[test]
    fn empty_scene_renders_nothing() {
        let s = scene(vec![], small_camera());
        let f = render_frame(&s, &FovSpec::default());
        assert_eq!(f.depth.valid_count(), 0);
        assert!(f.scan.is_empty());
        assert!(f.segments.ids().iter().all(|&id| id == 0));
        assert!(surface_distance(Vec3::new(1.0, 2.0, 3.0), &s).is_infinite());
    }

    #[test]
    fn lidar_plane_facing_sensor() {
        let s = scene(
            vec![PrimitiveSpec::Plane {
                class: "building".into(),
                normal: [1.0, 0.0, 0.0],
                offset: 10.0,
            }],
            small_camera(),
        );
        let fov = FovSpec::from_degrees(3.0, -25.0, 256, 16).unwrap();
        let lidar = raycast_lidar(&s, &fov);
        // rays pointing away from the plane miss
        assert!(lidar.scan.len() < 256 * 16);
        for p in lidar.scan.points() {
            assert!((p.position.x - 10.0).abs() < 1e-12);
            assert_eq!(p.intensity, 0.5);
        }
    }

    #[test]
    fn lidar_points_reproject_to_their_pixel() {
        let s = car_scene();
        let fov = FovSpec::from_degrees(3.0, -25.0, 512, 32).unwrap();
        let lidar = raycast_lidar(&s, &fov);
        let img = spherical_project(&lidar.scan, &fov);
        assert_eq!(img.valid_count(), lidar.scan.len());
        let mut k = 0;
        for row in 0..32 {
            for col in 0..512 {
                if lidar.primitives[row * 512 + col].is_some() {
                    assert_eq!(img.source_index(col, row), Some(k));
                    k += 1;
                }
            }
        }
    }

    #[test]
    fn backprojected_depth_recovers_hit_points() {
        let s = car_scene();
        let cam = raycast_camera(&s);
        for v in 0..s.height() {
            for u in 0..s.width() {
                let Some(hit) = cam.surfaces[v * s.width() + u] else {
                    assert!(cam.depth.get(u, v).is_none());
                    continue;
                };
                let z = cam.depth.get(u, v).unwrap();
                let p = s
                    .calib()
                    .backproject_pixel(HomogeneousPixel::new(u as f64, v as f64, z))
                    .unwrap();
                assert!(p.max_abs_diff(hit.point) < 1e-6);
                assert_eq!(
                    cam.segments.get(u, v),
                    s.primitives()[hit.primitive].class_id
                );
            }
        }
    }

    #[test]
    fn sgp_points_lie_on_the_car() {
        let s = car_scene();
        let f = render_frame(&s, &FovSpec::default());
        let wl = ClassWhitelist::from_names(&["car"], labels()).unwrap();
        let (cloud, _) = sgp_generate(&f.depth, &f.segments, &wl, s.calib()).unwrap();
        assert!(!cloud.is_empty());
        for p in cloud.points() {
            assert!(s.primitives()[1].shape.distance(p.position) < 1e-9);
        }
    }

    #[test]
    fn box_face_offset_distance() {
        let s = car_scene();
        let face_center = Vec3::new(9.8, -0.1, -0.98);
        assert!((surface_distance(face_center, &s) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn long_tail_points_sit_behind_the_silhouette() {
        let s = car_scene();
        let f = render_frame(&s, &FovSpec::default());
        let wl = ClassWhitelist::from_names(&["car"], labels()).unwrap();
        let (cloud, _) = sgp_generate(&f.depth, &f.segments, &wl, s.calib()).unwrap();
        let pixels = silhouette_pixels(&f, &wl);
        assert!(!pixels.is_empty());
        let tail = inject_long_tail(&cloud, &f, s.calib(), &pixels, 1.0).unwrap();
        assert_eq!(tail.injected.len(), pixels.len());
        assert_eq!(tail.cloud.len(), cloud.len() + pixels.len());
        for (&i, &(u, v)) in tail.injected.iter().zip(&pixels) {
            let p = tail.cloud.points()[i].position;
            let px = s.calib().project_lidar_to_pixel(p).unwrap();
            assert!((px.u - u as f64).abs() < 1e-9 && (px.v - v as f64).abs() < 1e-9);
            assert!((px.z - f.depth.get(u, v).unwrap() - 1.0).abs() < 1e-9);
        }
        let same = inject_long_tail(&cloud, &f, s.calib(), &[], 1.0).unwrap();
        assert_eq!(same.cloud, cloud);
        assert!(inject_long_tail(&cloud, &f, s.calib(), &pixels, 0.0).is_err());
    }

    #[test]
    fn rendering_is_deterministic() {
        let s = car_scene();
        let a = render_frame(&s, &FovSpec::default());
        let b = render_frame(&s, &FovSpec::default());
        assert_eq!(a.scan, b.scan);
        assert_eq!(a.depth, b.depth);
        assert_eq!(a.segments, b.segments);
        assert_eq!(a.surfaces, b.surfaces);
    }
}
