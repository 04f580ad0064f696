//! Human-editable scene files.
//!
//! ```toml
//! background = "unlabeled"
//!
//! [camera]
//! width = 1242
//! height = 375
//! fx = 721.5
//!
//! [[primitive]]
//! kind = "plane"
//! class = "road"
//! normal = [0.0, 0.0, 1.0]
//! offset = -1.73
//!
//! [[primitive]]
//! kind = "box"
//! class = "car"
//! min = [10.0, -1.0, -1.73]
//! max = [14.0, 0.8, -0.23]
//! ```
//!
//! Coordinates are in the LiDAR frame (x forward, y left, z up). Omitted
//! camera keys take the values of [`CameraSpec::default`].

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Primitive, Scene, Shape};
use crate::error::{Error, Result};
use crate::geometry::{CalibrationSet, Mat3, Mat4, Vec3};
use crate::labels::LabelMap;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraSpec {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Row-major 3×3 rectification rotation.
    pub r0_rect: [f64; 9],
    /// Row-major top 3×4 of the LiDAR-to-camera transform.
    pub velo_to_cam: [f64; 12],
}

impl Default for CameraSpec {
    /// 1242×375 KITTI-like camera 0.27 m ahead of and 0.08 m below the LiDAR,
    /// looking along LiDAR +x.
    fn default() -> Self {
        CameraSpec {
            width: 1242,
            height: 375,
            fx: 721.5,
            fy: 721.5,
            cx: 621.0,
            cy: 187.5,
            r0_rect: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            velo_to_cam: [
                0.0, -1.0, 0.0, 0.0, //
                0.0, 0.0, -1.0, -0.08, //
                1.0, 0.0, 0.0, -0.27,
            ],
        }
    }
}

impl CameraSpec {
    pub fn calibration<T: Real>(&self) -> Result<CalibrationSet<T>> {
        let l = T::lit;
        let p2 = [
            [l(self.fx), T::zero(), l(self.cx), T::zero()],
            [T::zero(), l(self.fy), l(self.cy), T::zero()],
            [T::zero(), T::zero(), T::one(), T::zero()],
        ];
        let r0 = Mat3::from_row_slice(&self.r0_rect.map(l));
        let v = self.velo_to_cam.map(l);
        let tr = Mat4::from_3x4(&[
            [v[0], v[1], v[2], v[3]],
            [v[4], v[5], v[6], v[7]],
            [v[8], v[9], v[10], v[11]],
        ]);
        CalibrationSet::new(p2, r0, tr)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PrimitiveSpec {
    Box {
        class: String,
        min: [f64; 3],
        max: [f64; 3],
    },
    Sphere {
        class: String,
        center: [f64; 3],
        radius: f64,
    },
    Plane {
        class: String,
        normal: [f64; 3],
        offset: f64,
    },
}

impl PrimitiveSpec {
    pub fn class(&self) -> &str {
        match self {
            PrimitiveSpec::Box { class, .. }
            | PrimitiveSpec::Sphere { class, .. }
            | PrimitiveSpec::Plane { class, .. } => class,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDescription {
    #[serde(default = "default_background")]
    pub background: String,
    #[serde(default)]
    pub camera: CameraSpec,
    #[serde(default, rename = "primitive")]
    pub primitives: Vec<PrimitiveSpec>,
}

fn default_background() -> String {
    "unlabeled".into()
}

impl Default for SceneDescription {
    fn default() -> Self {
        SceneDescription {
            background: default_background(),
            camera: CameraSpec::default(),
            primitives: Vec::new(),
        }
    }
}

impl SceneDescription {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse(origin, e.to_string().trim_end()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene descriptions serialize to TOML")
    }

    /// Resolves class names against `labels` and validates every primitive.
    pub fn build<T: Real>(&self, labels: Arc<LabelMap>) -> Result<Scene<T>> {
        let class_of = |name: &str| {
            labels
                .id_of(name)
                .ok_or_else(|| Error::Config(format!("unknown class {name:?} in scene")))
        };
        let v = |a: [f64; 3]| Vec3::from_array(a.map(T::lit));
        let mut primitives = Vec::with_capacity(self.primitives.len());
        for (i, p) in self.primitives.iter().enumerate() {
            let shape = match *p {
                PrimitiveSpec::Box { min, max, .. } => Shape::new_box(v(min), v(max)),
                PrimitiveSpec::Sphere { center, radius, .. } => {
                    Shape::new_sphere(v(center), T::lit(radius))
                }
                PrimitiveSpec::Plane { normal, offset, .. } => {
                    Shape::new_plane(v(normal), T::lit(offset))
                }
            }
            .map_err(|e| Error::Config(format!("primitive {i}: {e}")))?;
            primitives.push(Primitive {
                shape,
                class_id: class_of(p.class())?,
            });
        }
        Scene::new(
            primitives,
            self.camera.calibration()?,
            self.camera.width,
            self.camera.height,
            class_of(&self.background)?,
            labels,
        )
    }
}

pub fn read_scene_file<T: Real>(path: &Path, labels: Arc<LabelMap>) -> Result<Scene<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SceneDescription::parse(&text, path)?.build(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> Arc<LabelMap> {
        Arc::new(LabelMap::semantic_kitti())
    }

    #[test]
    fn parses_module_example() {
        let text = r#"
background = "unlabeled"

[camera]
width = 1242
height = 375
fx = 721.5

[[primitive]]
kind = "plane"
class = "road"
normal = [0.0, 0.0, 1.0]
offset = -1.73

[[primitive]]
kind = "box"
class = "car"
min = [10.0, -1.0, -1.73]
max = [14.0, 0.8, -0.23]
"#;
        let d = SceneDescription::parse(text, Path::new("s.toml")).unwrap();
        assert_eq!(d.primitives.len(), 2);
        let scene: Scene<f64> = d.build(labels()).unwrap();
        assert_eq!(scene.primitives()[1].class_id, 1);
        assert_eq!(scene.width(), 1242);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut d = SceneDescription::default();
        d.primitives.push(PrimitiveSpec::Sphere {
            class: "vegetation".into(),
            center: [20.0, 5.0, 0.0],
            radius: 1.5,
        });
        let back = SceneDescription::parse(&d.to_toml(), Path::new("x")).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn unknown_keys_and_classes_rejected() {
        let e = SceneDescription::parse("colour = 3\n", Path::new("a.toml")).unwrap_err();
        assert!(e.to_string().contains("colour"), "{e}");
        let e = SceneDescription::parse(
            "[[primitive]]\nkind = \"sphere\"\nclass = \"car\"\ncenter = [0.0, 0.0, 0.0]\nradius = 1.0\ncolour = 2\n",
            Path::new("b.toml"),
        )
        .unwrap_err();
        assert!(e.to_string().contains("colour"), "{e}");
        let d = SceneDescription::parse(
            "[[primitive]]\nkind = \"sphere\"\nclass = \"dragon\"\ncenter = [0.0, 0.0, 0.0]\nradius = 1.0\n",
            Path::new("c.toml"),
        )
        .unwrap();
        assert!(d.build::<f64>(labels()).is_err());
    }

    #[test]
    fn degenerate_primitive_rejected() {
        let d = SceneDescription::parse(
            "[[primitive]]\nkind = \"sphere\"\nclass = \"car\"\ncenter = [0.0, 0.0, 0.0]\nradius = -1.0\n",
            Path::new("d.toml"),
        )
        .unwrap();
        let e = d.build::<f64>(labels()).unwrap_err();
        assert!(e.to_string().contains("primitive 0"), "{e}");
    }
}
