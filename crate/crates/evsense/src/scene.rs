//! Procedural grayscale scene generator with ground-truth boxes.
//!
//! Objects are flat-shaded square billboards moving on straight lines,
//! projected through a pinhole camera whose focal length follows the
//! horizontal field of view. This gives geometric and intensity change
//! without any external simulator: a wider field of view shrinks projected
//! objects, a brighter object against a darker background fires more
//! threshold crossings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{BBox, FrameLabels};
use crate::error::{Error, Result};
use crate::events::{Frame, FrameSequence};

/// One moving object: a square billboard of `size_m` meters facing the
/// camera, shaded by `albedo`.
///
/// With `texture_contrast > 0` the billboard carries a checkerboard of
/// `texture_cells` cells per side alternating between
/// `albedo * (1 ± texture_contrast)`; the pattern moves with the object, so
/// a translating object changes intensity across its whole footprint rather
/// than only at its silhouette. Zero contrast keeps the face flat.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub size_m: f64,
    /// Initial position in camera coordinates (x right, y down, z forward), meters.
    pub position: [f64; 3],
    /// Constant velocity, meters per second.
    pub velocity: [f64; 3],
    /// Surface reflectance in [0, 1]; rendered gray level is `albedo * 255`.
    pub albedo: f64,
    /// Relative checkerboard amplitude in [0, 1); 0 disables the texture.
    #[serde(default)]
    pub texture_contrast: f64,
    /// Checker cells per billboard side.
    #[serde(default = "default_texture_cells")]
    pub texture_cells: u32,
}

fn default_texture_cells() -> u32 {
    8
}

/// A full scene description; the same spec always renders byte-identical
/// frames and labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub seed: u64,
    pub width: u16,
    pub height: u16,
    pub frame_rate_hz: f64,
    pub duration_s: f64,
    pub fov_deg: f64,
    pub background_level: u8,
    pub objects: Vec<ObjectSpec>,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParameter("scene geometry must be nonzero".into()));
        }
        if self.frame_rate_hz <= 0.0 || !self.frame_rate_hz.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "frame rate must be positive, got {}",
                self.frame_rate_hz
            )));
        }
        if self.duration_s <= 0.0 || !self.duration_s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "duration must be positive, got {}",
                self.duration_s
            )));
        }
        if self.frame_count() == 0 {
            return Err(Error::InvalidParameter(
                "duration and frame rate imply zero frames".into(),
            ));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(Error::InvalidParameter(format!(
                "field of view must lie in (0, 180) degrees, got {}",
                self.fov_deg
            )));
        }
        for (i, obj) in self.objects.iter().enumerate() {
            if obj.size_m <= 0.0 || !obj.size_m.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "object {i} size must be positive"
                )));
            }
            if !(0.0..=1.0).contains(&obj.albedo) {
                return Err(Error::InvalidParameter(format!(
                    "object {i} albedo must lie in [0, 1]"
                )));
            }
            if !(0.0..1.0).contains(&obj.texture_contrast) {
                return Err(Error::InvalidParameter(format!(
                    "object {i} texture contrast must lie in [0, 1)"
                )));
            }
            if obj.texture_contrast > 0.0 && obj.texture_cells == 0 {
                return Err(Error::InvalidParameter(format!(
                    "object {i} texture needs at least one cell"
                )));
            }
        }
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        (self.duration_s * self.frame_rate_hz).floor() as usize
    }

    /// Builds a scene with `object_count` seeded random objects.
    ///
    /// Objects spawn inside the viewing frustum with bright albedos against a
    /// dark background, sized so their projections survive the ground-truth
    /// box filter at the given geometry.
    pub fn procedural(
        seed: u64,
        width: u16,
        height: u16,
        frame_rate_hz: f64,
        duration_s: f64,
        fov_deg: f64,
        object_count: usize,
    ) -> SceneSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half_fov = (fov_deg.to_radians() / 2.0).tan();
        let mut objects = Vec::with_capacity(object_count);
        for _ in 0..object_count {
            let z = rng.gen_range(3.0..7.0);
            let size = rng.gen_range(1.5..2.5);
            // Spawn within roughly half the frustum extent so motion keeps
            // the object on screen for a while.
            let lateral = 0.4 * z * half_fov;
            let vertical = lateral * f64::from(height) / f64::from(width);
            let x = rng.gen_range(-lateral..lateral);
            let y = rng.gen_range(-vertical..vertical);
            let vx = rng.gen_range(-2.0..2.0);
            let vy = rng.gen_range(-0.5..0.5);
            let vz = rng.gen_range(-0.3..0.3);
            let albedo = rng.gen_range(0.45..0.95);
            objects.push(ObjectSpec {
                size_m: size,
                position: [x, y, z],
                velocity: [vx, vy, vz],
                albedo,
                texture_contrast: 0.3,
                texture_cells: 8,
            });
        }
        SceneSpec {
            seed,
            width,
            height,
            frame_rate_hz,
            duration_s,
            fov_deg,
            background_level: 40,
            objects,
        }
    }
}

/// Pinhole camera intrinsics in pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraModel {
    pub f: f64,
    pub cx: f64,
    pub cy: f64,
}

/// Focal length in pixels for a horizontal field of view: `(W/2) / tan(F_v/2)`.
pub fn focal_from_fov(width_px: u16, fov_deg: f64) -> Result<f64> {
    if !(fov_deg > 0.0 && fov_deg < 180.0) {
        return Err(Error::InvalidParameter(format!(
            "field of view must lie in (0, 180) degrees, got {fov_deg}"
        )));
    }
    Ok(f64::from(width_px) / 2.0 / (fov_deg.to_radians() / 2.0).tan())
}

impl CameraModel {
    pub fn new(width: u16, height: u16, fov_deg: f64) -> Result<Self> {
        Ok(CameraModel {
            f: focal_from_fov(width, fov_deg)?,
            cx: f64::from(width) / 2.0,
            cy: f64::from(height) / 2.0,
        })
    }
}

/// Projects a camera-space point to pixel coordinates; `None` for points at
/// or behind the camera plane.
pub fn project_point(p: [f64; 3], cam: &CameraModel) -> Option<(f64, f64)> {
    if p[2] <= 0.0 {
        return None;
    }
    Some((cam.cx + cam.f * p[0] / p[2], cam.cy + cam.f * p[1] / p[2]))
}

/// Renders the scene: frames plus per-frame tight boxes of visible objects.
///
/// The nearest object wins each pixel; fully occluded or off-screen objects
/// produce no box. Track ids are stable object indices.
pub fn generate_sequence(spec: &SceneSpec) -> Result<(FrameSequence, Vec<FrameLabels>)> {
    spec.validate()?;
    let cam = CameraModel::new(spec.width, spec.height, spec.fov_deg)?;
    let width = spec.width as usize;
    let height = spec.height as usize;
    let n_frames = spec.frame_count();

    let gray = |albedo: f64| (albedo * 255.0).round().clamp(0.0, 255.0) as u8;

    let mut frames = Vec::with_capacity(n_frames);
    let mut labels = Vec::with_capacity(n_frames);
    let mut owner: Vec<i32> = vec![-1; width * height];
    let mut depth: Vec<f64> = vec![f64::INFINITY; width * height];
    // Projected footprint per object per frame: (u, v, half extent).
    let mut footprints: Vec<Option<(f64, f64, f64)>> = vec![None; spec.objects.len()];

    for k in 0..n_frames {
        let t_s = k as f64 / spec.frame_rate_hz;
        let t_ns = (t_s * 1e9).round() as u64;
        owner.fill(-1);
        depth.fill(f64::INFINITY);
        footprints.fill(None);

        for (idx, obj) in spec.objects.iter().enumerate() {
            let center = [
                obj.position[0] + obj.velocity[0] * t_s,
                obj.position[1] + obj.velocity[1] * t_s,
                obj.position[2] + obj.velocity[2] * t_s,
            ];
            let Some((u, v)) = project_point(center, &cam) else {
                continue;
            };
            let half = cam.f * (obj.size_m / 2.0) / center[2];
            footprints[idx] = Some((u, v, half));
            // A pixel is covered when its center falls inside the projected
            // square [u-half, u+half) x [v-half, v+half).
            let x0 = ((u - half - 0.5).ceil() as i64).clamp(0, width as i64) as usize;
            let x1 = ((u + half - 0.5).ceil() as i64).clamp(0, width as i64) as usize;
            let y0 = ((v - half - 0.5).ceil() as i64).clamp(0, height as i64) as usize;
            let y1 = ((v + half - 0.5).ceil() as i64).clamp(0, height as i64) as usize;
            for py in y0..y1 {
                let row = py * width;
                for px in x0..x1 {
                    let cell = row + px;
                    if center[2] < depth[cell] {
                        depth[cell] = center[2];
                        owner[cell] = idx as i32;
                    }
                }
            }
        }

        let mut pixels = vec![spec.background_level; width * height];
        let mut extents: Vec<Option<(usize, usize, usize, usize)>> =
            vec![None; spec.objects.len()];
        for (cell, &who) in owner.iter().enumerate() {
            if who < 0 {
                continue;
            }
            let idx = who as usize;
            let obj = &spec.objects[idx];
            let (px, py) = (cell % width, cell / width);
            let albedo = if obj.texture_contrast > 0.0 {
                let (u, v, half) = footprints[idx].expect("owned pixel implies a footprint");
                // Checker parity in billboard-local normalized coordinates.
                let su = (px as f64 + 0.5 - (u - half)) / (2.0 * half);
                let tv = (py as f64 + 0.5 - (v - half)) / (2.0 * half);
                let cu = (su * f64::from(obj.texture_cells)).floor() as i64;
                let cv = (tv * f64::from(obj.texture_cells)).floor() as i64;
                if (cu + cv).rem_euclid(2) == 0 {
                    obj.albedo * (1.0 + obj.texture_contrast)
                } else {
                    obj.albedo * (1.0 - obj.texture_contrast)
                }
            } else {
                obj.albedo
            };
            pixels[cell] = gray(albedo.clamp(0.0, 1.0));
            let e = extents[idx].get_or_insert((px, px, py, py));
            e.0 = e.0.min(px);
            e.1 = e.1.max(px);
            e.2 = e.2.min(py);
            e.3 = e.3.max(py);
        }

        let boxes = extents
            .iter()
            .enumerate()
            .filter_map(|(idx, e)| {
                e.map(|(x0, x1, y0, y1)| BBox {
                    x: x0 as f64,
                    y: y0 as f64,
                    w: (x1 - x0 + 1) as f64,
                    h: (y1 - y0 + 1) as f64,
                    class_id: 0,
                    track_id: idx as u32,
                })
            })
            .collect();

        frames.push(Frame { t_ns, pixels });
        labels.push(FrameLabels { frame_index: k as u64, t_ns, boxes });
    }

    let seq = FrameSequence {
        width: spec.width,
        height: spec.height,
        frame_rate_hz: Some(spec.frame_rate_hz),
        fov_deg: Some(spec.fov_deg),
        frames,
    };
    Ok((seq, labels))
}
