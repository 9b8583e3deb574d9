//! Pinhole ground-plane camera.
//!
//! Frames used here:
//! - world: x east, y north, z up, ground at z = 0;
//! - robot: x forward, y left, origin at the robot center on the ground;
//! - camera: x right, y down, z along the optical axis.
//!
//! Pixel centers sit on integer coordinates, so `(u, v) = (col, row)`.

use crate::kinodynamics::State2D;
use crate::world::{Patch, TractionField};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io::{self, BufRead, Write};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self::from_horizontal_fov(424, 240, 69f64.to_radians())
    }
}

impl CameraIntrinsics {
    /// Square pixels with the principal point at the image center.
    pub fn from_horizontal_fov(width: usize, height: usize, hfov: f64) -> Self {
        let f = (width as f64 / 2.0) / (hfov / 2.0).tan();
        Self {
            fx: f,
            fy: f,
            cx: (width as f64 - 1.0) / 2.0,
            cy: (height as f64 - 1.0) / 2.0,
            width,
            height,
        }
    }

    fn max_u(&self) -> f64 {
        (self.width - 1) as f64
    }

    fn max_v(&self) -> f64 {
        (self.height - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraExtrinsics {
    pub height_above_ground: f64,
    pub pitch_down: f64,
    /// Camera position ahead of the robot center, meters.
    pub forward_offset: f64,
}

impl Default for CameraExtrinsics {
    fn default() -> Self {
        Self {
            height_above_ground: 1.0,
            pitch_down: 25f64.to_radians(),
            forward_offset: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Camera {
    pub intrinsics: CameraIntrinsics,
    pub extrinsics: CameraExtrinsics,
    /// Usable sensing range measured from the camera center.
    pub max_range: f64,
}

impl Default for Camera {
    fn default() -> Self {
        Self {
            intrinsics: CameraIntrinsics::default(),
            extrinsics: CameraExtrinsics::default(),
            max_range: 5.0,
        }
    }
}

const MIN_DEPTH: f64 = 1e-9;

/// World-to-pixel mapping for one camera pose with the trigonometry hoisted.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Projector {
    px: f64,
    py: f64,
    cos_t: f64,
    sin_t: f64,
    sin_p: f64,
    cos_p: f64,
    offset: f64,
    height: f64,
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    max_u: f64,
    max_v: f64,
    max_range2: f64,
}

impl Projector {
    fn new(camera: &Camera, pose: &State2D) -> Self {
        let (sin_t, cos_t) = pose.theta.sin_cos();
        let (sin_p, cos_p) = camera.extrinsics.pitch_down.sin_cos();
        let i = &camera.intrinsics;
        Self {
            px: pose.px,
            py: pose.py,
            cos_t,
            sin_t,
            sin_p,
            cos_p,
            offset: camera.extrinsics.forward_offset,
            height: camera.extrinsics.height_above_ground,
            fx: i.fx,
            fy: i.fy,
            cx: i.cx,
            cy: i.cy,
            max_u: i.max_u(),
            max_v: i.max_v(),
            max_range2: camera.max_range * camera.max_range,
        }
    }

    #[inline]
    fn classify(&self, world_pt: (f64, f64)) -> Option<ViewCoords> {
        let dx = world_pt.0 - self.px;
        let dy = world_pt.1 - self.py;
        let f = self.cos_t * dx + self.sin_t * dy - self.offset;
        let left = -self.sin_t * dx + self.cos_t * dy;
        let zc = self.cos_p * f + self.sin_p * self.height;
        if !(zc > MIN_DEPTH) {
            return None;
        }
        if f * f + left * left + self.height * self.height > self.max_range2 {
            return None;
        }
        let inv = 1.0 / zc;
        let u = self.cx - self.fx * left * inv;
        let v = self.cy + self.fy * (self.cos_p * self.height - self.sin_p * f) * inv;
        if !(u >= 0.0 && u <= self.max_u && v >= 0.0) {
            return None;
        }
        if v <= self.max_v {
            Some(ViewCoords::Image(u, v))
        } else {
            Some(ViewCoords::NearField(u, v))
        }
    }
}

/// Where a ground point lands relative to the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViewCoords {
    /// Inside the image rectangle.
    Image(f64, f64),
    /// In front of the camera, inside the horizontal field of view and the
    /// range limit, but below the lowest image row (the strip of ground
    /// between the robot and the bottom of the picture).
    NearField(f64, f64),
}

impl Camera {
    pub fn new(intrinsics: CameraIntrinsics, extrinsics: CameraExtrinsics, max_range: f64) -> Self {
        Self {
            intrinsics,
            extrinsics,
            max_range,
        }
    }

    pub fn width(&self) -> usize {
        self.intrinsics.width
    }

    pub fn height(&self) -> usize {
        self.intrinsics.height
    }

    fn range_from_camera(&self, forward: f64, left: f64) -> f64 {
        let f = forward - self.extrinsics.forward_offset;
        (f * f + left * left + self.extrinsics.height_above_ground.powi(2)).sqrt()
    }

    /// Camera center in world coordinates (x, y); height is the extrinsic height.
    pub fn center_in_world(&self, pose: &State2D) -> (f64, f64) {
        let (s, c) = pose.theta.sin_cos();
        let off = self.extrinsics.forward_offset;
        (pose.px + c * off, pose.py + s * off)
    }

    fn classify(&self, world_pt: (f64, f64), pose: &State2D) -> Option<ViewCoords> {
        Projector::new(self, pose).classify(world_pt)
    }

    /// Projects a world ground point into the image of a camera mounted on a
    /// robot at `pose`. Absent when behind the camera, outside the image or
    /// beyond `max_range`.
    pub fn project_ground_point(&self, world_pt: (f64, f64), pose: &State2D) -> Option<(f64, f64)> {
        match self.classify(world_pt, pose)? {
            ViewCoords::Image(u, v) => Some((u, v)),
            ViewCoords::NearField(..) => None,
        }
    }

    /// Like [`Camera::project_ground_point`] but also reports points in the
    /// near-field strip below the image.
    pub fn view_coords(&self, world_pt: (f64, f64), pose: &State2D) -> Option<ViewCoords> {
        self.classify(world_pt, pose)
    }

    /// Robot-frame ground intersection of a pixel ray, without range limits.
    pub fn back_project_to_robot(&self, u: f64, v: f64) -> Option<(f64, f64)> {
        let i = &self.intrinsics;
        if !(0.0..=i.max_u()).contains(&u) || !(0.0..=i.max_v()).contains(&v) {
            return None;
        }
        let e = &self.extrinsics;
        let (s, c) = e.pitch_down.sin_cos();
        let a = (u - i.cx) / i.fx;
        let b = (v - i.cy) / i.fy;
        // ray = a * x_c + b * y_c + z_c, expressed in the robot frame
        let dx = -b * s + c;
        let dy = -a;
        let dz = -b * c - s;
        if dz > -1e-12 {
            return None;
        }
        let t = e.height_above_ground / -dz;
        Some((e.forward_offset + t * dx, t * dy))
    }

    /// Intersects the ray through pixel `(u, v)` with the ground plane and
    /// returns world coordinates. Absent for out-of-image pixels and rays at or
    /// above the horizon.
    pub fn back_project_pixel(&self, u: f64, v: f64, pose: &State2D) -> Option<(f64, f64)> {
        self.back_project_to_robot(u, v).map(|p| robot_to_world(p, pose))
    }

    /// Per-pixel ground footprint in the robot frame.
    pub fn ground_lut(&self) -> GroundLut {
        let (w, h) = (self.width(), self.height());
        let mut cells = Vec::with_capacity(w * h);
        for row in 0..h {
            for col in 0..w {
                let cell = self
                    .back_project_to_robot(col as f64, row as f64)
                    .filter(|&(f, l)| self.range_from_camera(f, l) <= self.max_range)
                    .map(|(f, l)| [f, l]);
                cells.push(cell);
            }
        }
        let in_range = cells.iter().map(Option::is_some).collect();
        GroundLut {
            camera: *self,
            cells,
            in_range,
        }
    }
}

pub fn world_to_robot(world_pt: (f64, f64), pose: &State2D) -> (f64, f64) {
    let (s, c) = pose.theta.sin_cos();
    let dx = world_pt.0 - pose.px;
    let dy = world_pt.1 - pose.py;
    (c * dx + s * dy, -s * dx + c * dy)
}

pub fn robot_to_world(robot_pt: (f64, f64), pose: &State2D) -> (f64, f64) {
    let (s, c) = pose.theta.sin_cos();
    (
        pose.px + c * robot_pt.0 - s * robot_pt.1,
        pose.py + s * robot_pt.0 + c * robot_pt.1,
    )
}

/// Precomputed robot-frame ground point for every pixel within range.
#[derive(Debug, Clone)]
pub struct GroundLut {
    camera: Camera,
    cells: Vec<Option<[f64; 2]>>,
    in_range: Arc<[bool]>,
}

impl GroundLut {
    pub fn camera(&self) -> &Camera {
        &self.camera
    }

    pub fn get(&self, row: usize, col: usize) -> Option<[f64; 2]> {
        self.cells[row * self.camera.width() + col]
    }

    pub fn cells(&self) -> &[Option<[f64; 2]>] {
        &self.cells
    }
}

/// Grid of traversability values in image space, tagged with the pose it was
/// captured from.
#[derive(Debug, Clone, PartialEq)]
pub struct TraversabilityImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
    frame_pose: State2D,
    camera: Camera,
    projector: Projector,
    /// Pixels with a ground footprint in range. Lookups interpolate over these only.
    in_range: Option<Arc<[bool]>>,
}

impl TraversabilityImage {
    pub fn filled(camera: Camera, frame_pose: State2D, value: f32) -> Self {
        let (width, height) = (camera.width(), camera.height());
        Self {
            width,
            height,
            data: vec![value.clamp(0.0, 1.0); width * height],
            frame_pose,
            camera,
            projector: Projector::new(&camera, &frame_pose),
            in_range: None,
        }
    }

    /// Builds an image from row-major values, clamping each into `[0, 1]`.
    pub fn from_values(camera: Camera, frame_pose: State2D, width: usize, height: usize, values: Vec<f32>) -> Self {
        assert_eq!(values.len(), width * height, "image size mismatch");
        let data = values
            .into_iter()
            .map(|x| if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) })
            .collect();
        Self {
            width,
            height,
            data,
            frame_pose,
            camera,
            projector: Projector::new(&camera, &frame_pose),
            in_range: None,
        }
    }

    pub fn frame_pose(&self) -> &State2D {
        &self.frame_pose
    }

    /// Same pixels, interpreted as captured from `pose`.
    pub fn with_frame_pose(mut self, pose: State2D) -> Self {
        self.frame_pose = pose;
        self.projector = Projector::new(&self.camera, &pose);
        self
    }

    pub fn camera(&self) -> &Camera {
        &self.camera
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.width + col]
    }

    pub fn values(&self) -> &[f32] {
        &self.data
    }

    /// Bilinear interpolation between pixel centers. Zero outside the image.
    pub fn bilinear_sample(&self, u: f64, v: f64) -> f64 {
        let max_u = (self.width - 1) as f64;
        let max_v = (self.height - 1) as f64;
        if !(u >= 0.0 && v >= 0.0 && u <= max_u && v <= max_v) {
            return 0.0;
        }
        let u0 = u.floor() as usize;
        let v0 = v.floor() as usize;
        let u1 = (u0 + 1).min(self.width - 1);
        let v1 = (v0 + 1).min(self.height - 1);
        let fu = u - u0 as f64;
        let fv = v - v0 as f64;
        let top = f64::from(self.get(v0, u0)) * (1.0 - fu) + f64::from(self.get(v0, u1)) * fu;
        let bottom = f64::from(self.get(v1, u0)) * (1.0 - fu) + f64::from(self.get(v1, u1)) * fu;
        top * (1.0 - fv) + bottom * fv
    }

    /// Like [`Self::bilinear_sample`], but only blends pixels that are in
    /// range. Out-of-range pixels hold 0 and would otherwise darken the rim
    /// of the view.
    fn masked_sample(&self, u: f64, v: f64, mask: &[bool]) -> f64 {
        let max_u = (self.width - 1) as f64;
        let max_v = (self.height - 1) as f64;
        if !(u >= 0.0 && v >= 0.0 && u <= max_u && v <= max_v) {
            return 0.0;
        }
        let u0 = u.floor() as usize;
        let v0 = v.floor() as usize;
        let u1 = (u0 + 1).min(self.width - 1);
        let v1 = (v0 + 1).min(self.height - 1);
        let fu = u - u0 as f64;
        let fv = v - v0 as f64;
        let (i00, i01) = (v0 * self.width + u0, v0 * self.width + u1);
        let (i10, i11) = (v1 * self.width + u0, v1 * self.width + u1);
        if mask[i00] && mask[i01] && mask[i10] && mask[i11] {
            let d = &self.data;
            let top = f64::from(d[i00]) * (1.0 - fu) + f64::from(d[i01]) * fu;
            let bottom = f64::from(d[i10]) * (1.0 - fu) + f64::from(d[i11]) * fu;
            return top * (1.0 - fv) + bottom * fv;
        }
        let taps = [
            (v0, u0, (1.0 - fu) * (1.0 - fv)),
            (v0, u1, fu * (1.0 - fv)),
            (v1, u0, (1.0 - fu) * fv),
            (v1, u1, fu * fv),
        ];
        let mut sum = 0.0;
        let mut weight = 0.0;
        for (row, col, w) in taps {
            if mask[row * self.width + col] {
                sum += w * f64::from(self.get(row, col));
                weight += w;
            }
        }
        if weight > 1e-9 {
            sum / weight
        } else {
            self.bilinear_sample(u, v)
        }
    }

    fn sample(&self, u: f64, v: f64) -> f64 {
        match &self.in_range {
            Some(mask) if mask.len() == self.data.len() => self.masked_sample(u, v, mask),
            _ => self.bilinear_sample(u, v),
        }
    }

    /// Traversability at a world point: zero outside the camera's view set,
    /// interpolated image value otherwise. Near-field points below the image
    /// read the lowest row.
    #[inline]
    pub fn lookup(&self, world_pt: (f64, f64)) -> f64 {
        match self.projector.classify(world_pt) {
            Some(ViewCoords::Image(u, v)) => self.sample(u, v),
            Some(ViewCoords::NearField(u, _)) => self.sample(u, (self.height - 1) as f64),
            None => 0.0,
        }
    }

    pub fn write_pgm<W: Write>(&self, out: W) -> io::Result<()> {
        write_pgm(out, self.width, self.height, self.data.iter().copied())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for row in self.data.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Reads values written by [`TraversabilityImage::write_csv`].
    pub fn read_csv<R: BufRead>(input: R, camera: Camera, frame_pose: State2D) -> io::Result<Self> {
        let mut values = Vec::new();
        let mut width = None;
        let mut height = 0;
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Result<Vec<f32>, _> = line.split(',').map(|s| s.trim().parse::<f32>()).collect();
            let row = row.map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(io::Error::new(io::ErrorKind::InvalidData, "ragged csv image"));
                }
                _ => {}
            }
            values.extend(row);
            height += 1;
        }
        let width = width.unwrap_or(0);
        if width == 0 || height == 0 {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "empty csv image"));
        }
        Ok(Self::from_values(camera, frame_pose, width, height, values))
    }
}

/// Binary 8-bit PGM, values in `[0, 1]` scaled to `0..=255`.
pub fn write_pgm<W: Write>(mut out: W, width: usize, height: usize, values: impl Iterator<Item = f32>) -> io::Result<()> {
    write!(out, "P5\n{width} {height}\n255\n")?;
    let bytes: Vec<u8> = values
        .map(|x| (x.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    out.write_all(&bytes)
}

/// Options for the simulator-side image renderer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderSettings {
    /// Patches taller than this occlude the ground behind them.
    pub block_height: f64,
    pub noise_sigma: f64,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            block_height: 0.15,
            noise_sigma: 0.0,
        }
    }
}

/// Renders a traversability image: each in-range ground pixel takes
/// `traction(x, y)` unless the camera ray crosses an occluding cylinder first.
pub fn render_image<F, R>(
    pose: &State2D,
    lut: &GroundLut,
    traction: F,
    occluders: &[Patch],
    noise_sigma: f64,
    rng: &mut R,
) -> TraversabilityImage
where
    F: Fn(f64, f64) -> f64,
    R: Rng + ?Sized,
{
    let camera = *lut.camera();
    let cam_xy = camera.center_in_world(pose);
    let cam_h = camera.extrinsics.height_above_ground;
    let reach = camera.max_range;
    let nearby: Vec<Patch> = occluders
        .iter()
        .filter(|p| (p.center.0 - cam_xy.0).hypot(p.center.1 - cam_xy.1) <= reach + p.radius)
        .copied()
        .collect();
    let (s, c) = pose.theta.sin_cos();
    let mut data = Vec::with_capacity(lut.cells().len());
    for cell in lut.cells() {
        let value = match cell {
            None => 0.0,
            Some([f, l]) => {
                let gx = pose.px + c * f - s * l;
                let gy = pose.py + s * f + c * l;
                let hidden = nearby.iter().any(|p| ray_hits_cylinder(cam_xy, cam_h, (gx, gy), p));
                let base = if hidden { 0.0 } else { traction(gx, gy) };
                if noise_sigma > 0.0 {
                    let n: f64 = rng.sample(StandardNormal);
                    (base + noise_sigma * n).clamp(0.0, 1.0)
                } else {
                    base.clamp(0.0, 1.0)
                }
            }
        };
        data.push(value as f32);
    }
    TraversabilityImage {
        width: camera.width(),
        height: camera.height(),
        data,
        frame_pose: *pose,
        camera,
        projector: Projector::new(&camera, pose),
        in_range: Some(lut.in_range.clone()),
    }
}

/// Whether the sight line from a camera at `cam_xy`/`cam_h` down to the ground
/// point `g` passes through the cylinder above `patch`.
fn ray_hits_cylinder(cam_xy: (f64, f64), cam_h: f64, g: (f64, f64), patch: &Patch) -> bool {
    let dx = g.0 - cam_xy.0;
    let dy = g.1 - cam_xy.1;
    let d2 = dx * dx + dy * dy;
    // Ray height falls linearly from cam_h to 0; it is below the top of the
    // cylinder for t >= t0.
    let t0 = if patch.height >= cam_h {
        0.0
    } else {
        1.0 - patch.height / cam_h
    };
    let px = patch.center.0 - cam_xy.0;
    let py = patch.center.1 - cam_xy.1;
    let t = if d2 > 0.0 { ((px * dx + py * dy) / d2).clamp(t0, 1.0) } else { 1.0 };
    let ex = t * dx - px;
    let ey = t * dy - py;
    ex * ex + ey * ey <= patch.radius * patch.radius
}

/// Ground-truth traversability as the camera would see it, occlusion-aware.
pub fn render_oracle_image<R: Rng + ?Sized>(
    pose: &State2D,
    field: &TractionField,
    lut: &GroundLut,
    settings: &RenderSettings,
    rng: &mut R,
) -> TraversabilityImage {
    let cam = lut.camera().center_in_world(pose);
    let reach = lut.camera().max_range;
    let local = TractionField {
        patches: field
            .patches
            .iter()
            .filter(|p| (p.center.0 - cam.0).hypot(p.center.1 - cam.1) <= reach + p.radius + 1.0)
            .copied()
            .collect(),
        ..field.clone()
    };
    let occluders: Vec<Patch> = local
        .patches
        .iter()
        .filter(|p| p.height > settings.block_height)
        .copied()
        .collect();
    render_image(
        pose,
        lut,
        |x, y| local.traction_at(x, y).mu(),
        &occluders,
        settings.noise_sigma,
        rng,
    )
}
