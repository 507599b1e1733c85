//! Pinhole cameras with an OpenCV-style frame: x right, y down, z forward.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn normalize(a: Vec3) -> Vec3 {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

impl Ray {
    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        [
            self.origin[0] + t * self.dir[0],
            self.origin[1] + t * self.dir[1],
            self.origin[2] + t * self.dir[2],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    /// Camera-to-world `[R | t]`, rows of a 3×4 matrix.
    pub pose: [[f64; 4]; 3],
}

impl Camera {
    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) || self.width == 0 || self.height == 0 {
            return Err(Error::param("camera needs positive focal lengths and image size"));
        }
        if self.pose.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::param("camera pose is not finite"));
        }
        let mut err: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let rtr: f64 = (0..3).map(|k| self.pose[k][i] * self.pose[k][j]).sum();
                err += (rtr - if i == j { 1.0 } else { 0.0 }).powi(2);
            }
        }
        if err.sqrt() >= 1e-6 {
            return Err(Error::param("camera rotation is not orthonormal"));
        }
        Ok(())
    }

    /// Camera at `eye` looking at `target`, `up` roughly the world up.
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3, fov_y_deg: f64, width: usize, height: usize) -> Self {
        let forward = normalize([target[0] - eye[0], target[1] - eye[1], target[2] - eye[2]]);
        let right = normalize(cross(forward, up));
        let down = cross(forward, right);
        let fy = 0.5 * height as f64 / (0.5 * fov_y_deg.to_radians()).tan();
        let mut pose = [[0.0; 4]; 3];
        for r in 0..3 {
            pose[r] = [right[r], down[r], forward[r], eye[r]];
        }
        Self {
            fx: fy,
            fy,
            cx: 0.5 * width as f64,
            cy: 0.5 * height as f64,
            width,
            height,
            pose,
        }
    }

    /// Cameras on a circle of `radius` around the origin at `elevation_deg`,
    /// azimuths evenly spread over `[start, start + span)` degrees.
    pub fn orbit(
        count: usize,
        radius: f64,
        elevation_deg: f64,
        azimuth_start_deg: f64,
        azimuth_span_deg: f64,
        fov_y_deg: f64,
        width: usize,
        height: usize,
    ) -> Vec<Self> {
        (0..count)
            .map(|i| {
                let az = azimuth_start_deg + azimuth_span_deg * i as f64 / count as f64;
                Self::at_angles(radius, elevation_deg, az, fov_y_deg, width, height)
            })
            .collect()
    }

    /// Camera at spherical angles looking at the origin, world up = +y.
    pub fn at_angles(
        radius: f64,
        elevation_deg: f64,
        azimuth_deg: f64,
        fov_y_deg: f64,
        width: usize,
        height: usize,
    ) -> Self {
        let (el, az) = (elevation_deg.to_radians(), azimuth_deg.to_radians());
        let eye = [
            radius * el.cos() * az.sin(),
            radius * el.sin(),
            radius * el.cos() * az.cos(),
        ];
        Self::look_at(eye, [0.0; 3], [0.0, 1.0, 0.0], fov_y_deg, width, height)
    }

    pub fn center(&self) -> Vec3 {
        [self.pose[0][3], self.pose[1][3], self.pose[2][3]]
    }

    /// Ray through the center of pixel `(u, v)` (column, row).
    pub fn ray(&self, u: usize, v: usize) -> Ray {
        let d = [
            (u as f64 + 0.5 - self.cx) / self.fx,
            (v as f64 + 0.5 - self.cy) / self.fy,
            1.0,
        ];
        let p = &self.pose;
        let world = [
            p[0][0] * d[0] + p[0][1] * d[1] + p[0][2] * d[2],
            p[1][0] * d[0] + p[1][1] * d[1] + p[1][2] * d[2],
            p[2][0] * d[0] + p[2][1] * d[1] + p[2][2] * d[2],
        ];
        Ray {
            origin: self.center(),
            dir: normalize(world),
        }
    }
}

/// One ray per pixel, row-major.
pub fn generate_rays(camera: &Camera) -> Vec<Ray> {
    let mut rays = Vec::with_capacity(camera.width * camera.height);
    for v in 0..camera.height {
        for u in 0..camera.width {
            rays.push(camera.ray(u, v));
        }
    }
    rays
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_ray_is_the_optical_axis() {
        let cam = Camera::look_at([0.0, 0.0, 3.0], [0.0; 3], [0.0, 1.0, 0.0], 40.0, 9, 9);
        cam.validate().unwrap();
        let c = cam.ray(4, 4);
        assert!((c.dir[0]).abs() < 1e-15 && (c.dir[1]).abs() < 1e-15 && (c.dir[2] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn directions_are_unit() {
        let cam = Camera::at_angles(3.0, 20.0, 35.0, 50.0, 12, 10);
        for r in generate_rays(&cam) {
            assert!((dot(r.dir, r.dir).sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn corner_ray_matches_field_of_view() {
        let fov = 60.0_f64;
        let cam = Camera::look_at([0.0, 0.0, 3.0], [0.0; 3], [0.0, 1.0, 0.0], fov, 10, 10);
        let r = cam.ray(0, 0);
        let axis = [0.0, 0.0, -1.0];
        let half = (0.5 * fov).to_radians().tan();
        let px = (0.5 - 5.0) / 5.0 * half;
        let expected = (1.0 / (1.0 + 2.0 * px * px).sqrt()).acos();
        assert!((dot(r.dir, axis).acos() - expected).abs() < 1e-12);
    }

    #[test]
    fn invalid_cameras_are_rejected() {
        let mut cam = Camera::at_angles(3.0, 0.0, 0.0, 40.0, 4, 4);
        cam.fx = 0.0;
        assert!(cam.validate().is_err());
        let mut cam = Camera::at_angles(3.0, 0.0, 0.0, 40.0, 4, 4);
        cam.pose[0][0] *= 1.01;
        assert!(cam.validate().is_err());
    }
}
