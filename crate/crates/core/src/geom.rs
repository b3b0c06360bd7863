//! Planar geometry primitives shared across the tracker.

use serde::{Deserialize, Serialize};

/// A 2-D point or displacement in pixel units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    /// Rotates the vector by `angle` radians (counter-clockwise in the
    /// usual y-down image convention).
    pub fn rotated(self, angle: f64) -> Vec2 {
        let (sin, cos) = angle.sin_cos();
        Vec2 {
            x: self.x * cos - self.y * sin,
            y: self.x * sin + self.y * cos,
        }
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

/// Axis-aligned box with a real-valued top-left corner.
///
/// Vote averaging produces fractional centers, so boxes are not snapped to
/// the pixel grid. Pixel membership uses pixel-center containment: pixel
/// (i, j) covers the point (i + 0.5, j + 0.5).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BoundingBox { x, y, w, h }
    }

    pub fn from_center(center: Vec2, dims: (f64, f64)) -> Self {
        BoundingBox {
            x: center.x - dims.0 / 2.0,
            y: center.y - dims.1 / 2.0,
            w: dims.0,
            h: dims.1,
        }
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn contains_point(&self, p: Vec2) -> bool {
        p.x >= self.x && p.x < self.x + self.w && p.y >= self.y && p.y < self.y + self.h
    }

    /// True when the center of pixel (i, j) falls inside the box.
    pub fn contains_pixel(&self, i: u32, j: u32) -> bool {
        self.contains_point(Vec2::new(i as f64 + 0.5, j as f64 + 0.5))
    }

    /// The box scaled by `factor` about its own center.
    pub fn inflated(&self, factor: f64) -> BoundingBox {
        BoundingBox::from_center(self.center(), (self.w * factor, self.h * factor))
    }
}

/// Intersection area over union area of two boxes; 0 when disjoint.
pub fn overlap_ratio(b1: &BoundingBox, b2: &BoundingBox) -> f64 {
    let ix = (b1.x + b1.w).min(b2.x + b2.w) - b1.x.max(b2.x);
    let iy = (b1.y + b1.h).min(b2.y + b2.h) - b1.y.max(b2.y);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    let union = b1.area() + b2.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}
