//! Small pixel-poking helpers for overlay images.

use image::RgbImage;
use spikes_track::{BoundingBox, LabelMap, Vec2};

pub fn put(img: &mut RgbImage, x: i64, y: i64, color: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, image::Rgb(color));
    }
}

pub fn draw_box(img: &mut RgbImage, bbox: &BoundingBox, color: [u8; 3]) {
    let x0 = bbox.x.round() as i64;
    let y0 = bbox.y.round() as i64;
    let x1 = (bbox.x + bbox.w).round() as i64;
    let y1 = (bbox.y + bbox.h).round() as i64;
    for x in x0..=x1 {
        put(img, x, y0, color);
        put(img, x, y1, color);
    }
    for y in y0..=y1 {
        put(img, x0, y, color);
        put(img, x1, y, color);
    }
}

pub fn draw_cross(img: &mut RgbImage, pos: Vec2, arm: i64, color: [u8; 3]) {
    let (cx, cy) = (pos.x.round() as i64, pos.y.round() as i64);
    for d in -arm..=arm {
        put(img, cx + d, cy, color);
        put(img, cx, cy + d, color);
    }
}

pub fn draw_dot(img: &mut RgbImage, pos: Vec2, color: [u8; 3]) {
    let (cx, cy) = (pos.x.round() as i64, pos.y.round() as i64);
    for dy in -1..=1 {
        for dx in -1..=1 {
            put(img, cx + dx, cy + dy, color);
        }
    }
}

/// Blackens pixels whose right or lower neighbor carries another label.
pub fn draw_superpixel_boundaries(img: &mut RgbImage, labels: &LabelMap, color: [u8; 3]) {
    for y in 0..img.height() {
        for x in 0..img.width() {
            let here = labels.label_at(x, y);
            let right = if x + 1 < img.width() {
                labels.label_at(x + 1, y)
            } else {
                here
            };
            let down = if y + 1 < img.height() {
                labels.label_at(x, y + 1)
            } else {
                here
            };
            if here != right || here != down {
                img.put_pixel(x, y, image::Rgb(color));
            }
        }
    }
}
