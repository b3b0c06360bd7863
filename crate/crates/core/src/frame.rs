//! Frame storage: row-major 8-bit RGB with a sequence index.

use crate::error::{Error, Result};
use image::RgbImage;

/// One video frame. Pixels are packed row-major RGB triples.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
    /// Position of the frame within its sequence.
    pub index: usize,
}

impl Frame {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>, index: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidFrame(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(Error::InvalidFrame(format!(
                "pixel buffer length {} does not match {width}x{height}x3 = {expected}",
                pixels.len()
            )));
        }
        Ok(Frame {
            width,
            height,
            pixels,
            index,
        })
    }

    /// A frame filled with a single color.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3], index: usize) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..width as usize * height as usize {
            pixels.extend_from_slice(&rgb);
        }
        Frame::new(width, height, pixels, index)
    }

    pub fn from_rgb_image(img: &RgbImage, index: usize) -> Result<Self> {
        Frame::new(img.width(), img.height(), img.as_raw().clone(), index)
    }

    pub fn to_rgb_image(&self) -> RgbImage {
        RgbImage::from_raw(self.width, self.height, self.pixels.clone())
            .expect("buffer length is validated at construction")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn raw(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn rgb(&self, x: u32, y: u32) -> [u8; 3] {
        debug_assert!(x < self.width && y < self.height);
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    pub fn set_rgb(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        debug_assert!(x < self.width && y < self.height);
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Copies the rectangle starting at (x0, y0) into a new frame.
    pub fn crop(&self, x0: u32, y0: u32, w: u32, h: u32) -> Result<Frame> {
        if x0 + w > self.width || y0 + h > self.height || w == 0 || h == 0 {
            return Err(Error::InvalidFrame(format!(
                "crop {w}x{h}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(w as usize * h as usize * 3);
        for y in y0..y0 + h {
            let start = (y as usize * self.width as usize + x0 as usize) * 3;
            pixels.extend_from_slice(&self.pixels[start..start + w as usize * 3]);
        }
        Frame::new(w, h, pixels, self.index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatched_buffer() {
        assert!(Frame::new(2, 2, vec![0; 11], 0).is_err());
        assert!(Frame::new(0, 2, vec![], 0).is_err());
        assert!(Frame::new(2, 2, vec![0; 12], 0).is_ok());
    }

    #[test]
    fn pixel_round_trip() {
        let mut f = Frame::filled(4, 3, [1, 2, 3], 0).unwrap();
        f.set_rgb(2, 1, [9, 8, 7]);
        assert_eq!(f.rgb(2, 1), [9, 8, 7]);
        assert_eq!(f.rgb(0, 0), [1, 2, 3]);
    }

    #[test]
    fn crop_extracts_subrect() {
        let mut f = Frame::filled(5, 5, [0, 0, 0], 3).unwrap();
        f.set_rgb(2, 2, [255, 0, 0]);
        let c = f.crop(1, 1, 3, 3).unwrap();
        assert_eq!(c.dims(), (3, 3));
        assert_eq!(c.rgb(1, 1), [255, 0, 0]);
        assert_eq!(c.index, 3);
        assert!(f.crop(3, 3, 3, 3).is_err());
    }
}
