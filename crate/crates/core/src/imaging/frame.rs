use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, Rgb, RgbImage};

use super::ImagingError;

pub const FRAME_WIDTH: u32 = 400;
pub const FRAME_HEIGHT: u32 = 400;
/// Pixels in one camera frame.
pub const PIXEL_TOTAL: u32 = FRAME_WIDTH * FRAME_HEIGHT;

/// An 8-bit RGB camera frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame(RgbImage);

impl Frame {
    /// Camera-sized frame filled with `rgb`.
    pub fn filled(rgb: [u8; 3]) -> Self {
        Self(RgbImage::from_pixel(FRAME_WIDTH, FRAME_HEIGHT, Rgb(rgb)))
    }

    pub fn from_image(img: RgbImage) -> Self {
        Self(img)
    }

    pub fn from_fn(mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Self {
        Self(RgbImage::from_fn(FRAME_WIDTH, FRAME_HEIGHT, |x, y| Rgb(f(x, y))))
    }

    pub fn width(&self) -> u32 {
        self.0.width()
    }

    pub fn height(&self) -> u32 {
        self.0.height()
    }

    pub fn pixel_count(&self) -> u32 {
        self.width() * self.height()
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.0.get_pixel(x, y).0
    }

    pub fn put(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        self.0.put_pixel(x, y, Rgb(rgb));
    }

    pub fn as_image(&self) -> &RgbImage {
        &self.0
    }

    /// Applies `f` to every pixel, keeping dimensions.
    pub fn map_pixels(&self, mut f: impl FnMut(u32, u32, [u8; 3]) -> [u8; 3]) -> Frame {
        let mut out = self.0.clone();
        for (x, y, px) in out.enumerate_pixels_mut() {
            px.0 = f(x, y, px.0);
        }
        Frame(out)
    }

    pub fn to_png_bytes(&self) -> Vec<u8> {
        let mut buf = Cursor::new(Vec::new());
        self.0
            .write_to(&mut buf, ImageFormat::Png)
            .expect("PNG encoding to memory cannot fail");
        buf.into_inner()
    }

    pub fn from_png_bytes(bytes: &[u8]) -> Result<Self, ImagingError> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
            .map_err(|e| ImagingError::Png(e.to_string()))?;
        Ok(Self(img.to_rgb8()))
    }

    pub fn save_png(&self, path: &Path) -> Result<(), ImagingError> {
        std::fs::write(path, self.to_png_bytes()).map_err(|e| ImagingError::Png(format!("{}: {e}", path.display())))
    }

    pub fn load_png(path: &Path) -> Result<Self, ImagingError> {
        let bytes = std::fs::read(path).map_err(|e| ImagingError::Png(format!("{}: {e}", path.display())))?;
        Self::from_png_bytes(&bytes)
    }
}

/// Binary pixel mask with the same layout as a [`Frame`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl PixelMask {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; (width * height) as usize],
        }
    }

    pub fn full(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![true; (width * height) as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut m = Self::empty(width, height);
        for y in 0..height {
            for x in 0..width {
                m.bits[(y * width + x) as usize] = f(x, y);
            }
        }
        m
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.bits[(y * self.width + x) as usize] = v;
    }

    pub fn count(&self) -> u32 {
        self.bits.iter().filter(|&&b| b).count() as u32
    }

    pub(crate) fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip() {
        let f = Frame::from_fn(|x, y| [(x % 256) as u8, (y % 256) as u8, ((x + y) % 256) as u8]);
        let back = Frame::from_png_bytes(&f.to_png_bytes()).unwrap();
        assert_eq!(back, f);
        assert_eq!((back.width(), back.height()), (400, 400));
    }

    #[test]
    fn rejects_non_png() {
        assert!(matches!(Frame::from_png_bytes(b"not a png"), Err(ImagingError::Png(_))));
    }
}
