//! Minimal 8-bit raster used for frames and patches.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, RgbImage};

use crate::error::DatasetError;
use crate::patching::{CropWindow, FrameDims};

/// Row-major 8-bit image with 1 (gray) or 3 (RGB) interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl Image {
    pub fn from_raw(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Option<Self> {
        let expected = width as usize * height as usize * channels as usize;
        (matches!(channels, 1 | 3) && width > 0 && height > 0 && data.len() == expected)
            .then_some(Self { width, height, channels, data })
    }

    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Self {
        assert!(matches!(channels, 1 | 3), "channels must be 1 or 3");
        let len = width as usize * height as usize * channels as usize;
        Self { width, height, channels, data: vec![value; len] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn dims(&self) -> FrameDims {
        FrameDims::new(self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    /// Sample at `(x, y)` in channel `c`.
    pub fn get(&self, x: u32, y: u32, c: u8) -> u8 {
        self.data[self.index(x, y) + c as usize]
    }

    pub fn set_gray(&mut self, x: u32, y: u32, value: u8) {
        let i = self.index(x, y);
        for c in 0..self.channels as usize {
            self.data[i + c] = value;
        }
    }

    fn index(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize
    }

    /// Luminance plane; RGB is weighted 0.299 R + 0.587 G + 0.114 B.
    pub fn luminance(&self) -> Vec<u8> {
        match self.channels {
            1 => self.data.clone(),
            _ => self
                .data
                .chunks_exact(3)
                .map(|px| {
                    let l = 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64;
                    l.round().clamp(0.0, 255.0) as u8
                })
                .collect(),
        }
    }

    /// Copies out a window. Panics if the window does not lie inside the image.
    pub fn crop(&self, w: &CropWindow) -> Image {
        assert!(
            w.x + w.size <= self.width && w.y + w.size <= self.height,
            "crop window {w:?} exceeds {}x{} image",
            self.width,
            self.height
        );
        let ch = self.channels as usize;
        let row_len = w.size as usize * ch;
        let mut data = Vec::with_capacity(row_len * w.size as usize);
        for y in w.y..w.y + w.size {
            let start = self.index(w.x, y);
            data.extend_from_slice(&self.data[start..start + row_len]);
        }
        Image { width: w.size, height: w.size, channels: self.channels, data }
    }

    fn to_dynamic(&self) -> DynamicImage {
        match self.channels {
            1 => DynamicImage::ImageLuma8(
                GrayImage::from_raw(self.width, self.height, self.data.clone())
                    .expect("buffer length checked on construction"),
            ),
            _ => DynamicImage::ImageRgb8(
                RgbImage::from_raw(self.width, self.height, self.data.clone())
                    .expect("buffer length checked on construction"),
            ),
        }
    }

    fn from_dynamic(img: DynamicImage) -> Self {
        match img {
            DynamicImage::ImageLuma8(g) => {
                let (w, h) = g.dimensions();
                Image { width: w, height: h, channels: 1, data: g.into_raw() }
            }
            other => {
                let rgb = other.to_rgb8();
                let (w, h) = rgb.dimensions();
                Image { width: w, height: h, channels: 3, data: rgb.into_raw() }
            }
        }
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, image::ImageError> {
        let mut buf = Cursor::new(Vec::new());
        self.to_dynamic().write_to(&mut buf, ImageFormat::Png)?;
        Ok(buf.into_inner())
    }

    /// Decodes a PNG. Gray stays single-channel; anything else becomes RGB.
    pub fn decode_png(bytes: &[u8]) -> Result<Self, image::ImageError> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?;
        Ok(Self::from_dynamic(img))
    }

    pub fn load_png(path: &Path) -> Result<Self, DatasetError> {
        let bytes = std::fs::read(path)
            .map_err(|source| DatasetError::Io { path: path.to_owned(), source })?;
        Self::decode_png(&bytes).map_err(|source| DatasetError::Image { path: path.to_owned(), source })
    }

    pub fn save_png(&self, path: &Path) -> Result<(), DatasetError> {
        let bytes = self
            .encode_png()
            .map_err(|source| DatasetError::Image { path: path.to_owned(), source })?;
        std::fs::write(path, bytes).map_err(|source| DatasetError::Io { path: path.to_owned(), source })
    }
}
