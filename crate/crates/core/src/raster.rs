//! Page rasters: grayscale drawings, binary ink masks and color ground-truth renders.
//!
//! Coordinates follow image convention: origin top-left, x to the right, y down.

use std::path::Path;

use image::{DynamicImage, ImageFormat, ImageReader};

use crate::error::{Error, Result};

/// Default binarization threshold; intensities strictly below it are ink.
pub const DEFAULT_THRESHOLD: u16 = 128;

fn encode_png(path: &Path, bytes: &[u8], w: u32, h: u32, color: image::ExtendedColorType) -> Result<()> {
    use image::ImageEncoder;
    let mut buf = Vec::new();
    image::codecs::png::PngEncoder::new(&mut buf)
        .write_image(bytes, w, h, color)
        .map_err(|e| Error::Unreadable {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    crate::io::write_atomic(path, &buf)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayRaster {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayRaster {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroDimension);
        }
        if pixels.len() != width as usize * height as usize {
            return Err(Error::Shape(format!(
                "{} pixels for a {width}x{height} raster",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// A raster filled with one intensity.
    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        self.pixels[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        encode_png(path, &self.pixels, self.width, self.height, image::ExtendedColorType::L8)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorRaster {
    width: u32,
    height: u32,
    pixels: Vec<[u8; 3]>,
}

impl ColorRaster {
    pub fn new(width: u32, height: u32, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroDimension);
        }
        if pixels.len() != width as usize * height as usize {
            return Err(Error::Shape(format!(
                "{} pixels for a {width}x{height} raster",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        Self::new(width, height, vec![rgb; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        self.pixels[y as usize * self.width as usize + x as usize] = rgb;
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let flat: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        encode_png(path, &flat, self.width, self.height, image::ExtendedColorType::Rgb8)
    }
}

/// Ink mask of a page. Stored as a dense bitmap; out-of-range reads are background.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryRaster {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl std::fmt::Debug for BinaryRaster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BinaryRaster")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("ink", &self.count())
            .finish()
    }
}

impl BinaryRaster {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    /// Builds a mask from ink coordinates; coordinates outside the page are ignored.
    pub fn from_points(width: u32, height: u32, points: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut m = Self::empty(width, height);
        for (x, y) in points {
            if x < width && y < height {
                m.set(x, y, true);
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

    #[inline]
    pub fn get(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return false;
        }
        self.bits[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, ink: bool) {
        let w = self.width as usize;
        self.bits[y as usize * w + x as usize] = ink;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    /// Ink coordinates in row-major order.
    pub fn ink(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(i, _)| ((i % w) as u32, (i / w) as u32))
    }

    /// Number of ink pixels among the 8 neighbors of (x, y).
    #[inline]
    pub fn neighbor_count(&self, x: i64, y: i64) -> usize {
        NEIGHBORS_8
            .iter()
            .filter(|(dx, dy)| self.get(x + dx, y + dy))
            .count()
    }

    /// Labels 8-connected ink components. Returns per-pixel labels (0 = background,
    /// components numbered from 1 in scan order) and the component count.
    pub fn label_components(&self) -> (Vec<u32>, usize) {
        let w = self.width as i64;
        let mut labels = vec![0u32; self.bits.len()];
        let mut next = 0u32;
        let mut stack = Vec::new();
        for start in 0..self.bits.len() {
            if !self.bits[start] || labels[start] != 0 {
                continue;
            }
            next += 1;
            labels[start] = next;
            stack.push(start);
            while let Some(i) = stack.pop() {
                let (x, y) = ((i as i64) % w, (i as i64) / w);
                for (dx, dy) in NEIGHBORS_8 {
                    let (nx, ny) = (x + dx, y + dy);
                    if self.get(nx, ny) {
                        let j = (ny * w + nx) as usize;
                        if labels[j] == 0 {
                            labels[j] = next;
                            stack.push(j);
                        }
                    }
                }
            }
        }
        (labels, next as usize)
    }

    pub fn component_count(&self) -> usize {
        self.label_components().1
    }

    /// True if any 2x2 window is entirely ink.
    pub fn has_full_2x2(&self) -> bool {
        self.ink().any(|(x, y)| {
            let (x, y) = (x as i64, y as i64);
            self.get(x + 1, y) && self.get(x, y + 1) && self.get(x + 1, y + 1)
        })
    }
}

/// 8-neighborhood offsets in clockwise order starting at east (y grows downward).
pub const NEIGHBORS_8: [(i64, i64); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

/// ITU-R BT.601 luma, rounded to nearest.
pub fn luma601(rgb: [u8; 3]) -> u8 {
    let y = 0.299 * rgb[0] as f64 + 0.587 * rgb[1] as f64 + 0.114 * rgb[2] as f64;
    y.round().clamp(0.0, 255.0) as u8
}

fn decode(path: &Path) -> Result<DynamicImage> {
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => {}
        Some(other) => return Err(Error::UnsupportedFormat(format!("{other:?}"))),
        None => {
            return Err(Error::UnsupportedFormat(format!(
                "unrecognized image data in {}",
                path.display()
            )))
        }
    }
    let img = reader.decode().map_err(|e| Error::Unreadable {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    if img.width() == 0 || img.height() == 0 {
        return Err(Error::ZeroDimension);
    }
    Ok(img)
}

fn has_color(img: &DynamicImage) -> bool {
    img.color().has_color()
}

/// Loads a page as grayscale. Color pages are reduced with BT.601 luma.
pub fn load_gray(path: &Path) -> Result<GrayRaster> {
    let img = decode(path)?;
    let (w, h) = (img.width(), img.height());
    let pixels = if has_color(&img) {
        img.to_rgb8().pixels().map(|p| luma601(p.0)).collect()
    } else {
        img.to_luma8().into_raw()
    };
    GrayRaster::new(w, h, pixels)
}

/// Loads a ground-truth render as RGB; gray inputs expand to r = g = b.
pub fn load_color(path: &Path) -> Result<ColorRaster> {
    let img = decode(path)?;
    let (w, h) = (img.width(), img.height());
    let pixels = img.to_rgb8().pixels().map(|p| p.0).collect();
    ColorRaster::new(w, h, pixels)
}

/// Dark-on-light binarization: a pixel is ink when its intensity is below `threshold`.
pub fn binarize(img: &GrayRaster, threshold: u16) -> BinaryRaster {
    BinaryRaster {
        width: img.width,
        height: img.height,
        bits: img.pixels.iter().map(|&v| (v as u16) < threshold).collect(),
    }
}
