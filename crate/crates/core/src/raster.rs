//! Pixel operations on decoded page images: bubble numbering for the
//! numbered-page approach and rectangle masking for ablations.
//!
//! Both operations only touch pixels inside the target rectangles; every
//! other byte of the buffer is copied unchanged.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{BBox, TextRegion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb(pub [u8; 3]);

impl Rgb {
    pub const WHITE: Rgb = Rgb([255, 255, 255]);
    pub const BLACK: Rgb = Rgb([0, 0, 0]);
}

/// Row-major 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("rectangle {rect:?} lies outside the {width}x{height} image")]
    OutOfBounds { rect: BBox, width: u32, height: u32 },
}

impl RgbImage {
    pub fn new(width: u32, height: u32, fill: Rgb) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..width as usize * height as usize {
            data.extend_from_slice(&fill.0);
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Wraps raw RGB bytes; `None` if the length does not match.
    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Option<Self> {
        (data.len() == width as usize * height as usize * 3).then_some(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 3
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        let o = self.offset(x, y);
        Rgb([self.data[o], self.data[o + 1], self.data[o + 2]])
    }

    pub fn put_pixel(&mut self, x: u32, y: u32, c: Rgb) {
        let o = self.offset(x, y);
        self.data[o..o + 3].copy_from_slice(&c.0);
    }

    pub fn check_rect(&self, rect: &BBox) -> Result<(), GeometryError> {
        if rect.fits_within(self.width, self.height) {
            Ok(())
        } else {
            Err(GeometryError::OutOfBounds {
                rect: *rect,
                width: self.width,
                height: self.height,
            })
        }
    }

    /// Fills `rect` (already bounds-checked) with `c`.
    pub fn fill_rect(&mut self, rect: &BBox, c: Rgb) {
        for y in rect.y..rect.bottom() {
            let start = self.offset(rect.x, y);
            for px in self.data[start..start + rect.w as usize * 3].chunks_exact_mut(3) {
                px.copy_from_slice(&c.0);
            }
        }
    }

    /// Draws a `thickness`-pixel frame along the inside of `rect`.
    pub fn stroke_rect(&mut self, rect: &BBox, thickness: u32, c: Rgb) {
        let t = thickness.min(rect.w.div_ceil(2)).min(rect.h.div_ceil(2));
        if t == 0 {
            return;
        }
        self.fill_rect(&BBox::new(rect.x, rect.y, rect.w, t), c);
        self.fill_rect(&BBox::new(rect.x, rect.bottom() - t, rect.w, t), c);
        self.fill_rect(&BBox::new(rect.x, rect.y, t, rect.h), c);
        self.fill_rect(&BBox::new(rect.right() - t, rect.y, t, rect.h), c);
    }
}

/// Digit glyphs on a 5x7 grid; bit 4 is the leftmost column.
pub mod font {
    pub const GLYPH_W: u32 = 5;
    pub const GLYPH_H: u32 = 7;
    /// Blank columns between digits, before scaling.
    pub const SPACING: u32 = 1;

    const DIGITS: [[u8; 7]; 10] = [
        [
            0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110,
        ],
        [
            0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110,
        ],
        [
            0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111,
        ],
        [
            0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110,
        ],
        [
            0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010,
        ],
        [
            0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110,
        ],
        [
            0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110,
        ],
        [
            0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000,
        ],
        [
            0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110,
        ],
        [
            0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100,
        ],
    ];

    /// Whether cell `(col, row)` of `digit` is inked.
    pub fn ink(digit: u8, col: u32, row: u32) -> bool {
        DIGITS[digit as usize][row as usize] & (1 << (GLYPH_W - 1 - col)) != 0
    }

    /// Unscaled width of a run of `n` digits.
    pub fn text_width(n: u32) -> u32 {
        n * GLYPH_W + n.saturating_sub(1) * SPACING
    }
}

fn digits_of(mut n: usize) -> Vec<u8> {
    let mut d = Vec::new();
    loop {
        d.push((n % 10) as u8);
        n /= 10;
        if n == 0 {
            break;
        }
    }
    d.reverse();
    d
}

/// Renders `number` centered inside `area`, scaled toward `font_px` glyph
/// height but never beyond `area`. Pixels that would fall outside `area`
/// are clipped.
pub fn draw_number(img: &mut RgbImage, area: &BBox, number: usize, color: Rgb, font_px: u32) {
    if area.is_empty() {
        return;
    }
    let digits = digits_of(number);
    let unscaled_w = font::text_width(digits.len() as u32);
    let mut scale = (font_px / font::GLYPH_H).max(1);
    while scale > 1 && (unscaled_w * scale > area.w || font::GLYPH_H * scale > area.h) {
        scale -= 1;
    }
    let tw = unscaled_w * scale;
    let th = font::GLYPH_H * scale;
    let ox = area.x as i64 + (area.w as i64 - tw as i64) / 2;
    let oy = area.y as i64 + (area.h as i64 - th as i64) / 2;
    for (k, &d) in digits.iter().enumerate() {
        let gx = ox + (k as u32 * (font::GLYPH_W + font::SPACING) * scale) as i64;
        for row in 0..font::GLYPH_H {
            for col in 0..font::GLYPH_W {
                if !font::ink(d, col, row) {
                    continue;
                }
                for sy in 0..scale {
                    for sx in 0..scale {
                        let x = gx + (col * scale + sx) as i64;
                        let y = oy + (row * scale + sy) as i64;
                        if x >= area.x as i64
                            && x < area.right() as i64
                            && y >= area.y as i64
                            && y < area.bottom() as i64
                        {
                            img.put_pixel(x as u32, y as u32, color);
                        }
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnotationStyle {
    pub fill: Rgb,
    pub number_color: Rgb,
    /// Target glyph height.
    pub font_px: u32,
    /// Width of the frame drawn along the inside of each cleared box.
    pub stroke_px: u32,
    /// Also clear and number free text and sound effects.
    #[serde(default)]
    pub include_unenclosed: bool,
}

impl Default for AnnotationStyle {
    fn default() -> Self {
        Self {
            fill: Rgb::WHITE,
            number_color: Rgb::BLACK,
            font_px: 28,
            stroke_px: 2,
            include_unenclosed: false,
        }
    }
}

impl AnnotationStyle {
    /// Box inside the frame where the number is drawn.
    pub fn number_area(&self, bbox: &BBox) -> BBox {
        let s = self.stroke_px;
        if bbox.w <= 2 * s || bbox.h <= 2 * s {
            return BBox::new(bbox.x, bbox.y, 0, 0);
        }
        BBox::new(bbox.x + s, bbox.y + s, bbox.w - 2 * s, bbox.h - 2 * s)
    }
}

/// Clears the box of every bubble and narrative box and writes its 1-based
/// reading number in the middle.
pub fn number_bubbles(
    img: &RgbImage,
    regions: &[TextRegion],
    style: &AnnotationStyle,
) -> Result<RgbImage, GeometryError> {
    let targets: Vec<&TextRegion> = regions
        .iter()
        .filter(|r| style.include_unenclosed || r.kind.is_enclosed())
        .collect();
    for r in &targets {
        img.check_rect(&r.bbox)?;
    }
    let mut out = img.clone();
    for r in &targets {
        out.fill_rect(&r.bbox, style.fill);
        out.stroke_rect(&r.bbox, style.stroke_px, style.number_color);
        draw_number(
            &mut out,
            &style.number_area(&r.bbox),
            r.reading_index + 1,
            style.number_color,
            style.font_px,
        );
    }
    Ok(out)
}

/// Sets every pixel inside `rects` to `fill`.
pub fn mask_regions(img: &RgbImage, rects: &[BBox], fill: Rgb) -> Result<RgbImage, GeometryError> {
    for r in rects {
        img.check_rect(r)?;
    }
    let mut out = img.clone();
    for r in rects {
        out.fill_rect(r, fill);
    }
    Ok(out)
}

/// Marks which pixels lie inside any of `rects` (row-major).
pub fn coverage_mask(width: u32, height: u32, rects: &[BBox]) -> Vec<bool> {
    let mut m = vec![false; width as usize * height as usize];
    for r in rects {
        for y in r.y..r.bottom().min(height) {
            for x in r.x..r.right().min(width) {
                m[y as usize * width as usize + x as usize] = true;
            }
        }
    }
    m
}
