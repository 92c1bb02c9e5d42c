//! Decoding, request encoding and debug output for page images.

use std::io::Cursor;
use std::path::Path;

use image::codecs::jpeg::JpegEncoder;
use image::imageops::FilterType;
use mangatl_core::gateway::{EncodedImage, ImageFormat};
use mangatl_core::raster::RgbImage;

pub const DEFAULT_MAX_SIDE: u32 = 1536;
pub const DEFAULT_QUALITY: u8 = 90;

#[derive(Debug, thiserror::Error)]
pub enum ImageError {
    #[error("image is empty")]
    Empty,
    #[error("quality {0} outside 1..=100")]
    Quality(u8),
    #[error("{path}: {source}")]
    Decode {
        path: String,
        source: image::ImageError,
    },
    #[error("encode: {0}")]
    Encode(#[from] image::ImageError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub fn from_image(img: image::RgbImage) -> RgbImage {
    let (w, h) = img.dimensions();
    RgbImage::from_raw(w, h, img.into_raw()).expect("buffer matches dimensions")
}

pub fn to_image(img: &RgbImage) -> image::RgbImage {
    image::RgbImage::from_raw(img.width(), img.height(), img.as_raw().to_vec())
        .expect("buffer matches dimensions")
}

pub fn load_rgb(path: &Path) -> Result<RgbImage, ImageError> {
    let img = image::open(path).map_err(|source| ImageError::Decode {
        path: path.display().to_string(),
        source,
    })?;
    Ok(from_image(img.to_rgb8()))
}

pub fn decode_rgb(bytes: &[u8]) -> Result<RgbImage, ImageError> {
    let img = image::load_from_memory(bytes).map_err(|source| ImageError::Decode {
        path: "<memory>".into(),
        source,
    })?;
    Ok(from_image(img.to_rgb8()))
}

/// Dimensions after fitting `(w, h)` inside a `max_side` square with the
/// aspect ratio kept. Images that already fit are left alone.
pub fn fitted_size(w: u32, h: u32, max_side: u32) -> (u32, u32) {
    let long = w.max(h);
    if long <= max_side {
        return (w, h);
    }
    let scale =
        |v: u32| ((v as u64 * max_side as u64 + long as u64 / 2) / long as u64).max(1) as u32;
    (scale(w), scale(h))
}

/// JPEG bytes of `img`, downscaled so that its longest side is at most
/// `max_side`.
pub fn encode_for_request(
    img: &RgbImage,
    max_side: u32,
    quality: u8,
) -> Result<EncodedImage, ImageError> {
    if img.width() == 0 || img.height() == 0 || max_side == 0 {
        return Err(ImageError::Empty);
    }
    if !(1..=100).contains(&quality) {
        return Err(ImageError::Quality(quality));
    }
    let (w, h) = fitted_size(img.width(), img.height(), max_side);
    let src = to_image(img);
    let resized = if (w, h) == (img.width(), img.height()) {
        src
    } else {
        image::imageops::resize(&src, w, h, FilterType::Triangle)
    };
    let mut bytes = Vec::new();
    JpegEncoder::new_with_quality(&mut bytes, quality).encode_image(&resized)?;
    Ok(EncodedImage {
        bytes,
        format: ImageFormat::Jpeg,
        width: w,
        height: h,
        max_side,
    })
}

pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>, ImageError> {
    let mut out = Cursor::new(Vec::new());
    to_image(img).write_to(&mut out, image::ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn save_png(img: &RgbImage, path: &Path) -> Result<(), ImageError> {
    std::fs::write(path, encode_png(img)?)?;
    Ok(())
}
