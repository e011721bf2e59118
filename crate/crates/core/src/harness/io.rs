//! Mask and artifact persistence.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, GrayImage, ImageEncoder, ImageReader};
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::HarnessError;
use crate::skeleton::BinaryRaster;

/// Decode any supported image (PGM P2/P5, PNG, ...) to 8-bit gray.
pub fn read_gray(path: &Path) -> Result<GrayImage, HarnessError> {
    let reader = ImageReader::open(path)
        .map_err(|e| HarnessError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| HarnessError::io(path, e))?;
    let img = reader.decode().map_err(|e| HarnessError::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(img.into_luma8())
}

/// Pixels strictly brighter than `threshold` are foreground.
pub fn gray_to_mask(img: &GrayImage, threshold: u8) -> Result<BinaryRaster, HarnessError> {
    let pixels = img.as_raw().iter().map(|&v| v > threshold).collect();
    BinaryRaster::from_pixels(img.width() as usize, img.height() as usize, pixels)
        .map_err(|e| HarnessError::Invariant(e.to_string()))
}

pub fn read_mask(path: &Path, threshold: u8) -> Result<BinaryRaster, HarnessError> {
    gray_to_mask(&read_gray(path)?, threshold)
}

/// Binary PGM (P5): foreground 255, background 0.
pub fn encode_pgm(raster: &BinaryRaster) -> Vec<u8> {
    let data: Vec<u8> = raster.pixels().iter().map(|&p| if p { 255 } else { 0 }).collect();
    let mut out = Vec::new();
    PnmEncoder::new(&mut out)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(
            &data,
            raster.width() as u32,
            raster.height() as u32,
            ExtendedColorType::L8,
        )
        .expect("in-memory PGM encoding cannot fail");
    out
}

pub fn write_pgm(raster: &BinaryRaster, path: &Path) -> Result<(), HarnessError> {
    write_bytes(path, &encode_pgm(raster))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

/// Pretty JSON followed by a newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact types serialize infallibly");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| HarnessError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    std::io::Write::write_all(&mut w, b"\n").map_err(|e| HarnessError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
