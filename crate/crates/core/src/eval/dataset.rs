use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use image::ImageReader;

use super::EvalError;
use crate::raster::{BinaryMask, Dims, RgbImage};

/// One image/mask pair on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetRecord {
    pub id: String,
    pub image_path: PathBuf,
    pub mask_path: PathBuf,
}

/// A decoded pair ready for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub image: RgbImage,
    pub gt: BinaryMask,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetLoad {
    pub records: Vec<DatasetRecord>,
    /// One line per skipped file or record.
    pub warnings: Vec<String>,
}

fn png_stems(dir: &Path) -> Result<BTreeMap<String, PathBuf>, EvalError> {
    let mut out = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| EvalError::Io(format!("{}: {e}", dir.display())))?;
    for entry in entries {
        let path = entry.map_err(|e| EvalError::Io(e.to_string()))?.path();
        let is_png = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if !is_png || !path.is_file() {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.insert(stem.to_string(), path);
        }
    }
    Ok(out)
}

/// Decode an 8-bit RGB or gray PNG into `[0, 1]` floats.
pub fn load_image(path: &Path) -> Result<RgbImage, EvalError> {
    let decoded = ImageReader::open(path)
        .map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?
        .decode()
        .map_err(|e| EvalError::Decode(format!("{}: {e}", path.display())))?
        .to_rgb8();
    let dims = Dims::new(decoded.height() as usize, decoded.width() as usize);
    if dims.is_empty() {
        return Err(EvalError::Decode(format!("{}: empty image", path.display())));
    }
    Ok(RgbImage::from_rgb8(dims, decoded.as_raw())?)
}

/// Decode a mask PNG; any nonzero pixel is foreground.
pub fn load_mask(path: &Path) -> Result<BinaryMask, EvalError> {
    let decoded = ImageReader::open(path)
        .map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?
        .decode()
        .map_err(|e| EvalError::Decode(format!("{}: {e}", path.display())))?
        .to_luma16();
    let dims = Dims::new(decoded.height() as usize, decoded.width() as usize);
    if dims.is_empty() {
        return Err(EvalError::Decode(format!("{}: empty mask", path.display())));
    }
    Ok(BinaryMask::from_vec(dims, decoded.as_raw().iter().map(|&v| v != 0).collect())?)
}

/// Pair `<root>/images/*.png` with `<root>/masks/*.png` by stem. Unmatched
/// files, undecodable pairs, size mismatches and empty masks are skipped with
/// a warning. Records come back sorted by id.
pub fn load_dataset(root: &Path) -> Result<DatasetLoad, EvalError> {
    let images_dir = root.join("images");
    let masks_dir = root.join("masks");
    for dir in [&images_dir, &masks_dir] {
        if !dir.is_dir() {
            return Err(EvalError::MissingDirectory(dir.clone()));
        }
    }
    let images = png_stems(&images_dir)?;
    let mut masks = png_stems(&masks_dir)?;
    let mut load = DatasetLoad::default();

    for (id, image_path) in images {
        let Some(mask_path) = masks.remove(&id) else {
            load.warnings.push(format!("{id}: image without mask"));
            continue;
        };
        match load_pair(&image_path, &mask_path) {
            Ok(_) => load.records.push(DatasetRecord {
                id,
                image_path,
                mask_path,
            }),
            Err(e) => load.warnings.push(format!("{id}: {e}")),
        }
    }
    for id in masks.into_keys() {
        load.warnings.push(format!("{id}: mask without image"));
    }
    for w in &load.warnings {
        log::warn!("dataset {}: {w}", root.display());
    }
    Ok(load)
}

fn load_pair(image_path: &Path, mask_path: &Path) -> Result<(RgbImage, BinaryMask), EvalError> {
    let image = load_image(image_path)?;
    let gt = load_mask(mask_path)?;
    if image.dims() != gt.dims() {
        return Err(EvalError::InvalidRecord(format!(
            "image is {} but mask is {}",
            image.dims(),
            gt.dims()
        )));
    }
    if gt.is_blank() {
        return Err(EvalError::InvalidRecord("mask has no foreground".into()));
    }
    Ok((image, gt))
}

impl DatasetRecord {
    pub fn load(&self) -> Result<Sample, EvalError> {
        let (image, gt) = load_pair(&self.image_path, &self.mask_path)?;
        Ok(Sample {
            id: self.id.clone(),
            image,
            gt,
        })
    }
}
