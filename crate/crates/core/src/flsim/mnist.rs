use std::fs;
use std::path::Path;

use super::{Dataset, FlError};

const IMAGES_MAGIC: u32 = 2051;
const LABELS_MAGIC: u32 = 2049;
const N_CLASSES: usize = 10;

/// MNIST train and test splits, pixels scaled to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct MnistData {
    pub train: Dataset,
    pub test: Dataset,
}

fn read_u32(bytes: &[u8], offset: usize, file: &str) -> Result<u32, FlError> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| FlError::TruncatedFile(file.to_string()))
}

fn check_magic(bytes: &[u8], expected: u32, file: &str) -> Result<(), FlError> {
    let found = read_u32(bytes, 0, file)?;
    if found != expected {
        return Err(FlError::BadMagic { file: file.to_string(), expected, found });
    }
    Ok(())
}

/// Parses an IDX3 image file into `(count, rows, cols, pixels)`.
pub fn parse_idx_images(bytes: &[u8], file: &str) -> Result<(usize, usize, usize, Vec<u8>), FlError> {
    check_magic(bytes, IMAGES_MAGIC, file)?;
    let count = read_u32(bytes, 4, file)? as usize;
    let rows = read_u32(bytes, 8, file)? as usize;
    let cols = read_u32(bytes, 12, file)? as usize;
    let body = &bytes[16..];
    let len = count * rows * cols;
    if body.len() < len {
        return Err(FlError::TruncatedFile(file.to_string()));
    }
    Ok((count, rows, cols, body[..len].to_vec()))
}

/// Parses an IDX1 label file.
pub fn parse_idx_labels(bytes: &[u8], file: &str) -> Result<Vec<u8>, FlError> {
    check_magic(bytes, LABELS_MAGIC, file)?;
    let count = read_u32(bytes, 4, file)? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(FlError::TruncatedFile(file.to_string()));
    }
    Ok(body[..count].to_vec())
}

/// Finds `<prefix>-<kind>-idx<d>-ubyte`, also accepting a `.` before `idx`.
fn locate(dir: &Path, prefix: &str, kind: &str, dims: u8) -> Result<std::path::PathBuf, FlError> {
    let candidates = [format!("{prefix}-{kind}-idx{dims}-ubyte"), format!("{prefix}-{kind}.idx{dims}-ubyte")];
    candidates
        .iter()
        .map(|name| dir.join(name))
        .find(|p| p.is_file())
        .ok_or_else(|| FlError::FileMissing(dir.join(&candidates[0])))
}

fn load_split(dir: &Path, prefix: &str) -> Result<Dataset, FlError> {
    let image_path = locate(dir, prefix, "images", 3)?;
    let label_path = locate(dir, prefix, "labels", 1)?;
    let image_name = image_path.display().to_string();
    let label_name = label_path.display().to_string();
    let (count, rows, cols, pixels) = parse_idx_images(&fs::read(&image_path)?, &image_name)?;
    let labels = parse_idx_labels(&fs::read(&label_path)?, &label_name)?;
    if labels.len() != count {
        return Err(FlError::DimensionMismatch { expected: count, actual: labels.len() });
    }
    let features = pixels.iter().map(|&p| p as f32 / 255.0).collect();
    Dataset::new(rows * cols, N_CLASSES, features, labels.into_iter().map(usize::from).collect())
}

/// Reads the standard four MNIST files from `dir`.
pub fn load_mnist(dir: impl AsRef<Path>) -> Result<MnistData, FlError> {
    let dir = dir.as_ref();
    Ok(MnistData { train: load_split(dir, "train")?, test: load_split(dir, "t10k")? })
}
