use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sentinel marking a pixel with no depth measurement.
pub const INVALID_DEPTH: f64 = 0.0;

#[derive(Debug, Error)]
pub enum DepthImageError {
    #[error("raster length {got} does not match {width}x{height}")]
    SizeMismatch { width: u32, height: u32, got: usize },
    #[error("depth value {value} at index {index} is not positive-finite or the invalid sentinel")]
    InvalidValue { index: usize, value: f64 },
}

/// A row-major single-channel depth raster in meters.
///
/// Every stored value is either a positive finite depth or [`INVALID_DEPTH`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "DepthImageRepr", try_from = "DepthImageRepr")]
pub struct DepthImage {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DepthImageRepr {
    width: u32,
    height: u32,
    values_m: Vec<f64>,
}

impl From<DepthImage> for DepthImageRepr {
    fn from(d: DepthImage) -> Self {
        Self { width: d.width, height: d.height, values_m: d.values }
    }
}

impl TryFrom<DepthImageRepr> for DepthImage {
    type Error = DepthImageError;

    fn try_from(r: DepthImageRepr) -> Result<Self, DepthImageError> {
        DepthImage::new(r.width, r.height, r.values_m)
    }
}

impl DepthImage {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self, DepthImageError> {
        let expected = width as usize * height as usize;
        if values.len() != expected {
            return Err(DepthImageError::SizeMismatch { width, height, got: values.len() });
        }
        for (index, &value) in values.iter().enumerate() {
            let valid = value == INVALID_DEPTH || (value.is_finite() && value > 0.0);
            if !valid {
                return Err(DepthImageError::InvalidValue { index, value });
            }
        }
        Ok(Self { width, height, values })
    }

    /// A raster with every pixel invalid.
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            values: vec![INVALID_DEPTH; width as usize * height as usize],
        }
    }

    /// A raster with every pixel at the given depth.
    pub fn filled(width: u32, height: u32, depth: f64) -> Result<Self, DepthImageError> {
        Self::new(width, height, vec![depth; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn index(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y as usize * self.width as usize + x as usize
    }

    /// Raw value at `(x, y)`; may be the invalid sentinel.
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[self.index(x, y)]
    }

    /// Valid depth at `(x, y)`, or `None` if out of raster or invalid.
    pub fn depth_at(&self, x: i64, y: i64) -> Option<f64> {
        if x < 0 || y < 0 || x >= i64::from(self.width) || y >= i64::from(self.height) {
            return None;
        }
        let v = self.get(x as u32, y as u32);
        (v != INVALID_DEPTH).then_some(v)
    }

    /// Overwrite `(x, y)`. The value must be positive-finite or the sentinel.
    pub fn set(&mut self, x: u32, y: u32, value: f64) {
        debug_assert!(value == INVALID_DEPTH || (value.is_finite() && value > 0.0));
        let i = self.index(x, y);
        self.values[i] = value;
    }

    pub fn valid_depths(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied().filter(|&v| v != INVALID_DEPTH)
    }

    pub fn min_valid_depth(&self) -> Option<f64> {
        self.valid_depths().min_by(f64::total_cmp)
    }
}
