use serde::{Deserialize, Serialize};

use super::{ImagingError, PixelMask};

/// Pixels retained by the sensing pipeline, in frame pixel coordinates.
///
/// Rectangles are half-open: `x0 <= x < x1`, `y0 <= y < y1`. Polygons keep
/// the pixels whose centres fall inside (even-odd rule).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionOfInterest {
    Rect { x0: u32, y0: u32, x1: u32, y1: u32 },
    Polygon { vertices: Vec<[f64; 2]> },
}

impl Default for RegionOfInterest {
    fn default() -> Self {
        Self::Rect {
            x0: 50,
            y0: 50,
            x1: 350,
            y1: 350,
        }
    }
}

impl RegionOfInterest {
    pub fn validate(&self, width: u32, height: u32) -> Result<(), ImagingError> {
        match self {
            Self::Rect { x0, y0, x1, y1 } => {
                if x0 >= x1 || y0 >= y1 {
                    return Err(ImagingError::InvalidRoi("rectangle is empty".into()));
                }
                if *x1 > width || *y1 > height {
                    return Err(ImagingError::InvalidRoi(format!(
                        "rectangle extends past {width}x{height} frame"
                    )));
                }
            }
            Self::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(ImagingError::InvalidRoi("polygon needs at least three vertices".into()));
                }
                let inside_frame = |&[x, y]: &[f64; 2]| {
                    x.is_finite()
                        && y.is_finite()
                        && (0.0..=f64::from(width)).contains(&x)
                        && (0.0..=f64::from(height)).contains(&y)
                };
                if !vertices.iter().all(inside_frame) {
                    return Err(ImagingError::InvalidRoi("polygon vertex outside frame".into()));
                }
                if self.to_mask(width, height).count() == 0 {
                    return Err(ImagingError::InvalidRoi("polygon covers no pixel centres".into()));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        match self {
            Self::Rect { x0, y0, x1, y1 } => (*x0..*x1).contains(&x) && (*y0..*y1).contains(&y),
            Self::Polygon { vertices } => point_in_polygon(f64::from(x) + 0.5, f64::from(y) + 0.5, vertices),
        }
    }

    pub fn to_mask(&self, width: u32, height: u32) -> PixelMask {
        PixelMask::from_fn(width, height, |x, y| self.contains(x, y))
    }
}

fn point_in_polygon(px: f64, py: f64, vertices: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let mut j = vertices.len() - 1;
    for i in 0..vertices.len() {
        let [xi, yi] = vertices[i];
        let [xj, yj] = vertices[j];
        if (yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}
