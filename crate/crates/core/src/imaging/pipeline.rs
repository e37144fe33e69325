//! Frame-to-pixel-ratio sensing: brighten, remove blood / background /
//! out-of-ROI pixels, keep the largest remaining blob with its holes filled,
//! and count it against the full frame.

use serde::{Deserialize, Serialize};

use super::color::{grayscale, rgb_to_hsv};
use super::{Frame, ImagingError, PixelMask, RegionOfInterest};

pub const BRIGHTEN_FACTOR: f64 = 3.5;
/// Blood hue bands on the [0, 180) scale: `hue <= low` or `hue >= high`.
pub const RED_HUE_LOW: u8 = 10;
pub const RED_HUE_HIGH: u8 = 160;
/// Blood needs saturation strictly above this.
pub const RED_MIN_SATURATION: u8 = 15;
/// Grayscale strictly below this is lens background.
pub const DARK_GRAYSCALE: u8 = 5;
pub const DEFAULT_MIN_CHANNEL_PX: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelStats {
    /// Pixels inside the working-channel contour.
    pub inside: u32,
    pub outside: u32,
    pub total: u32,
    pub ratio: f64,
}

/// Scales every channel by `factor`, rounding half up and capping at 255.
pub fn brighten(frame: &Frame, factor: f64) -> Frame {
    let lut: Vec<u8> = (0..=255u32)
        .map(|v| (factor * f64::from(v) + 0.5).floor().min(255.0) as u8)
        .collect();
    frame.map_pixels(|_, _, px| px.map(|v| lut[v as usize]))
}

/// Whether a (brightened) pixel looks like blood.
pub fn is_blood(rgb: [u8; 3]) -> bool {
    let hsv = rgb_to_hsv(rgb);
    (hsv.hue <= RED_HUE_LOW || hsv.hue >= RED_HUE_HIGH) && hsv.saturation > RED_MIN_SATURATION
}

pub fn is_dark(rgb: [u8; 3]) -> bool {
    grayscale(rgb) < DARK_GRAYSCALE
}

/// Blackens blood, dark background and everything outside `roi`.
pub fn classify_pixels(frame: &Frame, roi: &RegionOfInterest) -> Frame {
    frame.map_pixels(|x, y, px| {
        if !roi.contains(x, y) || is_dark(px) || is_blood(px) {
            [0, 0, 0]
        } else {
            px
        }
    })
}

/// Filled interior of the largest 8-connected non-black component.
pub fn extract_channel_region(frame: &Frame, min_pixels: u32) -> Result<PixelMask, ImagingError> {
    let (w, h) = (frame.width(), frame.height());
    let foreground = PixelMask::from_fn(w, h, |x, y| grayscale(frame.get(x, y)) > 0);
    let (labels, sizes) = label_components(&foreground);
    let Some((best, &largest)) = sizes.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))) else {
        return Err(ImagingError::ChannelLost { largest: 0, min_pixels });
    };
    if largest < min_pixels {
        return Err(ImagingError::ChannelLost { largest, min_pixels });
    }
    let mut region = PixelMask::empty(w, h);
    for (dst, &l) in region.bits_mut().iter_mut().zip(&labels) {
        *dst = l == best as u32 + 1;
    }
    fill_holes(&mut region);
    Ok(region)
}

/// 8-connected labelling; label 0 is background, component `k` has label `k + 1`.
fn label_components(mask: &PixelMask) -> (Vec<u32>, Vec<u32>) {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let bits = mask.bits();
    let mut labels = vec![0u32; bits.len()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..bits.len() {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        let label = sizes.len() as u32 + 1;
        let mut size = 0u32;
        labels[start] = label;
        stack.push(start);
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = ((i as i64) % w, (i as i64) / w);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if (dx, dy) == (0, 0) || nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let j = (ny * w + nx) as usize;
                    if bits[j] && labels[j] == 0 {
                        labels[j] = label;
                        stack.push(j);
                    }
                }
            }
        }
        sizes.push(size);
    }
    (labels, sizes)
}

/// Marks as inside every pixel not 4-connected to the border through the
/// complement (the dual connectivity of 8-connected foreground).
fn fill_holes(region: &mut PixelMask) {
    let (w, h) = (region.width() as usize, region.height() as usize);
    let bits = region.bits_mut();
    let mut outside = vec![false; bits.len()];
    let mut stack: Vec<usize> = Vec::new();
    let seed = |i: usize, outside: &mut Vec<bool>, stack: &mut Vec<usize>| {
        if !bits[i] && !outside[i] {
            outside[i] = true;
            stack.push(i);
        }
    };
    for x in 0..w {
        seed(x, &mut outside, &mut stack);
        seed((h - 1) * w + x, &mut outside, &mut stack);
    }
    for y in 0..h {
        seed(y * w, &mut outside, &mut stack);
        seed(y * w + w - 1, &mut outside, &mut stack);
    }
    while let Some(i) = stack.pop() {
        let (x, y) = (i % w, i / w);
        let mut visit = |j: usize| {
            if !bits[j] && !outside[j] {
                outside[j] = true;
                stack.push(j);
            }
        };
        if x > 0 {
            visit(i - 1);
        }
        if x + 1 < w {
            visit(i + 1);
        }
        if y > 0 {
            visit(i - w);
        }
        if y + 1 < h {
            visit(i + w);
        }
    }
    for (b, o) in bits.iter_mut().zip(outside) {
        *b = !o;
    }
}

/// Counts the channel mask against the whole frame.
pub fn pixel_ratio(mask: &PixelMask) -> PixelStats {
    let total = mask.width() * mask.height();
    let inside = mask.count();
    PixelStats {
        inside,
        outside: total - inside,
        total,
        ratio: f64::from(inside) / f64::from(total),
    }
}

/// Every intermediate of one sensing pass.
#[derive(Debug, Clone)]
pub struct PipelineStages {
    pub brightened: Frame,
    pub classified: Frame,
    pub region: PixelMask,
    pub stats: PixelStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorConfig {
    pub roi: RegionOfInterest,
    pub brighten_factor: f64,
    pub min_channel_px: u32,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            roi: RegionOfInterest::default(),
            brighten_factor: BRIGHTEN_FACTOR,
            min_channel_px: DEFAULT_MIN_CHANNEL_PX,
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<(), ImagingError> {
        if !(self.brighten_factor > 0.0 && self.brighten_factor.is_finite()) {
            return Err(ImagingError::InvalidRoi("brighten_factor must be positive".into()));
        }
        self.roi.validate(super::FRAME_WIDTH, super::FRAME_HEIGHT)
    }
}

pub fn sense_stages(frame: &Frame, cfg: &SensorConfig) -> Result<PipelineStages, ImagingError> {
    let brightened = brighten(frame, cfg.brighten_factor);
    let classified = classify_pixels(&brightened, &cfg.roi);
    let region = extract_channel_region(&classified, cfg.min_channel_px)?;
    let stats = pixel_ratio(&region);
    Ok(PipelineStages {
        brightened,
        classified,
        region,
        stats,
    })
}

/// Reduces a raw camera frame to its pixel ratio.
pub fn sense(frame: &Frame, cfg: &SensorConfig) -> Result<PixelStats, ImagingError> {
    sense_stages(frame, cfg).map(|s| s.stats)
}
