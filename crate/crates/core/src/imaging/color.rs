//! 8-bit color conversions using the half-angle hue convention.

/// Hue in [0, 180), saturation and value in [0, 255].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hsv {
    pub hue: u8,
    pub saturation: u8,
    pub value: u8,
}

/// Max/min HSV conversion with hue halved so that it fits a byte.
pub fn rgb_to_hsv([r, g, b]: [u8; 3]) -> Hsv {
    let (rf, gf, bf) = (f64::from(r), f64::from(g), f64::from(b));
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let diff = f64::from(max - min);
    let saturation = if max == 0 {
        0
    } else {
        (255.0 * diff / f64::from(max)).round() as u8
    };
    let hue_deg = if max == min {
        0.0
    } else if max == r {
        60.0 * (gf - bf) / diff
    } else if max == g {
        120.0 + 60.0 * (bf - rf) / diff
    } else {
        240.0 + 60.0 * (rf - gf) / diff
    };
    let hue_deg = if hue_deg < 0.0 { hue_deg + 360.0 } else { hue_deg };
    let hue = (hue_deg / 2.0).round() as u32 % 180;
    Hsv {
        hue: hue as u8,
        saturation,
        value: max,
    }
}

/// Inverse of [`rgb_to_hsv`] up to rounding; `hue` may be fractional and
/// wraps modulo 180.
pub fn hsv_to_rgb(hue: f64, saturation: f64, value: f64) -> [u8; 3] {
    let wrapped = if (0.0..180.0).contains(&hue) {
        hue
    } else {
        hue.rem_euclid(180.0)
    };
    let h = (wrapped * 2.0) / 60.0;
    let s = (saturation / 255.0).clamp(0.0, 1.0);
    let v = value.clamp(0.0, 255.0);
    let c = v * s;
    // `h mod 2` without a libm call; exact for h >= 0.
    let x = c * (1.0 - ((h - 2.0 * (h * 0.5).floor()) - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [(r + m).round() as u8, (g + m).round() as u8, (b + m).round() as u8]
}

/// Luma with weights (0.299, 0.587, 0.114), rounded half up.
pub fn grayscale([r, g, b]: [u8; 3]) -> u8 {
    ((299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b) + 500) / 1000) as u8
}
