//! Synthetic intra-balloon camera view.
//!
//! The frame shows blood-red surroundings, a dark vignette past the edge of
//! the lens and the working channel as a bright disk. Bending the tip swings
//! the channel toward the camera axis, so its projected disk grows with the
//! bend angle. Colors are generated pre-brightening (the raw sensor is dim).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::color::hsv_to_rgb;
use super::{Frame, ImagingError, FRAME_HEIGHT, FRAME_WIDTH};
use crate::plant::PlantState;
use crate::scalar::Real;

/// Largest angle over which the channel projection must stay invertible.
pub const SCENE_MAX_ANGLE_DEG: f64 = 110.0;

/// Closed range `[lo, hi]`. For hue, `lo > hi` wraps through 180.
pub type Range = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneModel {
    /// Blood hue on the [0, 180) scale.
    pub blood_hue: Range,
    pub blood_saturation: Range,
    /// Raw (pre-brightening) value.
    pub blood_value: Range,
    /// Raw channel color.
    pub channel_rgb: [u8; 3],
    pub vignette_radius_px: f64,
    pub channel_center_px: [f64; 2],
    pub channel_center_px_per_deg: [f64; 2],
    pub channel_radius_px: f64,
    pub channel_radius_px_per_deg: f64,
    /// Uniform per-channel intensity noise, raw levels.
    #[serde(default)]
    pub noise_amplitude: f64,
    /// Uniform per-frame jitter of the channel edge, px.
    #[serde(default)]
    pub radius_jitter_px: f64,
}

impl Default for SceneModel {
    fn default() -> Self {
        // Radius runs from ~39 px at 0 deg to ~113 px at 100 deg, i.e. a pixel
        // ratio of ~0.03 to ~0.25.
        let r0 = (0.03 * 160_000.0 / std::f64::consts::PI).sqrt();
        let r100 = (0.25 * 160_000.0 / std::f64::consts::PI).sqrt();
        Self {
            blood_hue: [172.0, 4.0],
            blood_saturation: [170.0, 230.0],
            blood_value: [48.0, 68.0],
            channel_rgb: [52, 62, 70],
            vignette_radius_px: 190.0,
            channel_center_px: [200.0, 200.0],
            channel_center_px_per_deg: [0.0, 0.0],
            channel_radius_px: r0,
            channel_radius_px_per_deg: (r100 - r0) / 100.0,
            noise_amplitude: 0.0,
            radius_jitter_px: 0.0,
        }
    }
}

fn hue_span(r: Range) -> f64 {
    if r[0] <= r[1] {
        r[1] - r[0]
    } else {
        r[1] + 180.0 - r[0]
    }
}

impl SceneModel {
    pub fn validate(&self) -> Result<(), ImagingError> {
        let bad = |m: &str| Err(ImagingError::InvalidScene(m.to_string()));
        for (name, r) in [
            ("blood_saturation", self.blood_saturation),
            ("blood_value", self.blood_value),
        ] {
            if !(r[0] <= r[1] && r[0] >= 0.0 && r[1] <= 255.0) {
                return bad(&format!("{name} must be an ordered range within [0, 255]"));
            }
        }
        if !self.blood_hue.iter().all(|h| (0.0..180.0).contains(h)) {
            return bad("blood_hue bounds must lie in [0, 180)");
        }
        if !(self.channel_radius_px > 0.0 && self.channel_radius_px_per_deg > 0.0) {
            return bad("channel radius and its growth per degree must be positive");
        }
        if !(self.noise_amplitude >= 0.0 && self.radius_jitter_px >= 0.0) {
            return bad("noise terms must be non-negative");
        }
        if self.radius_jitter_px >= self.channel_radius_px {
            return bad("radius jitter must be smaller than the base channel radius");
        }
        // The whole disk must stay inside the lens circle so that its visible
        // area equals the disk area and grows strictly with angle.
        let frame_centre = [f64::from(FRAME_WIDTH) / 2.0, f64::from(FRAME_HEIGHT) / 2.0];
        for deg in [0.0, SCENE_MAX_ANGLE_DEG] {
            let (c, r) = self.channel_disk(deg);
            let off = ((c[0] - frame_centre[0]).powi(2) + (c[1] - frame_centre[1]).powi(2)).sqrt();
            if off + r + self.radius_jitter_px > self.vignette_radius_px {
                return bad(&format!("channel disk leaves the lens circle at {deg} deg"));
            }
        }
        Ok(())
    }

    /// Centre and radius of the projected channel at bend `angle_deg`.
    pub fn channel_disk(&self, angle_deg: f64) -> ([f64; 2], f64) {
        let c = [
            self.channel_center_px[0] + self.channel_center_px_per_deg[0] * angle_deg,
            self.channel_center_px[1] + self.channel_center_px_per_deg[1] * angle_deg,
        ];
        (c, self.channel_radius_px + self.channel_radius_px_per_deg * angle_deg)
    }

    /// Pixel-centre test for the noise-free disk.
    pub fn in_channel(&self, angle_deg: f64, x: u32, y: u32) -> bool {
        let (c, r) = self.channel_disk(angle_deg);
        in_disk(c, r, x, y)
    }

    pub fn in_vignette(&self, x: u32, y: u32) -> bool {
        let c = [f64::from(FRAME_WIDTH) / 2.0, f64::from(FRAME_HEIGHT) / 2.0];
        !in_disk(c, self.vignette_radius_px, x, y)
    }

    pub fn with_noise(mut self, amplitude: f64, jitter_px: f64) -> Self {
        self.noise_amplitude = amplitude;
        self.radius_jitter_px = jitter_px;
        self
    }

    /// Blood color at fractional positions `u` in [0, 1] of the hue,
    /// saturation and value ranges.
    fn blood_at(&self, u: [f64; 3]) -> [u8; 3] {
        let lerp = |r: Range, t: f64| r[0] + t * (r[1] - r[0]);
        hsv_to_rgb(
            self.blood_hue[0] + u[0] * hue_span(self.blood_hue),
            lerp(self.blood_saturation, u[1]),
            lerp(self.blood_value, u[2]),
        )
    }

    /// Blood colors on a `PALETTE_LEVELS`^3 grid over the HSV ranges.
    fn blood_palette(&self) -> Vec<[u8; 3]> {
        let level = |i: usize| (i as f64 + 0.5) / PALETTE_LEVELS as f64;
        (0..PALETTE_LEVELS.pow(3))
            .map(|i| {
                let n = PALETTE_LEVELS;
                self.blood_at([level(i / (n * n)), level(i / n % n), level(i % n)])
            })
            .collect()
    }
}

/// Per-axis resolution of the random blood palette.
const PALETTE_LEVELS: usize = 16;
const PALETTE_BITS: u32 = 12;
/// Intensity noise is drawn from this many equally likely offsets.
const NOISE_BITS: u32 = 10;
const _: () = assert!(1 << PALETTE_BITS == PALETTE_LEVELS.pow(3));

fn in_disk(c: [f64; 2], r: f64, x: u32, y: u32) -> bool {
    let dx = f64::from(x) + 0.5 - c[0];
    let dy = f64::from(y) + 0.5 - c[1];
    dx * dx + dy * dy <= r * r
}

/// Rounded offsets for uniform noise on `[-amplitude, amplitude]`.
fn noise_offsets(amplitude: f64) -> Vec<i16> {
    let n = 1usize << NOISE_BITS;
    (0..n)
        .map(|k| (((k as f64 + 0.5) / n as f64 * 2.0 - 1.0) * amplitude).round() as i16)
        .collect()
}

/// Renders the camera view of a balloon bent to `angle_deg`.
///
/// With noise enabled each pixel consumes one 64-bit draw: the low bits pick
/// a blood color from the palette and three further fields pick per-channel
/// intensity offsets.
pub fn render_at_angle(angle_deg: f64, scene: &SceneModel, seed: u64) -> Frame {
    let noisy = scene.noise_amplitude > 0.0 || scene.radius_jitter_px > 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (centre, mut radius) = scene.channel_disk(angle_deg);
    if scene.radius_jitter_px > 0.0 {
        radius += (rng.random::<f64>() * 2.0 - 1.0) * scene.radius_jitter_px;
    }
    let flat_blood = scene.blood_at([0.5; 3]);
    let palette = if noisy { scene.blood_palette() } else { Vec::new() };
    let offsets = noise_offsets(scene.noise_amplitude);
    let field = |word: u64, k: u32| (word >> (PALETTE_BITS + k * NOISE_BITS)) as usize & ((1 << NOISE_BITS) - 1);
    Frame::from_fn(|x, y| {
        if scene.in_vignette(x, y) {
            return if noisy { [rng.random_range(0..=1); 3] } else { [0, 0, 0] };
        }
        let inside = in_disk(centre, radius, x, y);
        if !noisy {
            return if inside { scene.channel_rgb } else { flat_blood };
        }
        let word = rng.random::<u64>();
        let base = if inside {
            scene.channel_rgb
        } else {
            palette[word as usize & ((1 << PALETTE_BITS) - 1)]
        };
        if scene.noise_amplitude > 0.0 {
            [0, 1, 2].map(|k| (i16::from(base[k]) + offsets[field(word, k as u32)]).clamp(0, 255) as u8)
        } else {
            base
        }
    })
}

/// Renders the camera view for a plant state.
pub fn render_frame<T: Real>(state: &PlantState<T>, scene: &SceneModel, seed: u64) -> Frame {
    render_at_angle(state.angle_deg.to_f64_lossy(), scene, seed)
}
