//! Synthetic camera and the pixel-ratio sensing pipeline.

pub mod color;
mod frame;
mod pipeline;
mod render;
mod roi;

use thiserror::Error;

pub use frame::{Frame, PixelMask, FRAME_HEIGHT, FRAME_WIDTH, PIXEL_TOTAL};
pub use pipeline::{
    brighten, classify_pixels, extract_channel_region, is_blood, is_dark, pixel_ratio, sense, sense_stages,
    PipelineStages, PixelStats, SensorConfig, BRIGHTEN_FACTOR, DARK_GRAYSCALE, DEFAULT_MIN_CHANNEL_PX, RED_HUE_HIGH,
    RED_HUE_LOW, RED_MIN_SATURATION,
};
pub use render::{render_at_angle, render_frame, SceneModel, SCENE_MAX_ANGLE_DEG};
pub use roi::RegionOfInterest;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImagingError {
    #[error("channel lost: largest component has {largest} px, need {min_pixels}")]
    ChannelLost { largest: u32, min_pixels: u32 },
    #[error("invalid region of interest: {0}")]
    InvalidRoi(String),
    #[error("invalid scene model: {0}")]
    InvalidScene(String),
    #[error("png: {0}")]
    Png(String),
}
