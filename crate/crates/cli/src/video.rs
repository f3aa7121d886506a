//! Synthetic background-modeling footage.
//!
//! The demo video is a static brightness gradient (the background) with a
//! bright 4x4 square (the foreground) gliding across it, wrapping around
//! the frame edges like a torus. The background is exactly rank one when
//! frames are stacked as rows — it never changes — and the square touches
//! 16 pixels per frame, so a rank-1 + sparse decomposition should hand back
//! both parts almost exactly. The generator also exposes the square's true
//! pixel set per frame so recovered foreground supports can be scored.

use std::collections::BTreeSet;

use crate::error::CliError;

pub const SQUARE_SIDE: usize = 4;

/// Geometry of the generated clip.
#[derive(Debug, Clone, Copy)]
pub struct VideoSpec {
    pub frames: usize,
    pub width: usize,
    pub height: usize,
}

impl VideoSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.frames == 0 {
            return Err(CliError::Config("video needs at least one frame".into()));
        }
        if self.width < 2 * SQUARE_SIDE || self.height < 2 * SQUARE_SIDE {
            return Err(CliError::Config(format!(
                "frame must be at least {0} x {0} so the background stays visible, got {1} x {2}",
                2 * SQUARE_SIDE,
                self.width,
                self.height
            )));
        }
        Ok(())
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }
}

/// Background brightness byte at a flattened pixel index: a fixed ramp from
/// 0.1 to 0.5 of full scale, identical in every frame.
fn background_byte(spec: &VideoSpec, flat: usize) -> u8 {
    let span = (spec.pixels() - 1).max(1) as f64;
    let level = 0.1 + 0.4 * flat as f64 / span;
    (level * 255.0).round() as u8
}

/// Top-left corner of the square at frame `t`; it moves one row down and
/// three columns right per frame, wrapping modulo the frame size.
fn square_corner(spec: &VideoSpec, t: usize) -> (usize, usize) {
    ((3 + t) % spec.height, (3 * t) % spec.width)
}

/// Flattened indices of the 16 pixels the square covers in frame `t`.
pub fn truth_support(spec: &VideoSpec, t: usize) -> BTreeSet<usize> {
    let (r0, c0) = square_corner(spec, t);
    let mut cells = BTreeSet::new();
    for a in 0..SQUARE_SIDE {
        for b in 0..SQUARE_SIDE {
            let i = (r0 + a) % spec.height;
            let j = (c0 + b) % spec.width;
            cells.insert(j + i * spec.width);
        }
    }
    cells
}

/// Renders frame `t` as raw PGM bytes (row-major, one byte per pixel).
pub fn render_frame(spec: &VideoSpec, t: usize) -> Vec<u8> {
    let mut pixels: Vec<u8> = (0..spec.pixels()).map(|p| background_byte(spec, p)).collect();
    for &p in &truth_support(spec, t) {
        pixels[p] = 255;
    }
    pixels
}

/// Intersection-over-union of two index sets; 1.0 when both are empty.
pub fn jaccard(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.union(b).count();
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}
