//! Independent reference implementations used as test oracles.
//!
//! Everything here is written from the sensing rules directly, in integer
//! arithmetic where possible, and shares no code with the library pipeline.

#![allow(dead_code)]

use std::path::PathBuf;

use cardioscope::imaging::{Frame, RegionOfInterest};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/v1")
}

/// `min(255, floor(3.5 v + 0.5))` without floating point.
pub fn brighten_int(v: u8) -> u8 {
    (7 * u32::from(v)).div_ceil(2).min(255) as u8
}

fn round_ratio(num: u32, den: u32) -> u32 {
    (2 * num + den) / (2 * den)
}

/// Half-angle hue and saturation from exact rational rounding.
pub fn hue_sat(r: u8, g: u8, b: u8) -> (u32, u32) {
    let (r, g, b) = (i64::from(r), i64::from(g), i64::from(b));
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let diff = max - min;
    let sat = if max == 0 {
        0
    } else {
        round_ratio((255 * diff) as u32, max as u32)
    };
    if diff == 0 {
        return (0, sat);
    }
    // Hue in degrees times `diff`, shifted into [0, 360 diff).
    let mut num = if max == r {
        60 * (g - b)
    } else if max == g {
        120 * diff + 60 * (b - r)
    } else {
        240 * diff + 60 * (r - g)
    };
    if num < 0 {
        num += 360 * diff;
    }
    // Half the angle, rounded half up, wrapped to [0, 180).
    let half = round_ratio(num as u32, 2 * diff as u32) % 180;
    (half, sat)
}

pub fn gray_int(r: u8, g: u8, b: u8) -> u32 {
    (299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b) + 500) / 1000
}

/// Whether a raw pixel survives brightening and the three removal rules.
pub fn keeps(px: [u8; 3], x: u32, y: u32, roi: &RegionOfInterest) -> bool {
    let [r, g, b] = px.map(brighten_int);
    let (h, s) = hue_sat(r, g, b);
    let red = (h <= 10 || h >= 160) && s > 15;
    let dark = gray_int(r, g, b) < 5;
    let in_roi = match roi {
        RegionOfInterest::Rect { x0, y0, x1, y1 } => x >= *x0 && x < *x1 && y >= *y0 && y < *y1,
        RegionOfInterest::Polygon { .. } => panic!("oracle handles rectangles only"),
    };
    in_roi && !red && !dark && gray_int(r, g, b) > 0
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        let (big, small) = if self.size[a] >= self.size[b] { (a, b) } else { (b, a) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
    }
}

/// Union-find labelling over a row-major boolean grid. `diagonal` selects
/// 8-connectivity instead of 4.
fn components(bits: &[bool], w: usize, h: usize, diagonal: bool) -> UnionFind {
    let mut uf = UnionFind::new(bits.len());
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !bits[i] {
                continue;
            }
            let mut link = |nx: usize, ny: usize| {
                let j = ny * w + nx;
                if bits[j] {
                    uf.union(i, j);
                }
            };
            if x + 1 < w {
                link(x + 1, y);
            }
            if y + 1 < h {
                link(x, y + 1);
                if diagonal && x + 1 < w {
                    link(x + 1, y + 1);
                }
                if diagonal && x > 0 {
                    link(x - 1, y + 1);
                }
            }
        }
    }
    uf
}

/// Brute-force channel mask: largest 8-connected kept component plus every
/// pixel not 4-connected to the border through the rest of the frame.
pub fn oracle_mask(frame: &Frame, roi: &RegionOfInterest) -> Option<Vec<bool>> {
    let (w, h) = (frame.width() as usize, frame.height() as usize);
    let kept: Vec<bool> = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as u32, (i / w) as u32);
            keeps(frame.get(x, y), x, y, roi)
        })
        .collect();
    let mut uf = components(&kept, w, h, true);
    let mut best: Option<(usize, u32)> = None;
    for (i, &k) in kept.iter().enumerate() {
        if k && uf.find(i) == i {
            let s = uf.size[i];
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
    }
    let (root, _) = best?;
    let blob: Vec<bool> = (0..kept.len()).map(|i| kept[i] && uf.find(i) == root).collect();
    let rest: Vec<bool> = blob.iter().map(|b| !b).collect();
    let mut uf = components(&rest, w, h, false);
    let mut border_roots = std::collections::HashSet::new();
    for (i, &r) in rest.iter().enumerate() {
        let (x, y) = (i % w, i / w);
        if r && (x == 0 || y == 0 || x + 1 == w || y + 1 == h) {
            border_roots.insert(uf.find(i));
        }
    }
    Some(
        (0..rest.len())
            .map(|i| !(rest[i] && border_roots.contains(&uf.find(i))))
            .collect(),
    )
}

/// Sizes of the 8-connected components of kept pixels, largest first.
pub fn kept_component_sizes(frame: &Frame, roi: &RegionOfInterest) -> Vec<u32> {
    let (w, h) = (frame.width() as usize, frame.height() as usize);
    let kept: Vec<bool> = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as u32, (i / w) as u32);
            keeps(frame.get(x, y), x, y, roi)
        })
        .collect();
    let mut uf = components(&kept, w, h, true);
    let mut sizes = Vec::new();
    for (i, &k) in kept.iter().enumerate() {
        if k && uf.find(i) == i {
            sizes.push(uf.size[i]);
        }
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}
