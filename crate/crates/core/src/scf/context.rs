use crate::image::{pack_rgb, Rgb, RgbImage};

/// Template value used when no neighbor is available at all.
pub const DEFAULT_COLOR: Rgb = [128, 128, 128];

/// Causal offsets of the template members A, B, C, D, E, F relative to X.
pub const TEMPLATE: [(i32, i32); 6] = [
    (-1, 0),  // A: left
    (0, -1),  // B: above
    (-1, -1), // C: above-left
    (1, -1),  // D: above-right
    (-2, 0),  // E: left-left
    (0, -2),  // F: above-above
];

/// The six neighbor colors A..F around the current pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ContextPattern {
    pub values: [Rgb; 6],
}

impl ContextPattern {
    #[inline]
    pub fn a(&self) -> Rgb {
        self.values[0]
    }

    #[inline]
    pub fn b(&self) -> Rgb {
        self.values[1]
    }

    #[inline]
    pub fn c(&self) -> Rgb {
        self.values[2]
    }

    /// Packed form used as a hash key.
    #[inline]
    pub fn key(&self) -> PatternKey {
        PatternKey(self.values.map(pack_rgb))
    }

    /// Sum over the six members of the largest per-channel difference.
    pub fn distance(&self, other: &ContextPattern) -> u32 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(p, q)| {
                (0..3).map(|ch| u32::from(p[ch].abs_diff(q[ch]))).max().unwrap_or(0)
            })
            .sum()
    }

    /// `distance` if it is at most `limit`; stops early otherwise.
    #[inline]
    pub fn distance_within(&self, other: &ContextPattern, limit: u32) -> Option<u32> {
        let mut d = 0u32;
        for (p, q) in self.values.iter().zip(&other.values) {
            let m = p[0].abs_diff(q[0]).max(p[1].abs_diff(q[1])).max(p[2].abs_diff(q[2]));
            d += u32::from(m);
            if d > limit {
                return None;
            }
        }
        Some(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatternKey(pub [u32; 6]);

/// Reads the template around (`x`, `y`) from the working canvas.
///
/// Members outside the image take the value of the first available
/// member in A..F order, or [`DEFAULT_COLOR`] when none is available.
pub fn gather_context(canvas: &RgbImage, x: u32, y: u32) -> ContextPattern {
    let (w, h) = (canvas.width() as i32, canvas.height() as i32);
    let mut values = [DEFAULT_COLOR; 6];
    let mut available = [false; 6];
    let mut fallback = None;
    for (i, (dx, dy)) in TEMPLATE.iter().enumerate() {
        let (nx, ny) = (x as i32 + dx, y as i32 + dy);
        if nx >= 0 && ny >= 0 && nx < w && ny < h {
            values[i] = canvas.get(nx as u32, ny as u32);
            available[i] = true;
            fallback.get_or_insert(values[i]);
        }
    }
    let fill = fallback.unwrap_or(DEFAULT_COLOR);
    for i in 0..6 {
        if !available[i] {
            values[i] = fill;
        }
    }
    ContextPattern { values }
}

#[inline]
fn med(a: u8, b: u8, c: u8) -> u8 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    if c <= lo {
        hi
    } else if c >= hi {
        lo
    } else {
        (i32::from(a) + i32::from(b) - i32::from(c)).clamp(0, 255) as u8
    }
}

/// Channel-wise median-adaptive prediction from A, B and C.
pub fn cmap_predict(p: &ContextPattern) -> Rgb {
    let (a, b, c) = (p.a(), p.b(), p.c());
    [med(a[0], b[0], c[0]), med(a[1], b[1], c[1]), med(a[2], b[2], c[2])]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_interior() {
        let img = RgbImage::new(8, 8, [40, 40, 40]).unwrap();
        let p = gather_context(&img, 4, 4);
        assert!(p.values.iter().all(|&v| v == [40, 40, 40]));
    }

    #[test]
    fn origin_uses_default() {
        let img = RgbImage::new(8, 8, [1, 2, 3]).unwrap();
        assert_eq!(gather_context(&img, 0, 0).values, [DEFAULT_COLOR; 6]);
    }

    #[test]
    fn substitution_order() {
        let img = RgbImage::from_fn(5, 5, |x, y| [x as u8, y as u8, 9]).unwrap();
        // first row: only A and E can exist; B..D, F copy A
        let p = gather_context(&img, 3, 0);
        assert_eq!(p.values, [[2, 0, 9], [2, 0, 9], [2, 0, 9], [2, 0, 9], [1, 0, 9], [2, 0, 9]]);
        // first column, second row: A, C, E missing; B is first available
        let p = gather_context(&img, 0, 1);
        assert_eq!(p.a(), [0, 0, 9]);
        assert_eq!(p.values[3], [1, 0, 9]);
        assert_eq!(p.values[5], [0, 0, 9]);
        // right edge: D missing
        let p = gather_context(&img, 4, 3);
        assert_eq!(p.values[3], p.a());
    }

    #[test]
    fn med_arms() {
        let pat = |a: u8, b: u8, c: u8| ContextPattern {
            values: [[a; 3], [b; 3], [c; 3], [0; 3], [0; 3], [0; 3]],
        };
        assert_eq!(cmap_predict(&pat(10, 10, 10)), [10; 3]);
        assert_eq!(cmap_predict(&pat(50, 40, 60)), [40; 3]);
        assert_eq!(cmap_predict(&pat(50, 40, 30)), [50; 3]);
        assert_eq!(cmap_predict(&pat(50, 40, 45)), [45; 3]);
    }

    #[test]
    fn distance_is_sum_of_max_channel_differences() {
        let mut p = ContextPattern { values: [[10, 10, 10]; 6] };
        let q = p;
        p.values[0] = [13, 8, 10];
        p.values[5] = [10, 10, 17];
        assert_eq!(p.distance(&q), 3 + 7);
        assert_eq!(q.distance(&p), 10);
    }
}
