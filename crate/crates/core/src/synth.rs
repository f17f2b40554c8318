//! Seeded synthetic images standing in for screen-content and natural
//! image corpora.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::{Rect, Rgb, RgbImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContentKind {
    /// Glyph rows in one or two ink colors on a flat background.
    Text,
    /// Smooth two-color linear ramps.
    Gradient,
    /// Independent uniform channels.
    Noise,
    /// Flat rectangles and discs from a small palette.
    PaletteArt,
    /// Smooth texture plus sensor-like noise.
    Photo,
}

impl ContentKind {
    pub const ALL: [ContentKind; 5] = [
        ContentKind::Text,
        ContentKind::Gradient,
        ContentKind::Noise,
        ContentKind::PaletteArt,
        ContentKind::Photo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ContentKind::Text => "text",
            ContentKind::Gradient => "gradient",
            ContentKind::Noise => "noise",
            ContentKind::PaletteArt => "palette",
            ContentKind::Photo => "photo",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

fn random_color(rng: &mut impl Rng) -> Rgb {
    rng.gen()
}

fn contrasting(rng: &mut impl Rng, bg: Rgb) -> Rgb {
    loop {
        let c = random_color(rng);
        let d: u32 = (0..3).map(|i| u32::from(c[i].abs_diff(bg[i]))).sum();
        if d > 200 {
            return c;
        }
    }
}

/// A 5x7 bitmap font of random glyphs.
fn glyph_set(rng: &mut impl Rng, n: usize) -> Vec<[u8; 7]> {
    (0..n)
        .map(|_| {
            let mut g = [0u8; 7];
            for row in &mut g {
                *row = rng.gen_range(0..32u8);
            }
            // a vertical stem keeps glyphs connected like real letters
            let stem = rng.gen_range(0..5);
            for row in &mut g {
                *row |= 0x10 >> stem;
            }
            g
        })
        .collect()
}

fn draw_text(img: &mut RgbImage, area: Rect, rng: &mut impl Rng) {
    let bg = if rng.gen_bool(0.6) { [255, 255, 255] } else { random_color(rng) };
    let ink = contrasting(rng, bg);
    let accent = contrasting(rng, bg);
    img.fill_rect(area, bg);
    let glyphs = glyph_set(rng, 26);
    let scale = if rng.gen_bool(0.8) { 1 } else { 2 };
    let (cw, ch) = (6 * scale, rng.gen_range(10..13) * scale);
    let margin = rng.gen_range(0..6);
    let mut y = area.y + margin;
    while y + 7 * scale <= area.y + area.height {
        let mut x = area.x + margin;
        let color = if rng.gen_bool(0.85) { ink } else { accent };
        let line_len = rng.gen_range(area.width / 2..=area.width);
        while x + 5 * scale <= area.x + line_len.max(5 * scale) && x + 5 * scale <= area.x + area.width {
            if rng.gen_bool(0.15) {
                x += cw; // word gap
                continue;
            }
            let g = &glyphs[rng.gen_range(0..glyphs.len())];
            for (gy, bits) in g.iter().enumerate() {
                for gx in 0..5 {
                    if bits & (0x10 >> gx) != 0 {
                        for sy in 0..scale {
                            for sx in 0..scale {
                                img.set(x + gx * scale + sx, y + gy as u32 * scale + sy, color);
                            }
                        }
                    }
                }
            }
            x += cw;
        }
        y += ch;
    }
}

fn draw_gradient(img: &mut RgbImage, area: Rect, rng: &mut impl Rng) {
    let (a, b) = (random_color(rng), random_color(rng));
    let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let (dx, dy) = (angle.cos(), angle.sin());
    let span = (f64::from(area.width).abs() * dx.abs() + f64::from(area.height) * dy.abs()).max(1.0);
    let off = (if dx < 0.0 { -dx * f64::from(area.width) } else { 0.0 })
        + (if dy < 0.0 { -dy * f64::from(area.height) } else { 0.0 });
    for y in 0..area.height {
        for x in 0..area.width {
            let t = ((f64::from(x) * dx + f64::from(y) * dy + off) / span).clamp(0.0, 1.0);
            let c = std::array::from_fn(|i| {
                (f64::from(a[i]) * (1.0 - t) + f64::from(b[i]) * t).round() as u8
            });
            img.set(area.x + x, area.y + y, c);
        }
    }
}

fn draw_noise(img: &mut RgbImage, area: Rect, rng: &mut impl Rng) {
    for y in area.y..area.y + area.height {
        for x in area.x..area.x + area.width {
            img.set(x, y, rng.gen());
        }
    }
}

fn draw_palette_art(img: &mut RgbImage, area: Rect, rng: &mut impl Rng) {
    let n = rng.gen_range(3..12);
    let palette: Vec<Rgb> = (0..n).map(|_| random_color(rng)).collect();
    img.fill_rect(area, palette[0]);
    for _ in 0..rng.gen_range(4..24) {
        let c = palette[rng.gen_range(0..n)];
        let w = rng.gen_range(1..=area.width.max(1));
        let h = rng.gen_range(1..=area.height.max(1));
        let x0 = area.x + rng.gen_range(0..area.width.max(1));
        let y0 = area.y + rng.gen_range(0..area.height.max(1));
        if rng.gen_bool(0.6) {
            let w = w.min(area.x + area.width - x0);
            let h = h.min(area.y + area.height - y0);
            img.fill_rect(Rect { x: x0, y: y0, width: w, height: h }, c);
        } else {
            let r = f64::from(w.min(h)) / 2.0;
            for y in area.y..area.y + area.height {
                for x in area.x..area.x + area.width {
                    let (fx, fy) = (f64::from(x) - f64::from(x0), f64::from(y) - f64::from(y0));
                    if fx * fx + fy * fy <= r * r {
                        img.set(x, y, c);
                    }
                }
            }
        }
    }
}

fn draw_photo(img: &mut RgbImage, area: Rect, rng: &mut impl Rng) {
    let base: [f64; 3] = std::array::from_fn(|_| rng.gen_range(60.0..190.0));
    let waves: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(0.01..0.15),
                rng.gen_range(0.01..0.15),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(10.0..40.0),
            )
        })
        .collect();
    let tint: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.5..1.2));
    let sigma = rng.gen_range(4.0..12.0);
    for y in 0..area.height {
        for x in 0..area.width {
            let s: f64 = waves
                .iter()
                .map(|&(fx, fy, ph, amp)| amp * (fx * f64::from(x) + fy * f64::from(y) + ph).sin())
                .sum();
            let c = std::array::from_fn(|i| {
                let n: f64 = rng.gen_range(-sigma..sigma);
                (base[i] + s * tint[i] + n).round().clamp(0.0, 255.0) as u8
            });
            img.set(area.x + x, area.y + y, c);
        }
    }
}

/// Fills `area` of `img` with content of `kind`.
pub fn draw(img: &mut RgbImage, area: Rect, kind: ContentKind, rng: &mut impl Rng) {
    if area.width == 0 || area.height == 0 {
        return;
    }
    match kind {
        ContentKind::Text => draw_text(img, area, rng),
        ContentKind::Gradient => draw_gradient(img, area, rng),
        ContentKind::Noise => draw_noise(img, area, rng),
        ContentKind::PaletteArt => draw_palette_art(img, area, rng),
        ContentKind::Photo => draw_photo(img, area, rng),
    }
}

pub fn generate(kind: ContentKind, width: u32, height: u32, rng: &mut impl Rng) -> RgbImage {
    let mut img = RgbImage::new(width, height, [0; 3]).expect("caller passes valid dimensions");
    draw(&mut img, Rect { x: 0, y: 0, width, height }, kind, rng);
    img
}

/// Screen-like composition: tiles of `tile` pixels each filled with a kind
/// drawn from `weights` (indexed like [`ContentKind::ALL`]).
pub fn mixed_image(
    width: u32,
    height: u32,
    tile: u32,
    weights: [u32; 5],
    rng: &mut impl Rng,
) -> RgbImage {
    let mut img = RgbImage::new(width, height, [0; 3]).expect("caller passes valid dimensions");
    let total: u32 = weights.iter().sum();
    for ty in (0..height).step_by(tile as usize) {
        for tx in (0..width).step_by(tile as usize) {
            let mut pick = rng.gen_range(0..total.max(1));
            let mut kind = ContentKind::ALL[0];
            for (k, &w) in ContentKind::ALL.iter().zip(&weights) {
                if pick < w {
                    kind = *k;
                    break;
                }
                pick -= w;
            }
            let area = Rect { x: tx, y: ty, width: tile.min(width - tx), height: tile.min(height - ty) };
            draw(&mut img, area, kind, rng);
        }
    }
    img
}

/// One named image per kind plus mixed screens, deterministic in `seed`.
pub fn corpus(seed: u64, per_kind: usize, width: u32, height: u32) -> Vec<(String, RgbImage)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..per_kind {
        for kind in ContentKind::ALL {
            out.push((format!("{}_{i:03}.ppm", kind.name()), generate(kind, width, height, &mut rng)));
        }
        out.push((
            format!("mixed_{i:03}.ppm"),
            mixed_image(width, height, 128, [3, 1, 1, 2, 2], &mut rng),
        ));
    }
    out
}
