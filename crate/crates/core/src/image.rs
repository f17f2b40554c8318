//! RGB rasters, CTU tiling, layer masks and binary PPM I/O.

use crate::error::{Error, Result};

/// One 8-bit RGB sample.
pub type Rgb = [u8; 3];

/// Largest accepted side length.
pub const MAX_DIMENSION: u32 = 1 << 15;
/// Largest accepted pixel count (fits 7680x4320).
pub const MAX_PIXELS: u64 = 1 << 25;

/// Default CTU edge length.
pub const DEFAULT_CTU_SIZE: u32 = 128;

#[inline]
pub fn pack_rgb(c: Rgb) -> u32 {
    (u32::from(c[0]) << 16) | (u32::from(c[1]) << 8) | u32::from(c[2])
}

#[inline]
pub fn unpack_rgb(v: u32) -> Rgb {
    [(v >> 16) as u8, (v >> 8) as u8, v as u8]
}

pub fn check_dimensions(width: u64, height: u64) -> Result<()> {
    if width == 0
        || height == 0
        || width > u64::from(MAX_DIMENSION)
        || height > u64::from(MAX_DIMENSION)
        || width * height > MAX_PIXELS
    {
        return Err(Error::BadDimensions { width, height });
    }
    Ok(())
}

/// Row-major 8-bit RGB raster.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RgbImage {
    width: u32,
    height: u32,
    pixels: Vec<Rgb>,
}

impl std::fmt::Debug for RgbImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RgbImage({}x{})", self.width, self.height)
    }
}

impl RgbImage {
    pub fn new(width: u32, height: u32, fill: Rgb) -> Result<Self> {
        check_dimensions(width.into(), height.into())?;
        Ok(RgbImage { width, height, pixels: vec![fill; width as usize * height as usize] })
    }

    pub fn from_pixels(width: u32, height: u32, pixels: Vec<Rgb>) -> Result<Self> {
        check_dimensions(width.into(), height.into())?;
        if pixels.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "{} pixels for a {}x{} image",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(RgbImage { width, height, pixels })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> Rgb) -> Result<Self> {
        check_dimensions(width.into(), height.into())?;
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Ok(RgbImage { width, height, pixels })
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    #[inline]
    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> Rgb {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, c: Rgb) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = c;
    }

    pub fn same_size(&self, other: &RgbImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Copies out the pixels of `rect`.
    pub fn crop(&self, rect: Rect) -> RgbImage {
        debug_assert!(rect.x + rect.width <= self.width && rect.y + rect.height <= self.height);
        let mut pixels = Vec::with_capacity(rect.area());
        for y in rect.y..rect.y + rect.height {
            let row = y as usize * self.width as usize;
            pixels.extend_from_slice(
                &self.pixels[row + rect.x as usize..row + (rect.x + rect.width) as usize],
            );
        }
        RgbImage { width: rect.width, height: rect.height, pixels }
    }

    /// Writes `src` with its top-left corner at (`x`, `y`).
    pub fn paste(&mut self, src: &RgbImage, x: u32, y: u32) {
        for sy in 0..src.height.min(self.height.saturating_sub(y)) {
            for sx in 0..src.width.min(self.width.saturating_sub(x)) {
                self.set(x + sx, y + sy, src.get(sx, sy));
            }
        }
    }

    pub fn fill_rect(&mut self, rect: Rect, c: Rgb) {
        for y in rect.y..rect.y + rect.height {
            for x in rect.x..rect.x + rect.width {
                self.set(x, y, c);
            }
        }
    }
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Rect {
    #[inline]
    pub fn area(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && y >= self.y && x < self.x + self.width && y < self.y + self.height
    }
}

/// CTU tiling of an image. Right and bottom CTUs may be cut off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CtuGrid {
    pub width: u32,
    pub height: u32,
    pub ctu_size: u32,
    pub cols: u32,
    pub rows: u32,
}

impl CtuGrid {
    pub fn new(width: u32, height: u32, ctu_size: u32) -> Result<Self> {
        if ctu_size == 0 {
            return Err(Error::InvalidInput("ctu size must be at least 1".into()));
        }
        check_dimensions(width.into(), height.into())?;
        Ok(CtuGrid {
            width,
            height,
            ctu_size,
            cols: width.div_ceil(ctu_size),
            rows: height.div_ceil(ctu_size),
        })
    }

    pub fn for_image(image: &RgbImage, ctu_size: u32) -> Result<Self> {
        Self::new(image.width(), image.height(), ctu_size)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.cols as usize * self.rows as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index_of(&self, x: u32, y: u32) -> usize {
        (y / self.ctu_size) as usize * self.cols as usize + (x / self.ctu_size) as usize
    }

    pub fn rect(&self, index: usize) -> Rect {
        let col = (index % self.cols as usize) as u32;
        let row = (index / self.cols as usize) as u32;
        let x = col * self.ctu_size;
        let y = row * self.ctu_size;
        Rect {
            x,
            y,
            width: self.ctu_size.min(self.width - x),
            height: self.ctu_size.min(self.height - y),
        }
    }

    pub fn rects(&self) -> impl Iterator<Item = (usize, Rect)> + '_ {
        (0..self.len()).map(move |i| (i, self.rect(i)))
    }
}

/// Tiles `image` into CTUs in raster order.
pub fn split_into_ctus(image: &RgbImage, ctu_size: u32) -> Result<Vec<(usize, Rect)>> {
    Ok(CtuGrid::for_image(image, ctu_size)?.rects().collect())
}

/// Which layer a CTU belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Scf,
    Base,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationMask {
    grid: CtuGrid,
    labels: Vec<Label>,
}

impl SegmentationMask {
    pub fn new(grid: CtuGrid, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} CTUs",
                labels.len(),
                grid.len()
            )));
        }
        Ok(SegmentationMask { grid, labels })
    }

    pub fn uniform(grid: CtuGrid, label: Label) -> Self {
        SegmentationMask { grid, labels: vec![label; grid.len()] }
    }

    #[inline]
    pub fn grid(&self) -> &CtuGrid {
        &self.grid
    }

    #[inline]
    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    #[inline]
    pub fn label_at(&self, x: u32, y: u32) -> Label {
        self.labels[self.grid.index_of(x, y)]
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Number of pixels inside CTUs carrying `label`.
    pub fn pixel_count(&self, label: Label) -> usize {
        self.grid
            .rects()
            .filter(|(i, _)| self.labels[*i] == label)
            .map(|(_, r)| r.area())
            .sum()
    }

    /// Per-pixel layer map in raster order.
    pub fn pixel_labels(&self) -> Vec<Label> {
        let mut out = Vec::with_capacity(self.grid.width as usize * self.grid.height as usize);
        for y in 0..self.grid.height {
            for x in 0..self.grid.width {
                out.push(self.label_at(x, y));
            }
        }
        out
    }
}

/// An image tagged with the layer it represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerRole {
    ScfLayer,
    BaseLayer,
}

#[derive(Debug, Clone)]
pub struct LayerImage {
    pub image: RgbImage,
    pub mask: SegmentationMask,
    pub role: LayerRole,
}

/// Splits `image` into its base-layer variant (SCF CTUs set to black)
/// and its SCF-layer variant (the untouched source).
pub fn blacken(image: &RgbImage, mask: &SegmentationMask) -> Result<(LayerImage, LayerImage)> {
    check_mask(image, mask)?;
    let mut base = image.clone();
    for (i, rect) in mask.grid().rects() {
        if mask.labels()[i] == Label::Scf {
            base.fill_rect(rect, [0, 0, 0]);
        }
    }
    Ok((
        LayerImage { image: base, mask: mask.clone(), role: LayerRole::BaseLayer },
        LayerImage { image: image.clone(), mask: mask.clone(), role: LayerRole::ScfLayer },
    ))
}

/// Takes SCF CTUs from `scf_pixels` and BASE CTUs from `base_recon`.
pub fn compose_layers(
    base_recon: &RgbImage,
    scf_pixels: &RgbImage,
    mask: &SegmentationMask,
) -> Result<RgbImage> {
    if !base_recon.same_size(scf_pixels) {
        return Err(Error::DimensionMismatch(format!(
            "base {}x{} vs scf {}x{}",
            base_recon.width(),
            base_recon.height(),
            scf_pixels.width(),
            scf_pixels.height()
        )));
    }
    check_mask(base_recon, mask)?;
    let mut out = base_recon.clone();
    for (i, rect) in mask.grid().rects() {
        if mask.labels()[i] == Label::Scf {
            out.paste(&scf_pixels.crop(rect), rect.x, rect.y);
        }
    }
    Ok(out)
}

pub(crate) fn check_mask(image: &RgbImage, mask: &SegmentationMask) -> Result<()> {
    let g = mask.grid();
    if g.width != image.width() || g.height != image.height() {
        return Err(Error::DimensionMismatch(format!(
            "mask grid {}x{} vs image {}x{}",
            g.width,
            g.height,
            image.width(),
            image.height()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// PPM

pub fn load_ppm(bytes: &[u8]) -> Result<RgbImage> {
    let mut pos = 0usize;
    let err = |offset: usize, message: &str| Error::Ppm { offset, message: message.into() };

    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(err(0, "missing P6 magic"));
    }
    pos += 2;

    let mut fields = [0u64; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' || b == b'\r' {
                            break;
                        }
                    }
                }
                Some(_) => break,
                None => return Err(err(pos, "truncated header")),
            }
        }
        let start = pos;
        while let Some(b) = bytes.get(pos).filter(|b| b.is_ascii_digit()) {
            *field = field
                .checked_mul(10)
                .and_then(|v| v.checked_add(u64::from(b - b'0')))
                .filter(|&v| v <= u64::from(u32::MAX))
                .ok_or_else(|| err(start, "header value too large"))?;
            pos += 1;
        }
        if pos == start {
            return Err(err(pos, "expected decimal header value"));
        }
    }
    let [width, height, maxval] = fields;
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(err(pos, "expected single whitespace after maxval")),
    }
    if maxval != 255 {
        return Err(err(pos, "unsupported maxval"));
    }
    check_dimensions(width, height).map_err(|_| err(0, "unsupported dimensions"))?;

    let n = (width * height) as usize;
    let payload = &bytes[pos..];
    if payload.len() < n * 3 {
        return Err(err(bytes.len(), "truncated payload"));
    }
    let pixels = payload[..n * 3].chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    RgbImage::from_pixels(width as u32, height as u32, pixels)
}

pub fn save_ppm(image: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.reserve(image.area() * 3);
    for p in image.pixels() {
        out.extend_from_slice(p);
    }
    out
}
