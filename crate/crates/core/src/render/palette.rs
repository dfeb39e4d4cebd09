//! Procedural colors: PNT beam colors and wall textures keyed by id.

pub type Rgb = [u8; 3];

pub const BACKGROUND: Rgb = [18, 18, 26];
pub const FLOOR: Rgb = [96, 84, 72];
pub const CEILING: Rgb = [150, 152, 164];

const PNT_COLORS: [Rgb; 16] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [250, 190, 212],
    [0, 128, 128],
    [220, 190, 255],
    [170, 110, 40],
    [255, 250, 200],
    [128, 0, 0],
    [170, 255, 195],
];

/// Display color of PNT color id `color` (wraps modulo the palette size).
pub fn pnt_color(color: u8) -> Rgb {
    PNT_COLORS[color as usize % PNT_COLORS.len()]
}

/// Number of distinct colors in one texture palette.
pub const TEXTURE_SHADES: usize = 4;

fn mix(mut x: u32) -> u32 {
    x ^= x >> 16;
    x = x.wrapping_mul(0x7feb_352d);
    x ^= x >> 15;
    x = x.wrapping_mul(0x846c_a68b);
    x ^ (x >> 16)
}

/// The four colors a wall of texture `tex` may show: three brick shades
/// and a mortar color.
pub fn texture_palette(tex: u8) -> [Rgb; TEXTURE_SHADES] {
    let h = mix(u32::from(tex).wrapping_add(0x51ed));
    let base: Rgb = [60 + (h & 0x7f) as u8, 60 + ((h >> 8) & 0x7f) as u8, 60 + ((h >> 16) & 0x7f) as u8];
    let shade = |num: u16| base.map(|c| (u16::from(c) * num / 100) as u8);
    let mortar = base.map(|c| ((u16::from(c) + 3 * 200) / 4) as u8);
    [base, shade(82), shade(66), mortar]
}

/// Texel of texture `tex` at face coordinate `u` (along the face) and
/// height fraction `v`, both in [0, 1).
pub fn texel(tex: u8, u: f64, v: f64) -> Rgb {
    const ROWS: f64 = 4.0;
    const COLS: f64 = 2.0;
    let pal = texture_palette(tex);
    let by = v * ROWS;
    let row = by.floor();
    let offset = if row as i64 % 2 == 1 { 0.5 } else { 0.0 };
    let bx = (u + offset) * COLS;
    let col = bx.floor();
    if by - row < 0.08 || bx - col < 0.05 {
        return pal[3];
    }
    let pick = mix((row as i32 as u32).wrapping_mul(31) ^ (col as i32 as u32).wrapping_mul(17) ^ u32::from(tex));
    pal[(pick % 3) as usize]
}

/// Linear blend `a·(1-t) + b·t` with rounding.
pub fn lerp(a: Rgb, b: Rgb, t: f64) -> Rgb {
    let t = t.clamp(0.0, 1.0);
    [0, 1, 2].map(|i| (f64::from(a[i]) * (1.0 - t) + f64::from(b[i]) * t).round() as u8)
}
